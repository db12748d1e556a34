"""Exact few-photon Fock states on a frequency-bin grid.

Modes are discrete frequency bins on a uniform grid.  States are sparse
complex amplitude maps over fixed-photon-number occupation vectors, and
every optical element is a complex coupling matrix acting on a subset of
modes.  The convention throughout is that a matrix ``M`` maps creation
operators as

    a_i^dag  ->  sum_j M[j, i] a_j^dag

so columns index input modes and rows index output modes, and a
single-photon amplitude vector transforms as ``out = M @ in``.

Subunitary matrices evolve states directly: the branch in which a photon
leaves the retained mode set is dropped, which is exactly the
post-selected physics when only full coincidences are counted.  No
unitary dilation is performed.

A permanent-based transition amplitude (`transition_amplitude`) provides
an independent brute-force oracle for the evolution implemented by
`apply_transform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, DomainError, ValidationError

# Occupation vectors are plain tuples of per-mode photon counts, ordered
# like BinGrid.bins.
Occupation = tuple[int, ...]

ROLE_COMPUTATIONAL = "computational"
ROLE_SIDEBAND = "sideband"
ROLE_LOSS = "loss"
_ROLES = (ROLE_COMPUTATIONAL, ROLE_SIDEBAND, ROLE_LOSS)

#: Transmission window of the chip's grating couplers, THz.
GRATING_WINDOW_THZ = (190.1734, 192.6459)

#: Amplitudes below this magnitude are removed from sparse maps.
AMPLITUDE_PRUNE = 1e-15

#: Photon numbers above this are outside the supported regime.
MAX_PHOTON_NUMBER = 4

_UNITARY_ATOL = 1e-9
_NORM_TOL = 1e-9


@dataclass(frozen=True)
class Bin:
    """One frequency mode: grid index, physical role, optional label."""

    index: int
    role: str = ROLE_COMPUTATIONAL
    label: str = ""

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValidationError(f"unknown bin role {self.role!r}")


@dataclass(frozen=True)
class BinGrid:
    """Registry of frequency modes on a uniform grid.

    Bin center frequencies are ``anchor_thz + index * bin_spacing_ghz``
    (anchor optional; when set, computational bins must sit inside the
    grating-coupler window).  Mode ordering for occupation vectors is the
    order of ``bins``, which is sorted by index at construction.
    """

    bins: tuple[Bin, ...]
    bin_spacing_ghz: float = 12.95
    anchor_thz: float | None = None

    def __post_init__(self):
        if self.bin_spacing_ghz <= 0:
            raise ValidationError("bin spacing must be positive")
        ordered = tuple(sorted(self.bins, key=lambda b: b.index))
        object.__setattr__(self, "bins", ordered)
        indices = [b.index for b in ordered]
        if len(set(indices)) != len(indices):
            raise ValidationError("bin indices must be unique")
        n_comp = sum(1 for b in ordered if b.role == ROLE_COMPUTATIONAL)
        if n_comp < 2:
            raise ValidationError("a grid needs at least 2 computational bins")
        if self.anchor_thz is not None:
            lo, hi = GRATING_WINDOW_THZ
            for b in ordered:
                if b.role != ROLE_COMPUTATIONAL:
                    continue
                f = self.frequency_thz(b.index)
                if not (lo <= f <= hi):
                    raise ValidationError(
                        f"computational bin {b.index} at {f:.4f} THz is outside "
                        f"the coupler window [{lo}, {hi}] THz"
                    )
        object.__setattr__(
            self, "_pos", {b.index: k for k, b in enumerate(ordered)}
        )

    @property
    def n_modes(self) -> int:
        return len(self.bins)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(b.index for b in self.bins)

    def position(self, index: int) -> int:
        """Position of a bin index within occupation vectors."""
        try:
            return self._pos[index]
        except KeyError:
            raise ConfigurationError(f"mode index {index} is not on the grid")

    def has_index(self, index: int) -> bool:
        return index in self._pos

    def role_indices(self, role: str) -> tuple[int, ...]:
        return tuple(b.index for b in self.bins if b.role == role)

    @property
    def computational_indices(self) -> tuple[int, ...]:
        return self.role_indices(ROLE_COMPUTATIONAL)

    def frequency_thz(self, index: int) -> float:
        if self.anchor_thz is None:
            raise ConfigurationError("grid has no absolute frequency anchor")
        return self.anchor_thz + index * self.bin_spacing_ghz * 1e-3


def grid_from_indices(
    computational: Iterable[int],
    sideband: Iterable[int] = (),
    loss: Iterable[int] = (),
    bin_spacing_ghz: float = 12.95,
    anchor_thz: float | None = None,
) -> BinGrid:
    """Convenience constructor from per-role index lists."""
    bins = [Bin(i, ROLE_COMPUTATIONAL) for i in computational]
    bins += [Bin(i, ROLE_SIDEBAND) for i in sideband]
    bins += [Bin(i, ROLE_LOSS) for i in loss]
    return BinGrid(tuple(bins), bin_spacing_ghz=bin_spacing_ghz, anchor_thz=anchor_thz)


class PureState:
    """Sparse pure state in a fixed photon-number sector.

    The squared norm lies in (0, 1]; it is exactly 1 after purely unitary
    evolution and may shrink after subunitary (lossy) elements.  Instances
    are treated as immutable values; operations return new states.
    """

    __slots__ = ("grid", "photon_number", "_amps")

    def __init__(
        self,
        grid: BinGrid,
        amplitudes: Mapping[Occupation, complex],
        *,
        validate: bool = True,
    ):
        amps: dict[Occupation, complex] = {}
        for occ, a in amplitudes.items():
            a = complex(a)
            if abs(a) < AMPLITUDE_PRUNE:
                continue
            amps[tuple(int(c) for c in occ)] = a
        if not amps:
            raise ValidationError("state has no amplitude above the pruning threshold")
        totals = {sum(occ) for occ in amps}
        if validate:
            if len(totals) != 1:
                raise ValidationError("occupations mix different total photon numbers")
            n = next(iter(totals))
            if n <= 0 or n > MAX_PHOTON_NUMBER:
                raise ValidationError(
                    f"photon number {n} outside supported range 1..{MAX_PHOTON_NUMBER}"
                )
            for occ in amps:
                if len(occ) != grid.n_modes:
                    raise ValidationError("occupation length does not match the grid")
                if any(c < 0 for c in occ):
                    raise ValidationError("negative photon count")
            nsq = sum(abs(a) ** 2 for a in amps.values())
            if nsq > 1.0 + 1e-9:
                raise ValidationError(f"squared norm {nsq} exceeds 1")
        self.grid = grid
        self.photon_number = next(iter(totals))
        self._amps = amps

    def items(self):
        return self._amps.items()

    def amplitude(self, occ: Occupation) -> complex:
        return self._amps.get(tuple(occ), 0.0 + 0.0j)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._amps.values()))

    def normalized(self) -> "PureState":
        n = math.sqrt(self.norm_squared())
        return PureState(
            self.grid, {occ: a / n for occ, a in self._amps.items()}, validate=False
        )

    def __len__(self) -> int:
        return len(self._amps)

    def __repr__(self) -> str:
        return (
            f"PureState(n={self.photon_number}, terms={len(self._amps)}, "
            f"norm2={self.norm_squared():.6f})"
        )


def fock_state(grid: BinGrid, occupations: Mapping[int, int]) -> PureState:
    """Basis state with the given photons per bin index, amplitude 1."""
    occ = [0] * grid.n_modes
    for index, count in occupations.items():
        occ[grid.position(index)] = int(count)
    return PureState(grid, {tuple(occ): 1.0 + 0.0j})


@dataclass(frozen=True, eq=False)
class ModeTransform:
    """Complex coupling matrix over an ordered subset of grid modes.

    Physicality requires spectral norm <= 1.  ``is_unitary`` is derived at
    construction (entrywise check of M^dag M against the identity).
    """

    mode_subset: tuple[int, ...]
    matrix: np.ndarray
    is_unitary: bool = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        subset = tuple(int(i) for i in self.mode_subset)
        if len(set(subset)) != len(subset):
            raise ValidationError("mode subset contains duplicates")
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(subset):
            raise ValidationError("matrix must be square and match the mode subset")
        if np.linalg.norm(m, 2) > 1.0 + _NORM_TOL:
            raise ValidationError("matrix spectral norm exceeds 1: not physical")
        gram = m.conj().T @ m
        unitary = bool(
            np.allclose(gram, np.eye(m.shape[0]), atol=_UNITARY_ATOL, rtol=0.0)
        )
        object.__setattr__(self, "mode_subset", subset)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "is_unitary", unitary)

    @property
    def size(self) -> int:
        return len(self.mode_subset)


def permanent(matrix: np.ndarray) -> complex:
    """Permanent of a square complex matrix, Ryser's formula.

    Subsets are visited in Gray-code order so each step updates the row
    sums by one column.  O(n 2^n); intended for n <= 16.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("permanent requires a square matrix")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > 16:
        raise DomainError("permanent supported up to 16x16")
    row_sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray_prev = 0
    subset_size = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ gray_prev
        j = diff.bit_length() - 1
        if gray & diff:
            row_sums += a[:, j]
            subset_size += 1
        else:
            row_sums -= a[:, j]
            subset_size -= 1
        sign = -1.0 if subset_size % 2 else 1.0
        total += sign * np.prod(row_sums)
        gray_prev = gray
    return complex((-1.0) ** n * total)


def _factorial_product(counts: Iterable[int]) -> float:
    out = 1.0
    for c in counts:
        out *= math.factorial(c)
    return out


def apply_transform(state: PureState, t: ModeTransform) -> PureState:
    """Evolve a state under a (sub)unitary mode transform.

    Photons on modes outside ``t.mode_subset`` are untouched.  Photon
    number is conserved within the retained mode set; for subunitary
    matrices the squared norm may decrease by the weight of branches in
    which a photon left the retained set.
    """
    grid = state.grid
    positions = [grid.position(i) for i in t.mode_subset]
    m = t.matrix
    k = len(positions)
    out: dict[Occupation, complex] = {}

    for occ, amp in state.items():
        sub = [occ[p] for p in positions]
        n_sub = sum(sub)
        if n_sub == 0:
            out[occ] = out.get(occ, 0.0) + amp
            continue
        base = list(occ)
        for p in positions:
            base[p] = 0
        # Expand prod_i (sum_j M[j,i] a_j^dag)^{n_i} one photon at a time,
        # tracking monomial coefficients over the subset modes.
        terms: dict[Occupation, complex] = {
            (0,) * k: amp / math.sqrt(_factorial_product(sub))
        }
        for i, n_i in enumerate(sub):
            col = m[:, i]
            for _ in range(n_i):
                nxt: dict[Occupation, complex] = {}
                for vec, coef in terms.items():
                    for j in range(k):
                        c = col[j]
                        if c == 0:
                            continue
                        new_vec = list(vec)
                        new_vec[j] += 1
                        key = tuple(new_vec)
                        nxt[key] = nxt.get(key, 0.0) + coef * c
                terms = nxt
        for vec, coef in terms.items():
            occ_out = list(base)
            for j, pos in enumerate(positions):
                occ_out[pos] = vec[j]
            key = tuple(occ_out)
            out[key] = out.get(key, 0.0) + coef * math.sqrt(_factorial_product(vec))

    return PureState(grid, out, validate=False)


def transition_amplitude(
    t: ModeTransform, n_in: Iterable[int], n_out: Iterable[int]
) -> complex:
    """Amplitude <n_out| applied-transform |n_in> via the matrix permanent.

    Occupations are given over ``t.mode_subset`` in subset order.  The
    amplitude is per(M[n_out | n_in]) / sqrt(prod n_in! prod n_out!) with
    column i of M repeated n_in[i] times and row j repeated n_out[j]
    times.  Serves as the independent oracle for `apply_transform`.
    """
    nin = [int(c) for c in n_in]
    nout = [int(c) for c in n_out]
    if len(nin) != t.size or len(nout) != t.size:
        raise DomainError("occupation length must match the transform size")
    if any(c < 0 for c in nin) or any(c < 0 for c in nout):
        raise DomainError("negative photon count")
    if sum(nin) != sum(nout):
        raise DomainError("photon number mismatch between input and output")
    cols = [i for i, c in enumerate(nin) for _ in range(c)]
    rows = [j for j, c in enumerate(nout) for _ in range(c)]
    sub = t.matrix[np.ix_(rows, cols)] if rows else np.zeros((0, 0), dtype=complex)
    norm = math.sqrt(_factorial_product(nin) * _factorial_product(nout))
    return permanent(sub) / norm


def project_probability(
    state: PureState,
    pattern: Mapping[int, int],
    marginal_modes: Iterable[int] = (),
) -> float:
    """Born-rule probability of an occupation pattern.

    ``pattern`` fixes exact photon counts on the observed bin indices.
    Occupations of ``marginal_modes`` are summed over; every bin in
    neither set must be empty for a term to contribute.
    """
    marg = {int(i) for i in marginal_modes}
    obs = {int(i): int(c) for i, c in pattern.items()}
    overlap = marg & set(obs)
    if overlap:
        raise DomainError(f"observed and marginal modes overlap: {sorted(overlap)}")
    grid = state.grid
    obs_pos = {grid.position(i): c for i, c in obs.items()}
    marg_pos = {grid.position(i) for i in marg}
    prob = 0.0
    for occ, amp in state.items():
        ok = True
        for p, c in enumerate(occ):
            want = obs_pos.get(p)
            if want is not None:
                if c != want:
                    ok = False
                    break
            elif p not in marg_pos and c != 0:
                ok = False
                break
        if ok:
            prob += abs(amp) ** 2
    return float(prob)
