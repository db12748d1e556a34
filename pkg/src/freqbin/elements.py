"""Physical element constructors: frequency beam splitters, microring
filters, attenuators, and phase shifts.

A frequency beam splitter couples two bins one grid spacing apart through
a microwave-driven coupled double resonator.  Its single-photon action on
the pair (lo, hi) is the standard beam-splitter matrix

    [[ sqrt(T),            e^{i theta} sqrt(R) ],
     [ -e^{-i theta} sqrt(R),      sqrt(T)     ]]

scaled by sqrt(eta), where eta is the element's total efficiency.  The
modulation also leaks a small amplitude into the two next-nearest bins
(second-order sidebands).  Leakage power, relative to the converted
power, is 10^(-S/10) with S the sideband suppression in dB; suppression
is quoted relative to the converted output, measured at maximal
conversion.  Leakage rides on dedicated sideband modes and is
marginalized at detection.

The 4-mode matrix is completed to sqrt(eta) times an exact unitary, so a
photon already sitting in a sideband mode passes through (with a
back-coupling of order the leakage amplitude, the time reverse of the
leakage process).  With S -> inf and eta = 1 the transform reduces
exactly to the 2x2 core plus identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fock import ModeTransform

DEFAULT_SIDEBAND_SUPPRESSION_DB = 24.0


@dataclass(frozen=True)
class FbsSpec:
    """Settings of one frequency beam splitter.

    ``sideband_lo``/``sideband_hi`` default to the grid neighbors
    (bin_lo - 1, bin_hi + 1); experiments may point them at dedicated
    bookkeeping modes instead.
    """

    bin_lo: int
    bin_hi: int
    transmissivity_T: float = 0.5
    phase_theta: float = 0.0
    efficiency_eta: float = 1.0
    sideband_suppression_db: float = DEFAULT_SIDEBAND_SUPPRESSION_DB
    sideband_lo: int | None = None
    sideband_hi: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.transmissivity_T <= 1.0:
            raise ValidationError("transmissivity must lie in [0, 1]")
        if not 0.0 < self.efficiency_eta <= 1.0:
            raise ValidationError("efficiency must lie in (0, 1]")
        if self.sideband_suppression_db < 0.0:
            raise ValidationError("sideband suppression must be nonnegative")
        if self.sideband_lo is None:
            object.__setattr__(self, "sideband_lo", self.bin_lo - 1)
        if self.sideband_hi is None:
            object.__setattr__(self, "sideband_hi", self.bin_hi + 1)
        modes = (self.bin_lo, self.bin_hi, self.sideband_lo, self.sideband_hi)
        if len(set(modes)) != 4:
            raise ValidationError("the four beam-splitter mode indices must be distinct")

    @property
    def reflectivity_R(self) -> float:
        return 1.0 - self.transmissivity_T


@dataclass(frozen=True)
class FilterParams:
    """Add-drop microring filter: first-order Lorentzian comb."""

    resonance_offset_ghz: float = 0.0
    linewidth_fwhm_ghz: float = 4.0
    fsr_ghz: float = 100.0
    drop_efficiency: float = 0.946

    def __post_init__(self):
        if not 0.0 < self.linewidth_fwhm_ghz < self.fsr_ghz:
            raise ValidationError("need 0 < linewidth < free spectral range")
        if not 0.0 < self.drop_efficiency <= 1.0:
            raise ValidationError("drop efficiency must lie in (0, 1]")


def fbs_transform(spec: FbsSpec) -> ModeTransform:
    """Build the 4-mode transform of a frequency beam splitter.

    Mode order is (bin_lo, bin_hi, sideband_lo, sideband_hi).  Columns of
    the returned matrix all have norm sqrt(eta) exactly, so a single
    photon entering any of the four modes exits the set with total
    probability eta.
    """
    t = math.sqrt(spec.transmissivity_T)
    r = math.sqrt(spec.reflectivity_R)
    theta = spec.phase_theta
    if math.isinf(spec.sideband_suppression_db):
        eps = 0.0
    else:
        eps = math.sqrt(
            spec.reflectivity_R * 10.0 ** (-spec.sideband_suppression_db / 10.0)
        )
    s = 1.0 / math.sqrt(1.0 + eps * eps)

    # Columns for the two bin inputs: the 2x2 core plus sideband leakage,
    # renormalized so the column norm is exactly 1 before the eta scale.
    c_lo = s * np.array(
        [t, -np.exp(-1j * theta) * r, eps, 0.0], dtype=complex
    )
    c_hi = s * np.array(
        [np.exp(1j * theta) * r, t, 0.0, eps], dtype=complex
    )
    # Complete to a unitary: Gram-Schmidt of the sideband basis vectors
    # against the two core columns (closed form, both projections real).
    e_lo = np.array([0.0, 0.0, 1.0, 0.0], dtype=complex)
    e_hi = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
    c_sb_lo = e_lo - (c_lo.conj() @ e_lo) * c_lo
    c_sb_lo /= np.linalg.norm(c_sb_lo)
    c_sb_hi = e_hi - (c_hi.conj() @ e_hi) * c_hi
    c_sb_hi -= (c_sb_lo.conj() @ c_sb_hi) * c_sb_lo
    c_sb_hi /= np.linalg.norm(c_sb_hi)

    u = np.column_stack([c_lo, c_hi, c_sb_lo, c_sb_hi])
    matrix = math.sqrt(spec.efficiency_eta) * u
    subset = (spec.bin_lo, spec.bin_hi, spec.sideband_lo, spec.sideband_hi)
    return ModeTransform(subset, matrix)


def filter_response(p: FilterParams, detuning_ghz):
    """Drop- and through-port field amplitudes of an add-drop filter.

    The detuning is wrapped to the nearest resonance of the filter comb.
    With L the unit-peak Lorentzian amplitude, drop = sqrt(eta_d) L and
    through = 1 - sqrt(eta_d) L, so dropped plus transmitted power never
    exceeds 1, with equality only for a lossless filter.

    Accepts scalars or numpy arrays; returns (drop, through).
    """
    delta = np.asarray(detuning_ghz, dtype=float) - p.resonance_offset_ghz
    wrapped = np.mod(delta + p.fsr_ghz / 2.0, p.fsr_ghz) - p.fsr_ghz / 2.0
    lorentz = 1.0 / (1.0 + 2j * wrapped / p.linewidth_fwhm_ghz)
    root_eff = math.sqrt(p.drop_efficiency)
    drop = root_eff * lorentz
    through = 1.0 - root_eff * lorentz
    if np.isscalar(detuning_ghz):
        return complex(drop), complex(through)
    return drop, through


def attenuator_transform(mode: int, power_transmission: float) -> ModeTransform:
    """Single-mode attenuator; field amplitude sqrt(power_transmission)."""
    if not 0.0 <= power_transmission <= 1.0:
        raise ValidationError("power transmission must lie in [0, 1]")
    return ModeTransform(
        (mode,), np.array([[math.sqrt(power_transmission)]], dtype=complex)
    )


def phase_transform(mode: int, phi: float) -> ModeTransform:
    """Single-mode phase shift e^{i phi}."""
    return ModeTransform((mode,), np.array([[np.exp(1j * phi)]], dtype=complex))
