"""Fock-engine tests: element examples, permanent oracle, invariants."""

import itertools
import math

import numpy as np
import pytest

from freqbin.errors import ConfigurationError, DomainError, ValidationError
from freqbin.fock import (
    Bin,
    BinGrid,
    ModeTransform,
    PureState,
    apply_transform,
    fock_state,
    grid_from_indices,
    permanent,
    project_probability,
    transition_amplitude,
)

RNG = np.random.default_rng(20240811)


def beam_splitter(transmissivity, theta=0.0):
    t = math.sqrt(transmissivity)
    r = math.sqrt(1.0 - transmissivity)
    return np.array(
        [[t, np.exp(1j * theta) * r], [-np.exp(-1j * theta) * r, t]], dtype=complex
    )


def haar_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def occupations(n_modes, n_photons):
    for combo in itertools.combinations_with_replacement(range(n_modes), n_photons):
        occ = [0] * n_modes
        for m in combo:
            occ[m] += 1
        yield tuple(occ)


def brute_force_permanent(a):
    n = a.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


class TestGrid:
    def test_frequencies_and_positions(self):
        grid = grid_from_indices([0, 1, 2, 3], anchor_thz=192.02052)
        assert grid.frequency_thz(1) == pytest.approx(192.03347)
        assert grid.position(2) == 2
        assert grid.computational_indices == (0, 1, 2, 3)

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValidationError):
            BinGrid((Bin(0), Bin(0)))

    def test_needs_two_computational_bins(self):
        with pytest.raises(ValidationError):
            BinGrid((Bin(0), Bin(1, "sideband")))

    def test_coupler_window_enforced(self):
        with pytest.raises(ValidationError):
            grid_from_indices([0, 1], anchor_thz=199.0)
        grid_from_indices([0, 1], anchor_thz=190.2)  # inside, fine

    def test_unknown_mode(self):
        grid = grid_from_indices([0, 1])
        with pytest.raises(ConfigurationError):
            grid.position(5)


class TestApplyTransform:
    def test_identity_returns_same_state(self):
        grid = grid_from_indices([0, 1, 2])
        state = PureState(grid, {(1, 1, 0): 0.6, (0, 1, 1): 0.8})
        ident = ModeTransform((0, 1, 2), np.eye(3))
        out = apply_transform(state, ident)
        for occ, amp in state.items():
            assert out.amplitude(occ) == pytest.approx(amp)

    def test_balanced_hom_null(self):
        grid = grid_from_indices([0, 1])
        bs = ModeTransform((0, 1), beam_splitter(0.5))
        out = apply_transform(fock_state(grid, {0: 1, 1: 1}), bs)
        assert out.amplitude((1, 1)) == 0.0

    def test_one_third_splitting_survival(self):
        # Oracle: permanent of the repeated-column matrix, and the closed
        # form T - R = -1/3.
        grid = grid_from_indices([0, 1])
        bs = ModeTransform((0, 1), beam_splitter(1.0 / 3.0))
        out = apply_transform(fock_state(grid, {0: 1, 1: 1}), bs)
        amp = out.amplitude((1, 1))
        oracle = transition_amplitude(bs, (1, 1), (1, 1))
        assert amp == pytest.approx(oracle, abs=1e-12)
        assert amp == pytest.approx(-1.0 / 3.0, abs=1e-12)
        assert abs(amp) ** 2 == pytest.approx(1.0 / 9.0, abs=1e-12)

    def test_mode_not_on_grid(self):
        grid = grid_from_indices([0, 1])
        state = fock_state(grid, {0: 1})
        with pytest.raises(ConfigurationError):
            apply_transform(state, ModeTransform((0, 7), np.eye(2)))

    def test_unphysical_matrix_rejected(self):
        with pytest.raises(ValidationError):
            ModeTransform((0, 1), 1.2 * np.eye(2))

    def test_subunitary_norm_decreases(self):
        grid = grid_from_indices([0, 1])
        att = ModeTransform((0,), np.array([[math.sqrt(0.5)]]))
        out = apply_transform(fock_state(grid, {0: 1, 1: 1}), att)
        assert out.norm_squared() == pytest.approx(0.5)


class TestPermanentOracle:
    def test_permanent_against_brute_force(self):
        for n in range(1, 6):
            a = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
            assert permanent(a) == pytest.approx(brute_force_permanent(a), rel=1e-10)

    def test_identity_diagonal_transition(self):
        ident = ModeTransform((0, 1, 2), np.eye(3))
        assert transition_amplitude(ident, (2, 1, 0), (2, 1, 0)) == pytest.approx(1.0)

    def test_balanced_bunching_amplitude(self):
        # Hand expansion of (a0+a1)(a0-a1)/2 applied to two photons gives
        # sqrt(2) t r = 1/sqrt(2) into the (2, 0) pattern.
        bs = ModeTransform((0, 1), beam_splitter(0.5))
        amp = transition_amplitude(bs, (1, 1), (2, 0))
        assert amp == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
        assert abs(amp) ** 2 == pytest.approx(0.5, abs=1e-12)
        assert transition_amplitude(bs, (1, 1), (1, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_photon_number_mismatch(self):
        bs = ModeTransform((0, 1), beam_splitter(0.5))
        with pytest.raises(DomainError):
            transition_amplitude(bs, (1, 1), (1, 0))


class TestProjectProbability:
    def test_single_photon_superposition(self):
        grid = grid_from_indices([0, 1])
        s = 1.0 / math.sqrt(2.0)
        state = PureState(grid, {(1, 0): s, (0, 1): s})
        assert project_probability(state, {0: 1}) == pytest.approx(0.5)

    def test_bell_joint_pattern(self):
        grid = grid_from_indices([0, 1, 2, 3])
        s = 1.0 / math.sqrt(2.0)
        state = PureState(grid, {(1, 0, 0, 1): s, (0, 1, 1, 0): s})
        assert project_probability(state, {0: 1, 3: 1}) == pytest.approx(0.5)

    def test_marginal_modes_are_summed(self):
        grid = grid_from_indices([0, 1], sideband=[2])
        state = PureState(
            grid, {(1, 0, 1): math.sqrt(0.3), (1, 1, 0): math.sqrt(0.7)}
        )
        assert project_probability(state, {0: 1}, marginal_modes=[1, 2]) == (
            pytest.approx(1.0)
        )
        assert project_probability(state, {0: 1}, marginal_modes=[2]) == (
            pytest.approx(0.3)
        )

    def test_overlap_rejected(self):
        grid = grid_from_indices([0, 1])
        state = fock_state(grid, {0: 1})
        with pytest.raises(DomainError):
            project_probability(state, {0: 1}, marginal_modes=[0])


class TestInvariants:
    def test_unitary_norm_conservation(self):
        # Haar-sampled unitaries on random 1..3 photon states.
        for trial in range(30):
            rng = np.random.default_rng(1000 + trial)
            m = rng.integers(2, 6)
            n = rng.integers(1, 4)
            grid = grid_from_indices(list(range(m)))
            keys = list(occupations(m, n))
            amps = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
            amps /= np.linalg.norm(amps)
            state = PureState(grid, dict(zip(keys, amps)))
            u = ModeTransform(tuple(range(m)), haar_unitary(m, rng))
            assert u.is_unitary
            out = apply_transform(state, u)
            assert abs(out.norm_squared() - state.norm_squared()) < 1e-10

    def test_homomorphism(self):
        for trial in range(20):
            rng = np.random.default_rng(2000 + trial)
            m = 4
            grid = grid_from_indices(list(range(m)))
            a = haar_unitary(m, rng)
            b = haar_unitary(m, rng)
            state = fock_state(grid, {0: 1, 2: 1})
            step = apply_transform(
                apply_transform(state, ModeTransform(tuple(range(m)), a)),
                ModeTransform(tuple(range(m)), b),
            )
            combined = apply_transform(state, ModeTransform(tuple(range(m)), b @ a))
            for occ in occupations(m, 2):
                assert step.amplitude(occ) == pytest.approx(
                    combined.amplitude(occ), abs=1e-10
                )

    def test_oracle_equivalence_small(self):
        for trial in range(25):
            rng = np.random.default_rng(3000 + trial)
            m = int(rng.integers(2, 8))
            n = int(rng.integers(1, 4))
            grid = grid_from_indices(list(range(m)))
            mat = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
            mat /= np.linalg.norm(mat, 2) * (1.0 + 1e-12)
            t = ModeTransform(tuple(range(m)), mat)
            occ_in = list(occupations(m, n))[int(rng.integers(0, m))]
            out = apply_transform(fock_state(grid, dict(enumerate(occ_in))), t)
            for occ_out in occupations(m, n):
                assert out.amplitude(occ_out) == pytest.approx(
                    transition_amplitude(t, occ_in, occ_out), abs=1e-10
                )

    def test_photon_number_superselection(self):
        grid = grid_from_indices([0, 1, 2])
        state = fock_state(grid, {0: 2, 1: 1})
        rng = np.random.default_rng(5)
        out = apply_transform(
            state, ModeTransform((0, 1, 2), haar_unitary(3, rng))
        )
        assert out.photon_number == 3
        for occ, _ in out.items():
            assert sum(occ) == 3

    def test_mixed_sector_rejected(self):
        grid = grid_from_indices([0, 1])
        with pytest.raises(ValidationError):
            PureState(grid, {(1, 0): 0.7, (1, 1): 0.7})

    def test_amplitude_pruning(self):
        grid = grid_from_indices([0, 1])
        state = PureState(grid, {(1, 0): 1.0, (0, 1): 1e-16})
        assert len(state) == 1
