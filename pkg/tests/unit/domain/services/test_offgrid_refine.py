"""Unit tests for Newtonized off-grid refinement."""

import math

import numpy as np
import pytest

from src.domain.entities.array_config import ArrayConfig
from src.domain.entities.atom import AtomParam, RefineConfig
from src.domain.entities.recovery import RecoveryConfig
from src.domain.services.array_geometry import near_response
from src.domain.services.dictionary_factory import DictionaryFactory
from src.domain.services.offgrid_refine import (
    atom_contribution,
    cyclic_refine,
    gradient_hessian,
    NTurboCoSaMP,
    merge_atoms,
    n_turbo_cosamp,
    newton_step,
    objective_e,
    refine_atom,
    refit_gains,
    response_derivatives,
    screen_atoms,
    sweep_refine,
)
from src.domain.services.sparse_recovery import synthesize


@pytest.fixture
def array():
    """Fixture providing a 64-antenna array with λ = 0.1 m."""
    return ArrayConfig(m_antennas=64, wavelength=0.1)


@pytest.fixture
def a_col():
    """Fixture providing one unit-modulus codeword of length 16."""
    rng = np.random.default_rng(0)
    return np.exp(2j * math.pi * rng.random(16))


def _atom(gain, doa, distance, codeword=0):
    return AtomParam(gain=complex(gain), codeword=codeword, doa=doa, distance=distance)


class TestDerivatives:
    """Test analytic derivatives of the near-field response."""

    def test_first_derivatives_match_differences(self, array):
        """Test e_θ and e_d against central differences."""
        theta, d = 0.3, 14.0
        der = response_derivatives(array, theta, d)
        h_t, h_d = 1e-6, 1e-6 * d
        fd_t = (near_response(array, theta + h_t, d) - near_response(array, theta - h_t, d)) / (2 * h_t)
        fd_d = (near_response(array, theta, d + h_d) - near_response(array, theta, d - h_d)) / (2 * h_d)
        assert np.allclose(der.e, near_response(array, theta, d))
        assert np.allclose(der.e_t, fd_t, rtol=0, atol=1e-5 * np.abs(der.e_t).max())
        assert np.allclose(der.e_d, fd_d, rtol=0, atol=1e-5 * np.abs(der.e_d).max())

    def test_second_derivatives_match_differences(self, array):
        """Test e_θθ, e_θd and e_dd against differences of the first derivatives."""
        theta, d = -0.2, 25.0
        der = response_derivatives(array, theta, d)
        h_t, h_d = 1e-6, 1e-6 * d
        up_t, dn_t = response_derivatives(array, theta + h_t, d), response_derivatives(array, theta - h_t, d)
        up_d, dn_d = response_derivatives(array, theta, d + h_d), response_derivatives(array, theta, d - h_d)
        assert np.allclose(der.e_tt, (up_t.e_t - dn_t.e_t) / (2 * h_t), rtol=0, atol=1e-5 * np.abs(der.e_tt).max())
        assert np.allclose(der.e_td, (up_d.e_t - dn_d.e_t) / (2 * h_d), rtol=0, atol=1e-5 * np.abs(der.e_td).max())
        assert np.allclose(der.e_dd, (up_d.e_d - dn_d.e_d) / (2 * h_d), rtol=0, atol=1e-5 * np.abs(der.e_dd).max())

    def test_objective_is_residual_decrease(self, array, a_col):
        """Test E = ‖R‖² - ‖R - g·a·eᵀ‖²."""
        rng = np.random.default_rng(1)
        residual = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        atom = _atom(0.3 - 0.2j, 0.1, 18.0)
        after = residual - atom_contribution(array, a_col, atom)
        expected = np.linalg.norm(residual) ** 2 - np.linalg.norm(after) ** 2
        assert objective_e(array, residual, a_col, atom) == pytest.approx(expected, rel=1e-9)

    def test_gradient_matches_objective_differences(self, array, a_col):
        """Test Ė against differences of E."""
        rng = np.random.default_rng(2)
        residual = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        atom = _atom(1.0 + 1.0j, 0.2, 20.0)
        grad, hess = gradient_hessian(array, residual, a_col, atom)
        h = 1e-6
        fd = (
            objective_e(array, residual, a_col, atom.moved(0.2 + h, 20.0))
            - objective_e(array, residual, a_col, atom.moved(0.2 - h, 20.0))
        ) / (2 * h)
        assert abs(fd - grad[0]) < 1e-4 * np.abs(grad).max()
        assert hess[0, 1] == hess[1, 0]

    def test_zero_gain_objective(self, array, a_col):
        """Test that a zero-gain atom removes nothing."""
        assert objective_e(array, np.ones((16, 64)), a_col, _atom(0, 0.0, 10.0)) == 0.0


class TestNewton:
    """Test Newton steps and their acceptance rule."""

    def test_converges_to_planted_atom(self, array, a_col):
        """Test that refinement recovers a slightly perturbed planted atom."""
        truth = _atom(1.5 - 0.5j, 0.3, 15.0)
        residual = atom_contribution(array, a_col, truth)
        start = truth.moved(0.303, 15.0)
        refined = refine_atom(array, residual, a_col, start, steps=8)
        assert abs(refined.doa - 0.3) < 1e-5
        assert abs(refined.distance - 15.0) / 15.0 < 1e-3
        assert abs(refined.gain - truth.gain) < 1e-3

    def test_accepted_step_improves_match(self, array, a_col):
        """Test that an accepted step raises |a_jᴴ R e*|."""
        truth = _atom(1.0, -0.4, 12.0)
        residual = atom_contribution(array, a_col, truth)
        start = truth.moved(-0.398, 12.0)
        moved, accepted = newton_step(array, residual, a_col, start)
        assert accepted
        r = residual.T @ a_col.conj()
        before = abs(np.vdot(near_response(array, start.doa, start.distance), r))
        after = abs(np.vdot(near_response(array, moved.doa, moved.distance), r))
        assert after > before

    def test_zero_residual_rejected(self, array, a_col):
        """Test that a flat objective leaves the atom unchanged."""
        atom = _atom(1.0, 0.1, 20.0)
        moved, accepted = newton_step(array, np.zeros((16, 64)), a_col, atom)
        assert not accepted
        assert moved == atom

    def test_clamped_to_domain(self, array, a_col):
        """Test that refined parameters stay inside the admissible box."""
        rng = np.random.default_rng(3)
        residual = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        atom = refine_atom(array, residual, a_col, _atom(0.5, 0.95, 12.0), steps=10)
        assert -1 < atom.doa < 1
        assert atom.distance >= array.fresnel_distance()


class TestAtomSets:
    """Test sweeps, merging, re-fitting and screening of atom sets."""

    def _scene(self, array):
        rng = np.random.default_rng(4)
        a = np.exp(2j * math.pi * rng.random((16, 32)))
        truth = [_atom(1.0 + 0.2j, -0.3, 14.0, 3), _atom(0.7 - 0.6j, 0.45, 18.0, 20)]
        y = sum(atom_contribution(array, a[:, t.codeword], t) for t in truth)
        return a, y, truth

    def test_sweep_never_increases_residual(self, array):
        """Test that leave-one-out sweeps do not increase the residual power."""
        a, y, truth = self._scene(array)
        seeds = refit_gains(array, y, a, [t.moved(t.doa + 0.004, t.distance * 1.05) for t in truth])

        def power(atoms):
            residual = y - sum(atom_contribution(array, a[:, t.codeword], t) for t in atoms)
            return float(np.linalg.norm(residual) ** 2)

        refined = sweep_refine(array, y, a, seeds, sweeps=3, steps=2)
        assert power(refined) <= power(seeds) + 1e-9

    def test_cyclic_refine_recovers_scene(self, array):
        """Test that cyclic refinement from nearby seeds fits the scene."""
        a, y, truth = self._scene(array)
        seeds = refit_gains(array, y, a, [t.moved(t.doa + 0.002, t.distance) for t in truth])
        refined = cyclic_refine(array, y, a, seeds, RefineConfig(t_local=1, t_cyclic=4, newton_steps=3))
        residual = y - sum(atom_contribution(array, a[:, t.codeword], t) for t in refined)
        assert np.linalg.norm(residual) ** 2 < 1e-4 * np.linalg.norm(y) ** 2

    def test_refit_gains_exact(self, array):
        """Test that re-fitting at the true parameters restores the gains."""
        a, y, truth = self._scene(array)
        refit = refit_gains(array, y, a, [t.with_gain(0) for t in truth])
        for got, want in zip(refit, truth):
            assert got.gain == pytest.approx(want.gain, abs=1e-9)

    def test_merge_folds_duplicates(self):
        """Test that near-identical atoms on one codeword merge by summing gains."""
        kept = [_atom(1.0, 0.2, 10.0, 1)]
        fresh = [_atom(0.5, 0.2001, 10.0, 1), _atom(2.0, 0.2, 10.0, 2), _atom(1.0, 0.5, 10.0, 1)]
        merged = merge_atoms(kept, fresh, delta_theta=0.02, delta_ring=0.01)
        assert len(merged) == 3
        assert merged[0].gain == 1.5
        assert [t.codeword for t in merged] == [1, 2, 1]

    def test_screen_atoms(self):
        """Test k_a codewords by energy, then the r largest gains."""
        atoms = [_atom(3.0, 0.1, 10, 0), _atom(0.1, 0.2, 10, 1), _atom(2.0, 0.3, 10, 2), _atom(1.0, 0.4, 10, 0)]
        kept = screen_atoms(atoms, 2, 2)
        assert [(t.codeword, t.gain) for t in kept] == [(0, 3.0), (2, 2.0)]


class TestNTurboCoSaMP:
    """Test the Newtonized decoder end to end."""

    def test_on_grid_recovery(self):
        """Test exact activity on a noiseless on-grid instance."""
        array = ArrayConfig(m_antennas=32, wavelength=0.1)
        dictionary = DictionaryFactory.build_polar(array, 0.5816)
        rng = np.random.default_rng(11)
        rows = np.sort(rng.choice(64, size=16, replace=False))
        a = np.exp(-2j * math.pi * np.outer(rows, np.arange(64)) / 64)
        support = [(5, dictionary.column_of(10, 0)), (40, dictionary.column_of(45, 0))]
        y = synthesize(a, dictionary.atoms, support, np.array([1.0 + 0.5j, -0.8 + 1.0j]))
        result = n_turbo_cosamp(
            array, y, a, dictionary,
            RecoveryConfig(k_a=2, r_sparsity=2, tau_sq=0.0),
            RefineConfig(t_local=2, t_cyclic=2, newton_steps=1),
        )
        assert result.active_set == frozenset({5, 40})
        assert result.converged
        assert len(result.atoms) == 2
        assert result.residual_power < 1e-10 * np.linalg.norm(y) ** 2

    def test_off_grid_residual_decreases(self):
        """Test that off-grid refinement keeps lowering the residual."""
        array = ArrayConfig(m_antennas=32, wavelength=0.1)
        dictionary = DictionaryFactory.build_polar(array, 0.5816)
        rng = np.random.default_rng(12)
        a = np.exp(2j * math.pi * rng.random((16, 64)))
        truth = [_atom(1.0, -0.52, 8.0, 7), _atom(0.8j, 0.33, 11.0, 50)]
        y = sum(atom_contribution(array, a[:, t.codeword], t) for t in truth)
        result = n_turbo_cosamp(
            array, y, a, dictionary,
            RecoveryConfig(k_a=2, r_sparsity=2, tau_sq=0.0, max_iters=10),
            RefineConfig(),
        )
        assert np.all(np.diff(result.residual_history) < 0)
        assert result.residual_power < result.residual_history[0]
        assert len(result.atoms) <= 2
        assert result.iterations >= 1
        assert result.converged or result.flags in (["stalled"], ["max_iters"])

    def test_fresh_atoms_fit_current_residual(self):
        """Test that fresh atoms model only what the kept atoms leave unexplained."""
        array = ArrayConfig(m_antennas=32, wavelength=0.1)
        dictionary = DictionaryFactory.build_polar(array, 0.5816)
        rng = np.random.default_rng(13)
        a = np.exp(2j * math.pi * rng.random((16, 64)))
        entries = [(5, dictionary.column_of(10, 0)), (40, dictionary.column_of(45, 0))]
        truth = [
            AtomParam(
                gain=g,
                codeword=j,
                doa=float(dictionary.column_doas[p]),
                distance=float(dictionary.column_distances[p]),
            )
            for (j, p), g in zip(entries, (1.0 + 0.5j, -0.8 + 1.0j))
        ]
        y = sum(atom_contribution(array, a[:, t.codeword], t) for t in truth)
        decoder = NTurboCoSaMP(
            array, a, dictionary, RecoveryConfig(k_a=2, r_sparsity=2, tau_sq=0.0), RefineConfig()
        )
        residual = y - atom_contribution(array, a[:, 5], truth[0])
        fresh = decoder.fresh_atoms(residual, entries)
        assert abs(fresh[0].gain) < 1e-8
        assert fresh[1].gain == pytest.approx(-0.8 + 1.0j, abs=1e-6)
