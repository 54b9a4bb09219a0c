"""Unit tests for domain value objects."""

import math

import numpy as np
import pytest

from src.domain.entities.array_config import ArrayConfig, PathSet, SpatialChannel
from src.domain.entities.atom import AtomParam, RefineConfig
from src.domain.entities.cluster import ClusterState, SlotChannels
from src.domain.entities.codebook import Codebook, MessageSet
from src.domain.entities.recovery import RecoveryConfig, RecoveryState
from src.domain.entities.score import TrialScore
from src.domain.exceptions import (
    DimensionMismatchError,
    DomainError,
    ParameterDomainError,
)


class TestArrayConfig:
    """Test array geometry derived quantities."""

    def test_desk_array_distances(self):
        """Test Fresnel and Rayleigh distances of the 64-antenna array at 3 GHz."""
        cfg = ArrayConfig.from_carrier(64, 3e9)
        assert cfg.fresnel_distance() == pytest.approx(8.84, abs=0.01)
        assert cfg.rayleigh_distance() == pytest.approx(198.3, abs=0.2)

    def test_spacing_is_half_wavelength(self):
        """Test antenna spacing and aperture."""
        cfg = ArrayConfig(m_antennas=5, wavelength=0.2)
        assert cfg.spacing == pytest.approx(0.1)
        assert cfg.aperture == pytest.approx(0.4)

    def test_kappa_is_centered(self):
        """Test that antenna offsets are symmetric around zero."""
        kappa = ArrayConfig(m_antennas=4, wavelength=0.1).kappa()
        assert kappa.tolist() == [-1.5, -0.5, 0.5, 1.5]

    def test_invalid_geometry_rejected(self):
        """Test that non-positive sizes raise domain errors."""
        with pytest.raises(ParameterDomainError):
            ArrayConfig(m_antennas=0, wavelength=0.1)
        with pytest.raises(ParameterDomainError):
            ArrayConfig(m_antennas=8, wavelength=0.0)
        with pytest.raises(ParameterDomainError):
            ArrayConfig.from_carrier(8, -1.0)

    def test_domain_errors_are_value_errors(self):
        """Test that callers can catch domain errors as ValueError."""
        assert issubclass(DomainError, ValueError)


class TestPathSet:
    """Test multipath parameter sets."""

    def test_from_lists(self):
        """Test building paths from parallel lists."""
        paths = PathSet.from_lists([1, 1j], [0.1, -0.2], [12.0, 15.0])
        assert paths.l_paths == 2
        assert paths.paths[1].gain == 1j

    def test_doa_outside_interval_rejected(self):
        """Test that θ = 1 is rejected."""
        with pytest.raises(ParameterDomainError):
            PathSet.from_lists([1], [1.0], [10.0])

    def test_distance_must_be_positive(self):
        """Test that d = 0 is rejected."""
        with pytest.raises(ParameterDomainError):
            PathSet.from_lists([1], [0.0], [0.0])

    def test_draw_respects_ranges(self):
        """Test that drawn distances stay inside the requested range."""
        rng = np.random.default_rng(3)
        paths = PathSet.draw(rng, 50, (10.0, 20.0))
        assert all(10.0 <= p.distance <= 20.0 for p in paths.paths)
        assert all(-1 < p.doa < 1 for p in paths.paths)

    def test_channel_must_be_finite(self):
        """Test that NaN channel entries are rejected."""
        with pytest.raises(ParameterDomainError):
            SpatialChannel(np.array([1.0, np.nan]))


class TestCodebookAndMessages:
    """Test codebook and message containers."""

    def test_codebook_shape_checked(self):
        """Test that the matrix must be N × 2^J."""
        with pytest.raises(DimensionMismatchError):
            Codebook(matrix=np.ones((4, 7)), n_block=4, j_bits=3, rows=np.arange(4))

    def test_unit_norm_columns(self):
        """Test rescaling to unit-norm columns."""
        book = Codebook(matrix=np.ones((4, 8)), n_block=4, j_bits=3, rows=np.arange(4))
        assert book.column_norm == pytest.approx(2.0)
        assert np.allclose(np.linalg.norm(book.unit_norm(), axis=0), 1.0)

    def test_collision_count(self):
        """Test counting reused codewords per slot."""
        msgs = MessageSet(
            bits=np.zeros((4, 2), dtype=np.int8),
            segments=np.array([[1, 2], [1, 3], [2, 3], [2, 4]]),
            j_bits=2,
        )
        assert msgs.collision_count(0) == 2
        assert msgs.collision_count(1) == 1
        assert msgs.k_active == 4
        assert msgs.s_slots == 2


class TestAtomAndConfigs:
    """Test refinement and recovery configuration objects."""

    def test_atom_domain(self):
        """Test that atoms reject θ outside (-1, 1)."""
        with pytest.raises(ParameterDomainError):
            AtomParam(gain=1, codeword=0, doa=-1.0, distance=10.0)

    def test_atom_ring_recip(self):
        """Test the distance-ring reciprocal."""
        atom = AtomParam(gain=1, codeword=0, doa=0.6, distance=16.0)
        assert atom.ring_recip() == pytest.approx(0.04)

    def test_moved_keeps_gain(self):
        """Test that moving an atom keeps its gain and codeword."""
        atom = AtomParam(gain=2j, codeword=3, doa=0.1, distance=10.0).moved(0.2, 11.0)
        assert atom.gain == 2j
        assert atom.codeword == 3
        assert (atom.doa, atom.distance) == (0.2, 11.0)

    def test_refine_counts_non_negative(self):
        """Test that negative refinement counts are rejected."""
        with pytest.raises(ParameterDomainError):
            RefineConfig(t_local=-1)

    def test_recovery_config_validation(self):
        """Test positivity checks of the decoder configuration."""
        with pytest.raises(ParameterDomainError):
            RecoveryConfig(k_a=0, r_sparsity=4, tau_sq=0.0)
        with pytest.raises(ParameterDomainError):
            RecoveryConfig(k_a=2, r_sparsity=4, tau_sq=-1.0)
        with pytest.raises(ParameterDomainError):
            RecoveryConfig(k_a=2, r_sparsity=4, tau_sq=0.0, progress_tol=1.0)

    def test_stopping_power(self):
        """Test the default stopping power ‖Y‖²/(5(SNR+1))."""
        y = np.full((2, 2), 3.0)
        assert RecoveryConfig.stopping_power(y, 9.0) == pytest.approx(36.0 / 50.0)

    def test_desk_sparsity(self):
        """Test R = 2·K_a·L."""
        assert RecoveryConfig.desk_sparsity(20, 2) == 80

    def test_state_estimate_is_sparse(self):
        """Test that the state exports X̂ with the support entries."""
        state = RecoveryState(
            residual=np.zeros((2, 2)),
            row_support=(1,),
            support=((1, 2), (1, 0)),
            coefficients=np.array([1.0 + 1j, 2.0]),
        )
        dense = state.estimate(4, 3).toarray()
        assert dense[1, 2] == 1.0 + 1j
        assert dense[1, 0] == 2.0
        assert np.count_nonzero(dense) == 2
        assert state.row_energies() == {1: pytest.approx(6.0)}


class TestClusterEntities:
    """Test slot channel containers and clustering state."""

    def test_slot_channels_lengths_must_match(self):
        """Test that channels and codeword indices are parallel."""
        with pytest.raises(DimensionMismatchError):
            SlotChannels(slot=0, channels=(np.zeros(2),), codeword_indices=(1, 2))

    def test_slot_matrix(self):
        """Test stacking channels as rows."""
        slot = SlotChannels(slot=0, channels=(np.ones(3), np.zeros(3)), codeword_indices=(4, 7))
        assert slot.k_s == 2
        assert slot.matrix().shape == (2, 3)

    def test_reset_keeps_medoids(self):
        """Test that resetting members keeps the medoids."""
        state = ClusterState.initial([np.ones(2), np.zeros(2)])
        state.assignments[0] = (0, 1)
        state.reset_members()
        assert state.k_hat == 2
        assert len(state.medoids) == 2
        assert state.members == [[], []]
        assert state.assignments == {}


class TestTrialScore:
    """Test trial score serialization."""

    def test_to_dict(self):
        """Test dictionary conversion keeps every field."""
        score = TrialScore(p_e=0.1, nmse=0.01, eb_n0_db=3.0, spectral_eff=12.5, iterations=4)
        data = score.to_dict()
        assert data["p_e"] == 0.1
        assert data["converged"] is True
        assert math.isnan(data["seconds"])
        assert data["flags"] == []
