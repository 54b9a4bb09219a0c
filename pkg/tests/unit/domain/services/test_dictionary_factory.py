"""Unit tests for dictionary construction."""

import numpy as np
import pytest

from src.domain.entities.array_config import ArrayConfig
from src.domain.entities.dictionary import Q1, DictionaryKind
from src.domain.exceptions import (
    DictionaryConstructionError,
    IndexRangeError,
    ParameterDomainError,
)
from src.domain.services.array_geometry import near_response
from src.domain.services.dictionary_factory import (
    DictionaryFactory,
    dft_doas,
    max_adjacent_coherence,
    unitary_extension,
)


@pytest.fixture
def large_array():
    """Fixture providing a 128-antenna array with λ = 0.1 m."""
    return ArrayConfig(m_antennas=128, wavelength=0.1)


@pytest.fixture
def desk_array():
    """Fixture providing the 64-antenna array at 3 GHz."""
    return ArrayConfig.from_carrier(64, 3e9)


class TestPolarDictionary:
    """Test the proposed polar-domain dictionary."""

    def test_large_array_dimensions(self, large_array):
        """Test 128 × 741 with 247 angles and 3 rings."""
        dictionary = DictionaryFactory.build_polar(large_array, 0.5816)
        assert dictionary.shape == (128, 741)
        assert dictionary.n_angles == 247
        assert dictionary.n_rings == 3

    def test_desk_dimensions(self, desk_array):
        """Test 123 angles and 2 rings at M = 64."""
        dictionary = DictionaryFactory.build_polar(desk_array, 0.5816)
        assert dictionary.shape == (64, 246)

    def test_unit_norm_columns(self, desk_array):
        """Test that every atom has unit norm."""
        atoms = DictionaryFactory.build_polar(desk_array, 0.5816).atoms
        assert np.allclose(np.linalg.norm(atoms, axis=0), 1.0, atol=1e-12)

    def test_columns_are_ring_major(self, desk_array):
        """Test that column (angle, ring) holds the matching response."""
        dictionary = DictionaryFactory.build_polar(desk_array, 0.5816)
        grid = dictionary.grid
        col = dictionary.column_of(7, 1)
        assert col == 123 + 7
        theta = float(grid.thetas[7])
        d = float(grid.distances[7, 1])
        assert np.allclose(dictionary.atoms[:, col], near_response(desk_array, theta, d))
        assert dictionary.angle_ring_of(col) == (7, 1)
        assert dictionary.ring_recip_of(col) == pytest.approx(grid.ring_recips[1])

    def test_column_lookup_range(self, desk_array):
        """Test that out-of-grid lookups raise."""
        dictionary = DictionaryFactory.build_polar(desk_array, 0.5816)
        with pytest.raises(IndexRangeError):
            dictionary.column_of(123, 0)
        with pytest.raises(IndexRangeError):
            dictionary.angle_ring_of(246)

    def test_no_ring_raises_with_bound(self):
        """Test that γ leaving no distance ring raises and states the bound."""
        with pytest.raises(DictionaryConstructionError, match="gamma <="):
            DictionaryFactory.build_polar(ArrayConfig(m_antennas=4, wavelength=0.1), 0.5)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.2])
    def test_gamma_domain(self, desk_array, gamma):
        """Test that γ outside (0, 1) raises."""
        with pytest.raises(ParameterDomainError):
            DictionaryFactory.polar_grid(desk_array, gamma)

    def test_adjacent_coherence_bounded(self, desk_array):
        """Test adjacent coherence stays below 0.70 beyond the Fresnel distance."""
        dictionary = DictionaryFactory.build_polar(desk_array, 0.5816)
        coh = max_adjacent_coherence(dictionary, min_distance=desk_array.fresnel_distance())
        assert 0.0 < coh <= 0.70

    def test_coherence_filter_defaults_to_fresnel(self, large_array):
        """Test that the default scan skips atoms inside the Fresnel distance."""
        dictionary = DictionaryFactory.build_polar(large_array, 0.5816)
        filtered = max_adjacent_coherence(dictionary)
        assert filtered == max_adjacent_coherence(dictionary, large_array.fresnel_distance())
        assert filtered <= 0.70
        assert max_adjacent_coherence(dictionary, 0.0) >= filtered

    def test_lower_coherence_than_beta_dictionary(self, desk_array):
        """Test the proposed dictionary is less coherent than the β-controlled one."""
        fresnel = desk_array.fresnel_distance()
        proposed = DictionaryFactory.build_polar(desk_array, 0.5816)
        beta = DictionaryFactory.build_polar_beta(desk_array, 1.2)
        assert max_adjacent_coherence(proposed, fresnel) < max_adjacent_coherence(beta, fresnel)


class TestOtherDictionaries:
    """Test the angular-DFT and β-controlled dictionaries."""

    def test_dft_is_unitary(self, desk_array):
        """Test that the angular-DFT dictionary is unitary."""
        atoms = DictionaryFactory.build_angular_dft(desk_array).atoms
        assert np.allclose(atoms.conj().T @ atoms, np.eye(64), atol=1e-10)

    def test_dft_doas(self):
        """Test the DFT angle grid."""
        assert dft_doas(4).tolist() == [-0.75, -0.25, 0.25, 0.75]

    def test_beta_dimensions(self, large_array):
        """Test Q = 6 rings of 128 atoms at β = 1.2."""
        dictionary = DictionaryFactory.build_polar_beta(large_array, 1.2)
        assert dictionary.shape == (128, 768)
        assert dictionary.n_rings == 6

    def test_beta_far_field_only(self):
        """Test that M = 8, β = 2 gives a single far-field ring."""
        dictionary = DictionaryFactory.build_polar_beta(ArrayConfig(8, 0.1), 2.0)
        assert dictionary.shape == (8, 8)
        assert np.all(np.isinf(dictionary.column_distances))

    def test_beta_too_large(self):
        """Test that β leaving no ring raises."""
        with pytest.raises(DictionaryConstructionError):
            DictionaryFactory.build_polar_beta(ArrayConfig(8, 0.1), 5.0)

    @pytest.mark.parametrize("m_antennas", [64, 128])
    def test_beta_columns_distinct(self, m_antennas):
        """Test that no two β-dictionary columns coincide."""
        dictionary = DictionaryFactory.build_polar_beta(ArrayConfig(m_antennas, 0.1), 1.2)
        gram = np.abs(dictionary.atoms.conj().T @ dictionary.atoms)
        np.fill_diagonal(gram, 0.0)
        assert gram.max() < 0.99

    def test_beta_ring_distances_unclamped(self, desk_array):
        """Test that rings follow (1-θ²)M²λ/(8β²q) below the Fresnel distance too."""
        dictionary = DictionaryFactory.build_polar_beta(desk_array, 1.2)
        scale = 64**2 * desk_array.wavelength / (8 * 1.2**2)
        col = dictionary.column_of(0, 3)
        theta = dictionary.column_doas[col]
        assert dictionary.column_distances[col] == pytest.approx((1 - theta**2) * scale / 3)
        assert dictionary.column_distances[col] < desk_array.fresnel_distance()
        assert dictionary.min_distance == pytest.approx(desk_array.fresnel_distance())

    def test_beta_coherence_large_array(self, large_array):
        """Test adjacent coherence near 0.79 at M = 128, β = 1.2 beyond the Fresnel distance."""
        dictionary = DictionaryFactory.build_polar_beta(large_array, 1.2)
        assert max_adjacent_coherence(dictionary) == pytest.approx(0.7908, abs=0.02)

    def test_dispatch(self, desk_array):
        """Test building by kind."""
        built = DictionaryFactory.build(desk_array, DictionaryKind.ANGULAR_DFT)
        assert built.kind is DictionaryKind.ANGULAR_DFT
        assert built.shape == (64, 64)

    def test_dft_coherence_undefined(self, desk_array):
        """Test that adjacent coherence is refused for the DFT dictionary."""
        with pytest.raises(ParameterDomainError):
            max_adjacent_coherence(DictionaryFactory.build_angular_dft(desk_array))


class TestUnitaryExtension:
    """Test the unitary extension of one distance ring."""

    def test_gram_is_identity(self):
        """Test B̄ᴴB̄ = I for every ring when the angle lattice closes."""
        array = ArrayConfig(m_antennas=64, wavelength=0.1)
        grid = DictionaryFactory.polar_grid(array, 1 - Q1)
        assert grid.p_theta == 128
        for ring in range(1, grid.p_phi + 1):
            ext = unitary_extension(array, grid, ring)
            assert np.linalg.norm(ext.conj().T @ ext - np.eye(128)) < 1e-8

    def test_exact_model_unit_diagonal(self):
        """Test the exact-distance variant keeps unit-norm columns."""
        array = ArrayConfig(m_antennas=64, wavelength=0.1)
        grid = DictionaryFactory.polar_grid(array, 1 - Q1)
        ext = unitary_extension(array, grid, 1, phase_model="exact")
        assert np.allclose(np.linalg.norm(ext, axis=0), 1.0)

    def test_ring_range(self):
        """Test that ring indices are 1-based and bounded."""
        array = ArrayConfig(m_antennas=64, wavelength=0.1)
        grid = DictionaryFactory.polar_grid(array, 1 - Q1)
        with pytest.raises(ParameterDomainError):
            unitary_extension(array, grid, 0)
