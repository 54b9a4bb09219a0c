"""Use case reporting dictionary dimensions and coherence."""

from typing import Dict

from src.application.dtos.scenario_dtos import ScenarioConfig
from src.application.use_cases.run_trial import cached_dictionary
from src.domain.entities.array_config import PathSet
from src.domain.entities.dictionary import DictionaryKind
from src.domain.services.array_geometry import angular_spread, synth_channel
from src.domain.services.dictionary_factory import max_adjacent_coherence


class DictionaryInfoUseCase:
    """Summarize the scenario's dictionary as ordered key/value pairs."""

    def execute(self, cfg: ScenarioConfig) -> Dict[str, str]:
        """Kind, size, grid counts, coherence and near-field energy spread."""
        array = cfg.array()
        dictionary = cached_dictionary(
            array.m_antennas, array.wavelength, cfg.dictionary, cfg.gamma, cfg.beta
        )
        info: Dict[str, str] = {
            "kind": dictionary.kind.value,
            "M": str(dictionary.m_antennas),
            "P": str(dictionary.n_columns),
            "p_theta": str(dictionary.n_angles),
            "p_phi": str(dictionary.n_rings),
        }
        if dictionary.kind is DictionaryKind.ANGULAR_DFT:
            info["max_adjacent_coherence"] = "0"
        else:
            # pairs touching atoms inside the Fresnel distance are left out
            coh = max_adjacent_coherence(dictionary)
            info["max_adjacent_coherence"] = f"{coh:.6g}"
            info["coherence_min_distance"] = f"{dictionary.min_distance:.6g}"
        info["fresnel_distance"] = f"{array.fresnel_distance():.6g}"
        info["rayleigh_distance"] = f"{array.rayleigh_distance():.6g}"

        # a single broadside path at the nearest scenario distance
        probe = PathSet.from_lists([1.0], [0.01], [cfg.distance_min])
        h = synth_channel(array, probe).coefficients
        info["near_field_spread_bins"] = str(angular_spread(array, h))
        return info
