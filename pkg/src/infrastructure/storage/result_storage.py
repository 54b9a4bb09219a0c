"""CSV storage for sweep results, ground truth and cluster dumps."""

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from src.application.dtos.scenario_dtos import ResultRow
from src.application.mappers.result_mapper import ResultMapper, format_value
from src.domain.entities.cluster import ClusterState
from src.domain.entities.codebook import MessageSet


class ResultStorage:
    """Local filesystem storage for result tables."""

    def __init__(self, base_path: str = "./storage/results"):
        """Initialize result storage.

        Args:
            base_path: Base directory for dumps and result files
        """
        self.base_path = Path(base_path)

    def _target(self, name: str) -> Path:
        target = self.base_path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write_rows(self, name: str, rows: Sequence[ResultRow]) -> str:
        """Write a sweep table and return its path."""
        target = self._target(name)
        target.write_text(ResultMapper.rows_to_csv(rows), encoding="utf-8")
        return str(target)

    def write_ground_truth(self, tag: str, msgs: MessageSet) -> str:
        """slot,user,codeword_index for every transmitted segment."""
        target = self._target(f"{tag}_truth.csv")
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["slot", "user", "codeword_index"])
            for s in range(msgs.s_slots):
                for k in range(msgs.k_active):
                    writer.writerow([s, k, int(msgs.segments[k, s])])
        return str(target)

    def write_clusters(self, tag: str, state: ClusterState) -> str:
        """cluster,slot,codeword_index,distance_to_medoid for every member."""
        target = self._target(f"{tag}_clusters.csv")
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["cluster", "slot", "codeword_index", "distance_to_medoid"])
            for k, members in enumerate(state.members):
                for m in sorted(members, key=lambda m: m.slot):
                    dist = float(np.linalg.norm(m.channel - state.medoids[k]))
                    writer.writerow([k, m.slot, m.codeword_index, format_value(dist)])
        return str(target)
