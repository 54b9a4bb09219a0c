"""Mapper from trial scores to sweep rows and CSV lines."""

import math
from typing import List, Sequence, Union

from src.application.dtos.scenario_dtos import ResultRow
from src.domain.entities.score import TrialScore
from src.domain.services.metrics import mean_std


def format_value(value: Union[float, int, str]) -> str:
    """Six significant digits for floats; NaN and infinities spelled out."""
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def to_db(value: float) -> float:
    """10·log10, with NaN for non-positive or undefined input."""
    if math.isnan(value):
        return math.nan
    if value <= 0:
        return -math.inf
    return 10 * math.log10(value)


class ResultMapper:
    """Mapper between trial scores, result rows and CSV text."""

    @staticmethod
    def scores_to_row(axis_value: str, scores: Sequence[TrialScore]) -> ResultRow:
        """Aggregate per-seed scores into one row."""
        p_e = mean_std([s.p_e for s in scores])
        nmse = mean_std([s.nmse for s in scores])
        iters = mean_std([s.iterations for s in scores])
        seconds = mean_std([s.seconds for s in scores])
        return ResultRow(
            axis_value=axis_value,
            p_e_mean=p_e["mean"],
            p_e_std=p_e["std"],
            nmse_mean_db=to_db(nmse["mean"]),
            iters_mean=iters["mean"],
            seconds_mean=seconds["mean"],
            seeds=len(scores),
        )

    @staticmethod
    def row_to_line(row: ResultRow) -> str:
        """Comma-separated CSV line."""
        return ",".join(format_value(getattr(row, c)) for c in ResultRow.columns())

    @staticmethod
    def rows_to_csv(rows: Sequence[ResultRow]) -> str:
        """Header plus one line per row, newline terminated."""
        lines: List[str] = [",".join(ResultRow.columns())]
        lines.extend(ResultMapper.row_to_line(r) for r in rows)
        return "\n".join(lines) + "\n"
