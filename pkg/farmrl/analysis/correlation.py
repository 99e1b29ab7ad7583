from collections.abc import Sequence

import numpy as np
import pandas as pd

from farmrl.analysis.norms import trace_series
from farmrl.analysis.segments import EventSegment, segments_by_tag
from farmrl.analysis.traces import EpisodeTrace
from farmrl.enums import EventTag

CORRELATION_COLUMNS = ["event", "module_i", "module_j", "corr", "segments"]
MIN_WINDOW = 3


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Pearson correlation, or None when either series has zero variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da, db = a - a.mean(), b - b.mean()
    denominator = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denominator <= 1e-12:
        return None
    return float(np.clip(np.sum(da * db) / denominator, -1.0, 1.0))


def correlation_matrix(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """n×n Pearson matrix of the columns of a T×n series, NaN for undefined pairs, and a 0/1 defined mask.

    The diagonal is 1 by definition.
    """
    n = series.shape[1]
    matrix = np.full((n, n), np.nan)
    defined = np.zeros((n, n), dtype=bool)
    for i in range(n):
        matrix[i, i] = 1.0
        defined[i, i] = True
        for j in range(i + 1, n):
            value = pearson(series[:, i], series[:, j])
            if value is not None:
                matrix[i, j] = matrix[j, i] = value
                defined[i, j] = defined[j, i] = True
    return matrix, defined


def pairwise_event_correlation(
    traces: Sequence[EpisodeTrace],
    segments: Sequence[EventSegment],
    tags: Sequence[EventTag] | None = None,
) -> dict[EventTag, np.ndarray]:
    """Per event, the n×n correlation of module norm series inside each window, averaged over segments.

    Only the in-episode part of a window is used, and windows shorter than 3 steps are skipped. Undefined
    correlations (zero variance) are left out of the average; a pair with no defined value at all stays NaN.
    """
    by_id = {trace.episode_id: trace for trace in traces}
    grouped = segments_by_tag(segments)
    result: dict[EventTag, np.ndarray] = {}
    for tag in tags if tags is not None else list(EventTag):
        sums: np.ndarray | None = None
        counts: np.ndarray | None = None
        for segment in grouped.get(tag, []):
            if segment.valid_length < MIN_WINDOW:
                continue
            series = trace_series(by_id[segment.episode_id], "norm")[segment.start : segment.stop + 1]
            matrix, defined = correlation_matrix(series)
            if sums is None or counts is None:
                sums = np.zeros_like(matrix)
                counts = np.zeros(matrix.shape, dtype=np.int64)
            sums += np.where(defined, matrix, 0.0)
            counts += defined
        if sums is None or counts is None:
            continue
        averaged = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        np.fill_diagonal(averaged, 1.0)
        result[tag] = averaged
    return result


def correlations_frame(correlations: dict[EventTag, np.ndarray], segments: Sequence[EventSegment]) -> pd.DataFrame:
    """Long table (event, module_i, module_j, corr, segments) over module pairs i < j. Undefined corr is empty."""
    counts = {tag: len(group) for tag, group in segments_by_tag(segments).items()}
    rows = []
    for tag, matrix in correlations.items():
        n = matrix.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                rows.append(
                    {
                        "event": str(tag),
                        "module_i": i + 1,
                        "module_j": j + 1,
                        "corr": None if np.isnan(matrix[i, j]) else float(matrix[i, j]),
                        "segments": counts.get(tag, 0),
                    }
                )
    return pd.DataFrame(rows, columns=CORRELATION_COLUMNS)


def compare_correlations(trained: pd.DataFrame, random: pd.DataFrame) -> pd.DataFrame:
    """Trained and random-weight correlations side by side, keyed by (event, module_i, module_j)."""
    keys = ["event", "module_i", "module_j"]
    merged = trained[keys + ["corr"]].merge(
        random[keys + ["corr"]], on=keys, how="outer", suffixes=("_trained", "_random")
    )
    return merged.rename(columns={"corr_trained": "trained", "corr_random": "random"}).sort_values(keys).reset_index(
        drop=True
    )
