from collections.abc import Sequence
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from farmrl.analysis.segments import EventSegment, segments_by_tag, window_values
from farmrl.analysis.traces import EpisodeTrace
from farmrl.enums import EventTag

CURVE_COLUMNS = ["event", "module", "window_index", "mean", "stderr", "count"]
REFERENCE_EVENT = "episode"

Quantity = Literal["norm", "coefficient"]


class EventCurves(BaseModel):
    """
    Event-aligned curves per module.

    Attributes
    ----------
    quantity : Quantity
        "norm" for module hidden-state norms, "coefficient" for feature-attention coefficient norms.
    curves : pd.DataFrame
        One row per (event, module, window_index) with mean, stderr and the number of segments covering it.
    empty_events : list[EventTag]
        Requested events that had no segment. They have no rows in curves.
    reference : pd.DataFrame
        Whole-episode curve aligned at episode start, event "episode", window_index = step.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    quantity: Quantity
    curves: pd.DataFrame
    empty_events: list[EventTag] = Field(default_factory=list)
    reference: pd.DataFrame


def trace_series(trace: EpisodeTrace, quantity: Quantity) -> np.ndarray:
    series = trace.module_norms if quantity == "norm" else trace.coefficient_norms
    if series is None:
        raise ValueError(f"Episode {trace.episode_id} was collected without recording module traces.")
    return series


def _stats(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean, standard error and count over axis 0 of an S×W×n stack, ignoring NaN."""
    valid = ~np.isnan(stack)
    count = valid.sum(axis=0)
    values = np.where(valid, stack, 0.0)
    safe = np.maximum(count, 1)
    mean = values.sum(axis=0) / safe
    squares = np.where(valid, (stack - mean) ** 2, 0.0).sum(axis=0)
    std = np.sqrt(squares / np.maximum(count - 1, 1))
    stderr = np.where(count > 1, std / np.sqrt(safe), 0.0)
    mean = np.where(count > 0, mean, np.nan)
    stderr = np.where(count > 0, stderr, np.nan)
    return mean, stderr, count


def _rows(event: str, mean: np.ndarray, stderr: np.ndarray, count: np.ndarray) -> list[dict]:
    rows = []
    for module in range(mean.shape[1]):
        for index in range(mean.shape[0]):
            if count[index, module] == 0:
                continue
            rows.append(
                {
                    "event": event,
                    "module": module + 1,
                    "window_index": index,
                    "mean": float(mean[index, module]),
                    "stderr": float(stderr[index, module]),
                    "count": int(count[index, module]),
                }
            )
    return rows


def reference_curve(traces: Sequence[EpisodeTrace], quantity: Quantity = "norm") -> pd.DataFrame:
    """Average over episodes aligned at their first step."""
    if not traces:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    series = [trace_series(t, quantity) for t in traces]
    length = max(s.shape[0] for s in series)
    stack = np.full((len(series), length, series[0].shape[1]), np.nan)
    for i, s in enumerate(series):
        stack[i, : s.shape[0]] = s
    return pd.DataFrame(_rows(REFERENCE_EVENT, *_stats(stack)), columns=CURVE_COLUMNS)


def event_average_curves(
    traces: Sequence[EpisodeTrace],
    segments: Sequence[EventSegment],
    quantity: Quantity = "norm",
    tags: Sequence[EventTag] | None = None,
) -> EventCurves:
    """Aligns every segment's window on its event step and averages per module and window index.

    Averages are taken over segments. Events without any segment are listed in empty_events instead of producing rows.
    """
    by_id = {trace.episode_id: trace for trace in traces}
    grouped = segments_by_tag(segments)
    rows: list[dict] = []
    empty: list[EventTag] = []
    for tag in tags if tags is not None else list(EventTag):
        group = grouped.get(tag, [])
        if not group:
            empty.append(tag)
            continue
        stack = np.stack([window_values(trace_series(by_id[s.episode_id], quantity), s) for s in group])
        rows.extend(_rows(str(tag), *_stats(stack)))
    return EventCurves(
        quantity=quantity,
        curves=pd.DataFrame(rows, columns=CURVE_COLUMNS),
        empty_events=empty,
        reference=reference_curve(traces, quantity),
    )


def event_contrast(curves: pd.DataFrame) -> pd.DataFrame:
    """
    Per module: how much the event curves differ from each other compared to their own noise.

    between_variance is the variance across events of each event curve's mean; within_variance is the mean squared
    standard error inside the curves. A module that behaves the same around every event has a ratio near or below 1.

    Returns
    -------
    pd.DataFrame
        Columns module, events, between_variance, within_variance, ratio.
    """
    columns = ["module", "events", "between_variance", "within_variance", "ratio"]
    events = curves[curves["event"] != REFERENCE_EVENT]
    if events.empty:
        return pd.DataFrame(columns=columns)
    rows = []
    for module, frame in events.groupby("module", sort=True):
        curve_means = frame.groupby("event")["mean"].mean()
        between = float(np.var(curve_means.to_numpy())) if len(curve_means) > 1 else 0.0
        within = float(np.mean(np.square(frame["stderr"].to_numpy())))
        rows.append(
            {
                "module": int(module),
                "events": int(len(curve_means)),
                "between_variance": between,
                "within_variance": within,
                "ratio": between / within if within > 0 else np.nan,
            }
        )
    return pd.DataFrame(rows, columns=columns)
