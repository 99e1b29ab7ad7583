from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.analysis.traces import EpisodeTrace
from farmrl.enums import EventTag

DEFAULT_WINDOW = 5


class EventSegment(BaseModel):
    """
    A window [t-k, t+k] around one event, clipped to the episode.

    Attributes
    ----------
    episode_id : int
    tag : EventTag
    event_step : int
        Step whose action caused the event.
    start : int
        First step inside the episode covered by the window.
    stop : int
        Last step inside the episode covered by the window (inclusive).
    k : int
        Half-width. Window index k is always the event step.
    """

    model_config = ConfigDict(frozen=True)

    episode_id: int
    tag: EventTag
    event_step: int
    start: int
    stop: int
    k: int

    @property
    def window_size(self) -> int:
        return 2 * self.k + 1

    @property
    def first_index(self) -> int:
        """Window index of `start`. Indices before it fall outside the episode."""
        return self.start - (self.event_step - self.k)

    @property
    def valid_length(self) -> int:
        return self.stop - self.start + 1


def extract_segments(
    traces: Sequence[EpisodeTrace], k: int = DEFAULT_WINDOW, tags: Sequence[EventTag] | None = None
) -> list[EventSegment]:
    """One segment per tagged event, in episode then step order."""
    if k < 1:
        raise ValueError(f"Window half-width must be >= 1, got {k}.")
    wanted = set(tags) if tags is not None else set(EventTag)
    segments = []
    for trace in traces:
        last = trace.length - 1
        for t, step_tags in enumerate(trace.event_tags):
            for tag in step_tags:
                if tag not in wanted:
                    continue
                segments.append(
                    EventSegment(
                        episode_id=trace.episode_id,
                        tag=tag,
                        event_step=t,
                        start=max(0, t - k),
                        stop=min(last, t + k),
                        k=k,
                    )
                )
    return segments


def window_values(series: np.ndarray, segment: EventSegment) -> np.ndarray:
    """The (2k+1)×n slice of a T×n series around the event, NaN where the window leaves the episode."""
    out = np.full((segment.window_size, series.shape[1]), np.nan)
    first = segment.first_index
    out[first : first + segment.valid_length] = series[segment.start : segment.stop + 1]
    return out


def segments_by_tag(segments: Sequence[EventSegment]) -> dict[EventTag, list[EventSegment]]:
    grouped: dict[EventTag, list[EventSegment]] = {tag: [] for tag in EventTag}
    for segment in segments:
        grouped[segment.tag].append(segment)
    return grouped
