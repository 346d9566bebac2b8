"""Gap-aware merging of speech regions into bounded decoding windows.

Greedy left-to-right accumulation: a region joins the current window iff
the silence gap to the previous region is small enough AND the merged core
span stays under the cap.  Oversized single regions are hard-split at the
cap; every window is then padded with fixed context margins, clamped to
the recording bounds.  Padded windows may overlap; cores never do.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .interchange import DecodingWindow, SpeechRegion


@dataclass(frozen=True)
class WindowingConfig:
    max_window_s: float = 20.0
    gap_threshold_s: float = 5.0
    pad_s: float = 1.0

    def __post_init__(self):
        if self.max_window_s <= 0:
            raise ValidationError(f"max_window_s must be > 0, got {self.max_window_s}")
        if self.gap_threshold_s < 0 or self.pad_s < 0:
            raise ValidationError("gap_threshold_s and pad_s must be >= 0")


def _validate_regions(regions: Sequence[SpeechRegion], duration: float) -> None:
    for i, r in enumerate(regions):
        if r.end > duration + 1e-9:
            raise ValidationError(f"region {i} ({r.start}, {r.end}) exceeds duration {duration}")
    for i, (a, b) in enumerate(zip(regions, regions[1:])):
        if (b.start, b.end) < (a.start, a.end):
            raise ValidationError(f"regions not sorted at index {i}")
        if b.start < a.end:
            raise ValidationError(
                f"overlapping regions ({a.start}, {a.end}) and ({b.start}, {b.end})"
            )


def _pad(core_start: float, core_end: float, indices: list[int],
         duration: float, cfg: WindowingConfig) -> DecodingWindow:
    return DecodingWindow(
        start=max(0.0, core_start - cfg.pad_s),
        end=min(duration, core_end + cfg.pad_s),
        core_start=core_start,
        core_end=core_end,
        region_indices=tuple(indices),
    )


def build_windows(regions: Sequence[SpeechRegion], duration: float,
                  cfg: WindowingConfig = WindowingConfig()) -> list[DecodingWindow]:
    """Merge sorted, disjoint regions into padded decoding windows.

    A region longer than ``max_window_s`` is split into consecutive pieces
    of at most ``max_window_s``; each piece forms its own window and does
    not accumulate neighbors.
    """
    _validate_regions(regions, duration)
    windows: list[DecodingWindow] = []

    cur_start: float | None = None
    cur_end = 0.0
    cur_indices: list[int] = []

    def flush():
        nonlocal cur_start, cur_indices
        if cur_start is not None:
            windows.append(_pad(cur_start, cur_end, cur_indices, duration, cfg))
        cur_start = None
        cur_indices = []

    for i, r in enumerate(regions):
        if r.end - r.start > cfg.max_window_s:
            flush()
            piece_start = r.start
            while piece_start < r.end:
                piece_end = min(r.end, piece_start + cfg.max_window_s)
                windows.append(_pad(piece_start, piece_end, [i], duration, cfg))
                piece_start = piece_end
            continue
        if cur_start is None:
            cur_start, cur_end, cur_indices = r.start, r.end, [i]
            continue
        gap = r.start - regions[cur_indices[-1]].end
        if gap <= cfg.gap_threshold_s and r.end - cur_start <= cfg.max_window_s:
            cur_end = r.end
            cur_indices.append(i)
        else:
            flush()
            cur_start, cur_end, cur_indices = r.start, r.end, [i]
    flush()
    return windows


def assign_region_indices(windows: Sequence[DecodingWindow],
                          regions: Sequence[SpeechRegion]) -> list[DecodingWindow]:
    """Recompute each window's region indices from core overlap.

    Every region index lands in exactly one window, except that the pieces
    of a hard-split oversized region each carry that region's index.
    """
    out = []
    for w in windows:
        indices = tuple(
            i for i, r in enumerate(regions)
            if r.start < w.core_end and r.end > w.core_start
        )
        if not indices:
            raise ValidationError(
                f"window ({w.core_start}, {w.core_end}) overlaps no region"
            )
        out.append(DecodingWindow(w.start, w.end, w.core_start, w.core_end, indices))
    return out
