"""Kalman-free motion model: average the recent per-frame box displacements
and extrapolate linearly across unmatched frames.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import BoundingBox

# Extrapolated sizes never shrink below this (px); long gaps with a negative
# size trend would otherwise produce invalid boxes.
SIZE_FLOOR = 1e-3


class InsufficientHistory(ValueError):
    """Raised when a motion estimate is requested from fewer than two boxes."""


@dataclass(frozen=True)
class BoxDelta:
    """Per-frame displacement of a box, component-wise."""

    dx: float = 0.0
    dy: float = 0.0
    dw: float = 0.0
    dh: float = 0.0


ZERO_DELTA = BoxDelta()


class MotionWindow:
    """Sliding window over a track's recent matched observations.

    Keeps at most cap+1 boxes (cap displacements), newest last. Frames must
    be pushed in strictly increasing order; gaps are allowed and displacement
    is normalized by the frame gap so the estimate stays per-frame.
    """

    def __init__(self, cap: int = 5):
        if not 2 <= int(cap) <= 5:
            raise ValueError(f"motion window cap must be in [2, 5], got {cap!r}")
        self.cap = int(cap)
        self._entries: list[tuple[int, BoundingBox]] = []

    def push(self, frame: int, box: BoundingBox) -> None:
        if self._entries and frame <= self._entries[-1][0]:
            raise ValueError(f"history frames must increase, got {frame} after {self._entries[-1][0]}")
        self._entries.append((int(frame), box))
        if len(self._entries) > self.cap + 1:
            del self._entries[0]

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[tuple[int, BoundingBox]]:
        return list(self._entries)

    @property
    def last(self) -> tuple[int, BoundingBox]:
        if not self._entries:
            raise InsufficientHistory("empty motion window")
        return self._entries[-1]


def average_motion(window: MotionWindow) -> BoxDelta:
    """Average per-frame displacement over the window's most recent steps.

    Uses n = min(cap, available displacements) steps. Raises
    InsufficientHistory with fewer than two boxes; callers fall back to zero
    motion.
    """
    entries = window.entries
    if len(entries) < 2:
        raise InsufficientHistory("need at least two boxes to estimate motion")
    steps = min(window.cap, len(entries) - 1)
    dx = dy = dw = dh = 0.0
    for (f0, b0), (f1, b1) in zip(entries[-steps - 1:-1], entries[-steps:]):
        gap = f1 - f0
        dx += (b1.x - b0.x) / gap
        dy += (b1.y - b0.y) / gap
        dw += (b1.w - b0.w) / gap
        dh += (b1.h - b0.h) / gap
    return BoxDelta(dx / steps, dy / steps, dw / steps, dh / steps)


def predict_state(last_observation: BoundingBox, delta: BoxDelta, gap: int) -> BoundingBox:
    """Extrapolate a box gap frames forward at a constant per-frame delta.

    Sizes are clamped to SIZE_FLOOR so the result stays a valid box.
    """
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    if gap == 0:
        return last_observation
    return BoundingBox(
        last_observation.x + gap * delta.dx,
        last_observation.y + gap * delta.dy,
        max(SIZE_FLOOR, last_observation.w + gap * delta.dw),
        max(SIZE_FLOOR, last_observation.h + gap * delta.dh),
    )
