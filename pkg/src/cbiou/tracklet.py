"""Detection and tracklet records shared across the tracking pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundingBox


@dataclass(frozen=True)
class Detection:
    """One detector output: frame index, box, confidence score."""

    frame: int
    box: BoundingBox
    score: float = 1.0

    def __post_init__(self):
        if int(self.frame) < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        object.__setattr__(self, "frame", int(self.frame))
        score = float(self.score)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {score!r}")
        object.__setattr__(self, "score", score)


@dataclass(frozen=True)
class Tracklet:
    """One identity's observations: strictly increasing frames, one box per
    frame, optional per-frame scores and appearance features.
    """

    id: int
    frames: tuple[int, ...]
    boxes: tuple[BoundingBox, ...]
    scores: tuple[float, ...] | None = None
    features: tuple[np.ndarray, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(int(f) for f in self.frames))
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if not self.frames:
            raise ValueError("tracklet must cover at least one frame")
        if any(b <= a for a, b in zip(self.frames, self.frames[1:])):
            raise ValueError(f"tracklet {self.id}: frames must be strictly increasing")
        if len(self.boxes) != len(self.frames):
            raise ValueError(f"tracklet {self.id}: {len(self.boxes)} boxes for {len(self.frames)} frames")
        if self.scores is not None:
            object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
            if len(self.scores) != len(self.frames):
                raise ValueError(f"tracklet {self.id}: {len(self.scores)} scores for {len(self.frames)} frames")
        if self.features is not None:
            feats = tuple(np.asarray(f, dtype=float) for f in self.features)
            object.__setattr__(self, "features", feats)
            if len(feats) != len(self.frames):
                raise ValueError(f"tracklet {self.id}: {len(feats)} features for {len(self.frames)} frames")
            for vec in feats:
                if vec.ndim != 1 or not np.isfinite(vec).all():
                    raise ValueError(f"tracklet {self.id}: features must be finite 1-d vectors")
                if not math.isfinite(float(np.linalg.norm(vec))) or float(np.linalg.norm(vec)) <= 0.0:
                    raise ValueError(f"tracklet {self.id}: feature vectors must have positive norm")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def frame_set(self) -> frozenset[int]:
        return frozenset(self.frames)

    @property
    def first_frame(self) -> int:
        return self.frames[0]

    @property
    def last_frame(self) -> int:
        return self.frames[-1]
