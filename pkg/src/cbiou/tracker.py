"""Online tracker: cascaded two-round buffered-IoU assignment between alive
tracks and per-frame detections, with SORT-style track lifecycle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import MAX_BUFFER_SCALE, BoundingBox, biou, check_buffer_scale, diou, giou, iou
from .motion import ZERO_DELTA, MotionWindow, average_motion, predict_state
from .tracklet import Detection, Tracklet

# Cost assigned to pairs below the match floor. Large enough that the solver
# only uses such a pair when the matrix shape forces it; those pairs are
# stripped afterwards, which is what makes the cascade-dominance invariant
# hold (see match_with_floor).
FORBIDDEN_COST = 1e6

# Lexicographic tie-break among equal-cost assignments: prefer lower track
# index, then lower detection index. Far below any meaningful cost difference.
_TIE_EPS = 1e-12

SIMILARITIES = ("iou", "giou", "diou", "biou")


class OutOfOrderFrame(ValueError):
    """Raised when step() receives a frame index that does not increase."""


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker hyperparameters.

    b1/b2 are the small/large buffer scales of the two matching rounds
    (b1 <= b2; equal values degenerate to a single round). motion_cap bounds
    how many recent displacements feed the motion average. A track dies after
    max_age consecutive unmatched frames and is emitted once it has min_hits
    matches. Pairs whose similarity is <= match_floor are never matched.
    """

    b1: float = 0.3
    b2: float = 0.4
    motion_cap: int = 5
    max_age: int = 30
    min_hits: int = 1
    match_floor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "b1", check_buffer_scale(self.b1))
        object.__setattr__(self, "b2", check_buffer_scale(self.b2))
        if self.b1 > self.b2:
            raise ValueError(f"b1 must not exceed b2, got b1={self.b1}, b2={self.b2}")
        if not 2 <= int(self.motion_cap) <= 5:
            raise ValueError(f"motion_cap must be in [2, 5], got {self.motion_cap}")
        if int(self.max_age) < 1:
            raise ValueError(f"max_age must be >= 1, got {self.max_age}")
        if int(self.min_hits) < 1:
            raise ValueError(f"min_hits must be >= 1, got {self.min_hits}")
        floor = float(self.match_floor)
        if not 0.0 <= floor < 1.0 or not math.isfinite(floor):
            raise ValueError(f"match_floor must be in [0, 1), got {self.match_floor!r}")
        object.__setattr__(self, "motion_cap", int(self.motion_cap))
        object.__setattr__(self, "max_age", int(self.max_age))
        object.__setattr__(self, "min_hits", int(self.min_hits))
        object.__setattr__(self, "match_floor", floor)


def solve_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-total-cost one-to-one assignment over a rectangular cost matrix.

    Returns (row, col) pairs sorted by row; min(n_rows, n_cols) pairs total.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def match_with_floor(similarity: np.ndarray, floor: float = 0.0):
    """One-to-one matching maximizing total similarity, pairs <= floor forbidden.

    Returns (matches, unmatched_rows, unmatched_cols) with deterministic
    ascending ordering. After stripping forbidden pairs no admissible
    row/col pair can remain unmatched on both sides: the solver would have
    swapped a forbidden pair for it at lower cost.
    """
    sim = np.asarray(similarity, dtype=float)
    n_rows, n_cols = sim.shape
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))

    cost = 1.0 - sim
    cost[sim <= floor] = FORBIDDEN_COST
    ii, jj = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
    cost = cost + _TIE_EPS * (ii * n_cols + jj)

    matches = [(i, j) for i, j in solve_assignment(cost) if sim[i, j] > floor]
    matched_rows = {i for i, _ in matches}
    matched_cols = {j for _, j in matches}
    unmatched_rows = [i for i in range(n_rows) if i not in matched_rows]
    unmatched_cols = [j for j in range(n_cols) if j not in matched_cols]
    return matches, unmatched_rows, unmatched_cols


def assignment(track_boxes, det_boxes, b: float, floor: float = 0.0):
    """Buffered-IoU assignment between predicted track boxes and detections.

    Minimizes the summed (1 - BIoU) cost over matched pairs; pairs with
    BIoU <= floor are treated as non-assignable. Returns
    (matches, unmatched_track_indices, unmatched_detection_indices).
    """
    sim = np.empty((len(track_boxes), len(det_boxes)))
    for i, tb in enumerate(track_boxes):
        for j, db in enumerate(det_boxes):
            sim[i, j] = biou(tb, db, b)
    return match_with_floor(sim, floor)


class _Track:
    __slots__ = ("id", "window", "last_frame", "misses", "hits", "status",
                 "state", "history", "pending")

    def __init__(self, track_id: int, frame: int, box: BoundingBox, score: float, cap: int):
        self.id = track_id
        self.window = MotionWindow(cap)
        self.window.push(frame, box)
        self.last_frame = frame      # frame of the last matched observation
        self.misses = 0
        self.hits = 1
        self.status = TrackStatus.TENTATIVE
        self.state = box
        self.history: list[tuple[int, BoundingBox, float]] = [(frame, box, score)]
        self.pending: list[tuple[int, BoundingBox, float]] = [(frame, box, score)]

    def delta(self, use_motion: bool):
        if not use_motion or len(self.window) < 2:
            return ZERO_DELTA
        return average_motion(self.window)


class CBIoUTracker:
    """Cascaded buffered-IoU tracker.

    Feed detections one frame at a time through step(); frames must strictly
    increase. Not thread-safe: one instance tracks one sequence, though
    distinct instances are fully independent.

    similarity/cascade/use_motion exist for ablations: similarity picks the
    association score ("biou" is the real tracker; "giou"/"diou" are mapped
    affinely onto [0, 1]), cascade=False collapses matching to a single
    round at b1, use_motion=False freezes tracks at their last observation.
    """

    def __init__(self, config: TrackerConfig | None = None, *,
                 similarity: str = "biou", cascade: bool = True, use_motion: bool = True):
        if similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
        self.config = config or TrackerConfig()
        self.similarity = similarity
        self.cascade = cascade
        self.use_motion = use_motion
        self._tracks: list[_Track] = []
        self._next_id = 1
        self._last_step_frame = 0

    @property
    def alive_tracks(self) -> list[int]:
        return [t.id for t in self._tracks if t.status is not TrackStatus.TERMINATED]

    def _score(self, track_box: BoundingBox, det_box: BoundingBox, b: float) -> float:
        if self.similarity == "biou":
            return biou(track_box, det_box, b)
        if self.similarity == "iou":
            return iou(track_box, det_box)
        if self.similarity == "giou":
            return (1.0 + giou(track_box, det_box)) / 2.0
        return (1.0 + diou(track_box, det_box)) / 2.0

    def _similarity_matrix(self, predicted, detections, b):
        sim = np.empty((len(predicted), len(detections)))
        for i, box in enumerate(predicted):
            for j, det in enumerate(detections):
                sim[i, j] = self._score(box, det.box, b)
        return sim

    def step(self, frame: int, detections: list[Detection]):
        """Advance one frame; returns emitted rows (frame, track id, box, score).

        Rows for earlier frames appear when a tentative track crosses
        min_hits and its buffered observations are released retroactively.
        """
        frame = int(frame)
        if frame <= self._last_step_frame:
            raise OutOfOrderFrame(f"frame {frame} fed after frame {self._last_step_frame}")
        self._last_step_frame = frame
        for det in detections:
            if det.frame != frame:
                raise ValueError(f"detection for frame {det.frame} fed at frame {frame}")

        cfg = self.config
        alive = [t for t in self._tracks if t.status is not TrackStatus.TERMINATED]
        predicted = [
            predict_state(t.window.last[1], t.delta(self.use_motion), frame - t.last_frame)
            for t in alive
        ]
        for t, box in zip(alive, predicted):
            t.state = box

        # Round 1: every alive track, small buffer.
        sim1 = self._similarity_matrix(predicted, detections, cfg.b1)
        matches, left_tracks, left_dets = match_with_floor(sim1, cfg.match_floor)

        # Round 2: leftovers only, large buffer.
        if self.cascade and left_tracks and left_dets:
            sub = [predicted[i] for i in left_tracks]
            sub_dets = [detections[j] for j in left_dets]
            sim2 = self._similarity_matrix(sub, sub_dets, cfg.b2)
            matches2, sub_left_tracks, sub_left_dets = match_with_floor(sim2, cfg.match_floor)
            matches += [(left_tracks[i], left_dets[j]) for i, j in matches2]
            left_tracks = [left_tracks[i] for i in sub_left_tracks]
            left_dets = [left_dets[j] for j in sub_left_dets]

        emitted: list[tuple[int, int, BoundingBox, float]] = []

        for i, j in matches:
            track, det = alive[i], detections[j]
            track.window.push(frame, det.box)
            track.last_frame = frame
            track.state = det.box
            track.misses = 0
            track.hits += 1
            track.history.append((frame, det.box, det.score))
            track.pending.append((frame, det.box, det.score))
            if track.status is TrackStatus.TENTATIVE and track.hits >= cfg.min_hits:
                track.status = TrackStatus.CONFIRMED
            if track.status is TrackStatus.CONFIRMED:
                emitted += [(f, track.id, box, score) for f, box, score in track.pending]
                track.pending.clear()

        for i in left_tracks:
            track = alive[i]
            track.misses += 1
            if track.misses > cfg.max_age:
                track.status = TrackStatus.TERMINATED

        for j in left_dets:
            det = detections[j]
            track = _Track(self._next_id, frame, det.box, det.score, cfg.motion_cap)
            self._next_id += 1
            self._tracks.append(track)
            if cfg.min_hits <= 1:
                track.status = TrackStatus.CONFIRMED
                emitted.append((frame, track.id, det.box, det.score))
                track.pending.clear()

        emitted.sort(key=lambda row: (row[0], row[1]))
        return emitted

    def tracklets(self) -> list[Tracklet]:
        """Matched-observation history of every confirmed track, by id."""
        out = []
        for track in self._tracks:
            if track.status is TrackStatus.TENTATIVE:
                continue
            if not track.history or track.hits < self.config.min_hits:
                continue
            frames = tuple(f for f, _, _ in track.history)
            boxes = tuple(b for _, b, _ in track.history)
            scores = tuple(s for _, _, s in track.history)
            out.append(Tracklet(track.id, frames, boxes, scores))
        return sorted(out, key=lambda t: t.id)


def run_sequence(detections_by_frame, config: TrackerConfig | None = None, *,
                 similarity: str = "biou", cascade: bool = True,
                 use_motion: bool = True) -> list[Tracklet]:
    """Track a whole sequence and return its confirmed tracklets.

    Steps through every integer frame from the first to the last present in
    the input so miss counting stays frame-accurate; frames without
    detections are empty steps.
    """
    if not detections_by_frame:
        return []
    tracker = CBIoUTracker(config, similarity=similarity, cascade=cascade, use_motion=use_motion)
    first, last = min(detections_by_frame), max(detections_by_frame)
    for frame in range(first, last + 1):
        tracker.step(frame, list(detections_by_frame.get(frame, ())))
    return tracker.tracklets()
