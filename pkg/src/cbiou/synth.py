"""Synthetic scenes with scripted trajectories and a simple detector model.

Scene scripts are plain text. Global keys come first, one per line:

    frames=60
    jitter=0        # detector noise sigma, px
    drop=0          # probability a detection goes missing
    seed=7

then one start line and any number of contiguous velocity segments per
object ("# ..." comments and blank lines are ignored):

    object 1: start 1 0 40 10 10      # start <frame> <x> <y> <w> <h>
    object 1: 2..60 12 0 0 0          # <a>..<b> <vx> <vy> <vw> <vh>

The box at frame f in a segment is the previous frame's box plus the
per-frame velocity, so a segment faster than the box width scripts exactly
the non-overlapping "teleport" case. Ground truth is derived from the script
with no noise; detections add the detector model on top.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundingBox
from .metrics import FrameAnnotations
from .motion import SIZE_FLOOR
from .tracklet import Detection


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    vx: float
    vy: float
    vw: float
    vh: float


@dataclass
class ObjectScript:
    object_id: int
    start_frame: int
    box: BoundingBox
    segments: list[Segment] = field(default_factory=list)

    @property
    def last_frame(self) -> int:
        return self.segments[-1].end if self.segments else self.start_frame


@dataclass
class SceneSpec:
    frames: int
    jitter: float = 0.0
    drop: float = 0.0
    seed: int = 0
    objects: list[ObjectScript] = field(default_factory=list)

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError(f"scene must have >= 1 frame, got {self.frames}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")
        if not 0.0 <= self.drop < 1.0:
            raise ValueError(f"drop must be in [0, 1), got {self.drop}")


_OBJECT_RE = re.compile(r"^object\s+(\d+)\s*:\s*(.+)$")
_SEGMENT_RE = re.compile(r"^(\d+)\.\.(\d+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)$")
_START_RE = re.compile(r"^start\s+(\d+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)$")


def parse_scene(source) -> SceneSpec:
    """Parse a scene script from a path or stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()

    keys: dict[str, float] = {}
    objects: dict[int, ObjectScript] = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        obj_match = _OBJECT_RE.match(line)
        if obj_match:
            object_id = int(obj_match.group(1))
            body = obj_match.group(2).strip()
            start_match = _START_RE.match(body)
            if start_match:
                if object_id in objects:
                    raise ValueError(f"line {line_no}: object {object_id} started twice")
                frame = int(start_match.group(1))
                x, y, w, h = (float(start_match.group(k)) for k in range(2, 6))
                objects[object_id] = ObjectScript(object_id, frame, BoundingBox(x, y, w, h))
                continue
            seg_match = _SEGMENT_RE.match(body)
            if seg_match:
                if object_id not in objects:
                    raise ValueError(f"line {line_no}: segment before start for object {object_id}")
                script = objects[object_id]
                a, b = int(seg_match.group(1)), int(seg_match.group(2))
                expected = script.last_frame + 1
                if a != expected:
                    raise ValueError(f"line {line_no}: object {object_id} segment must start "
                                     f"at frame {expected}, got {a}")
                if b < a:
                    raise ValueError(f"line {line_no}: empty segment {a}..{b}")
                vx, vy, vw, vh = (float(seg_match.group(k)) for k in range(3, 7))
                script.segments.append(Segment(a, b, vx, vy, vw, vh))
                continue
            raise ValueError(f"line {line_no}: cannot parse object line {raw!r}")
        if "=" in line:
            key, _, value = line.partition("=")
            keys[key.strip()] = float(value.strip())
            continue
        raise ValueError(f"line {line_no}: cannot parse {raw!r}")

    if "frames" not in keys:
        raise ValueError("scene script must set frames=<count>")
    spec = SceneSpec(
        frames=int(keys["frames"]),
        jitter=float(keys.get("jitter", 0.0)),
        drop=float(keys.get("drop", 0.0)),
        seed=int(keys.get("seed", 0)),
        objects=[objects[i] for i in sorted(objects)],
    )
    for script in spec.objects:
        if script.start_frame < 1 or script.last_frame > spec.frames:
            raise ValueError(f"object {script.object_id} lives outside 1..{spec.frames}")
    return spec


def scene_ground_truth(spec: SceneSpec) -> FrameAnnotations:
    """Exact per-frame annotations derived from the trajectory scripts."""
    annotations: FrameAnnotations = {frame: [] for frame in range(1, spec.frames + 1)}
    for script in spec.objects:
        box = script.box
        annotations[script.start_frame].append((script.object_id, box))
        for seg in script.segments:
            for frame in range(seg.start, seg.end + 1):
                box = BoundingBox(box.x + seg.vx, box.y + seg.vy,
                                  box.w + seg.vw, box.h + seg.vh)
                annotations[frame].append((script.object_id, box))
    return {frame: sorted(entries, key=lambda e: e[0])
            for frame, entries in annotations.items() if entries}


def generate_scene(spec: SceneSpec, seed: int | None = None):
    """Render a scene into (detections by frame, ground truth).

    The detector model drops each box with probability spec.drop and jitters
    all four box components with Gaussian noise sigma = spec.jitter; noisy
    detections get a score in [0.5, 1), noise-free ones score 1. The same
    spec and seed always produce the same output.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    ground_truth = scene_ground_truth(spec)
    detections: dict[int, list[Detection]] = {}
    for frame in sorted(ground_truth):
        kept = []
        for _, box in ground_truth[frame]:
            if spec.drop > 0.0 and rng.random() < spec.drop:
                continue
            if spec.jitter > 0.0:
                nx, ny, nw, nh = rng.normal(0.0, spec.jitter, size=4)
                box = BoundingBox(box.x + nx, box.y + ny,
                                  max(SIZE_FLOOR, box.w + nw),
                                  max(SIZE_FLOOR, box.h + nh))
                score = 0.5 + 0.5 * rng.random()
            else:
                score = 1.0
            kept.append(Detection(frame, box, score))
        if kept:
            detections[frame] = kept
    return detections, ground_truth
