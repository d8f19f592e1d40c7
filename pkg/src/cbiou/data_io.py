"""MOTChallenge-style text formats: detections, ground truth, tracking
results, appearance embeddings, plus greedy NMS merging of detection sets.

All files are comma-separated UTF-8; LF or CRLF is accepted on input and LF
is emitted. Coordinates are written with 2 decimals and scores with 4.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .geometry import BoundingBox, iou
from .metrics import FrameAnnotations
from .tracklet import Detection, Tracklet


class ParseError(ValueError):
    """A malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line = line_no


@contextmanager
def _reading(source):
    if hasattr(source, "read"):
        yield source
    else:
        with open(Path(source), "r", encoding="utf-8") as handle:
            yield handle


@contextmanager
def _writing(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(Path(target), "w", encoding="utf-8", newline="\n") as handle:
            yield handle


def _fields(line_no, line, minimum):
    parts = [p.strip() for p in line.strip().split(",")]
    if len(parts) < minimum:
        raise ParseError(line_no, f"expected at least {minimum} fields, got {len(parts)}")
    return parts


def _int_field(line_no, raw, name):
    try:
        return int(raw)
    except ValueError:
        raise ParseError(line_no, f"{name} must be an integer, got {raw!r}") from None


def _float_field(line_no, raw, name):
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(line_no, f"{name} must be a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ParseError(line_no, f"{name} must be finite, got {raw!r}")
    return value


def _box_field(line_no, parts):
    x, y, w, h = (_float_field(line_no, parts[2 + k], n)
                  for k, n in enumerate(("x", "y", "w", "h")))
    try:
        return BoundingBox(x, y, w, h)
    except ValueError as exc:
        raise ParseError(line_no, str(exc)) from None


def parse_detections(source) -> dict[int, list[Detection]]:
    """Read a detection file (frame, -1, x, y, w, h, score, ...).

    Returns detections grouped by frame, frames ascending; out-of-order
    input is accepted and sorted. Empty input yields an empty mapping.
    """
    rows = []
    with _reading(source) as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            parts = _fields(line_no, line, 7)
            frame = _int_field(line_no, parts[0], "frame")
            if frame < 1:
                raise ParseError(line_no, f"frame must be >= 1, got {frame}")
            box = _box_field(line_no, parts)
            score = _float_field(line_no, parts[6], "score")
            try:
                rows.append((frame, Detection(frame, box, score)))
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
    rows.sort(key=lambda r: r[0])
    grouped: dict[int, list[Detection]] = {}
    for frame, det in rows:
        grouped.setdefault(frame, []).append(det)
    return grouped


def parse_ground_truth(source) -> FrameAnnotations:
    """Read a ground-truth file (frame, id, x, y, w, h, ...)."""
    rows = []
    seen = set()
    with _reading(source) as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            parts = _fields(line_no, line, 6)
            frame = _int_field(line_no, parts[0], "frame")
            identity = _int_field(line_no, parts[1], "id")
            if frame < 1:
                raise ParseError(line_no, f"frame must be >= 1, got {frame}")
            if (frame, identity) in seen:
                raise ParseError(line_no, f"duplicate (frame, id) = ({frame}, {identity})")
            seen.add((frame, identity))
            rows.append((frame, identity, _box_field(line_no, parts)))
    rows.sort(key=lambda r: (r[0], r[1]))
    annotations: FrameAnnotations = {}
    for frame, identity, box in rows:
        annotations.setdefault(frame, []).append((identity, box))
    return annotations


def parse_results(source) -> list[Tracklet]:
    """Read a tracking-result file (frame, id, x, y, w, h, score, ...) into
    tracklets grouped by id, ids ascending. (frame, id) pairs must be unique.
    """
    per_id: dict[int, list[tuple[int, BoundingBox, float]]] = {}
    seen = set()
    with _reading(source) as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            parts = _fields(line_no, line, 7)
            frame = _int_field(line_no, parts[0], "frame")
            identity = _int_field(line_no, parts[1], "id")
            if frame < 1:
                raise ParseError(line_no, f"frame must be >= 1, got {frame}")
            if (frame, identity) in seen:
                raise ParseError(line_no, f"duplicate (frame, id) = ({frame}, {identity})")
            seen.add((frame, identity))
            box = _box_field(line_no, parts)
            score = _float_field(line_no, parts[6], "score")
            per_id.setdefault(identity, []).append((frame, box, score))
    tracklets = []
    for identity in sorted(per_id):
        rows = sorted(per_id[identity], key=lambda r: r[0])
        tracklets.append(Tracklet(
            id=identity,
            frames=tuple(r[0] for r in rows),
            boxes=tuple(r[1] for r in rows),
            scores=tuple(r[2] for r in rows),
        ))
    return tracklets


def write_results(tracklets, target) -> None:
    """Write tracklets in result format, sorted by (frame, id); gap frames
    inside a tracklet produce no lines.
    """
    rows = []
    for t in tracklets:
        scores = t.scores if t.scores is not None else (1.0,) * len(t)
        rows += [(f, t.id, b, s) for f, b, s in zip(t.frames, t.boxes, scores)]
    rows.sort(key=lambda r: (r[0], r[1]))
    with _writing(target) as handle:
        for frame, identity, box, score in rows:
            handle.write(f"{frame},{identity},{box.x:.2f},{box.y:.2f},"
                         f"{box.w:.2f},{box.h:.2f},{score:.4f},-1,-1,-1\n")


def write_detections(detections_by_frame, target) -> None:
    """Write detections in det format (id column fixed at -1)."""
    with _writing(target) as handle:
        for frame in sorted(detections_by_frame):
            for det in detections_by_frame[frame]:
                box = det.box
                handle.write(f"{frame},-1,{box.x:.2f},{box.y:.2f},"
                             f"{box.w:.2f},{box.h:.2f},{det.score:.4f},-1,-1,-1\n")


def write_ground_truth(annotations: FrameAnnotations, target) -> None:
    """Write annotations in gt format (trailing consider/class/visibility 1,1,1)."""
    with _writing(target) as handle:
        for frame in sorted(annotations):
            for identity, box in sorted(annotations[frame], key=lambda e: e[0]):
                handle.write(f"{frame},{identity},{box.x:.2f},{box.y:.2f},"
                             f"{box.w:.2f},{box.h:.2f},1,1,1\n")


def tracklets_to_annotations(tracklets) -> FrameAnnotations:
    annotations: FrameAnnotations = {}
    rows = []
    for t in tracklets:
        rows += [(f, t.id, b) for f, b in zip(t.frames, t.boxes)]
    rows.sort(key=lambda r: (r[0], r[1]))
    for frame, identity, box in rows:
        annotations.setdefault(frame, []).append((identity, box))
    return annotations


def read_embeddings(source):
    """Read an embedding table: header "d=<dim>", then "frame,index,v1,..,vd".

    Returns (dim, {(frame, index): vector}). For tracker output the index
    column is the track id.
    """
    table: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    with _reading(source) as handle:
        for line_no, line in enumerate(handle, 1):
            text = line.strip()
            if not text:
                continue
            if dim is None:
                if not text.startswith("d="):
                    raise ParseError(line_no, f"expected header 'd=<dim>', got {text!r}")
                dim = _int_field(line_no, text[2:], "dimension")
                if dim < 1:
                    raise ParseError(line_no, f"dimension must be >= 1, got {dim}")
                continue
            parts = _fields(line_no, text, 2 + dim)
            if len(parts) != 2 + dim:
                raise ParseError(line_no, f"expected {2 + dim} fields, got {len(parts)}")
            frame = _int_field(line_no, parts[0], "frame")
            index = _int_field(line_no, parts[1], "index")
            if (frame, index) in table:
                raise ParseError(line_no, f"duplicate key ({frame}, {index})")
            vec = np.array([_float_field(line_no, p, "component") for p in parts[2:]])
            if float(np.linalg.norm(vec)) <= 0.0:
                raise ParseError(line_no, "zero vector")
            table[(frame, index)] = vec
    if dim is None:
        raise ParseError(1, "missing 'd=<dim>' header")
    return dim, table


def write_embeddings(table, target) -> None:
    """Write an embedding table; vectors round-trip exactly via repr."""
    items = sorted(table.items())
    if not items:
        raise ValueError("cannot write an empty embedding table")
    dim = len(np.asarray(items[0][1]))
    with _writing(target) as handle:
        handle.write(f"d={dim}\n")
        for (frame, index), vec in items:
            vec = np.asarray(vec, dtype=float)
            if len(vec) != dim:
                raise ValueError(f"inconsistent dimension at ({frame}, {index}): {len(vec)} != {dim}")
            values = ",".join(repr(float(v)) for v in vec)
            handle.write(f"{frame},{index},{values}\n")


def nms_merge(groups, iou_threshold: float = 0.7) -> dict[int, list[Detection]]:
    """Merge detection sets per frame by greedy non-maximum suppression.

    Detections are pooled per frame, visited by descending score (input order
    breaks ties), and kept unless they overlap an already-kept detection with
    IoU > iou_threshold. Output is a subset of the input and the merge is
    idempotent.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    frames = sorted({frame for group in groups for frame in group})
    merged: dict[int, list[Detection]] = {}
    for frame in frames:
        pool = [det for group in groups for det in group.get(frame, ())]
        pool.sort(key=lambda d: -d.score)
        kept: list[Detection] = []
        for det in pool:
            if all(iou(det.box, k.box) <= iou_threshold for k in kept):
                kept.append(det)
        merged[frame] = kept
    return merged
