"""Buffer-scale grid search and the similarity/cascade/motion ablation grid."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .data_io import tracklets_to_annotations
from .metrics import FrameAnnotations, MetricReport, evaluate, total_boxes
from .tracker import TrackerConfig, run_sequence

# Search values from the buffer-scale study: 0.1..0.7 with b1 < b2 gives
# exactly 21 admissible combinations.
GRID_VALUES = tuple(i / 10 for i in range(1, 8))

OBJECTIVES = ("hota", "deta", "assa", "mota", "idf1")

ABLATION_VARIANTS = (
    # label, similarity, cascaded matching, motion estimation
    ("IoU", "iou", False, False),
    ("GIoU", "giou", False, False),
    ("DIoU", "diou", False, False),
    ("BIoU", "biou", False, False),
    ("C-BIoU", "biou", True, False),
    ("C-BIoU+motion", "biou", True, True),
)


class NoGroundTruth(ValueError):
    """Raised when tuning or ablation is attempted without ground truth."""


@dataclass(frozen=True)
class GridRow:
    b1: float
    b2: float
    hota: float
    deta: float
    assa: float
    mota: float
    idf1: float

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in OBJECTIVES}


@dataclass(frozen=True)
class AblationRow:
    tracker: str
    cascade: bool
    motion: bool
    hota: float
    deta: float
    assa: float
    mota: float
    idf1: float

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in OBJECTIVES}


def grid_combinations(values=GRID_VALUES) -> list[tuple[float, float]]:
    """All (b1, b2) pairs with b1 < b2, lexicographically sorted."""
    values = sorted(values)
    return [(values[i], values[j])
            for i in range(len(values)) for j in range(i + 1, len(values))]


def _check_objective(objective: str) -> str:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    return objective


def _mean_report(reports: list[MetricReport]) -> dict[str, float]:
    return {name: sum(getattr(r, name) for r in reports) / len(reports)
            for name in OBJECTIVES}


def select_best(rows, objective: str = "hota") -> tuple[float, float]:
    """Argmax of the score table; ties go to the smaller (b1, b2)."""
    _check_objective(objective)
    best = min(rows, key=lambda r: (-getattr(r, objective), r.b1, r.b2))
    return best.b1, best.b2


def tune(sequences, config: TrackerConfig | None = None, objective: str = "hota",
         values=GRID_VALUES):
    """Grid-search the buffer-scale pair on sequences with ground truth.

    sequences: list of (detections by frame, ground-truth annotations).
    Returns ((b1, b2), rows); scores are averaged over the sequences and the
    returned pair is the table argmax under the objective.
    """
    _check_objective(objective)
    sequences = list(sequences)
    if not sequences or any(total_boxes(gt) == 0 for _, gt in sequences):
        raise NoGroundTruth("grid search needs at least one sequence with ground truth")
    config = config or TrackerConfig()

    rows = []
    for b1, b2 in grid_combinations(values):
        cfg = replace(config, b1=b1, b2=b2)
        reports = [
            evaluate(gt, tracklets_to_annotations(run_sequence(dets, cfg)))
            for dets, gt in sequences
        ]
        rows.append(GridRow(b1=b1, b2=b2, **_mean_report(reports)))
    return select_best(rows, objective), rows


def ablate(detections_by_frame, gt: FrameAnnotations,
           config: TrackerConfig | None = None) -> list[AblationRow]:
    """Score every similarity/cascade/motion variant on one sequence.

    The non-cascaded BIoU variant runs a single matching round at b1;
    GIoU/DIoU scores are mapped onto [0, 1] inside the tracker so the match
    floor keeps one meaning across variants.
    """
    if total_boxes(gt) == 0:
        raise NoGroundTruth("ablation needs ground truth")
    config = config or TrackerConfig()
    rows = []
    for label, similarity, cascade, use_motion in ABLATION_VARIANTS:
        tracklets = run_sequence(detections_by_frame, config, similarity=similarity,
                                 cascade=cascade, use_motion=use_motion)
        report = evaluate(gt, tracklets_to_annotations(tracklets))
        rows.append(AblationRow(tracker=label, cascade=cascade, motion=use_motion,
                                **{n: getattr(report, n) for n in OBJECTIVES}))
    return rows
