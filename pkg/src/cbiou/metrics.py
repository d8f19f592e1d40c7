"""Tracking evaluation: CLEAR counts and MOTA, identity-F1, and HOTA with
its detection/association decomposition.

Conventions (declared, verified on small oracles rather than against any
external toolkit): per-frame matching maximizes match count, then total IoU;
MOTA uses IoU 0.5; HOTA averages 19 thresholds 0.05..0.95; association
accuracy is 0 when there are no true positives; empty-vs-empty scores 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BoundingBox, iou

# Annotations for one sequence: frame -> [(identity, box), ...].
FrameAnnotations = dict[int, list[tuple[int, BoundingBox]]]

ALPHAS = tuple(i / 20 for i in range(1, 20))


def validate_annotations(annotations: FrameAnnotations) -> None:
    for frame, entries in annotations.items():
        ids = [i for i, _ in entries]
        if len(set(ids)) != len(ids):
            raise ValueError(f"frame {frame}: duplicate identity in annotations")


def total_boxes(annotations: FrameAnnotations) -> int:
    return sum(len(entries) for entries in annotations.values())


def match_frame(gt_boxes, pred_boxes, alpha: float):
    """Optimal per-frame matching under an IoU gate.

    Maximizes the number of matched pairs, then the total IoU, subject to
    IoU >= alpha. Returns (matched index pairs, unmatched gt indices,
    unmatched prediction indices).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    n_gt, n_pred = len(gt_boxes), len(pred_boxes)
    if n_gt == 0 or n_pred == 0:
        return [], list(range(n_gt)), list(range(n_pred))

    ious = np.empty((n_gt, n_pred))
    for i, g in enumerate(gt_boxes):
        for j, p in enumerate(pred_boxes):
            ious[i, j] = iou(g, p)

    # A bonus larger than any achievable IoU total makes cardinality dominate.
    bonus = float(min(n_gt, n_pred)) + 1.0
    score = np.where(ious >= alpha, ious + bonus, 0.0)
    rows, cols = linear_sum_assignment(-score)
    matches = sorted((i, j) for i, j in zip(rows.tolist(), cols.tolist()) if ious[i, j] >= alpha)
    matched_gt = {i for i, _ in matches}
    matched_pred = {j for _, j in matches}
    return (matches,
            [i for i in range(n_gt) if i not in matched_gt],
            [j for j in range(n_pred) if j not in matched_pred])


def _frame_matches(gt: FrameAnnotations, pred: FrameAnnotations, alpha: float):
    """Per-frame identity pairs (frame, gt id, pred id) plus FP/FN counts."""
    pairs = []
    fp = fn = 0
    for frame in sorted(set(gt) | set(pred)):
        gt_entries = gt.get(frame, [])
        pred_entries = pred.get(frame, [])
        matches, unmatched_gt, unmatched_pred = match_frame(
            [b for _, b in gt_entries], [b for _, b in pred_entries], alpha)
        fn += len(unmatched_gt)
        fp += len(unmatched_pred)
        pairs += [(frame, gt_entries[i][0], pred_entries[j][0]) for i, j in matches]
    return pairs, fp, fn


def clear_counts(gt: FrameAnnotations, pred: FrameAnnotations, alpha: float = 0.5):
    """CLEAR-style counts at one threshold: (TP, FP, FN, IDSW).

    An identity switch is counted when a ground-truth identity's matched
    prediction id differs between its consecutive matched frames.
    """
    validate_annotations(gt)
    validate_annotations(pred)
    pairs, fp, fn = _frame_matches(gt, pred, alpha)
    idsw = 0
    last_pred: dict[int, int] = {}
    for _, gt_id, pred_id in pairs:
        if gt_id in last_pred and last_pred[gt_id] != pred_id:
            idsw += 1
        last_pred[gt_id] = pred_id
    return len(pairs), fp, fn, idsw


def mota(gt: FrameAnnotations, pred: FrameAnnotations, alpha: float = 0.5) -> float:
    """Multiple-object tracking accuracy: 1 - (FN + FP + IDSW) / |gt|.

    Can be negative. With an empty ground truth the denominator is taken as
    1 so false positives still penalize.
    """
    _, fp, fn, idsw = clear_counts(gt, pred, alpha)
    denom = max(1, total_boxes(gt))
    return 1.0 - (fn + fp + idsw) / denom


def idf1(gt: FrameAnnotations, pred: FrameAnnotations, alpha: float = 0.5) -> float:
    """Identity F1 over the optimal bijective gt-id to pred-id mapping.

    IDTP for a candidate (gt id, pred id) pair is the number of frames where
    both are present with IoU >= alpha; the mapping maximizes total IDTP and
    idf1 = 2*IDTP / (2*IDTP + IDFP + IDFN) = 2*IDTP / (|gt| + |pred|).
    """
    validate_annotations(gt)
    validate_annotations(pred)
    gt_total = total_boxes(gt)
    pred_total = total_boxes(pred)
    if gt_total == 0 and pred_total == 0:
        return 1.0
    if gt_total == 0 or pred_total == 0:
        return 0.0

    gt_ids = sorted({i for entries in gt.values() for i, _ in entries})
    pred_ids = sorted({i for entries in pred.values() for i, _ in entries})
    gi = {g: k for k, g in enumerate(gt_ids)}
    pi = {p: k for k, p in enumerate(pred_ids)}
    idtp = np.zeros((len(gt_ids), len(pred_ids)))
    for frame in sorted(set(gt) & set(pred)):
        for g, gbox in gt[frame]:
            for p, pbox in pred[frame]:
                if iou(gbox, pbox) >= alpha:
                    idtp[gi[g], pi[p]] += 1
    rows, cols = linear_sum_assignment(-idtp)
    best = float(idtp[rows, cols].sum())
    return 2.0 * best / (gt_total + pred_total)


def hota_curve(gt: FrameAnnotations, pred: FrameAnnotations, alphas=ALPHAS):
    """Per-threshold (alpha, DetA, AssA, HOTA) rows."""
    validate_annotations(gt)
    validate_annotations(pred)
    gt_total = total_boxes(gt)
    pred_total = total_boxes(pred)
    gt_count: dict[int, int] = {}
    pred_count: dict[int, int] = {}
    for entries in gt.values():
        for i, _ in entries:
            gt_count[i] = gt_count.get(i, 0) + 1
    for entries in pred.values():
        for i, _ in entries:
            pred_count[i] = pred_count.get(i, 0) + 1

    curve = []
    for alpha in alphas:
        pairs, fp, fn = _frame_matches(gt, pred, alpha)
        tp = len(pairs)
        if tp == 0:
            deta = 1.0 if gt_total == 0 and pred_total == 0 else 0.0
            assa = deta
            curve.append((alpha, deta, assa, np.sqrt(deta * assa)))
            continue
        deta = tp / (tp + fp + fn)
        pair_count: dict[tuple[int, int], int] = {}
        for _, g, p in pairs:
            pair_count[(g, p)] = pair_count.get((g, p), 0) + 1
        assa_sum = 0.0
        for (g, p), tpa in pair_count.items():
            assa_sum += tpa * (tpa / (gt_count[g] + pred_count[p] - tpa))
        assa = assa_sum / tp
        curve.append((alpha, deta, assa, float(np.sqrt(deta * assa))))
    return curve


def hota(gt: FrameAnnotations, pred: FrameAnnotations):
    """HOTA and its decomposition, averaged over ALPHAS: (hota, deta, assa)."""
    curve = hota_curve(gt, pred)
    n = len(curve)
    return (sum(h for _, _, _, h in curve) / n,
            sum(d for _, d, _, _ in curve) / n,
            sum(a for _, _, a, _ in curve) / n)


@dataclass(frozen=True)
class MetricReport:
    """Scores in [0, 1] (MOTA may go negative) plus CLEAR counts at IoU 0.5."""

    hota: float
    deta: float
    assa: float
    mota: float
    idf1: float
    tp: int
    fp: int
    fn: int
    idsw: int

    def to_text(self) -> str:
        head = f"{'HOTA':>6} {'DetA':>6} {'AssA':>6} {'MOTA':>6} {'IDF1':>6}"
        vals = " ".join(f"{100.0 * v:6.1f}" for v in
                        (self.hota, self.deta, self.assa, self.mota, self.idf1))
        counts = f"TP={self.tp} FP={self.fp} FN={self.fn} IDSW={self.idsw}"
        return f"{head}\n{vals}\n{counts}"

    def to_kv(self) -> str:
        lines = [f"{name}={getattr(self, name):.6f}"
                 for name in ("hota", "deta", "assa", "mota", "idf1")]
        lines += [f"{name}={getattr(self, name)}" for name in ("tp", "fp", "fn", "idsw")]
        return "\n".join(lines)


def evaluate(gt: FrameAnnotations, pred: FrameAnnotations, alpha: float = 0.5) -> MetricReport:
    """Full metric report for one sequence."""
    tp, fp, fn, idsw = clear_counts(gt, pred, alpha)
    denom = max(1, total_boxes(gt))
    h, d, a = hota(gt, pred)
    return MetricReport(
        hota=h, deta=d, assa=a,
        mota=1.0 - (fn + fp + idsw) / denom,
        idf1=idf1(gt, pred, alpha),
        tp=tp, fp=fp, fn=fn, idsw=idsw,
    )
