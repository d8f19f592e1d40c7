"""Command-line interface for tracking, refinement, evaluation, tuning,
ablation, scene synthesis, and detection merging.

Exit codes: 0 success, 1 usage error, 2 data error. Reports written with
--out get a rendered figure next to them (same name, .png) unless
--no-figure is given. A --config file of key=value lines overrides flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import data_io, plots, synth, tuning
from .data_io import ParseError
from .metrics import evaluate, hota_curve
from .refine import InconsistentCluster, MissingFeatures, attach_features, refine
from .tracker import OutOfOrderFrame, TrackerConfig, run_sequence
from .tuning import NoGroundTruth

_DATA_ERRORS = (ParseError, OSError, MissingFeatures, InconsistentCluster,
                NoGroundTruth, OutOfOrderFrame, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_tracker_options(parser, with_buffers: bool):
    if with_buffers:
        parser.add_argument("--b1", type=float, default=0.3, help="small buffer scale")
        parser.add_argument("--b2", type=float, default=0.4, help="large buffer scale")
    parser.add_argument("--motion-cap", type=int, default=5,
                        help="max displacements in the motion average (2..5)")
    parser.add_argument("--max-age", type=int, default=30,
                        help="unmatched frames before a track dies")
    parser.add_argument("--min-hits", type=int, default=1,
                        help="matches before a track is emitted")
    parser.add_argument("--match-floor", type=float, default=0.0,
                        help="similarity at or below this never matches")


def _tracker_config(ns, with_buffers: bool = True) -> TrackerConfig:
    kwargs = dict(motion_cap=ns.motion_cap, max_age=ns.max_age,
                  min_hits=ns.min_hits, match_floor=ns.match_floor)
    if with_buffers:
        kwargs.update(b1=ns.b1, b2=ns.b2)
    try:
        return TrackerConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    parser = _Parser(prog="cbiou", description=__doc__.strip().splitlines()[0])
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def subcommand(name, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, default=None,
                         help="key=value file overriding flags")
        registry[name] = sub
        return sub

    sub = subcommand("track", "run the online tracker on a detection file")
    sub.add_argument("detections", type=Path)
    sub.add_argument("output", type=Path)
    _add_tracker_options(sub, with_buffers=True)
    sub.set_defaults(func=_cmd_track)

    sub = subcommand("refine", "merge short-term tracklets using appearance embeddings")
    sub.add_argument("results", type=Path)
    sub.add_argument("embeddings", type=Path)
    sub.add_argument("output", type=Path)
    sub.add_argument("--tau", type=float, default=0.4,
                     help="merge clusters below this appearance distance")
    sub.set_defaults(func=_cmd_refine)

    sub = subcommand("eval", "score a result file against ground truth")
    sub.add_argument("results", type=Path)
    sub.add_argument("gt", type=Path)
    sub.add_argument("--out", type=Path, default=None,
                     help="write a key=value report (+ figure) here")
    sub.add_argument("--no-figure", action="store_true")
    sub.set_defaults(func=_cmd_eval)

    sub = subcommand("tune", "grid-search the buffer-scale pair on (det, gt) file pairs")
    sub.add_argument("pairs", type=Path, nargs="+",
                     help="alternating detection and ground-truth files")
    sub.add_argument("--objective", choices=tuning.OBJECTIVES, default="hota")
    sub.add_argument("--out", type=Path, default=None,
                     help="write the score table as CSV (+ heatmap) here")
    sub.add_argument("--no-figure", action="store_true")
    _add_tracker_options(sub, with_buffers=False)
    sub.set_defaults(func=_cmd_tune)

    sub = subcommand("ablate", "score IoU/GIoU/DIoU/BIoU variants on one sequence")
    sub.add_argument("detections", type=Path)
    sub.add_argument("gt", type=Path)
    sub.add_argument("--out", type=Path, default=None,
                     help="write the variant table as CSV (+ chart) here")
    sub.add_argument("--no-figure", action="store_true")
    _add_tracker_options(sub, with_buffers=True)
    sub.set_defaults(func=_cmd_ablate)

    sub = subcommand("synth", "render a scene script into detection and gt files")
    sub.add_argument("scene", type=Path)
    sub.add_argument("--det", type=Path, required=True)
    sub.add_argument("--gt", type=Path, required=True)
    sub.add_argument("--seed", type=int, default=None,
                     help="override the script's detector seed")
    sub.set_defaults(func=_cmd_synth)

    sub = subcommand("nms", "merge detection files by non-maximum suppression")
    sub.add_argument("inputs", type=Path, nargs="+")
    sub.add_argument("--out", type=Path, required=True)
    sub.add_argument("--threshold", type=float, default=0.7,
                     help="suppress overlap above this IoU")
    sub.set_defaults(func=_cmd_nms)

    return parser, registry


def _apply_config_file(ns, subparser):
    actions = {}
    for action in subparser._actions:
        if action.dest not in ("help", "config"):
            actions[action.dest] = action
    with open(ns.config, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{ns.config}: line {line_no}: expected key=value")
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            value = value.strip()
            action = actions.get(dest)
            if action is None:
                raise UsageError(f"{ns.config}: line {line_no}: unknown option {key.strip()!r}")
            if isinstance(action, argparse._StoreTrueAction):
                if value.lower() not in ("true", "false"):
                    raise UsageError(f"{ns.config}: line {line_no}: {key.strip()} must be true/false")
                setattr(ns, dest, value.lower() == "true")
                continue
            try:
                setattr(ns, dest, action.type(value) if action.type else value)
            except ValueError:
                raise UsageError(f"{ns.config}: line {line_no}: bad value {value!r} "
                                 f"for {key.strip()}") from None


def _figure_path(out: Path) -> Path:
    return out.with_suffix(".png")


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _cmd_track(ns) -> int:
    config = _tracker_config(ns)
    detections = data_io.parse_detections(ns.detections)
    tracklets = run_sequence(detections, config)
    data_io.write_results(tracklets, ns.output)
    frames = len(detections)
    print(f"tracked {frames} frames into {len(tracklets)} tracklets -> {ns.output}")
    return 0


def _cmd_refine(ns) -> int:
    if not 0.0 <= ns.tau <= 2.0:
        raise UsageError(f"--tau must be in [0, 2], got {ns.tau}")
    tracklets = data_io.parse_results(ns.results)
    _, table = data_io.read_embeddings(ns.embeddings)
    merged = refine(attach_features(tracklets, table), tau=ns.tau)
    data_io.write_results(merged, ns.output)
    print(f"refined {len(tracklets)} tracklets into {len(merged)} -> {ns.output}")
    return 0


def _cmd_eval(ns) -> int:
    pred = data_io.tracklets_to_annotations(data_io.parse_results(ns.results))
    gt = data_io.parse_ground_truth(ns.gt)
    report = evaluate(gt, pred)
    print(report.to_text())
    if ns.out is not None:
        _write_text(ns.out, report.to_kv() + "\n")
        if not ns.no_figure:
            plots.save_metric_curves(hota_curve(gt, pred), _figure_path(ns.out))
    return 0


def _grid_table_text(rows) -> str:
    lines = [f"{'b1':>4} {'b2':>4} {'HOTA':>6} {'DetA':>6} {'AssA':>6} {'MOTA':>6} {'IDF1':>6}"]
    for r in rows:
        lines.append(f"{r.b1:4.1f} {r.b2:4.1f} " +
                     " ".join(f"{100 * v:6.1f}" for v in
                              (r.hota, r.deta, r.assa, r.mota, r.idf1)))
    return "\n".join(lines)


def _grid_table_csv(rows) -> str:
    lines = ["b1,b2,hota,deta,assa,mota,idf1"]
    for r in rows:
        lines.append(f"{r.b1:.1f},{r.b2:.1f}," +
                     ",".join(f"{v:.6f}" for v in (r.hota, r.deta, r.assa, r.mota, r.idf1)))
    return "\n".join(lines) + "\n"


def _cmd_tune(ns) -> int:
    if len(ns.pairs) < 2 or len(ns.pairs) % 2 != 0:
        raise UsageError("tune expects one or more DET GT file pairs")
    config = _tracker_config(ns, with_buffers=False)
    sequences = [(data_io.parse_detections(det), data_io.parse_ground_truth(gt))
                 for det, gt in zip(ns.pairs[::2], ns.pairs[1::2])]
    (b1, b2), rows = tuning.tune(sequences, config, objective=ns.objective)
    print(_grid_table_text(rows))
    best_value = next(getattr(r, ns.objective) for r in rows if (r.b1, r.b2) == (b1, b2))
    print(f"best: b1={b1:.1f} b2={b2:.1f} ({ns.objective}={100 * best_value:.1f})")
    if ns.out is not None:
        _write_text(ns.out, _grid_table_csv(rows))
        if not ns.no_figure:
            plots.save_grid_heatmap(rows, ns.objective, _figure_path(ns.out))
    return 0


def _ablation_table_text(rows) -> str:
    lines = [f"{'tracker':<14} {'C.M.':>4} {'Mo.':>4} "
             f"{'HOTA':>6} {'DetA':>6} {'AssA':>6} {'MOTA':>6} {'IDF1':>6}"]
    for r in rows:
        flags = f"{'x' if r.cascade else '-':>4} {'x' if r.motion else '-':>4}"
        lines.append(f"{r.tracker:<14} {flags} " +
                     " ".join(f"{100 * v:6.1f}" for v in
                              (r.hota, r.deta, r.assa, r.mota, r.idf1)))
    return "\n".join(lines)


def _ablation_table_csv(rows) -> str:
    lines = ["tracker,cascade,motion,hota,deta,assa,mota,idf1"]
    for r in rows:
        lines.append(f"{r.tracker},{int(r.cascade)},{int(r.motion)}," +
                     ",".join(f"{v:.6f}" for v in (r.hota, r.deta, r.assa, r.mota, r.idf1)))
    return "\n".join(lines) + "\n"


def _cmd_ablate(ns) -> int:
    config = _tracker_config(ns)
    detections = data_io.parse_detections(ns.detections)
    gt = data_io.parse_ground_truth(ns.gt)
    rows = tuning.ablate(detections, gt, config)
    print(_ablation_table_text(rows))
    if ns.out is not None:
        _write_text(ns.out, _ablation_table_csv(rows))
        if not ns.no_figure:
            plots.save_ablation_chart(rows, _figure_path(ns.out))
    return 0


def _cmd_synth(ns) -> int:
    spec = synth.parse_scene(ns.scene)
    detections, gt = synth.generate_scene(spec, seed=ns.seed)
    data_io.write_detections(detections, ns.det)
    data_io.write_ground_truth(gt, ns.gt)
    print(f"scene {ns.scene.name}: {spec.frames} frames, {len(spec.objects)} objects "
          f"-> {ns.det}, {ns.gt}")
    return 0


def _cmd_nms(ns) -> int:
    if not 0.0 <= ns.threshold <= 1.0:
        raise UsageError(f"--threshold must be in [0, 1], got {ns.threshold}")
    groups = [data_io.parse_detections(path) for path in ns.inputs]
    merged = data_io.nms_merge(groups, iou_threshold=ns.threshold)
    data_io.write_detections(merged, ns.out)
    before = sum(len(dets) for group in groups for dets in group.values())
    after = sum(len(dets) for dets in merged.values())
    print(f"merged {len(ns.inputs)} files: {before} detections -> {after} -> {ns.out}")
    return 0


def main(argv=None) -> int:
    parser, registry = build_parser()
    try:
        ns = parser.parse_args(argv)
        if getattr(ns, "config", None) is not None:
            _apply_config_file(ns, registry[ns.command])
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
