"""Command-line entry point: ``crowdtrack {track,evaluate,detection-eval,synth,qa}``.

Exit codes are 0 on success, 2 for unreadable or malformed input and 3 for
invalid configuration. ``CROWDTRACK_THREADS`` caps the number of worker
processes used when several sequences are evaluated at once.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .frames import FrameLoader, write_ppm
from .metrics import (
    MetricReport,
    detection_gt,
    evaluate_detections,
    evaluate_tracking,
    ideucl_details,
    precision_recall_curve,
    suppress_ignored,
)
from .motdata import (
    AnnotationEntry,
    MotFormatError,
    SequenceInfo,
    group_trajectories,
    parse_mot_file,
    read_key_values,
    read_seqinfo,
    write_key_values,
    write_mot_file,
    write_seqinfo,
)
from .qa import detect_displacement_outliers, detect_fragmentation, write_flags
from .synthgen import (
    CONF_MODELS,
    PROFILES,
    CorruptionSpec,
    ScenarioSpec,
    corrupt,
    default_palette,
    generate_ground_truth,
    render_frames,
)
from .tracker import CameraMotion, ConfigError, TrackerConfig, track_sequence

logger = logging.getLogger("crowdtrack")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3

TRACKING_KEYS = ("IDEucl", "IDF1", "IDP", "IDR", "MOTA", "MOTP", "IDSW", "Frag", "FP", "FN", "MT", "ML", "PT")
DETECTION_KEYS = ("P", "R", "F1", "MODA", "MODP", "AP", "mAP_COCO")
RATIO_KEYS = frozenset(("IDEucl", "IDF1", "IDP", "IDR", "MOTA", "MOTP") + DETECTION_KEYS)


class InputError(Exception):
    """Missing or unusable input that is not a parse error."""


# -- formatting ------------------------------------------------------------------


def _cell(key: str, value: float | int) -> str:
    return f"{100 * value:.1f}" if key in RATIO_KEYS else str(int(value))


def format_table(rows: Sequence[tuple[str, dict]], keys: Sequence[str]) -> str:
    """Fixed-width table; ratio columns are percentages with one decimal."""
    name_w = max([len("Sequence")] + [len(n) for n, _ in rows])
    widths = [max(7, len(k)) for k in keys]
    lines = ["  ".join([f"{'Sequence':<{name_w}}"] + [f"{k:>{w}}" for k, w in zip(keys, widths)])]
    for name, values in rows:
        cells = [f"{_cell(k, values[k]):>{w}}" for k, w in zip(keys, widths)]
        lines.append("  ".join([f"{name:<{name_w}}"] + cells))
    return "\n".join(lines)


def _raw(value: float | int) -> str:
    return str(value) if isinstance(value, (int, np.integer)) else f"{value:.10g}"


def _key_values(rows: Sequence[tuple[str, dict]], keys: Sequence[str]) -> dict[str, str]:
    """Raw ratios; with several rows, per-sequence keys are prefixed ``name.``."""
    out: dict[str, str] = {}
    *seqs, (_, overall) = rows
    for k in keys:
        out[k] = _raw(overall[k])
    if len(seqs) > 1:
        for name, values in seqs:
            for k in keys:
                out[f"{name}.{k}"] = _raw(values[k])
    return out


# -- input discovery ---------------------------------------------------------------


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise InputError(f"{what} not found: {path}")
    return path


def _seqinfo_near(gt_file: Path) -> SequenceInfo | None:
    """``seqinfo.ini`` in the MOTChallenge layout ``<seq>/gt/gt.txt``."""
    for cand in (gt_file.parent / "seqinfo.ini", gt_file.parent.parent / "seqinfo.ini"):
        if cand.is_file():
            return read_seqinfo(cand)
    return None


def _sequence_pairs(gt: Path, hyp: Path) -> list[tuple[str, Path, Path]]:
    """Resolve ``(name, gt_file, hyp_file)`` triples, sorted by name.

    ``gt`` may be a file, a sequence directory holding ``gt/gt.txt`` or a
    directory of such sequence directories; a directory ``hyp`` holds
    ``<name>.txt`` per sequence.
    """
    if gt.is_file():
        if hyp.is_dir():
            hyp = hyp / f"{_seq_name(gt)}.txt"
        return [(_seq_name(gt), gt, _require_file(hyp, "hypothesis file"))]
    if not gt.is_dir():
        raise InputError(f"ground truth not found: {gt}")
    seq_dirs = [gt] if (gt / "gt" / "gt.txt").is_file() else sorted(
        d for d in gt.iterdir() if (d / "gt" / "gt.txt").is_file()
    )
    if not seq_dirs:
        raise InputError(f"no <seq>/gt/gt.txt under {gt}")
    pairs = []
    for d in seq_dirs:
        h = hyp / f"{d.name}.txt" if hyp.is_dir() else hyp
        pairs.append((d.name, d / "gt" / "gt.txt", _require_file(h, "hypothesis file")))
    return pairs


def _seq_name(gt_file: Path) -> str:
    return gt_file.parent.parent.name if gt_file.parent.name == "gt" else gt_file.stem


def _threads() -> int:
    raw = os.environ.get("CROWDTRACK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CROWDTRACK_THREADS must be an integer, got {raw!r}") from None


# -- track ---------------------------------------------------------------------------


def _read_config(path: str) -> dict[str, str]:
    try:
        return read_key_values(_require_file(Path(path), "config file"))
    except MotFormatError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _tracker_config(args: argparse.Namespace) -> TrackerConfig:
    values: dict[str, object] = {}
    if args.config:
        values.update(_read_config(args.config))
    for f in dataclasses.fields(TrackerConfig):
        override = getattr(args, f.name, None)
        if override is not None:
            values[f.name] = override
    return TrackerConfig.from_mapping(values)


def _draw_outline(img: np.ndarray, box, color: tuple[int, int, int]) -> None:
    h, w = img.shape[:2]
    x0, y0 = int(np.clip(np.floor(box.x), 0, w - 1)), int(np.clip(np.floor(box.y), 0, h - 1))
    x1 = int(np.clip(np.ceil(box.x + box.w), 0, w - 1))
    y1 = int(np.clip(np.ceil(box.y + box.h), 0, h - 1))
    img[y0, x0 : x1 + 1] = color
    img[y1, x0 : x1 + 1] = color
    img[y0 : y1 + 1, x0] = color
    img[y0 : y1 + 1, x1] = color


def dump_overlays(rows: Sequence[AnnotationEntry], info: SequenceInfo, out_dir: Path,
                  loader: FrameLoader | None = None) -> None:
    """Debug frames with hypothesis outlines, one PPM per frame."""
    out_dir.mkdir(parents=True, exist_ok=True)
    by_frame: dict[int, list[AnnotationEntry]] = {}
    for r in rows:
        by_frame.setdefault(r.frame, []).append(r)
    palette = default_palette(sorted({r.id for r in rows}))
    for f in range(1, info.frame_count + 1):
        base = loader(f) if loader is not None else None
        img = np.full((info.height, info.width, 3), 40, np.uint8) if base is None else base.copy()
        for r in by_frame.get(f, []):
            _draw_outline(img, r.box, palette[r.id])
        write_ppm(out_dir / f"{f:06d}.ppm", img)


def cmd_track(args: argparse.Namespace) -> int:
    seq_dir = Path(args.seq_dir)
    if not seq_dir.is_dir():
        raise InputError(f"sequence directory not found: {seq_dir}")
    config = _tracker_config(args)
    det_file = _require_file(Path(args.detections) if args.detections else seq_dir / "det" / "det.txt",
                             "detections file")
    detections = parse_mot_file(det_file, kind="detections")
    info_path = seq_dir / "seqinfo.ini"
    info = read_seqinfo(info_path) if info_path.is_file() else None
    if info is not None:
        frame_count, image_size = info.frame_count, (info.width, info.height)
    else:
        logger.warning("no seqinfo.ini in %s; frame count taken from detections, no image bounds", seq_dir)
        frame_count, image_size = max((d.frame for d in detections), default=0), None
    cmc = CameraMotion.from_file(_require_file(Path(args.cmc), "camera motion file")) if args.cmc else None
    loader = FrameLoader(seq_dir, info) if info is not None and not args.no_images else None
    rows = track_sequence(detections, frame_count, config, cmc=cmc, seed=args.seed,
                          image_size=image_size, frame_loader=loader)
    out = Path(args.out) if args.out else seq_dir / "hyp.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mot_file(rows, out)
    logger.info("wrote %d rows for %d tracks to %s", len(rows), len({r.id for r in rows}), out)
    if args.dump_overlays:
        if info is None:
            raise InputError("--dump-overlays needs seqinfo.ini for the image size")
        dump_overlays(rows, info, Path(args.dump_overlays), loader)
    return EXIT_OK


# -- evaluate ------------------------------------------------------------------------


def _load_pair(gt_file: Path, hyp_file: Path, iou_thresh: float):
    gt_traj, ignore = group_trajectories(parse_mot_file(gt_file, kind="ground_truth"))
    hyp_rows = parse_mot_file(hyp_file, kind="hypotheses")
    hyp_traj, _ = group_trajectories(suppress_ignored(hyp_rows, ignore, iou_thresh))
    return gt_traj, hyp_traj


def _evaluate_one(job: tuple[str, Path, Path, float]) -> MetricReport:
    name, gt_file, hyp_file, iou_thresh = job
    gt, hyp = _load_pair(gt_file, hyp_file, iou_thresh)
    return evaluate_tracking(gt, hyp, iou_thresh, name=name)


def cmd_evaluate(args: argparse.Namespace) -> int:
    if not 0.0 <= args.iou_thresh < 1.0:
        raise ConfigError("--iou-thresh must lie in [0, 1)")
    pairs = _sequence_pairs(Path(args.gt), Path(args.hyp))
    jobs = [(name, g, h, args.iou_thresh) for name, g, h in pairs]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_evaluate_one, jobs))
    else:
        reports = [_evaluate_one(j) for j in jobs]
    rows = [(r.name, r.summary()) for r in reports]
    if len(reports) > 1:
        rows.append(("OVERALL", MetricReport.combine(reports).summary()))
    print(format_table(rows, TRACKING_KEYS))
    if args.out:
        write_key_values(_key_values(rows, TRACKING_KEYS), args.out)
    if args.plots:
        from .plotting import plot_ideucl_coverage, plot_trajectories

        plot_dir = Path(args.plots)
        for name, g, h in pairs:
            gt, hyp = _load_pair(g, h, args.iou_thresh)
            info = read_seqinfo(args.seqinfo) if args.seqinfo else _seqinfo_near(g)
            plot_ideucl_coverage(ideucl_details(gt, hyp, args.iou_thresh),
                                 plot_dir / f"{name}_ideucl.png", title=name)
            plot_trajectories(gt, hyp, plot_dir / f"{name}_trajectories.png", info)
    return EXIT_OK


# -- detection-eval ------------------------------------------------------------------


def cmd_detection_eval(args: argparse.Namespace) -> int:
    if not 0.0 <= args.match_iou < 1.0:
        raise ConfigError("--match-iou must lie in [0, 1)")
    gt_rows = parse_mot_file(_require_file(Path(args.gt), "ground-truth file"), kind="ground_truth")
    det_rows = parse_mot_file(_require_file(Path(args.det), "detections file"), kind="detections")
    gt, ignore = detection_gt(gt_rows)
    dets = suppress_ignored(det_rows, ignore, args.match_iou)
    report = evaluate_detections(gt, dets, args.match_iou, args.conf_thresh)
    rows = [(Path(args.det).stem, report.summary())]
    print(format_table(rows, DETECTION_KEYS))
    if args.out:
        write_key_values(_key_values(rows, DETECTION_KEYS), args.out)
    if args.plots:
        from .plotting import plot_precision_recall

        precision, recall = precision_recall_curve(gt, dets, args.match_iou)
        plot_precision_recall(precision, recall, Path(args.plots) / "precision_recall.png", report.ap)
    return EXIT_OK


# -- synth -----------------------------------------------------------------------------


def _scenario(args: argparse.Namespace) -> tuple[ScenarioSpec, CorruptionSpec]:
    scen: dict[str, str] = {}
    corr: dict[str, str] = {}
    if args.config:
        for k, v in _read_config(args.config).items():
            (corr if k in {f.name for f in dataclasses.fields(CorruptionSpec)} - {"seed"} else scen)[k] = v
    flags = {
        "n_tracks": args.n_tracks, "frame_count": args.frames, "width": args.width,
        "height": args.height, "profile": args.profile, "speed_range": args.speed_range,
        "box_size_range": args.box_size_range, "turn_rate_range": args.turn_rate_range,
        "seed": args.seed, "name": args.name,
    }
    scen.update({k: str(v) for k, v in flags.items() if v is not None})
    corr.update({k: str(v) for k, v in {
        "fn_rate": args.fn_rate, "fp_rate": args.fp_rate,
        "jitter_std": args.jitter, "conf_model": args.conf_model,
    }.items() if v is not None})
    try:
        spec = ScenarioSpec.from_mapping(scen)
        corr.setdefault("seed", str(spec.seed + 1))
        return spec, CorruptionSpec.from_mapping(corr)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_synth(args: argparse.Namespace) -> int:
    spec, corruption = _scenario(args)
    out = Path(args.out_dir)
    gt, info = generate_ground_truth(spec)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    (out / "det").mkdir(parents=True, exist_ok=True)
    gt_rows = sorted((e for t in gt.values() for e in t.to_entries()), key=lambda e: (e.frame, e.id))
    write_mot_file(gt_rows, out / "gt" / "gt.txt")
    write_mot_file(corrupt(gt, corruption, (info.width, info.height)), out / "det" / "det.txt")
    write_seqinfo(info, out / "seqinfo.ini")
    if args.render:
        render_frames(gt, info, out / (info.image_dir or "img1"), shape=args.shape)
    logger.info("wrote %d tracks over %d frames to %s", len(gt), info.frame_count, out)
    return EXIT_OK


# -- qa --------------------------------------------------------------------------------


def cmd_qa(args: argparse.Namespace) -> int:
    gt_path = Path(args.gt)
    if gt_path.is_dir():
        gt_path = gt_path / "gt" / "gt.txt"
    gt_file = _require_file(gt_path, "ground-truth file")
    info = read_seqinfo(_require_file(Path(args.seqinfo), "seqinfo")) if args.seqinfo else _seqinfo_near(gt_file)
    if info is None:
        raise InputError("qa needs seqinfo.ini (pass --seqinfo) for image size and length")
    if args.boundary_margin < 0 or args.tail_frames < 0:
        raise ConfigError("--boundary-margin and --tail-frames must be non-negative")
    traj, _ = group_trajectories(parse_mot_file(gt_file, kind="ground_truth"))
    flags = detect_fragmentation(traj, info, args.boundary_margin, args.tail_frames)
    flags += detect_displacement_outliers(traj)
    flags.sort(key=lambda f: (f.track_id, f.frame, f.kind))
    if args.out:
        write_flags(flags, args.out)
    else:
        write_flags(flags, stream=sys.stdout)
    logger.info("%d flag(s)", len(flags))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def _add_tracker_overrides(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tracker parameters (override --config)")
    for f in dataclasses.fields(TrackerConfig):
        if f.name == "motion_model":
            continue
        kind = {"int": int, "float": float}.get(str(f.type), str)
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=kind, default=None,
                       metavar=kind.__name__.upper(), help=f"default {f.default}")
    g.add_argument("--motion-model", dest="motion_model", default=None,
                   choices=("pf", "kf", "particle_filter", "kalman_cva"),
                   help="pf (particle filter, default) or kf (constant-velocity Kalman)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdtrack", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("track", help="track heads in a sequence directory")
    p.add_argument("seq_dir", help="directory with seqinfo.ini, det/det.txt and optional frames")
    p.add_argument("--detections", help="detections file (default <seq_dir>/det/det.txt)")
    p.add_argument("--config", help="key=value tracker configuration file")
    p.add_argument("--cmc", help="camera motion CSV: frame,a11,a12,a13,a21,a22,a23")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="hypothesis file (default <seq_dir>/hyp.txt)")
    p.add_argument("--no-images", action="store_true", help="ignore frames; track without appearance")
    p.add_argument("--dump-overlays", metavar="DIR", help="debug: write frames with hypothesis outlines")
    _add_tracker_overrides(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="tracking metrics of hypotheses against ground truth")
    p.add_argument("gt", help="gt file, sequence directory, or directory of sequences")
    p.add_argument("hyp", help="hypothesis file, or directory of <sequence>.txt files")
    p.add_argument("--seqinfo", help="seqinfo.ini (used for plot extents)")
    p.add_argument("--iou-thresh", type=float, default=0.5, help="overlap needed for a match (default 0.5)")
    p.add_argument("--out", help="write raw ratios to this key=value file")
    p.add_argument("--plots", metavar="DIR", help="write coverage and trajectory figures here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("detection-eval", help="detection metrics against ground truth")
    p.add_argument("gt")
    p.add_argument("det")
    p.add_argument("--conf-thresh", type=float, default=0.5, help="minimum confidence (default 0.5)")
    p.add_argument("--match-iou", type=float, default=0.4, help="overlap needed for a match (default 0.4)")
    p.add_argument("--out", help="write raw ratios to this key=value file")
    p.add_argument("--plots", metavar="DIR", help="write a precision-recall figure here")
    p.set_defaults(func=cmd_detection_eval)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("out_dir")
    p.add_argument("--config", help="key=value file with scenario and corruption keys")
    p.add_argument("--profile", choices=PROFILES)
    p.add_argument("--seed", type=int)
    p.add_argument("--name")
    p.add_argument("--n-tracks", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--speed-range", metavar="LO,HI")
    p.add_argument("--box-size-range", metavar="LO,HI")
    p.add_argument("--turn-rate-range", metavar="LO,HI")
    p.add_argument("--fn-rate", type=float)
    p.add_argument("--fp-rate", type=float)
    p.add_argument("--jitter", type=float, help="detection jitter std in pixels")
    p.add_argument("--conf-model", choices=CONF_MODELS)
    p.add_argument("--render", action="store_true", help="write PPM frames to img1/")
    p.add_argument("--shape", choices=("disc", "rect"), default="disc")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("qa", help="flag suspicious ground-truth tracks")
    p.add_argument("gt", help="gt file or sequence directory")
    p.add_argument("--seqinfo")
    p.add_argument("--boundary-margin", type=float, default=20.0)
    p.add_argument("--tail-frames", type=int, default=10)
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_qa)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"crowdtrack: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MotFormatError as exc:
        print(f"crowdtrack: parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, OSError, ValueError) as exc:
        print(f"crowdtrack: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
