"""Tracking and detection metrics: IDEucl, IDF1, CLEAR MOT, MT/ML, AP.

All tracking metrics take ``{id: Trajectory}`` mappings for ground truth and
hypotheses. Overlap uses a strict ``IoU > threshold`` test throughout.

IDEucl credits each ground-truth frame with half of the displacement to its
neighbouring frames, so a step between two frames covered by the same
hypothesis counts fully and a step with one covered endpoint counts half.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .assignment import solve_sparse
from .motdata import (
    AnnotationEntry,
    BoundingBox,
    ObjectClass,
    Trajectory,
    iou_matrix,
)

logger = logging.getLogger(__name__)

__all__ = [
    "COCO_THRESHOLDS",
    "DetectionReport",
    "IdeuclResult",
    "MetricReport",
    "average_precision",
    "clear_mot",
    "detection_metrics",
    "evaluate_detections",
    "evaluate_tracking",
    "id_metrics",
    "ideucl",
    "ideucl_details",
    "map_coco",
    "mt_ml",
    "suppress_ignored",
]

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
MT_RATIO = 0.8
ML_RATIO = 0.2


# -- shared overlap structure ------------------------------------------------


class _Overlaps:
    """Per-frame ground-truth / hypothesis pairs whose IoU exceeds a threshold."""

    def __init__(self, gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
                 threshold: float):
        self.gt_ids = sorted(gt)
        self.hyp_ids = sorted(hyp)
        self.threshold = threshold
        gt_frames = _index_by_frame([gt[i] for i in self.gt_ids])
        hyp_frames = _index_by_frame([hyp[i] for i in self.hyp_ids])
        self.frames = sorted(set(gt_frames) | set(hyp_frames))
        self.gt_at = gt_frames
        self.hyp_at = hyp_frames
        # frame -> (gt index array, hyp index array, iou array)
        self.pairs: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        empty = (np.zeros(0, int), np.zeros(0, int), np.zeros(0))
        for f in self.frames:
            g = gt_frames.get(f)
            h = hyp_frames.get(f)
            if g is None or h is None:
                self.pairs[f] = empty
                continue
            m = iou_matrix(g[1], h[1])
            gi, hi = np.nonzero(m > threshold)
            self.pairs[f] = (g[0][gi], h[0][hi], m[gi, hi])
        self.n_gt_boxes = sum(len(gt[i]) for i in self.gt_ids)
        self.n_hyp_boxes = sum(len(hyp[i]) for i in self.hyp_ids)

    def all_pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Concatenated ``(frame, gt_idx, hyp_idx, iou)`` over every frame."""
        parts = [(np.full(len(p[0]), f), *p) for f, p in self.pairs.items() if len(p[0])]
        if not parts:
            z = np.zeros(0, int)
            return z, z, z, np.zeros(0)
        return tuple(np.concatenate(x) for x in zip(*parts))  # type: ignore[return-value]


def _index_by_frame(tracks: Sequence[Trajectory]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    rows: dict[int, tuple[list[int], list[np.ndarray]]] = {}
    for idx, t in enumerate(tracks):
        arr = t.as_array()
        for f, box in zip(t.frames, arr):
            ids, boxes = rows.setdefault(f, ([], []))
            ids.append(idx)
            boxes.append(box)
    return {f: (np.array(i, dtype=int), np.array(b).reshape(-1, 4)) for f, (i, b) in rows.items()}


def _pair_sums(g: np.ndarray, h: np.ndarray, w: np.ndarray, n_h: int):
    """Sum ``w`` over identical ``(g, h)`` keys."""
    if len(w) == 0:
        z = np.zeros(0, int)
        return z, z, np.zeros(0)
    key = g.astype(np.int64) * n_h + h
    uniq, inv = np.unique(key, return_inverse=True)
    sums = np.bincount(inv, weights=w)
    return uniq // n_h, uniq % n_h, sums


def _match_weights(g, h, w, shape):
    keep = w > 0
    return solve_sparse(g[keep], h[keep], w[keep], shape)


# -- IDEucl --------------------------------------------------------------------


@dataclass(frozen=True)
class IdeuclResult:
    score: float
    covered: float
    total: float
    fallback: bool
    matches: dict[int, int] = field(default_factory=dict)
    per_track: dict[int, tuple[float, float]] = field(default_factory=dict)


def _frame_credits(t: Trajectory) -> tuple[np.ndarray, float]:
    c = t.centers()
    if len(c) < 2:
        return np.zeros(len(c)), 0.0
    steps = np.linalg.norm(np.diff(c, axis=0), axis=1)
    credit = np.zeros(len(c))
    credit[1:] += steps / 2.0
    credit[:-1] += steps / 2.0
    return credit, float(steps.sum())


def _ideucl_from(ov: _Overlaps, gt: Mapping[int, Trajectory]) -> IdeuclResult:
    n_gt, n_h = len(ov.gt_ids), len(ov.hyp_ids)
    if n_gt == 0:
        if n_h:
            logger.warning("IDEucl: no ground truth but %d hypotheses; score 0", n_h)
            return IdeuclResult(0.0, 0.0, 0.0, False)
        return IdeuclResult(1.0, 0.0, 0.0, False)
    credits = {}
    totals = np.zeros(n_gt)
    for gi, gid in enumerate(ov.gt_ids):
        cr, tot = _frame_credits(gt[gid])
        credits[gi] = dict(zip(gt[gid].frames, cr))
        totals[gi] = tot
    fallback = totals.sum() <= 0.0
    if fallback:
        # every track static: weight frames equally instead of by distance
        logger.info("IDEucl: zero total ground-truth displacement, using frame weights")
        for gi, gid in enumerate(ov.gt_ids):
            credits[gi] = {f: 1.0 for f in gt[gid].frames}
            totals[gi] = len(gt[gid])
    frames, g, h, _ = ov.all_pairs()
    w = np.array([credits[gi][f] for f, gi in zip(frames, g)], dtype=float)
    pg, ph, ps = _pair_sums(g, h, w, max(n_h, 1))
    assignment = _match_weights(pg, ph, ps, (n_gt, n_h))
    covered = assignment.objective
    total = float(totals.sum())
    matches = {ov.gt_ids[a]: ov.hyp_ids[b] for a, b in assignment.pairs}
    lookup = {(int(a), int(b)): s for a, b, s in zip(pg, ph, ps)}
    per_track = {}
    matched = dict(assignment.pairs)
    for gi, gid in enumerate(ov.gt_ids):
        cov = lookup.get((gi, matched[gi]), 0.0) if gi in matched else 0.0
        per_track[gid] = (cov, float(totals[gi]))
    score = covered / total if total > 0 else 1.0
    return IdeuclResult(min(1.0, score), covered, total, fallback, matches, per_track)


def ideucl_details(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
                   iou_threshold: float = 0.5) -> IdeuclResult:
    return _ideucl_from(_Overlaps(gt, hyp, iou_threshold), gt)


def ideucl(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
           iou_threshold: float = 0.5) -> float:
    """Fraction of ground-truth path length covered by the best one-to-one hypotheses.

    Args:
        gt: ground-truth trajectories by id.
        hyp: hypothesis trajectories by id.
        iou_threshold: a hypothesis covers a frame when IoU exceeds this.

    Returns:
        Ratio in ``[0, 1]``. No ground truth and no hypotheses gives 1.0;
        no ground truth with hypotheses gives 0.0.
    """
    return ideucl_details(gt, hyp, iou_threshold).score


# -- identity metrics -------------------------------------------------------------


@dataclass(frozen=True)
class IdResult:
    idf1: float
    idp: float
    idr: float
    idtp: int
    idfp: int
    idfn: int


def _id_from(ov: _Overlaps) -> IdResult:
    frames, g, h, _ = ov.all_pairs()
    pg, ph, counts = _pair_sums(g, h, np.ones(len(g)), max(len(ov.hyp_ids), 1))
    a = _match_weights(pg, ph, counts, (len(ov.gt_ids), len(ov.hyp_ids)))
    idtp = int(round(a.objective))
    idfn = ov.n_gt_boxes - idtp
    idfp = ov.n_hyp_boxes - idtp
    if ov.n_gt_boxes == 0 and ov.n_hyp_boxes == 0:
        return IdResult(1.0, 1.0, 1.0, 0, 0, 0)
    idp = idtp / (idtp + idfp) if idtp + idfp else 0.0
    idr = idtp / (idtp + idfn) if idtp + idfn else 0.0
    idf1 = 2 * idtp / (2 * idtp + idfp + idfn)
    return IdResult(idf1, idp, idr, idtp, idfp, idfn)


def id_metrics(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
               iou_threshold: float = 0.5) -> tuple[float, float, float, int, int, int]:
    """``(idf1, idp, idr, idtp, idfp, idfn)`` from the global identity matching.

    Maximising shared frames is the same matching as minimising the per-pair
    count of frames where the two tracks disagree.
    """
    r = _id_from(_Overlaps(gt, hyp, iou_threshold))
    return (r.idf1, r.idp, r.idr, r.idtp, r.idfp, r.idfn)


# -- CLEAR MOT -------------------------------------------------------------------


@dataclass(frozen=True)
class ClearResult:
    mota: float
    motp: float
    fp: int
    fn: int
    id_switches: int
    fragmentations: int
    matches: int
    iou_sum: float
    n_gt: int
    matched_frames: dict[int, int]


def _clear_from(ov: _Overlaps) -> ClearResult:
    n_gt_tracks = len(ov.gt_ids)
    last_match = np.full(n_gt_tracks, -1)
    was_tracked = np.zeros(n_gt_tracks, dtype=bool)  # in the gt's previous frame
    ever_tracked = np.zeros(n_gt_tracks, dtype=bool)
    matched_frames = np.zeros(n_gt_tracks, dtype=int)
    fp = fn = idsw = frag = matches = 0
    iou_sum = 0.0
    for f in ov.frames:
        g_present = ov.gt_at[f][0] if f in ov.gt_at else np.zeros(0, int)
        h_present = ov.hyp_at[f][0] if f in ov.hyp_at else np.zeros(0, int)
        pg, ph, piou = ov.pairs[f]
        lookup = {(int(a), int(b)): float(v) for a, b, v in zip(pg, ph, piou)}
        cur: dict[int, int] = {}
        used_h: set[int] = set()
        for gi in g_present:
            prev = last_match[gi]
            if prev >= 0 and (gi, prev) in lookup and prev not in used_h:
                cur[int(gi)] = int(prev)
                used_h.add(int(prev))
        free = [
            (a, b, v) for (a, b), v in lookup.items() if a not in cur and b not in used_h
        ]
        if free:
            fa = np.array([x[0] for x in free])
            fb = np.array([x[1] for x in free])
            # constant offset makes cardinality dominate, then total IoU
            fv = np.array([x[2] for x in free]) + len(g_present) + 1.0
            for a, b in solve_sparse(fa, fb, fv, (n_gt_tracks, len(ov.hyp_ids))).pairs:
                cur[a] = b
        for gi in g_present:
            gi = int(gi)
            if gi in cur:
                hj = cur[gi]
                if last_match[gi] >= 0 and last_match[gi] != hj:
                    idsw += 1
                if ever_tracked[gi] and not was_tracked[gi]:
                    frag += 1
                last_match[gi] = hj
                was_tracked[gi] = True
                ever_tracked[gi] = True
                matched_frames[gi] += 1
                matches += 1
                iou_sum += lookup[(gi, hj)]
            else:
                was_tracked[gi] = False
                fn += 1
        fp += len(h_present) - len(cur)
    n_gt = ov.n_gt_boxes
    if n_gt == 0:
        if ov.n_hyp_boxes:
            logger.warning("CLEAR: no ground truth boxes; MOTA reported as 0")
        mota = 1.0 if ov.n_hyp_boxes == 0 else 0.0
    else:
        mota = 1.0 - (fp + fn + idsw) / n_gt
    motp = iou_sum / matches if matches else (1.0 if n_gt == 0 and ov.n_hyp_boxes == 0 else 0.0)
    return ClearResult(
        mota, motp, fp, fn, idsw, frag, matches, iou_sum, n_gt,
        {ov.gt_ids[i]: int(matched_frames[i]) for i in range(n_gt_tracks)},
    )


def clear_mot(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
              iou_threshold: float = 0.5) -> tuple[float, float, int, int, int, int]:
    """``(mota, motp, fp, fn, id_switches, fragmentations)``.

    Each frame first keeps last known correspondences that still overlap,
    then assigns the rest by maximum cardinality and total IoU.
    """
    r = _clear_from(_Overlaps(gt, hyp, iou_threshold))
    return (r.mota, r.motp, r.fp, r.fn, r.id_switches, r.fragmentations)


def _mt_ml_from(clear: ClearResult, gt: Mapping[int, Trajectory]) -> tuple[int, int, int]:
    mt = ml = pt = 0
    for gid, t in gt.items():
        ratio = clear.matched_frames.get(gid, 0) / len(t) if len(t) else 0.0
        if ratio >= MT_RATIO:
            mt += 1
        elif ratio <= ML_RATIO:
            ml += 1
        else:
            pt += 1
    return mt, ml, pt


def mt_ml(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
          iou_threshold: float = 0.5) -> tuple[int, int, int]:
    """Mostly tracked (>= 80% of frames matched), mostly lost (<= 20%), partial."""
    return _mt_ml_from(_clear_from(_Overlaps(gt, hyp, iou_threshold)), gt)


# -- combined report ----------------------------------------------------------------


@dataclass
class MetricReport:
    """Summable tracking counts; ratios are derived properties.

    Aggregating sequences sums counts and recomputes ratios from the sums.
    """

    name: str = ""
    ideucl_covered: float = 0.0
    ideucl_total: float = 0.0
    ideucl_frames_covered: float = 0.0
    ideucl_frames_total: float = 0.0
    ideucl_fallback: bool = False
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    n_gt: int = 0
    n_hyp: int = 0
    fp: int = 0
    fn: int = 0
    id_switches: int = 0
    fragmentations: int = 0
    matches: int = 0
    iou_sum: float = 0.0
    mt: int = 0
    ml: int = 0
    pt: int = 0

    @property
    def ideucl(self) -> float:
        if self.ideucl_total > 0:
            return min(1.0, self.ideucl_covered / self.ideucl_total)
        if self.ideucl_frames_total > 0:
            return min(1.0, self.ideucl_frames_covered / self.ideucl_frames_total)
        return 1.0 if self.n_hyp == 0 else 0.0

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else 1.0

    @property
    def idp(self) -> float:
        d = self.idtp + self.idfp
        return self.idtp / d if d else (1.0 if self.n_gt == 0 else 0.0)

    @property
    def idr(self) -> float:
        d = self.idtp + self.idfn
        return self.idtp / d if d else (1.0 if self.n_hyp == 0 else 0.0)

    @property
    def mota(self) -> float:
        if self.n_gt == 0:
            return 1.0 if self.n_hyp == 0 else 0.0
        return 1.0 - (self.fp + self.fn + self.id_switches) / self.n_gt

    @property
    def motp(self) -> float:
        if self.matches == 0:
            return 1.0 if self.n_gt == 0 and self.n_hyp == 0 else 0.0
        return self.iou_sum / self.matches

    def summary(self) -> dict[str, float | int]:
        """Values keyed by the report column names."""
        return {
            "IDEucl": self.ideucl, "IDF1": self.idf1, "IDP": self.idp, "IDR": self.idr,
            "MOTA": self.mota, "MOTP": self.motp, "IDSW": self.id_switches,
            "Frag": self.fragmentations, "FP": self.fp, "FN": self.fn,
            "MT": self.mt, "ML": self.ml, "PT": self.pt,
        }

    @classmethod
    def combine(cls, reports: Iterable[MetricReport], name: str = "OVERALL") -> MetricReport:
        out = cls(name=name)
        for r in reports:
            for f in fields(cls):
                if f.name in ("name",):
                    continue
                if f.name == "ideucl_fallback":
                    out.ideucl_fallback = out.ideucl_fallback or r.ideucl_fallback
                    continue
                setattr(out, f.name, getattr(out, f.name) + getattr(r, f.name))
        if out.ideucl_total > 0:
            out.ideucl_fallback = False
        return out


def evaluate_tracking(gt: Mapping[int, Trajectory], hyp: Mapping[int, Trajectory],
                      iou_threshold: float = 0.5, name: str = "") -> MetricReport:
    """Every tracking metric from one shared overlap pass."""
    ov = _Overlaps(gt, hyp, iou_threshold)
    ide = _ideucl_from(ov, gt)
    ids = _id_from(ov)
    clear = _clear_from(ov)
    mt, ml, pt = _mt_ml_from(clear, gt)
    report = MetricReport(
        name=name, idtp=ids.idtp, idfp=ids.idfp, idfn=ids.idfn,
        n_gt=ov.n_gt_boxes, n_hyp=ov.n_hyp_boxes, fp=clear.fp, fn=clear.fn,
        id_switches=clear.id_switches, fragmentations=clear.fragmentations,
        matches=clear.matches, iou_sum=clear.iou_sum, mt=mt, ml=ml, pt=pt,
        ideucl_fallback=ide.fallback,
    )
    if ide.fallback:
        report.ideucl_frames_covered, report.ideucl_frames_total = ide.covered, ide.total
    else:
        report.ideucl_covered, report.ideucl_total = ide.covered, ide.total
    return report


def suppress_ignored(
    hyp: Sequence[AnnotationEntry], ignore: Sequence[AnnotationEntry], threshold: float
) -> list[AnnotationEntry]:
    """Drop hypothesis rows overlapping an ignore region of the same frame."""
    if not ignore:
        return list(hyp)
    regions: dict[int, list[BoundingBox]] = {}
    for e in ignore:
        regions.setdefault(e.frame, []).append(e.box)
    out = []
    by_frame: dict[int, list[AnnotationEntry]] = {}
    for e in hyp:
        by_frame.setdefault(e.frame, []).append(e)
    drop: set[int] = set()
    for f, rows in by_frame.items():
        if f not in regions:
            continue
        m = iou_matrix(np.array([r.box.as_array() for r in rows]),
                       np.array([b.as_array() for b in regions[f]]))
        for r, hit in zip(rows, (m > threshold).any(axis=1)):
            if hit:
                drop.add(id(r))
    out = [e for e in hyp if id(e) not in drop]
    return out


# -- detection metrics ----------------------------------------------------------------


@dataclass
class DetectionReport:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    moda: float = 0.0
    modp: float = 0.0
    ap: float = 0.0
    map_coco: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_gt: int = 0

    def summary(self) -> dict[str, float]:
        return {
            "P": self.precision, "R": self.recall, "F1": self.f1, "MODA": self.moda,
            "MODP": self.modp, "AP": self.ap, "mAP_COCO": self.map_coco,
        }


def _gt_by_frame(entries: Iterable[AnnotationEntry]) -> dict[int, np.ndarray]:
    rows: dict[int, list[np.ndarray]] = {}
    for e in entries:
        rows.setdefault(e.frame, []).append(e.box.as_array())
    return {f: np.array(b).reshape(-1, 4) for f, b in rows.items()}


def _det_by_frame(entries: Iterable[AnnotationEntry]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    rows: dict[int, tuple[list, list]] = {}
    for e in entries:
        b, c = rows.setdefault(e.frame, ([], []))
        b.append(e.box.as_array())
        c.append(e.conf)
    return {f: (np.array(b).reshape(-1, 4), np.array(c, dtype=float)) for f, (b, c) in rows.items()}


def detection_metrics(gt_boxes: Sequence[AnnotationEntry], det_boxes: Sequence[AnnotationEntry],
                      match_iou: float = 0.4, conf_threshold: float = 0.5) -> DetectionReport:
    """Precision, recall, F1, MODA and MODP from per-frame IoU matching.

    Detections below ``conf_threshold`` are discarded; pairs need
    ``IoU > match_iou``.

    Raises:
        ValueError: when there is no ground truth (MODA undefined).
    """
    gt = _gt_by_frame(gt_boxes)
    n_gt = sum(len(b) for b in gt.values())
    if n_gt == 0:
        raise ValueError("no ground-truth boxes: MODA is undefined")
    dets = {
        f: b[c >= conf_threshold] for f, (b, c) in _det_by_frame(det_boxes).items()
    }
    tp = fp = 0
    frame_modp = []
    for f in sorted(set(gt) | set(dets)):
        g = gt.get(f, np.zeros((0, 4)))
        d = dets.get(f, np.zeros((0, 4)))
        m = iou_matrix(g, d)
        gi, di = np.nonzero(m > match_iou)
        a = solve_sparse(gi, di, m[gi, di], (len(g), len(d)))
        tp += len(a.pairs)
        fp += len(d) - len(a.pairs)
        if a.pairs:
            frame_modp.append(a.objective / len(a.pairs))
    fn = n_gt - tp
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / n_gt
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    moda = 1.0 - (fn + fp) / n_gt
    modp = float(np.mean(frame_modp)) if frame_modp else 0.0
    return DetectionReport(p, r, f1, moda, modp, tp=tp, fp=fp, fn=fn, n_gt=n_gt)


def precision_recall_curve(gt_boxes: Sequence[AnnotationEntry],
                           det_boxes: Sequence[AnnotationEntry],
                           match_iou: float) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative precision and recall over detections sorted by confidence."""
    gt = _gt_by_frame(gt_boxes)
    n_gt = sum(len(b) for b in gt.values())
    if n_gt == 0:
        raise ValueError("no ground-truth boxes: AP is undefined")
    dets = list(det_boxes)
    order = sorted(range(len(dets)), key=lambda i: -dets[i].conf)
    taken = {f: np.zeros(len(b), dtype=bool) for f, b in gt.items()}
    tp_flags = np.zeros(len(dets))
    for rank, i in enumerate(order):
        e = dets[i]
        g = gt.get(e.frame)
        if g is None:
            continue
        ious = iou_matrix(e.box.as_array()[None], g)[0]
        ious[taken[e.frame]] = -1.0
        k = int(np.argmax(ious))
        if ious[k] > match_iou:
            taken[e.frame][k] = True
            tp_flags[rank] = 1.0
    ctp = np.cumsum(tp_flags)
    precision = ctp / np.arange(1, len(dets) + 1)
    recall = ctp / n_gt
    return precision, recall


def average_precision(gt_boxes: Sequence[AnnotationEntry], det_boxes: Sequence[AnnotationEntry],
                      match_iou: float = 0.5) -> float:
    """All-points interpolated AP with greedy confidence-ordered matching."""
    precision, recall = precision_recall_curve(gt_boxes, det_boxes, match_iou)
    if len(precision) == 0:
        return 0.0
    mrec = np.concatenate([[0.0], recall, [recall[-1]]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    idx = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def map_coco(gt_boxes: Sequence[AnnotationEntry], det_boxes: Sequence[AnnotationEntry]) -> float:
    """Mean AP over IoU thresholds 0.50, 0.55, ..., 0.95."""
    return float(np.mean([average_precision(gt_boxes, det_boxes, t) for t in COCO_THRESHOLDS]))


def evaluate_detections(gt_boxes: Sequence[AnnotationEntry], det_boxes: Sequence[AnnotationEntry],
                        match_iou: float = 0.4, conf_threshold: float = 0.5) -> DetectionReport:
    report = detection_metrics(gt_boxes, det_boxes, match_iou, conf_threshold)
    report.ap = average_precision(gt_boxes, det_boxes, match_iou)
    report.map_coco = map_coco(gt_boxes, det_boxes)
    return report


def detection_gt(entries: Sequence[AnnotationEntry]) -> tuple[list[AnnotationEntry], list[AnnotationEntry]]:
    """Split ground truth into scored heads and ignore regions."""
    keep, ignore = [], []
    for e in entries:
        cls = e.effective_class
        if cls == ObjectClass.IGNORE:
            ignore.append(e)
        elif cls in (ObjectClass.PEDESTRIAN, ObjectClass.STATIC):
            keep.append(e)
    return keep, ignore


