"""Particle-filter head tracker with colour-histogram re-identification.

Each target holds a cloud of box particles. Per frame the particles are
warped by camera motion, jittered, and passed through a box refiner that
returns adjusted boxes and foreground scores. Scores become importance
weights; the weighted mean gives the track estimate. Tracks whose mean score
drops below ``lambda_reg`` are set lost, coast under a constant-velocity
prediction, and may be revived by matching a new detection on overlap plus
histogram similarity.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol

import numpy as np

from .appearance import HsvHistogram, bhattacharyya_distance, box_patch, extract_histogram
from .assignment import solve_sparse
from .kalman import KalmanBoxFilter
from .motdata import AnnotationEntry, BoundingBox, iou, iou_matrix

logger = logging.getLogger(__name__)

__all__ = [
    "CameraMotion",
    "ConfigError",
    "DetectionSnapRefiner",
    "FrameContext",
    "HeadTracker",
    "IdentityRefiner",
    "OracleRefiner",
    "ParticleSet",
    "TrackState",
    "TrackerConfig",
    "cva_predict",
    "effective_sample_size",
    "estimate_state",
    "init_particles",
    "predict_and_update",
    "reid_similarity",
    "resample",
    "track_sequence",
]

ACTIVE = "active"
LOST = "lost"
PARTICLE_FILTER = "particle_filter"
KALMAN_CVA = "kalman_cva"
_MOTION_ALIASES = {"pf": PARTICLE_FILTER, "kf": KALMAN_CVA}
APPEARANCE_CROP = 0.5
APPEARANCE_CLAIM_WEIGHT = 0.5
_WEIGHT_TOL = 1e-9


class ConfigError(ValueError):
    pass


@dataclass
class TrackerConfig:
    n_particles: int = 100
    init_spread: float = 1.5
    lambda_reg: float = 0.1
    lambda_det: float = 0.6
    lambda_age: int = 25
    alpha: float = 0.8
    beta: float = 0.2
    reid_accept: float = 0.4
    nms_iou: float = 0.4
    track_nms_iou: float = 0.6
    process_noise_xy: float = 1.0
    process_noise_wh: float = 0.5
    neff_threshold: float = 0.5
    velocity_window: int = 10
    motion_model: str = PARTICLE_FILTER

    def __post_init__(self):
        self.motion_model = _MOTION_ALIASES.get(self.motion_model, self.motion_model)

    def validate(self) -> TrackerConfig:
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if self.init_spread < 0:
            raise ConfigError("init_spread must be >= 0")
        if self.velocity_window < 1:
            raise ConfigError("velocity_window must be >= 1")
        if self.lambda_age < 0:
            raise ConfigError("lambda_age must be >= 0")
        for name in ("lambda_reg", "lambda_det", "alpha", "beta", "nms_iou", "track_nms_iou",
                     "neff_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ConfigError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if self.reid_accept < 0:
            raise ConfigError("reid_accept must be >= 0 (values above 1 disable re-id)")
        if self.process_noise_xy < 0 or self.process_noise_wh < 0:
            raise ConfigError("process noise must be >= 0")
        if self.motion_model not in (PARTICLE_FILTER, KALMAN_CVA):
            raise ConfigError(f"unknown motion_model {self.motion_model!r}")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> TrackerConfig:
        """Build from string-valued ``key=value`` pairs, coercing to field types."""
        kwargs = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kind = types[key]
            try:
                if kind == "int":
                    kwargs[key] = int(raw)
                elif kind == "float":
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = str(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return cls(**kwargs).validate()

    def as_mapping(self) -> dict[str, object]:
        return dataclasses.asdict(self)


# -- particles -------------------------------------------------------------------


@dataclass(frozen=True)
class Particle:
    box: BoundingBox
    weight: float


@dataclass
class ParticleSet:
    """``boxes`` is ``(M, 4)`` in xywh; ``weights`` sums to 1."""

    boxes: np.ndarray
    weights: np.ndarray
    reinitialized: bool = False

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        for b, w in zip(self.boxes, self.weights):
            yield Particle(BoundingBox(*map(float, b)), float(w))


def _rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def init_particles(box: BoundingBox, n: int, rng: np.random.Generator | int | None = None,
                   spread: float = 1.5) -> ParticleSet:
    """``n`` equally weighted particles with centres uniform in ``centre ± spread·(w, h)``."""
    if box.w <= 0 or box.h <= 0:
        raise ValueError(f"cannot initialise particles from zero-area box {box}")
    if n < 1:
        raise ValueError("need at least one particle")
    gen = _rng(rng)
    cx, cy = box.center
    xs = gen.uniform(cx - spread * box.w, cx + spread * box.w, n)
    ys = gen.uniform(cy - spread * box.h, cy + spread * box.h, n)
    boxes = np.column_stack([xs - box.w / 2, ys - box.h / 2,
                             np.full(n, box.w), np.full(n, box.h)])
    return ParticleSet(boxes, np.full(n, 1.0 / n))


def _check_normalized(weights: np.ndarray) -> None:
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-6:
        raise ValueError(f"particle weights must be normalised (sum={weights.sum():.6g})")


def estimate_state(particles: ParticleSet) -> BoundingBox:
    """Weighted mean of particle centres and sizes."""
    w = np.asarray(particles.weights, dtype=float)
    total = w.sum()
    if len(w) == 0 or total <= 0:
        raise ValueError("cannot estimate state from zero total weight")
    b = particles.boxes
    centers = b[:, :2] + b[:, 2:] / 2
    cx, cy = (w @ centers) / total
    bw, bh = (w @ b[:, 2:]) / total
    return BoundingBox.from_center(float(cx), float(cy), float(bw), float(bh))


def effective_sample_size(particles: ParticleSet | np.ndarray) -> float:
    w = particles.weights if isinstance(particles, ParticleSet) else np.asarray(particles, float)
    _check_normalized(w)
    return float(1.0 / np.sum(w**2))


def resample(particles: ParticleSet, rng: np.random.Generator | int | None = None,
             n: int | None = None, fallback_box: BoundingBox | None = None,
             spread: float = 1.5) -> ParticleSet:
    """Systematic resampling to ``n`` (default: same count) equally weighted particles.

    All-zero weights re-initialise around ``fallback_box`` (flagged via
    ``reinitialized``) or raise when no fallback is given.
    """
    gen = _rng(rng)
    m = len(particles) if n is None else n
    w = np.asarray(particles.weights, dtype=float)
    total = w.sum()
    if total <= 0:
        if fallback_box is None:
            raise ValueError("all particle weights are zero")
        out = init_particles(fallback_box, m, gen, spread)
        out.reinitialized = True
        return out
    cum = np.cumsum(w / total)
    cum[-1] = 1.0
    positions = (gen.random() + np.arange(m)) / m
    idx = np.searchsorted(cum, positions, side="right")
    return ParticleSet(particles.boxes[idx].copy(), np.full(m, 1.0 / m))


# -- frame inputs ----------------------------------------------------------------


@dataclass
class FrameContext:
    frame: int
    det_boxes: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    det_confs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    image: np.ndarray | None = None
    image_size: tuple[int, int] | None = None  # (width, height)
    claims: dict[int, int] | None = None  # track id -> detection index


class CameraMotion:
    """Per-frame 2x3 affines mapping frame ``t-1`` coordinates into frame ``t``."""

    def __init__(self, transforms: Mapping[int, np.ndarray] | None = None):
        self.transforms = {int(k): np.asarray(v, float).reshape(2, 3) for k, v in (transforms or {}).items()}
        for f, a in self.transforms.items():
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite camera motion at frame {f}")

    def affine(self, frame: int) -> np.ndarray | None:
        return self.transforms.get(frame)

    def warp_boxes(self, boxes: np.ndarray, frame: int) -> np.ndarray:
        a = self.affine(frame)
        if a is None:
            return boxes
        p1 = boxes[:, :2] @ a[:, :2].T + a[:, 2]
        p2 = (boxes[:, :2] + boxes[:, 2:]) @ a[:, :2].T + a[:, 2]
        lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
        return np.column_stack([lo, hi - lo])

    def warp_box(self, box: BoundingBox, frame: int) -> BoundingBox:
        return BoundingBox(*map(float, self.warp_boxes(box.as_array()[None], frame)[0]))

    @classmethod
    def from_file(cls, path: str | Path) -> CameraMotion:
        """Rows ``frame,a11,a12,a13,a21,a22,a23``; absent frames are identity."""
        transforms = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 7:
                    raise ValueError(f"camera motion row needs 7 fields at line {lineno}")
                try:
                    vals = [float(p) for p in parts]
                except ValueError:
                    raise ValueError(f"non-numeric camera motion at line {lineno}") from None
                transforms[int(vals[0])] = np.array(vals[1:]).reshape(2, 3)
        return cls(transforms)


# -- refiners ----------------------------------------------------------------------


class Refiner(Protocol):
    def refine(self, context: FrameContext, boxes: np.ndarray,
               track: TrackState | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Return refined ``(M, 4)`` boxes and scores in ``[0, 1]``."""
        ...


class DetectionSnapRefiner:
    """Stand-in for a learned box regressor driven by the frame's detections.

    Each track follows one detection. When the tracker has assigned
    detections to tracks for this frame (``context.claims``) that assignment
    is used; otherwise the track takes the detection best overlapping the
    weighted mean of its particles. A particle overlapping its track's
    detection by at least ``snap_iou`` moves ``pull`` of the way toward it
    and scores ``conf * IoU``; the remaining particles score 0 as background.
    When no particle reaches a detection (a missed detection), all particles
    coast by the track velocity; those still carrying weight score the
    track's previous score times ``decay``, so a track survives short
    detector dropouts.
    """

    def __init__(self, snap_iou: float = 0.3, pull: float = 0.8, decay: float = 0.9):
        self.snap_iou = snap_iou
        self.pull = pull
        self.decay = decay

    def _claimed(self, context, boxes, track) -> int | None:
        if context.claims is not None and track is not None:
            return context.claims.get(track.id)
        if track is not None and track.particles is not None and len(track.particles) == len(boxes):
            w = track.particles.weights
        else:
            w = np.full(len(boxes), 1.0 / len(boxes))
        gate_iou = iou_matrix((w @ boxes)[None], context.det_boxes)[0]
        d = int(np.argmax(gate_iou))
        return d if gate_iou[d] > 0 else None

    def refine(self, context, boxes, track=None):
        boxes = np.asarray(boxes, dtype=float)
        coast = boxes.copy()
        if track is not None:
            coast[:, 0] += track.velocity[0]
            coast[:, 1] += track.velocity[1]
        prev = track.score if track is not None else 1.0
        coast_scores = np.full(len(boxes), float(np.clip(prev * self.decay, 0.0, 1.0)))
        if track is not None and track.particles is not None and len(track.particles) == len(boxes):
            live = track.particles.weights > 0
            if live.any():
                coast_scores[~live] = 0.0  # particles already ruled out stay out
        coasting = (coast, coast_scores)
        if len(context.det_boxes) == 0:
            return coasting
        d = self._claimed(context, boxes, track)
        if d is None:
            return coasting
        target = context.det_boxes[d]
        overlap = iou_matrix(boxes, target[None])[:, 0]
        hit = overlap >= self.snap_iou
        if not hit.any():
            return coasting
        out = np.where(hit[:, None], boxes + self.pull * (target - boxes), boxes)
        scores = np.where(hit, context.det_confs[d] * overlap, 0.0)
        return out, np.clip(scores, 0.0, 1.0)


class IdentityRefiner:
    """Leaves boxes untouched and returns a constant score."""

    def __init__(self, score: float = 1.0):
        self.score = score

    def refine(self, context, boxes, track=None):
        boxes = np.asarray(boxes, dtype=float)
        return boxes.copy(), np.full(len(boxes), self.score)


class OracleRefiner:
    """Snaps every particle to the ground-truth box the track follows.

    The followed identity is fixed at the track's first refinement (best IoU
    with its current estimate). Frames without that identity score 0.
    """

    def __init__(self, gt_by_frame: Mapping[int, Mapping[int, BoundingBox]]):
        self.gt_by_frame = gt_by_frame
        self._follow: dict[int, int] = {}

    def refine(self, context, boxes, track=None):
        boxes = np.asarray(boxes, dtype=float)
        frame_gt = self.gt_by_frame.get(context.frame, {})
        gid = None
        if track is not None:
            gid = self._follow.get(track.id)
            if gid is None and frame_gt:
                ref = cva_predict(track)
                ids = sorted(frame_gt)
                ious = [iou(ref, frame_gt[i]) for i in ids]
                k = int(np.argmax(ious))
                if ious[k] > 0:
                    gid = ids[k]
                    self._follow[track.id] = gid
        if gid is None or gid not in frame_gt:
            return boxes.copy(), np.zeros(len(boxes))
        target = frame_gt[gid].as_array()
        return np.tile(target, (len(boxes), 1)), np.ones(len(boxes))


# -- track state ---------------------------------------------------------------------


@dataclass
class TrackState:
    id: int
    last_estimate: BoundingBox
    particles: ParticleSet | None = None
    status: str = ACTIVE
    velocity: tuple[float, float] = (0.0, 0.0)
    appearance: HsvHistogram | None = None
    frames_lost: int = 0
    score: float = 1.0
    history: dict[int, BoundingBox] = field(default_factory=dict)
    kalman: KalmanBoxFilter | None = None
    supported_frame: int | None = None  # last frame a detection backed the track


def velocity_from_history(history: Mapping[int, BoundingBox], window: int = 2) -> tuple[float, float]:
    """Mean per-frame centre displacement over the last (up to) ``window`` steps."""
    frames = sorted(history)[-(window + 1):]
    if len(frames) < 2:
        return (0.0, 0.0)
    steps = []
    for a, b in zip(frames, frames[1:]):
        (ax, ay), (bx, by) = history[a].center, history[b].center
        steps.append(((bx - ax) / (b - a), (by - ay) / (b - a)))
    return (float(np.mean([s[0] for s in steps])), float(np.mean([s[1] for s in steps])))


def cva_predict(track: TrackState) -> BoundingBox:
    """Last estimate moved one frame along the constant-velocity assumption."""
    vx, vy = track.velocity
    return track.last_estimate.translated(vx, vy)


def reid_similarity(lost: TrackState, new_box: BoundingBox, new_hist: HsvHistogram | None,
                    config: TrackerConfig) -> float:
    """``alpha * IoU + beta * (1 - Bhattacharyya distance)`` in ``[0, 1]``.

    A missing histogram on either side counts as identical appearance.
    """
    overlap = iou(lost.last_estimate, new_box)
    if lost.appearance is None or new_hist is None:
        likeness = 1.0
    else:
        likeness = 1.0 - bhattacharyya_distance(lost.appearance, new_hist)
    return config.alpha * overlap + config.beta * likeness


def _clip_to_extended_image(boxes: np.ndarray, size: tuple[int, int] | None) -> np.ndarray:
    if size is None:
        return boxes
    width, height = size
    cx = np.clip(boxes[:, 0] + boxes[:, 2] / 2, -boxes[:, 2], width + boxes[:, 2])
    cy = np.clip(boxes[:, 1] + boxes[:, 3] / 2, -boxes[:, 3], height + boxes[:, 3])
    out = boxes.copy()
    out[:, 0] = cx - boxes[:, 2] / 2
    out[:, 1] = cy - boxes[:, 3] / 2
    return out


def predict_and_update(tracks: Iterable[TrackState], context: FrameContext, refiner: Refiner,
                       cmc: CameraMotion | None, config: TrackerConfig,
                       rng: np.random.Generator) -> list[TrackState]:
    """Warp, jitter and refine every particle; weights become normalised scores.

    ``track.score`` becomes the weight-averaged particle score (zero only if
    every particle scored zero) and ``last_estimate`` the weighted particle
    mean.
    """
    out = []
    for track in tracks:
        ps = track.particles
        boxes = ps.boxes
        if cmc is not None:
            boxes = cmc.warp_boxes(boxes, context.frame)
        m = len(boxes)
        noise = np.zeros((m, 4))
        if config.process_noise_xy > 0:
            noise[:, :2] = rng.normal(0.0, config.process_noise_xy, (m, 2))
        if config.process_noise_wh > 0:
            dwh = rng.normal(0.0, config.process_noise_wh, (m, 2))
            noise[:, 2:] = dwh
            noise[:, :2] -= dwh / 2  # size noise keeps the centre
        boxes = boxes + noise
        boxes[:, 2:] = np.maximum(boxes[:, 2:], 1.0)
        boxes = _clip_to_extended_image(boxes, context.image_size)
        refined, scores = refiner.refine(context, boxes, track)
        refined = np.asarray(refined, dtype=float)
        scores = np.clip(np.asarray(scores, dtype=float), 0.0, 1.0)
        if refined.shape != boxes.shape or not np.all(np.isfinite(refined)):
            raise RuntimeError(f"refiner returned invalid boxes for track {track.id}")
        total = scores.sum()
        weights = scores / total if total > 0 else np.full(m, 1.0 / m)
        track.particles = ParticleSet(refined, weights)
        track.score = float(weights @ scores)
        track.last_estimate = estimate_state(track.particles)
        out.append(track)
    return out


def _greedy_nms(boxes: np.ndarray, confs: np.ndarray, thresh: float) -> np.ndarray:
    order = np.argsort(-confs, kind="stable")
    keep: list[int] = []
    for i in order:
        if keep and iou_matrix(boxes[i][None], boxes[keep])[0].max() > thresh:
            continue
        keep.append(int(i))
    return np.array(sorted(keep), dtype=int)


def _inside(box: BoundingBox, size: tuple[int, int] | None) -> bool:
    if size is None:
        return True
    cx, cy = box.center
    return 0.0 <= cx <= size[0] and 0.0 <= cy <= size[1]


def _fully_inside(box: BoundingBox, size: tuple[int, int] | None) -> bool:
    if size is None:
        return True
    return box.x >= 0 and box.y >= 0 and box.x + box.w <= size[0] and box.y + box.h <= size[1]


class HeadTracker:
    """Online tracker; call :meth:`step` once per frame, in order.

    Args:
        config: hyperparameters (validated on construction).
        refiner: box refiner for particle mode; defaults to detection snapping.
        cmc: camera motion; identity when omitted.
        seed: seeds the single random stream, making runs reproducible.
        image_size: ``(width, height)``; enables out-of-image termination.
    """

    def __init__(self, config: TrackerConfig | None = None, refiner: Refiner | None = None,
                 cmc: CameraMotion | None = None, seed: int | None = 0,
                 image_size: tuple[int, int] | None = None):
        self.config = (config or TrackerConfig()).validate()
        self.refiner = refiner or DetectionSnapRefiner()
        self.cmc = cmc or CameraMotion()
        self.rng = np.random.default_rng(seed)
        self.image_size = image_size
        self.tracks: list[TrackState] = []
        self.next_id = 1
        self.frame: int | None = None

    @property
    def active(self) -> list[TrackState]:
        return [t for t in self.tracks if t.status == ACTIVE]

    @property
    def lost(self) -> list[TrackState]:
        return [t for t in self.tracks if t.status == LOST]

    # lifecycle helpers

    def _histogram(self, image, box: BoundingBox) -> HsvHistogram | None:
        if image is None:
            return None
        return extract_histogram(box_patch(image, box, APPEARANCE_CROP))

    def _demote(self, track: TrackState) -> None:
        track.status = LOST
        track.frames_lost = 0
        track.particles = None if self.config.motion_model == KALMAN_CVA else track.particles

    def _start(self, track: TrackState, box: BoundingBox, conf: float, frame: int, image) -> None:
        cfg = self.config
        track.status = ACTIVE
        track.frames_lost = 0
        track.last_estimate = box
        track.score = conf
        track.history[frame] = box
        track.supported_frame = frame
        if cfg.motion_model == KALMAN_CVA:
            track.kalman = KalmanBoxFilter(box)
            track.velocity = (0.0, 0.0)
        else:
            track.particles = init_particles(box, cfg.n_particles, self.rng, cfg.init_spread)
            track.velocity = velocity_from_history(track.history, self.config.velocity_window)
        hist = self._histogram(image, box)
        if hist is not None:
            track.appearance = hist

    # per-frame stages

    def _advance_lost(self, frame: int) -> None:
        survivors = []
        for t in self.tracks:
            if t.status == LOST:
                t.frames_lost += 1
                if t.frames_lost > self.config.lambda_age:
                    continue
                t.last_estimate = self.cmc.warp_box(t.last_estimate, frame)
                t.last_estimate = cva_predict(t)
                if not _inside(t.last_estimate, self.image_size):
                    continue
            survivors.append(t)
        self.tracks = survivors

    def _refresh_templates(self, tracks: list[TrackState], image) -> None:
        """Re-read the colour template of confident tracks that no other track overlaps.

        Overlapping targets bleed into each other's patches, and a template
        taken then would attract the track to its neighbour.
        """
        if image is None:
            return
        for t in tracks:
            if any(o is not t and iou(o.last_estimate, t.last_estimate) > 0 for o in self.tracks):
                continue
            t.appearance = self._histogram(image, t.last_estimate)

    def _exited(self, track: TrackState) -> bool:
        """Centre outside the image, or a track without detection support about to cross its border.

        Targets leave through the image edge; once the detector stops firing
        there, coasting on would only emit boxes over empty background.
        """
        box = track.last_estimate
        if not _inside(box, self.image_size):
            return True
        if track.supported_frame == self.frame:
            return False
        return (track.score < self.config.lambda_det and not _fully_inside(box, self.image_size)) \
            or not _fully_inside(cva_predict(track), self.image_size)

    def _assign_claims(self, tracks: list[TrackState], ctx: FrameContext) -> dict[int, int]:
        """One-to-one track/detection pairing on IoU with each track's predicted box."""
        if not tracks or len(ctx.det_boxes) == 0:
            return {}
        pred = np.array([self.cmc.warp_box(cva_predict(t), ctx.frame).as_array() for t in tracks])
        m = iou_matrix(pred, ctx.det_boxes)
        ti, di = np.nonzero(m > 0)
        if len(ti) == 0:
            return {}
        w = m[ti, di]
        if ctx.image is not None and APPEARANCE_CLAIM_WEIGHT > 0:
            hists = {}
            for k, (a, b) in enumerate(zip(ti, di)):
                tmpl = tracks[a].appearance
                if tmpl is None:
                    continue
                if b not in hists:
                    hists[b] = self._histogram(ctx.image, BoundingBox(*map(float, ctx.det_boxes[b])))
                w[k] *= 1.0 - APPEARANCE_CLAIM_WEIGHT * bhattacharyya_distance(tmpl, hists[b])
            keep = w > 0
            ti, di, w = ti[keep], di[keep], w[keep]
        pairs = solve_sparse(ti, di, w, m.shape).pairs if len(ti) else []
        return {tracks[a].id: int(b) for a, b in pairs}

    def _update_active_pf(self, ctx: FrameContext) -> None:
        cfg = self.config
        active = self.active
        ctx.claims = self._assign_claims(active, ctx)
        confident: list[TrackState] = []
        predict_and_update(active, ctx, self.refiner, self.cmc, cfg, self.rng)
        for t in active:
            if t.id in ctx.claims:
                t.supported_frame = ctx.frame
            if t.score < cfg.lambda_reg or self._exited(t):
                self._demote(t)
                continue
            t.history[ctx.frame] = t.last_estimate
            t.velocity = velocity_from_history(t.history, cfg.velocity_window)
            if t.score >= cfg.lambda_det:
                confident.append(t)
            if effective_sample_size(t.particles) < cfg.neff_threshold * len(t.particles):
                t.particles = resample(t.particles, self.rng, fallback_box=t.last_estimate,
                                       spread=cfg.init_spread)
        self._refresh_templates(confident, ctx.image)

    def _update_active_kf(self, ctx: FrameContext) -> None:
        cfg = self.config
        active = self.active
        affine = self.cmc.affine(ctx.frame)
        for t in active:
            if affine is not None:
                t.kalman.warp(affine)
            t.kalman.predict()
        matched: dict[int, int] = {}
        confident: list[TrackState] = []
        if active and len(ctx.det_boxes):
            pred = np.array([t.kalman.box.as_array() for t in active])
            m = iou_matrix(pred, ctx.det_boxes)
            ti, di = np.nonzero(m >= 0.3)
            matched = solve_sparse(ti, di, m[ti, di], m.shape).as_dict()
        for k, t in enumerate(active):
            if k in matched:
                d = matched[k]
                t.kalman.update(BoundingBox(*map(float, ctx.det_boxes[d])))
                t.score = float(ctx.det_confs[d])
                t.supported_frame = ctx.frame
            else:
                t.score *= 0.9
            t.last_estimate = t.kalman.box
            t.velocity = t.kalman.velocity
            if t.score < cfg.lambda_reg or self._exited(t):
                self._demote(t)
                continue
            t.history[ctx.frame] = t.last_estimate
            if k in matched and t.score >= cfg.lambda_det:
                confident.append(t)
        self._refresh_templates(confident, ctx.image)

    def _suppress_duplicate_tracks(self) -> None:
        """Demote the weaker of any two active tracks overlapping above ``track_nms_iou``.

        Tracks backed by a detection this frame outrank coasting ones; score
        then id break the remaining ties.
        """
        active = sorted(self.active, key=lambda t: (t.supported_frame != self.frame, -t.score, t.id))
        kept: list[TrackState] = []
        for t in active:
            if any(iou(t.last_estimate, k.last_estimate) > self.config.track_nms_iou for k in kept):
                self._demote(t)
            else:
                kept.append(t)

    def _candidate_detections(self, ctx: FrameContext) -> np.ndarray:
        cfg = self.config
        idx = np.flatnonzero(ctx.det_confs >= cfg.lambda_det)
        if len(idx) == 0:
            return idx
        boxes = ctx.det_boxes[idx]
        active = self.active
        if active:
            est = np.array([t.last_estimate.as_array() for t in active])
            overlap = iou_matrix(boxes, est).max(axis=1)
            idx = idx[overlap <= cfg.nms_iou]
        if len(idx) > 1:
            idx = idx[_greedy_nms(ctx.det_boxes[idx], ctx.det_confs[idx], cfg.nms_iou)]
        return idx

    def _reidentify(self, ctx: FrameContext, cand: np.ndarray) -> np.ndarray:
        cfg = self.config
        lost = self.lost
        if not lost or len(cand) == 0 or cfg.reid_accept > 1.0:
            return cand
        boxes = [BoundingBox(*map(float, ctx.det_boxes[i])) for i in cand]
        hists = [self._histogram(ctx.image, b) for b in boxes]
        sim = np.array([[reid_similarity(t, b, h, cfg) for b, h in zip(boxes, hists)] for t in lost])
        li, di = np.nonzero(sim > cfg.reid_accept)
        pairs = solve_sparse(li, di, sim[li, di], sim.shape).pairs if len(li) else []
        used = set()
        for a, b in pairs:
            t = lost[a]
            logger.debug("frame %d: track %d re-identified (similarity %.3f)",
                         ctx.frame, t.id, sim[a, b])
            self._start(t, boxes[b], float(ctx.det_confs[cand[b]]), ctx.frame, ctx.image)
            used.add(b)
        return np.array([c for k, c in enumerate(cand) if k not in used], dtype=int)

    def step(self, frame: int, det_boxes=None, det_confs=None,
             image: np.ndarray | None = None) -> list[AnnotationEntry]:
        """Process one frame and return output rows for the active tracks."""
        if self.frame is not None and frame != self.frame + 1:
            raise ValueError(f"frame gap: expected {self.frame + 1}, got {frame}")
        self.frame = frame
        boxes = np.zeros((0, 4)) if det_boxes is None else np.asarray(det_boxes, float).reshape(-1, 4)
        confs = np.ones(len(boxes)) if det_confs is None else np.asarray(det_confs, float).reshape(-1)
        ctx = FrameContext(frame, boxes, confs, image, self.image_size)

        self._advance_lost(frame)
        if self.config.motion_model == KALMAN_CVA:
            self._update_active_kf(ctx)
        else:
            self._update_active_pf(ctx)
        self._suppress_duplicate_tracks()
        cand = self._candidate_detections(ctx)
        cand = self._reidentify(ctx, cand)
        for i in cand:
            track = TrackState(self.next_id, BoundingBox(*map(float, boxes[i])))
            self.next_id += 1
            self._start(track, track.last_estimate, float(confs[i]), frame, image)
            self.tracks.append(track)

        rows = [
            AnnotationEntry(frame, t.id, t.last_estimate, t.score, None, None)
            for t in sorted(self.active, key=lambda t: t.id)
        ]
        return rows


def track_sequence(detections: Iterable[AnnotationEntry], frame_count: int,
                   config: TrackerConfig | None = None, refiner: Refiner | None = None,
                   cmc: CameraMotion | None = None, seed: int | None = 0,
                   image_size: tuple[int, int] | None = None,
                   frame_loader: Callable[[int], np.ndarray | None] | None = None,
                   ) -> list[AnnotationEntry]:
    """Run the tracker over frames ``1..frame_count`` and collect its output rows."""
    by_frame: dict[int, list[AnnotationEntry]] = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    tracker = HeadTracker(config, refiner, cmc, seed, image_size)
    out: list[AnnotationEntry] = []
    for f in range(1, frame_count + 1):
        dets = by_frame.get(f, [])
        boxes = np.array([d.box.as_array() for d in dets]).reshape(-1, 4)
        confs = np.array([d.conf for d in dets], dtype=float)
        image = frame_loader(f) if frame_loader is not None else None
        out.extend(tracker.step(f, boxes, confs, image))
    return out

