"""Deterministic synthetic sequences: ground truth, noisy detections, frames.

Everything here is a pure function of its spec and seed, so fixtures built
from it can be regenerated bit-for-bit.
"""

from __future__ import annotations

import colorsys
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .frames import write_ppm
from .motdata import (
    AnnotationEntry,
    BoundingBox,
    ObjectClass,
    SequenceInfo,
    Trajectory,
    iou,
)

__all__ = [
    "PROFILES",
    "CorruptionSpec",
    "FrameRenderer",
    "ScenarioSpec",
    "corrupt",
    "default_palette",
    "generate_ground_truth",
    "relabel_segments",
    "render_frame",
    "render_frames",
    "trajectory_from_steps",
]

PROFILES = ("constant_velocity", "decelerating", "random_walk", "curved")
CONF_MODELS = ("iou", "constant")
RANDOM_WALK_TURN_STD = 0.3  # radians per frame
BACKGROUND = (128, 128, 128)


def _parse_pair(raw: str) -> tuple[float, float]:
    lo, _, hi = str(raw).partition(",")
    return (float(lo), float(hi or lo))


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a synthetic scene.

    Speeds are in pixels per frame; the default range corresponds to roughly
    35-105 px/s at 25 fps, typical of pedestrian heads in dense footage.
    ``turn_rate_range`` (absolute radians per frame) only affects the
    ``curved`` profile, where each track turns at a constant drawn rate.
    """

    n_tracks: int = 20
    frame_count: int = 300
    width: int = 640
    height: int = 480
    profile: str = "constant_velocity"
    speed_range: tuple[float, float] = (1.4, 4.2)
    box_size_range: tuple[float, float] = (20.0, 40.0)
    turn_rate_range: tuple[float, float] = (0.04, 0.10)
    seed: int = 0
    name: str = "synthetic"

    def validate(self) -> ScenarioSpec:
        if self.n_tracks < 1 or self.frame_count < 1:
            raise ValueError("n_tracks and frame_count must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown motion profile {self.profile!r}; choose from {PROFILES}")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise ValueError(f"bad speed range {self.speed_range}")
        lo, hi = self.box_size_range
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad box size range {self.box_size_range}")
        if hi > min(self.width, self.height):
            raise ValueError(f"boxes up to {hi}px do not fit a {self.width}x{self.height} image")
        lo, hi = self.turn_rate_range
        if lo < 0 or hi < lo:
            raise ValueError(f"bad turn rate range {self.turn_rate_range}")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> ScenarioSpec:
        kw: dict[str, object] = {}
        for key, raw in values.items():
            if key in ("n_tracks", "frame_count", "width", "height", "seed"):
                kw[key] = int(raw)
            elif key in ("speed_range", "box_size_range", "turn_rate_range"):
                kw[key] = _parse_pair(raw)
            elif key in ("profile", "name"):
                kw[key] = str(raw)
            else:
                raise ValueError(f"unknown scenario key {key!r}")
        return cls(**kw).validate()

    def to_mapping(self) -> dict[str, str]:
        out = {}
        for k, v in dataclasses.asdict(self).items():
            out[k] = ",".join(f"{x:g}" for x in v) if isinstance(v, tuple) else str(v)
        return out

    @property
    def info(self) -> SequenceInfo:
        return SequenceInfo(self.name, self.frame_count, self.width, self.height, image_dir="img1")


@dataclass(frozen=True)
class CorruptionSpec:
    """Detection noise.

    ``conf_model="iou"`` scores each detection ``0.5 + 0.5 * IoU(jittered, true)``
    so heavier jitter means lower confidence; ``"constant"`` gives 1.0.
    False positives get uniform confidences.
    """

    fn_rate: float = 0.0
    fp_rate: float = 0.0
    jitter_std: float = 0.0
    conf_model: str = "iou"
    seed: int = 0

    def validate(self) -> CorruptionSpec:
        for name in ("fn_rate", "fp_rate"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0 and not (name == "fn_rate" and v == 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.jitter_std < 0:
            raise ValueError("jitter_std must be >= 0")
        if self.conf_model not in CONF_MODELS:
            raise ValueError(f"unknown conf_model {self.conf_model!r}")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> CorruptionSpec:
        kw: dict[str, object] = {}
        for key, raw in values.items():
            if key in ("fn_rate", "fp_rate", "jitter_std"):
                kw[key] = float(raw)
            elif key == "seed":
                kw[key] = int(raw)
            elif key == "conf_model":
                kw[key] = str(raw)
            else:
                raise ValueError(f"unknown corruption key {key!r}")
        return cls(**kw).validate()

    def to_mapping(self) -> dict[str, str]:
        return {k: f"{v:g}" if isinstance(v, float) else str(v) for k, v in dataclasses.asdict(self).items()}


# -- ground truth ------------------------------------------------------------------


def _step_vectors(spec: ScenarioSpec, rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """Per-step (dx, dy) for one track according to the motion profile."""
    speed = rng.uniform(*spec.speed_range)
    heading = rng.uniform(0.0, 2 * math.pi)
    k = np.arange(n_steps, dtype=float)
    if spec.profile == "constant_velocity":
        speeds = np.full(n_steps, speed)
        headings = np.full(n_steps, heading)
    elif spec.profile == "decelerating":
        # linear ramp from the drawn speed down towards zero at the last frame
        speeds = speed * (1.0 - k / max(n_steps, 1))
        headings = np.full(n_steps, heading)
    elif spec.profile == "random_walk":
        speeds = np.full(n_steps, speed)
        headings = heading + np.cumsum(rng.normal(0.0, RANDOM_WALK_TURN_STD, n_steps))
    else:  # curved
        turn = rng.uniform(*spec.turn_rate_range) * rng.choice([-1.0, 1.0])
        speeds = np.full(n_steps, speed)
        headings = heading + turn * k
    return np.column_stack([speeds * np.cos(headings), speeds * np.sin(headings)])


def trajectory_from_steps(track_id: int, start_frame: int, start_box: BoundingBox,
                          steps: np.ndarray) -> Trajectory:
    """Translate ``start_box`` by each row of ``steps`` (cumulatively), one frame each."""
    steps = np.asarray(steps, dtype=float).reshape(-1, 2)
    offsets = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
    boxes = tuple(start_box.translated(float(dx), float(dy)) for dx, dy in offsets)
    frames = tuple(range(start_frame, start_frame + len(boxes)))
    return Trajectory(track_id, frames, boxes, (ObjectClass.PEDESTRIAN,) * len(boxes), (1.0,) * len(boxes))


def _inside(box: BoundingBox, width: int, height: int) -> bool:
    return box.x >= 0 and box.y >= 0 and box.x + box.w <= width and box.y + box.h <= height


def generate_ground_truth(spec: ScenarioSpec) -> tuple[dict[int, Trajectory], SequenceInfo]:
    """Tracks all start at frame 1 and end when their box would leave the image."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    tracks: dict[int, Trajectory] = {}
    for tid in range(1, spec.n_tracks + 1):
        w = float(rng.uniform(*spec.box_size_range))
        h = float(rng.uniform(*spec.box_size_range))
        x = float(rng.uniform(0.0, spec.width - w))
        y = float(rng.uniform(0.0, spec.height - h))
        steps = _step_vectors(spec, rng, spec.frame_count - 1)
        full = trajectory_from_steps(tid, 1, BoundingBox(x, y, w, h), steps)
        n = len(full)
        for i, b in enumerate(full.boxes):
            if not _inside(b, spec.width, spec.height):
                n = i
                break
        n = max(n, 1)  # the start box is always inside
        tracks[tid] = Trajectory(tid, full.frames[:n], full.boxes[:n], full.classes[:n], full.visibility[:n])
    return tracks, spec.info


def relabel_segments(track: Trajectory, cut_frames: Sequence[int], first_id: int = 1) -> dict[int, Trajectory]:
    """Split ``track`` before each frame in ``cut_frames``; segments get consecutive ids.

    Handy for building hypotheses with known identity switches.
    """
    out: dict[int, Trajectory] = {}
    bounds = [track.frames[0]] + sorted(cut_frames) + [track.frames[-1] + 1]
    tid = first_id
    for lo, hi in zip(bounds, bounds[1:]):
        idx = [i for i, f in enumerate(track.frames) if lo <= f < hi]
        if not idx:
            continue
        pick = lambda seq: tuple(seq[i] for i in idx) if seq else ()  # noqa: E731
        out[tid] = Trajectory(tid, pick(track.frames), pick(track.boxes), pick(track.classes), pick(track.visibility))
        tid += 1
    return out


# -- detections --------------------------------------------------------------------


def corrupt(gt: Mapping[int, Trajectory], spec: CorruptionSpec,
            image_size: tuple[int, int] | None = None) -> list[AnnotationEntry]:
    """Noisy detections (id ``-1``) from ground truth, sorted by frame.

    Per frame, GT boxes are visited in id order: each is dropped with
    probability ``fn_rate``, else jittered. Then ``Binomial(n_gt, fp_rate)``
    false positives are drawn uniformly inside the image with GT-like sizes.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    by_frame: dict[int, list[BoundingBox]] = {}
    for tid in sorted(gt):
        for f, b in zip(gt[tid].frames, gt[tid].boxes):
            by_frame.setdefault(f, []).append(b)
    if not by_frame:
        return []
    all_boxes = [b for boxes in by_frame.values() for b in boxes]
    sizes = np.array([[b.w, b.h] for b in all_boxes])
    size_lo, size_hi = sizes.min(axis=0), sizes.max(axis=0)
    if image_size is None:
        image_size = (
            max(b.x + b.w for b in all_boxes),
            max(b.y + b.h for b in all_boxes),
        )
    width, height = image_size

    out: list[AnnotationEntry] = []
    for f in sorted(by_frame):
        boxes = by_frame[f]
        frame_rows = []
        for b in boxes:
            if spec.fn_rate > 0 and rng.random() < spec.fn_rate:
                continue
            if spec.jitter_std > 0:
                dx, dy, dw, dh = rng.normal(0.0, spec.jitter_std, 4)
                nb = BoundingBox(b.x + dx, b.y + dy, max(1.0, b.w + dw), max(1.0, b.h + dh))
            else:
                nb = b
            exact = spec.conf_model == "constant" or nb is b
            conf = 1.0 if exact else min(1.0, 0.5 + 0.5 * iou(nb, b))
            frame_rows.append(AnnotationEntry(f, -1, nb, conf))
        n_fp = int(rng.binomial(len(boxes), spec.fp_rate)) if spec.fp_rate > 0 else 0
        for _ in range(n_fp):
            w, h = rng.uniform(size_lo, size_hi)
            x = rng.uniform(0.0, max(width - w, 0.0))
            y = rng.uniform(0.0, max(height - h, 0.0))
            frame_rows.append(AnnotationEntry(f, -1, BoundingBox(float(x), float(y), float(w), float(h)),
                                              float(rng.random())))
        out.extend(frame_rows)
    return out


# -- rendering ---------------------------------------------------------------------


def default_palette(track_ids: Sequence[int]) -> dict[int, tuple[int, int, int]]:
    """Saturated colours whose hues sit mid-bin in a 16-bin hue histogram.

    The first 16 ids get pairwise distinct hue bins; later ids cycle hues at
    a darker value.
    """
    out = {}
    for k, tid in enumerate(sorted(track_ids)):
        hue = ((k % 16) + 0.5) / 16.0
        value = (7.5 - 2 * ((k // 16) % 3)) / 8.0
        r, g, b = colorsys.hsv_to_rgb(hue, 1.0, value)
        out[tid] = (round(r * 255), round(g * 255), round(b * 255))
    return out


def _span(lo: float, size: float, limit: int) -> tuple[int, int]:
    a = max(0, int(math.ceil(lo - 0.5)))
    b = min(limit, int(math.floor(lo + size - 0.5)) + 1)
    return a, b


def render_frame(boxes: Sequence[tuple[int, BoundingBox]], palette: Mapping[int, tuple[int, int, int]],
                 width: int, height: int, shape: str = "rect",
                 background: tuple[int, int, int] = BACKGROUND) -> np.ndarray:
    """Draw ``(track_id, box)`` pairs in order; later boxes paint over earlier ones."""
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = background
    for tid, b in boxes:
        x0, x1 = _span(b.x, b.w, width)
        y0, y1 = _span(b.y, b.h, height)
        if x1 <= x0 or y1 <= y0:
            continue
        color = palette[tid]
        if shape == "rect":
            img[y0:y1, x0:x1] = color
        elif shape == "disc":
            cx, cy = b.center
            yy, xx = np.mgrid[y0:y1, x0:x1]
            inside = ((xx + 0.5 - cx) / (b.w / 2)) ** 2 + ((yy + 0.5 - cy) / (b.h / 2)) ** 2 <= 1.0
            img[y0:y1, x0:x1][inside] = color
        else:
            raise ValueError(f"unknown shape {shape!r}")
    return img


class FrameRenderer:
    """Callable ``frame -> image`` that renders ground truth on demand."""

    def __init__(self, gt: Mapping[int, Trajectory], width: int, height: int,
                 palette: Mapping[int, tuple[int, int, int]] | None = None, shape: str = "rect"):
        self.width, self.height, self.shape = width, height, shape
        self.palette = dict(palette) if palette is not None else default_palette(list(gt))
        self.by_frame: dict[int, list[tuple[int, BoundingBox]]] = {}
        for tid in sorted(gt):
            for f, b in zip(gt[tid].frames, gt[tid].boxes):
                self.by_frame.setdefault(f, []).append((tid, b))

    def __call__(self, frame: int) -> np.ndarray:
        return render_frame(self.by_frame.get(frame, []), self.palette, self.width, self.height, self.shape)


def render_frames(gt: Mapping[int, Trajectory], info: SequenceInfo, out_dir: str | Path,
                  palette: Mapping[int, tuple[int, int, int]] | None = None,
                  shape: str = "rect") -> list[Path]:
    """Write ``%06d.ppm`` for frames ``1..frame_count`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderer = FrameRenderer(gt, info.width, info.height, palette, shape)
    paths = []
    for f in range(1, info.frame_count + 1):
        p = out_dir / f"{f:06d}.ppm"
        write_ppm(p, renderer(f))
        paths.append(p)
    return paths
