"""Boxes, annotation rows, trajectories and MOTChallenge-style file I/O.

MOT rows are ``frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility``.
Detection files may omit the last two columns; they are then stored as
``None`` and treated as pedestrians by the tracker.
"""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "AnnotationEntry",
    "BoundingBox",
    "MotFormatError",
    "ObjectClass",
    "SequenceInfo",
    "Trajectory",
    "boxes_to_array",
    "group_trajectories",
    "iou",
    "iou_matrix",
    "parse_mot_file",
    "parse_mot_lines",
    "read_key_values",
    "read_seqinfo",
    "write_key_values",
    "write_mot_file",
    "write_seqinfo",
]


class MotFormatError(ValueError):
    """Malformed MOT file content. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class ObjectClass(IntEnum):
    PEDESTRIAN = 1
    STATIC = 2
    IGNORE = 3
    PERSON_ON_VEHICLE = 4


#: Classes scored by the tracking metrics.
TRACKED_CLASSES = frozenset({ObjectClass.PEDESTRIAN, ObjectClass.STATIC})


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous pixel coordinates (top-left corner + size)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates {vals}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size {vals}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> BoundingBox:
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=float)

    def translated(self, dx: float, dy: float) -> BoundingBox:
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def scaled(self, c: float) -> BoundingBox:
        return BoundingBox(self.x * c, self.y * c, self.w * c, self.h * c)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union. Two zero-area boxes give 0."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        logger.debug("IoU of two zero-area boxes %s, %s defined as 0", a, b)
        return 0.0
    return inter / union


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` xywh arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = (a[:, 2:3] * a[:, 3:4]) + (b[:, 2] * b[:, 3]) - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    return out


def boxes_to_array(boxes: Iterable[BoundingBox]) -> np.ndarray:
    arr = np.array([(b.x, b.y, b.w, b.h) for b in boxes], dtype=float)
    return arr.reshape(-1, 4)


@dataclass(frozen=True)
class AnnotationEntry:
    """One MOT row. ``cls``/``visibility`` are ``None`` when the file omits them."""

    frame: int
    id: int
    box: BoundingBox
    conf: float = 1.0
    cls: ObjectClass | None = ObjectClass.PEDESTRIAN
    visibility: float | None = 1.0

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")

    @property
    def effective_class(self) -> ObjectClass:
        return ObjectClass.PEDESTRIAN if self.cls is None else self.cls


@dataclass(frozen=True)
class Trajectory:
    """One identity over time; frames are strictly increasing."""

    id: int
    frames: tuple[int, ...]
    boxes: tuple[BoundingBox, ...]
    classes: tuple[ObjectClass, ...] = ()
    visibility: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.frames) != len(self.boxes):
            raise ValueError("frames and boxes differ in length")
        if any(b <= a for a, b in zip(self.frames, self.frames[1:])):
            raise ValueError(f"trajectory {self.id}: frames not strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)

    def as_array(self) -> np.ndarray:
        return boxes_to_array(self.boxes)

    def centers(self) -> np.ndarray:
        arr = self.as_array()
        return arr[:, :2] + arr[:, 2:] / 2.0

    def path_length(self) -> float:
        c = self.centers()
        if len(c) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum())

    def box_at(self, frame: int) -> BoundingBox | None:
        i = np.searchsorted(self.frames, frame)
        if i < len(self.frames) and self.frames[i] == frame:
            return self.boxes[i]
        return None

    def to_entries(self) -> list[AnnotationEntry]:
        classes = self.classes or (ObjectClass.PEDESTRIAN,) * len(self)
        vis = self.visibility or (1.0,) * len(self)
        return [
            AnnotationEntry(f, self.id, b, 1.0, c, v)
            for f, b, c, v in zip(self.frames, self.boxes, classes, vis)
        ]


@dataclass(frozen=True)
class SequenceInfo:
    name: str
    frame_count: int
    width: int
    height: int
    fps: float = 25.0
    image_dir: str | None = None
    image_ext: str = ".ppm"

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")


# -- MOT CSV ---------------------------------------------------------------


def _parse_row(line: str, lineno: int) -> AnnotationEntry:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) not in (7, 9, 10):
        raise MotFormatError(f"expected 7 or 9 fields, got {len(parts)}", lineno)
    try:
        frame_f = float(parts[0])
        ident_f = float(parts[1])
        x, y, w, h, conf = (float(p) for p in parts[2:7])
    except ValueError as exc:
        raise MotFormatError(f"non-numeric field ({exc})", lineno) from None
    if frame_f != int(frame_f) or ident_f != int(ident_f):
        raise MotFormatError("frame and id must be integers", lineno)
    frame, ident = int(frame_f), int(ident_f)
    if frame < 1:
        raise MotFormatError("frame index must be ≥ 1", lineno)
    cls: ObjectClass | None = None
    vis: float | None = None
    if len(parts) >= 9:
        try:
            c = int(float(parts[7]))
            vis_raw = float(parts[8])
        except ValueError:
            raise MotFormatError("non-numeric class/visibility", lineno) from None
        if c != -1:
            try:
                cls = ObjectClass(c)
            except ValueError:
                raise MotFormatError(f"unknown class {c}", lineno) from None
        vis = None if vis_raw == -1 else vis_raw
    try:
        box = BoundingBox(x, y, w, h)
    except ValueError as exc:
        raise MotFormatError(str(exc), lineno) from None
    return AnnotationEntry(frame, ident, box, conf, cls, vis)


def parse_mot_lines(lines: Iterable[str]) -> list[AnnotationEntry]:
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        out.append(_parse_row(line, lineno))
    return out


def parse_mot_file(path: str | Path, kind: str = "ground_truth") -> list[AnnotationEntry]:
    """Read a MOT CSV file; entries are returned in file order.

    ``kind`` is one of ``ground_truth``, ``detections`` or ``hypotheses``.
    Ground truth rows must carry class and visibility.
    """
    if kind not in ("ground_truth", "detections", "hypotheses"):
        raise ValueError(f"unknown kind {kind!r}")
    with open(path, encoding="utf-8") as fh:
        entries = parse_mot_lines(fh)
    if kind == "ground_truth":
        for i, e in enumerate(entries):
            if e.cls is None:
                raise MotFormatError(f"ground truth row without class (entry {i + 1})")
    return entries


def _fmt(v: float) -> str:
    # enough digits that synthetic tracks survive a write/read round trip
    return f"{v:.10g}"


def format_mot_row(e: AnnotationEntry) -> str:
    b = e.box
    cls = -1 if e.cls is None else int(e.cls)
    vis = -1 if e.visibility is None else e.visibility
    return ",".join(
        [str(e.frame), str(e.id), _fmt(b.x), _fmt(b.y), _fmt(b.w), _fmt(b.h),
         _fmt(e.conf), str(cls), _fmt(vis)]
    )


def write_mot_file(entries: Iterable[AnnotationEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(format_mot_row(e))
            fh.write("\n")


# -- grouping ---------------------------------------------------------------


def group_trajectories(
    entries: Sequence[AnnotationEntry],
    class_filter: Iterable[ObjectClass] = TRACKED_CLASSES,
) -> tuple[dict[int, Trajectory], list[AnnotationEntry]]:
    """Split entries into per-id trajectories and a list of ignore regions.

    Entries of class ``IGNORE`` go to the ignore list regardless of
    ``class_filter``; other classes outside the filter are dropped.
    Entries without a class count as pedestrians.
    """
    keep = set(class_filter)
    per_id: dict[int, dict[int, AnnotationEntry]] = {}
    ignored: list[AnnotationEntry] = []
    for e in entries:
        cls = e.effective_class
        if cls == ObjectClass.IGNORE:
            ignored.append(e)
            continue
        if cls not in keep:
            continue
        frames = per_id.setdefault(e.id, {})
        if e.frame in frames:
            raise ValueError(f"duplicate entry for frame={e.frame}, id={e.id}")
        frames[e.frame] = e
    trajectories = {}
    for ident in sorted(per_id):
        rows = [per_id[ident][f] for f in sorted(per_id[ident])]
        trajectories[ident] = Trajectory(
            ident,
            tuple(r.frame for r in rows),
            tuple(r.box for r in rows),
            tuple(r.effective_class for r in rows),
            tuple(1.0 if r.visibility is None else r.visibility for r in rows),
        )
    return trajectories, ignored


def trajectories_to_entries(trajectories: dict[int, Trajectory]) -> list[AnnotationEntry]:
    """Flatten trajectories into frame-major, id-minor order."""
    rows = [e for t in trajectories.values() for e in t.to_entries()]
    rows.sort(key=lambda e: (e.frame, e.id))
    return rows


# -- key=value and seqinfo files --------------------------------------------


def read_key_values(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, ``[section]`` lines are skipped."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise MotFormatError(f"expected key=value, got {line!r}", lineno)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_key_values(values: dict[str, object], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in values.items():
            fh.write(f"{k}={v}\n")


def read_seqinfo(path: str | Path) -> SequenceInfo:
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[Sequence]\n" + text
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    sec = cp[cp.sections()[0]]
    try:
        return SequenceInfo(
            name=sec.get("name", Path(path).parent.name),
            frame_count=int(sec["seqLength"]),
            width=int(sec["imWidth"]),
            height=int(sec["imHeight"]),
            fps=float(sec.get("frameRate", 25)),
            image_dir=sec.get("imDir"),
            image_ext=sec.get("imExt", ".ppm"),
        )
    except KeyError as exc:
        raise MotFormatError(f"seqinfo missing key {exc.args[0]}") from None


def write_seqinfo(info: SequenceInfo, path: str | Path) -> None:
    lines = [
        "[Sequence]",
        f"name={info.name}",
        f"imDir={info.image_dir or 'img1'}",
        f"frameRate={info.fps:g}",
        f"seqLength={info.frame_count}",
        f"imWidth={info.width}",
        f"imHeight={info.height}",
        f"imExt={info.image_ext}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
