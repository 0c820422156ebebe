"""Heuristics that point annotators at likely identity errors in ground truth.

Both checks are one-sided: they flag suspicious tracks but make no claim to
find every fragmentation or switch.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .motdata import SequenceInfo, Trajectory

logger = logging.getLogger(__name__)

__all__ = ["QaFlag", "detect_displacement_outliers", "detect_fragmentation", "write_flags"]

# steps this close to the limit are float noise on constant-speed tracks
STEP_TOL = 1e-9
# annotations are usually rounded to the pixel grid, so smaller excesses are noise
MIN_EXCESS = 0.5

FRAGMENTATION = "fragmentation_suspect"
ID_SWITCH = "id_switch_suspect"


@dataclass(frozen=True)
class QaFlag:
    track_id: int
    frame: int
    kind: str
    detail: str


def detect_fragmentation(trajectories: Mapping[int, Trajectory], info: SequenceInfo,
                         boundary_margin: float = 20.0, tail_frames: int = 10) -> list[QaFlag]:
    """Flag tracks that stop in the open before the end of the sequence.

    A track is flagged when its last box centre is more than
    ``boundary_margin`` pixels from every image edge and its last frame comes
    before ``frame_count - tail_frames``.
    """
    flags = []
    for tid in sorted(trajectories):
        t = trajectories[tid]
        if len(t) == 0:
            continue
        last = t.frames[-1]
        cx, cy = t.boxes[-1].center
        edge = min(cx, cy, info.width - cx, info.height - cy)
        if edge > boundary_margin and last < info.frame_count - tail_frames:
            flags.append(QaFlag(tid, last, FRAGMENTATION,
                                f"ends at ({cx:.1f}, {cy:.1f}), {edge:.1f}px from the nearest edge"))
    return flags


def detect_displacement_outliers(trajectories: Mapping[int, Trajectory],
                                 min_excess: float = MIN_EXCESS) -> list[QaFlag]:
    """Flag frames whose centre displacement exceeds the track's mean plus two std.

    Statistics are per track over its whole life; a step is attributed to the
    frame it arrives at. Tracks with fewer than three frames are skipped. A
    step must also beat the mean by ``min_excess`` pixels, which keeps
    rounding jitter on near-constant tracks from being flagged.
    """
    flags = []
    for tid in sorted(trajectories):
        t = trajectories[tid]
        if len(t) < 3:
            logger.info("qa: track %d has %d frame(s); displacement check skipped", tid, len(t))
            continue
        steps = np.linalg.norm(np.diff(t.centers(), axis=0), axis=1)
        mu, sigma = float(steps.mean()), float(steps.std())
        limit = mu + max(2.0 * sigma, min_excess)
        for k in np.flatnonzero(steps > limit + STEP_TOL * max(1.0, mu)):
            flags.append(QaFlag(tid, t.frames[k + 1], ID_SWITCH,
                                f"step {steps[k]:.2f}px > mean {mu:.2f} + 2*std {sigma:.2f}"))
    return flags


def write_flags(flags: Iterable[QaFlag], path: str | Path | None = None, stream=None) -> None:
    """CSV with header ``track_id,frame,kind,detail`` to ``path`` or ``stream``."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["track_id", "frame", "kind", "detail"])
        for f in flags:
            w.writerow([f.track_id, f.frame, f.kind, f.detail])

    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
    else:
        emit(stream)
