"""Fixture builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from crowdtrack.metrics import MetricReport, evaluate_tracking
from crowdtrack.motdata import BoundingBox, Trajectory
from crowdtrack.synthgen import (
    CorruptionSpec,
    FrameRenderer,
    ScenarioSpec,
    corrupt,
    generate_ground_truth,
)
from crowdtrack.tracker import TrackerConfig, track_sequence
from crowdtrack.motdata import group_trajectories

BOX_W = BOX_H = 20.0


def path_track(tid: int, frames, xs, y: float = 50.0) -> Trajectory:
    """Boxes of fixed size centred on ``(x, y)`` for each frame."""
    boxes = tuple(BoundingBox.from_center(float(x), y, BOX_W, BOX_H) for x in xs)
    return Trajectory(tid, tuple(int(f) for f in frames), boxes)


def split(track: Trajectory, pieces: dict[int, list[int]]) -> dict[int, Trajectory]:
    """Hypotheses copying ``track`` exactly, one id per frame list."""
    out = {}
    for hid, frames in pieces.items():
        keep = [i for i, f in enumerate(track.frames) if f in set(frames)]
        out[hid] = Trajectory(hid, tuple(track.frames[i] for i in keep),
                              tuple(track.boxes[i] for i in keep))
    return out


def constant_speed_split():
    """One 300-frame track at 2 px/frame; hypothesis 1 covers 1-150, hypothesis 2 covers 151-300."""
    frames = np.arange(1, 301)
    gt = {1: path_track(1, frames, 2.0 * (frames - 1))}
    hyp = split(gt[1], {1: list(frames[:150]), 2: list(frames[150:])})
    return gt, hyp


def decelerating_split():
    """A path whose first half covers two thirds of the distance.

    Returns ground truth plus two trackers with equal identity counts: one
    that keeps the identity through the fast first half and fragments the
    slow second half, and one that does the opposite.
    """
    frames = np.arange(1, 301)
    speeds = [2.0] * 150 + [148.5 / 149] * 149
    xs = np.concatenate([[0.0], np.cumsum(speeds)])
    gt = {1: path_track(1, frames, xs)}
    f = list(frames)
    early = split(gt[1], {1: f[:150], 2: f[150:200], 3: f[200:250], 4: f[250:]})
    late = split(gt[1], {1: f[:50], 2: f[50:100], 3: f[100:150], 4: f[150:]})
    return gt, early, late


def noisy_benchmark(seed: int, profile: str = "constant_velocity", **config) -> MetricReport:
    """Track a rendered 20-track sequence with fn_rate 0.1 and 2 px jitter, then evaluate."""
    spec = ScenarioSpec(profile=profile, seed=seed)
    gt, info = generate_ground_truth(spec)
    dets = corrupt(gt, CorruptionSpec(fn_rate=0.1, jitter_std=2.0, seed=seed + 1),
                   (info.width, info.height))
    renderer = FrameRenderer(gt, info.width, info.height, shape="disc")
    rows = track_sequence(dets, info.frame_count, TrackerConfig(**config).validate(), seed=0,
                          image_size=(info.width, info.height), frame_loader=renderer)
    hyp, _ = group_trajectories(rows)
    return evaluate_tracking(gt, hyp)
