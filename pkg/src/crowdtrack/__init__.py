"""Head tracking in dense crowds, with IDEucl and MOT metrics.

Submodules:
    motdata: boxes, trajectories, MOT CSV and seqinfo I/O.
    assignment: rectangular Hungarian solver.
    metrics: IDEucl, IDF1, CLEAR MOT, MT/ML and detection scores.
    appearance: HSV histograms and Bhattacharyya distance.
    tracker: particle-filter head tracker with re-identification.
    synthgen: synthetic ground truth, detections and frames.
    qa: ground-truth sanity heuristics.
    cli: the ``crowdtrack`` command.
"""

from .metrics import MetricReport, evaluate_tracking, ideucl
from .motdata import BoundingBox, Trajectory, group_trajectories, parse_mot_file
from .tracker import HeadTracker, TrackerConfig, track_sequence

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "HeadTracker",
    "MetricReport",
    "Trajectory",
    "TrackerConfig",
    "evaluate_tracking",
    "group_trajectories",
    "ideucl",
    "parse_mot_file",
    "track_sequence",
]
