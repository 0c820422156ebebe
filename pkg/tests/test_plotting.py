from __future__ import annotations

import numpy as np

from crowdtrack.metrics import ideucl_details
from crowdtrack.motdata import SequenceInfo
from crowdtrack.plotting import plot_ideucl_coverage, plot_precision_recall, plot_trajectories

from helpers import constant_speed_split

PNG = b"\x89PNG\r\n\x1a\n"


def test_coverage_plot(tmp_path):
    gt, hyp = constant_speed_split()
    path = plot_ideucl_coverage(ideucl_details(gt, hyp), tmp_path / "deep" / "cov.png", title="split")
    assert path.read_bytes()[:8] == PNG


def test_trajectory_plot_with_and_without_info(tmp_path):
    gt, hyp = constant_speed_split()
    a = plot_trajectories(gt, hyp, tmp_path / "a.png")
    b = plot_trajectories(gt, hyp, tmp_path / "b.png", SequenceInfo("s", 300, 700, 100))
    assert a.read_bytes()[:8] == PNG and b.read_bytes()[:8] == PNG


def test_trajectory_plot_empty_hypotheses(tmp_path):
    gt, _ = constant_speed_split()
    assert plot_trajectories(gt, {}, tmp_path / "e.png").is_file()


def test_precision_recall_plot(tmp_path):
    recall = np.linspace(0.1, 1.0, 10)
    precision = np.linspace(1.0, 0.6, 10)
    assert plot_precision_recall(precision, recall, tmp_path / "pr.png", ap=0.8).read_bytes()[:8] == PNG
