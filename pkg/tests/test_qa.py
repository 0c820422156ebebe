from __future__ import annotations

import io

import numpy as np

from crowdtrack.motdata import BoundingBox, SequenceInfo, Trajectory
from crowdtrack.qa import detect_displacement_outliers, detect_fragmentation, write_flags

INFO = SequenceInfo("qa", 100, 200, 200)


def track(tid, centres, start=1):
    boxes = tuple(BoundingBox.from_center(float(x), float(y), 10, 10) for x, y in centres)
    return Trajectory(tid, tuple(range(start, start + len(boxes))), boxes)


def line(n, x0=100.0, y0=100.0, dx=1.0, dy=0.0):
    return [(x0 + dx * k, y0 + dy * k) for k in range(n)]


class TestFragmentation:
    def test_ends_in_centre(self):
        flags = detect_fragmentation({1: track(1, line(40))}, INFO)
        assert [(f.track_id, f.frame, f.kind) for f in flags] == [(1, 40, "fragmentation_suspect")]

    def test_ends_near_edge(self):
        t = track(1, line(40, x0=150.0, dx=1.0))  # last centre x = 189, 11 px from the edge
        assert detect_fragmentation({1: t}, INFO) == []

    def test_ends_in_tail(self):
        assert detect_fragmentation({1: track(1, line(95, dx=0.5))}, INFO) == []
        assert len(detect_fragmentation({1: track(1, line(89, dx=0.5))}, INFO)) == 1

    def test_margin_parameter(self):
        t = track(1, line(40, x0=150.0))
        assert len(detect_fragmentation({1: t}, INFO, boundary_margin=5.0)) == 1


class TestDisplacement:
    def test_constant_velocity_clean(self):
        tracks = {1: track(1, line(50, dx=1.3, dy=0.7)), 2: track(2, line(30, dx=0.1))}
        assert detect_displacement_outliers(tracks) == []

    def test_jump_flagged(self):
        pts = line(60, x0=10.0)
        pts = pts[:30] + [(x + 50.0, y) for x, y in pts[30:]]
        flags = detect_displacement_outliers({4: track(4, pts, start=11)})
        assert [(f.track_id, f.frame) for f in flags] == [(4, 41)]
        assert flags[0].kind == "id_switch_suspect"

    def test_short_track_skipped(self):
        assert detect_displacement_outliers({1: track(1, [(0, 0), (90, 90)])}) == []

    def test_random_walk_rarely_flags(self):
        rng = np.random.default_rng(0)
        pts = np.cumsum(rng.normal(0, 1, (200, 2)), axis=0) + 100
        flags = detect_displacement_outliers({1: track(1, pts)})
        assert len(flags) < 0.1 * 200


def test_csv_output(tmp_path):
    flags = detect_fragmentation({1: track(1, line(40))}, INFO)
    buf = io.StringIO()
    write_flags(flags, stream=buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "track_id,frame,kind,detail"
    assert lines[1].startswith("1,40,fragmentation_suspect,")
    path = tmp_path / "flags.csv"
    write_flags([], path)
    assert path.read_text() == "track_id,frame,kind,detail\n"
