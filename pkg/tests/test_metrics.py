from __future__ import annotations

import numpy as np
import pytest

from crowdtrack.metrics import (
    COCO_THRESHOLDS,
    MetricReport,
    average_precision,
    clear_mot,
    detection_gt,
    detection_metrics,
    evaluate_detections,
    evaluate_tracking,
    id_metrics,
    ideucl,
    ideucl_details,
    map_coco,
    mt_ml,
    suppress_ignored,
)
from crowdtrack.motdata import AnnotationEntry, BoundingBox, ObjectClass, Trajectory
from helpers import constant_speed_split, decelerating_split, path_track, split


def scaled(trajs: dict[int, Trajectory], c: float) -> dict[int, Trajectory]:
    return {k: Trajectory(k, t.frames, tuple(b.scaled(c) for b in t.boxes)) for k, t in trajs.items()}


def relabeled(trajs: dict[int, Trajectory], mapping: dict[int, int]) -> dict[int, Trajectory]:
    return {mapping[k]: Trajectory(mapping[k], t.frames, t.boxes) for k, t in trajs.items()}


def two_tracks():
    frames = np.arange(1, 41)
    return {
        1: path_track(1, frames, 3.0 * frames, y=40.0),
        2: path_track(2, frames[5:], 300.0 - 2.0 * frames[5:], y=120.0),
    }


class TestIdeucl:
    def test_perfect(self):
        gt = two_tracks()
        assert ideucl(gt, gt) == pytest.approx(1.0, abs=1e-12)

    def test_constant_speed_split_is_half(self):
        gt, hyp = constant_speed_split()
        assert ideucl(gt, hyp) == pytest.approx(0.5, abs=1e-9)

    def test_decelerating_split_brute_force_value(self):
        gt, early, late = decelerating_split()
        # arc-length by hand: the longest single-identity piece of "early"
        # is frames 1..150 plus half the step into frame 151
        c = gt[1].centers()[:, 0]
        steps = np.diff(c)
        expected_early = (steps[:149].sum() + steps[149] / 2) / steps.sum()
        expected_late = (steps[150:].sum() + steps[149] / 2) / steps.sum()
        assert ideucl(gt, early) == pytest.approx(expected_early, abs=1e-12)
        assert ideucl(gt, late) == pytest.approx(expected_late, abs=1e-12)
        assert ideucl(gt, early) == pytest.approx(2 / 3, abs=1e-3)

    def test_empty_cases(self):
        gt = two_tracks()
        assert ideucl({}, {}) == 1.0
        assert ideucl({}, gt) == 0.0
        assert ideucl(gt, {}) == 0.0

    def test_unmatched_gt_counts_in_denominator(self):
        gt = two_tracks()
        only_first = {1: gt[1]}
        expected = gt[1].path_length() / (gt[1].path_length() + gt[2].path_length())
        assert ideucl(gt, only_first) == pytest.approx(expected)

    def test_static_tracks_fall_back_to_frames(self):
        frames = np.arange(1, 11)
        gt = {1: path_track(1, frames, np.full(10, 30.0))}
        half = split(gt[1], {5: list(frames[:5])})
        res = ideucl_details(gt, half)
        assert res.fallback
        assert res.score == pytest.approx(0.5)
        assert ideucl(gt, gt) == 1.0

    def test_per_track_detail(self):
        gt, hyp = constant_speed_split()
        res = ideucl_details(gt, hyp)
        assert res.matches == {1: 1}
        covered, total = res.per_track[1]
        assert total == pytest.approx(598.0)
        assert covered == pytest.approx(299.0)

    def test_scale_invariance(self):
        gt, early, _ = decelerating_split()
        assert ideucl(scaled(gt, 2.5), scaled(early, 2.5)) == pytest.approx(ideucl(gt, early), abs=1e-12)

    def test_relabel_invariance(self):
        gt, early, _ = decelerating_split()
        assert ideucl(gt, relabeled(early, {1: 40, 2: 7, 3: 12, 4: 1})) == pytest.approx(ideucl(gt, early))

    def test_threshold_is_strict(self):
        frames = (1, 2, 3, 4, 5)
        gt = {1: Trajectory(1, frames, tuple(BoundingBox(10.0 * f, 0, 30, 10) for f in frames))}
        # overlap 20x10 over union 40x10: IoU exactly 0.5
        shifted = {9: Trajectory(9, frames, tuple(b.translated(10.0, 0) for b in gt[1].boxes))}
        assert ideucl(gt, shifted, iou_threshold=0.5) == 0.0
        assert ideucl(gt, shifted, iou_threshold=0.49) == pytest.approx(1.0)


class TestIdMetrics:
    def test_perfect(self):
        gt = two_tracks()
        idf1, _, _, _, idfp, idfn = id_metrics(gt, gt)
        assert (idf1, idfp, idfn) == (1.0, 0, 0)

    def test_split_is_half(self):
        gt, hyp = constant_speed_split()
        assert id_metrics(gt, hyp)[0] == pytest.approx(0.5)

    def test_empty_hypothesis(self):
        gt = two_tracks()
        idf1, _, _, _, _, idfn = id_metrics(gt, {})
        assert idf1 == 0.0
        assert idfn == sum(len(t) for t in gt.values())

    def test_decelerating_trackers_tie(self):
        gt, early, late = decelerating_split()
        assert id_metrics(gt, early)[0] == pytest.approx(id_metrics(gt, late)[0], abs=1e-12)

    def test_formula(self):
        gt, _, late = decelerating_split()
        idf1, _, _, idtp, idfp, idfn = id_metrics(gt, late)
        assert idf1 == pytest.approx(2 * idtp / (2 * idtp + idfp + idfn))


class TestClear:
    def test_identity(self):
        gt = two_tracks()
        assert clear_mot(gt, gt) == (1.0, 1.0, 0, 0, 0, 0)

    def test_miss_and_spurious(self):
        frames = np.arange(1, 11)
        gt = {1: path_track(1, frames, 5.0 * frames)}
        keep = list(frames[:9])
        hyp = split(gt[1], {1: keep})
        hyp[2] = path_track(2, [10], [400.0], y=300.0)
        mota, _, fp, fn, idsw, _ = clear_mot(gt, hyp)
        assert (fp, fn, idsw) == (1, 1, 0)
        assert mota == pytest.approx(0.8)

    def test_split_has_one_switch(self):
        gt, hyp = constant_speed_split()
        assert clear_mot(gt, hyp)[4] == 1

    def test_carry_over_keeps_existing_match(self):
        # hypothesis 2 overlaps better at frame 2 but hypothesis 1 still clears the threshold
        gt = {1: Trajectory(1, (1, 2), (BoundingBox(0, 0, 10, 10), BoundingBox(0, 0, 10, 10)))}
        hyp = {
            1: Trajectory(1, (1, 2), (BoundingBox(0, 0, 10, 10), BoundingBox(2, 0, 10, 10))),
            2: Trajectory(2, (2,), (BoundingBox(0, 0, 10, 10),)),
        }
        _, _, fp, _, idsw, _ = clear_mot(gt, hyp)
        assert idsw == 0 and fp == 1

    def test_fragmentation_counted(self):
        frames = np.arange(1, 21)
        gt = {1: path_track(1, frames, 4.0 * frames)}
        hyp = split(gt[1], {1: list(frames[:8]) + list(frames[12:])})
        _, _, _, fn, idsw, frag = clear_mot(gt, hyp)
        assert (frag, idsw, fn) == (1, 0, 4)

    def test_mota_identity_from_counts(self):
        gt, _, late = decelerating_split()
        mota, _, fp, fn, idsw, _ = clear_mot(gt, late)
        assert mota == 1 - (fp + fn + idsw) / len(gt[1])


class TestMtMl:
    @pytest.mark.parametrize("covered, expected", [(100, (1, 0, 0)), (10, (0, 1, 0)), (50, (0, 0, 1))])
    def test_buckets(self, covered, expected):
        frames = np.arange(1, 101)
        gt = {1: path_track(1, frames, 2.0 * frames)}
        hyp = split(gt[1], {1: list(frames[:covered])})
        assert mt_ml(gt, hyp) == expected


class TestReport:
    def test_combine_sums_counts(self):
        gt = two_tracks()
        a = evaluate_tracking(gt, gt, name="a")
        g2, h2 = constant_speed_split()
        b = evaluate_tracking(g2, h2, name="b")
        both = MetricReport.combine([a, b])
        assert both.fp == a.fp + b.fp and both.id_switches == a.id_switches + b.id_switches
        assert both.ideucl == pytest.approx(
            (a.ideucl_covered + b.ideucl_covered) / (a.ideucl_total + b.ideucl_total))
        assert both.idf1 == pytest.approx(2 * both.idtp / (2 * both.idtp + both.idfp + both.idfn))

    def test_summary_keys(self):
        gt = two_tracks()
        keys = list(evaluate_tracking(gt, gt).summary())
        assert keys == ["IDEucl", "IDF1", "IDP", "IDR", "MOTA", "MOTP", "IDSW", "Frag", "FP", "FN",
                        "MT", "ML", "PT"]

    def test_suppress_ignored(self):
        hyp = [AnnotationEntry(1, 1, BoundingBox(0, 0, 10, 10)), AnnotationEntry(1, 2, BoundingBox(50, 50, 10, 10))]
        ignore = [AnnotationEntry(1, 9, BoundingBox(1, 0, 10, 10), cls=ObjectClass.IGNORE)]
        assert [e.id for e in suppress_ignored(hyp, ignore, 0.4)] == [2]


def boxes(frame_boxes, conf=1.0, ident=1):
    return [AnnotationEntry(f, ident, b, conf) for f, b in frame_boxes]


def ten_gt():
    return boxes([(f, BoundingBox(10 * f, 0, 10, 10)) for f in range(1, 11)])


class TestDetection:
    def test_perfect(self):
        gt = ten_gt()
        r = evaluate_detections(gt, gt)
        assert (r.precision, r.recall, r.f1, r.moda, r.modp, r.ap, r.map_coco) == (1, 1, 1, 1, 1, 1, 1)

    def test_one_extra_detection(self):
        gt = ten_gt()
        dets = gt + boxes([(1, BoundingBox(500, 500, 10, 10))])
        assert detection_metrics(gt, dets).moda == pytest.approx(0.9)

    def test_below_confidence_gives_zero_recall(self):
        gt = ten_gt()
        r = detection_metrics(gt, boxes([(e.frame, e.box) for e in gt], conf=0.3), conf_threshold=0.5)
        assert r.recall == 0.0

    def test_no_ground_truth(self):
        with pytest.raises(ValueError):
            detection_metrics([], ten_gt())

    def test_ap_zero_detections(self):
        assert average_precision(ten_gt(), []) == 0.0
        assert map_coco(ten_gt(), []) == 0.0

    def test_ap_half_detected(self):
        gt = ten_gt()
        assert average_precision(gt, boxes([(e.frame, e.box) for e in gt[:5]], conf=0.9)) == pytest.approx(0.5)

    def test_map_coco_counts_only_lower_thresholds(self):
        gt = ten_gt()
        # a horizontal shift of w/4 gives IoU 0.6 exactly
        shifted = boxes([(e.frame, e.box.translated(2.5, 0)) for e in gt])
        assert len(COCO_THRESHOLDS) == 10
        low = average_precision(gt, shifted, 0.5)
        assert low == pytest.approx(1.0)
        assert map_coco(gt, shifted) == pytest.approx(2 / 10 * low)
        assert map_coco(gt, shifted) <= average_precision(gt, shifted, 0.5)

    def test_f1_formula(self):
        gt = ten_gt()
        dets = [e for e in gt if e.frame % 3] + boxes([(2, BoundingBox(300, 300, 9, 9))])
        r = detection_metrics(gt, dets)
        assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))

    def test_detection_gt_split(self):
        rows = [
            AnnotationEntry(1, 1, BoundingBox(0, 0, 4, 4), cls=ObjectClass.PEDESTRIAN),
            AnnotationEntry(1, 2, BoundingBox(0, 0, 4, 4), cls=ObjectClass.STATIC),
            AnnotationEntry(1, 3, BoundingBox(0, 0, 4, 4), cls=ObjectClass.IGNORE),
            AnnotationEntry(1, 4, BoundingBox(0, 0, 4, 4), cls=ObjectClass.PERSON_ON_VEHICLE),
        ]
        keep, ignore = detection_gt(rows)
        assert [e.id for e in keep] == [1, 2] and [e.id for e in ignore] == [3]
