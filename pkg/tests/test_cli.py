from __future__ import annotations

import numpy as np
import pytest

from crowdtrack.cli import EXIT_CONFIG, EXIT_INPUT, EXIT_OK, main
from crowdtrack.motdata import (
    SequenceInfo,
    group_trajectories,
    parse_mot_file,
    read_key_values,
    trajectories_to_entries,
    write_mot_file,
    write_seqinfo,
)

from helpers import constant_speed_split, decelerating_split


def table(out: str) -> dict[str, dict[str, str]]:
    lines = out.strip().splitlines()
    header = lines[0].split()
    return {cells[0]: dict(zip(header[1:], cells[1:])) for cells in (ln.split() for ln in lines[1:])}


def write_tracks(tracks, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mot_file(trajectories_to_entries(tracks), path)
    return path


@pytest.fixture
def split_files(tmp_path):
    gt, hyp = constant_speed_split()
    return write_tracks(gt, tmp_path / "gt.txt"), write_tracks(hyp, tmp_path / "hyp.txt")


@pytest.fixture
def synth_seq(tmp_path):
    out = tmp_path / "seq"
    code = main(["synth", str(out), "--seed", "3", "--n-tracks", "6", "--frames", "60",
                 "--fn-rate", "0.1", "--jitter", "1.0", "--render"])
    assert code == EXIT_OK
    return out


class TestEvaluate:
    def test_self_evaluation(self, split_files, capsys):
        gt, _ = split_files
        assert main(["evaluate", str(gt), str(gt)]) == EXIT_OK
        row = table(capsys.readouterr().out)["gt"]
        for k in ("IDEucl", "IDF1", "MOTA", "MOTP"):
            assert row[k] == "100.0"
        assert row["IDSW"] == row["FP"] == row["FN"] == "0"

    def test_split_fixture(self, split_files, capsys, tmp_path):
        gt, hyp = split_files
        out = tmp_path / "m.txt"
        assert main(["evaluate", str(gt), str(hyp), "--out", str(out)]) == EXIT_OK
        row = table(capsys.readouterr().out)["gt"]
        assert row["IDEucl"] == "50.0" and row["IDF1"] == "50.0" and row["IDSW"] == "1"
        kv = read_key_values(out)
        assert float(kv["IDEucl"]) == pytest.approx(0.5, abs=1e-6)
        assert kv["IDSW"] == "1"

    def test_decelerating_pair(self, tmp_path, capsys):
        gt, early, late = decelerating_split()
        g = write_tracks(gt, tmp_path / "gt.txt")
        scores = {}
        for name, hyp in (("early", early), ("late", late)):
            out = tmp_path / f"{name}.kv"
            main(["evaluate", str(g), str(write_tracks(hyp, tmp_path / f"{name}.txt")), "--out", str(out)])
            scores[name] = read_key_values(out)
        assert float(scores["early"]["IDEucl"]) > float(scores["late"]["IDEucl"])
        assert float(scores["early"]["IDF1"]) == pytest.approx(float(scores["late"]["IDF1"]), abs=1e-9)

    def test_plots(self, split_files, tmp_path):
        gt, hyp = split_files
        plots = tmp_path / "plots"
        assert main(["evaluate", str(gt), str(hyp), "--plots", str(plots)]) == EXIT_OK
        for name in ("gt_ideucl.png", "gt_trajectories.png"):
            assert (plots / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_multi_sequence_threads(self, tmp_path, capsys, monkeypatch):
        gt, hyp = constant_speed_split()
        root, hyps = tmp_path / "seqs", tmp_path / "hyps"
        for name in ("a", "b"):
            write_tracks(gt, root / name / "gt" / "gt.txt")
            write_tracks(gt if name == "a" else hyp, hyps / f"{name}.txt")
        out = tmp_path / "all.kv"
        monkeypatch.setenv("CROWDTRACK_THREADS", "2")
        assert main(["evaluate", str(root), str(hyps), "--out", str(out)]) == EXIT_OK
        rows = table(capsys.readouterr().out)
        assert set(rows) == {"a", "b", "OVERALL"}
        kv = read_key_values(out)
        assert kv["a.IDSW"] == "0" and kv["b.IDSW"] == "1" and kv["IDSW"] == "1"
        assert float(kv["a.IDEucl"]) == 1.0

    def test_bad_threads_env(self, split_files, monkeypatch):
        gt, hyp = split_files
        monkeypatch.setenv("CROWDTRACK_THREADS", "many")
        assert main(["evaluate", str(gt), str(hyp)]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path, split_files):
        gt, _ = split_files
        assert main(["evaluate", str(gt), str(tmp_path / "nope.txt")]) == EXIT_INPUT

    def test_malformed_file(self, tmp_path, split_files):
        gt, _ = split_files
        bad = tmp_path / "bad.txt"
        bad.write_text("1,1,not,a,box\n")
        assert main(["evaluate", str(gt), str(bad)]) == EXIT_INPUT

    def test_bad_threshold(self, split_files):
        gt, hyp = split_files
        assert main(["evaluate", str(gt), str(hyp), "--iou-thresh", "1.5"]) == EXIT_CONFIG


class TestDetectionEval:
    def test_perfect(self, synth_seq, capsys, tmp_path):
        gt = synth_seq / "gt" / "gt.txt"
        det = tmp_path / "det.txt"
        rows = [e for e in parse_mot_file(gt)]
        write_mot_file([type(e)(e.frame, -1, e.box, 1.0) for e in rows], det)
        plots = tmp_path / "p"
        assert main(["detection-eval", str(gt), str(det), "--plots", str(plots)]) == EXIT_OK
        row = table(capsys.readouterr().out)["det"]
        for k in ("P", "R", "F1", "MODA", "MODP", "AP"):
            assert row[k] == "100.0"
        assert (plots / "precision_recall.png").is_file()

    def test_noisy_below_perfect(self, synth_seq, tmp_path):
        out = tmp_path / "d.kv"
        assert main(["detection-eval", str(synth_seq / "gt" / "gt.txt"), str(synth_seq / "det" / "det.txt"),
                     "--out", str(out)]) == EXIT_OK
        kv = read_key_values(out)
        assert 0.0 < float(kv["R"]) < 1.0


class TestSynth:
    def test_reproducible(self, tmp_path):
        args = ["--seed", "5", "--n-tracks", "4", "--frames", "30", "--fn-rate", "0.2", "--fp-rate", "0.1",
                "--jitter", "2", "--render", "--width", "80", "--height", "60"]
        assert main(["synth", str(tmp_path / "a"), *args]) == EXIT_OK
        assert main(["synth", str(tmp_path / "b"), *args]) == EXIT_OK
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert len(files) == 3 + 30
        for rel in files:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "scen.cfg"
        cfg.write_text("profile=curved\nn_tracks=3\nframe_count=20\nfn_rate=0.0\n")
        assert main(["synth", str(tmp_path / "s"), "--config", str(cfg)]) == EXIT_OK
        traj, _ = group_trajectories(parse_mot_file(tmp_path / "s" / "gt" / "gt.txt"))
        assert sorted(traj) == [1, 2, 3]

    def test_bad_values(self, tmp_path):
        assert main(["synth", str(tmp_path / "x"), "--fn-rate", "1.5"]) == EXIT_CONFIG
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("warp_speed=9\n")
        assert main(["synth", str(tmp_path / "y"), "--config", str(cfg)]) == EXIT_CONFIG


class TestTrack:
    def test_track_and_evaluate(self, synth_seq, tmp_path, capsys):
        hyp = tmp_path / "hyp.txt"
        assert main(["track", str(synth_seq), "--out", str(hyp)]) == EXIT_OK
        assert main(["evaluate", str(synth_seq), str(hyp)]) == EXIT_OK
        row = table(capsys.readouterr().out)["seq"]
        assert float(row["MOTA"]) > 80.0

    def test_deterministic(self, synth_seq, tmp_path):
        for name in ("a", "b"):
            assert main(["track", str(synth_seq), "--seed", "9", "--out", str(tmp_path / f"{name}.txt")]) == 0
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_overrides_and_kalman(self, synth_seq, tmp_path):
        out = tmp_path / "kf.txt"
        assert main(["track", str(synth_seq), "--motion-model", "kf", "--lambda-det", "0.5",
                     "--no-images", "--out", str(out)]) == EXIT_OK
        assert out.stat().st_size > 0

    def test_overlays(self, synth_seq, tmp_path):
        dump = tmp_path / "ov"
        assert main(["track", str(synth_seq), "--out", str(tmp_path / "h.txt"),
                     "--dump-overlays", str(dump)]) == EXIT_OK
        assert len(list(dump.glob("*.ppm"))) == 60

    def test_bad_config(self, synth_seq, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text("n_particles=-3\n")
        assert main(["track", str(synth_seq), "--config", str(cfg), "--out", str(tmp_path / "h.txt")]) == EXIT_CONFIG
        cfg.write_text("no equals sign here\n")
        assert main(["track", str(synth_seq), "--config", str(cfg), "--out", str(tmp_path / "h.txt")]) == EXIT_CONFIG

    def test_missing_detections(self, tmp_path):
        assert main(["track", str(tmp_path)]) == EXIT_INPUT


class TestQa:
    def test_clean_synthetic(self, tmp_path, capsys):
        assert main(["synth", str(tmp_path / "s"), "--seed", "2", "--frames", "100"]) == EXIT_OK
        # boxes up to 40 px stop with their centre about half a box plus one step from the edge
        assert main(["qa", str(tmp_path / "s"), "--boundary-margin", "30"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == ["track_id,frame,kind,detail"]

    def test_truncated_track_flagged(self, tmp_path):
        info = SequenceInfo("q", 100, 400, 400)
        frames = np.arange(1, 101)
        from helpers import path_track

        gt = {1: path_track(1, frames, 100 + 1.0 * frames, y=200.0)}
        t = gt[1]
        gt[1] = type(t)(1, t.frames[:40], t.boxes[:40])
        seq = tmp_path / "q"
        write_tracks(gt, seq / "gt" / "gt.txt")
        write_seqinfo(info, seq / "seqinfo.ini")
        out = tmp_path / "flags.csv"
        assert main(["qa", str(seq), "--out", str(out)]) == EXIT_OK
        body = out.read_text().splitlines()[1:]
        assert any(",fragmentation_suspect," in ln for ln in body)

    def test_needs_seqinfo(self, tmp_path, split_files):
        gt, _ = split_files
        assert main(["qa", str(gt)]) == EXIT_INPUT
