import json
import os

import pytest

from gumbelmark.cli import main
from gumbelmark.watermark import TokenSeq

KEY = "00112233445566778899aabbccddeeff"


def run(*argv) -> int:
    return main(list(argv))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_text(path, mode="r"):
    with open(path, mode) as fh:
        return fh.read()


class TestGenerate:
    def test_watermarked_roundtrip(self, tmp_path):
        out = str(tmp_path / "seq.json")
        rc = run("generate", "--key", KEY, "--n", "50", "--m", "5", "--delta", "0.3",
                 "--seed", "11", "--out", out)
        assert rc == 0
        seq = TokenSeq.from_json(read_text(out))
        assert len(seq) == 55
        assert "W" in seq.provenance
        manifest = read_json(out + ".manifest.json")
        assert manifest["outputs"] == [out]
        assert manifest["command"] == "generate"

    def test_null_has_no_watermark(self, tmp_path):
        out = str(tmp_path / "null.json")
        assert run("generate", "--null", "--n", "30", "--seed", "4", "--out", out) == 0
        seq = TokenSeq.from_json(read_text(out))
        assert "W" not in seq.provenance

    def test_byte_identical_reruns(self, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for out in (a, b):
            assert run("generate", "--key", KEY, "--n", "64", "--seed", "7", "--out", out) == 0
        assert read_text(a, "rb") == read_text(b, "rb")

    def test_missing_key_is_usage_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("GUMBELMARK_KEY", raising=False)
        out = str(tmp_path / "x.json")
        assert run("generate", "--n", "10", "--out", out) == 2

    def test_key_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GUMBELMARK_KEY", KEY)
        out = str(tmp_path / "env.json")
        assert run("generate", "--n", "10", "--out", out) == 0

    def test_generated_count_flagged(self, tmp_path):
        out = str(tmp_path / "c.json")
        assert run("generate", "--key", KEY, "--n", "400", "--m", "5", "--delta", "0.3",
                   "--seed", "3", "--out", out) == 0
        seq = TokenSeq.from_json(read_text(out))
        assert len(seq) - 5 == 400


@pytest.fixture(scope="module")
def seq_file(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("detect") / "seq.json")
    assert run("generate", "--key", KEY, "--n", "300", "--m", "5", "--delta", "0.3",
               "--vocab-size", "20", "--seed", "21", "--out", path) == 0
    return path


class TestDetect:

    def test_requires_critical_value_or_calibrate(self, seq_file, tmp_path):
        out = str(tmp_path / "v.json")
        assert run("detect", "--in", seq_file, "--key", KEY, "--out", out) == 2

    def test_right_key_rejects(self, seq_file, tmp_path):
        out = str(tmp_path / "v.json")
        rc = run("detect", "--in", seq_file, "--key", KEY, "--detector", "trgof",
                 "--s", "2", "--calibrate", "--reps", "2000", "--outer", "3",
                 "--alpha", "0.01", "--seed", "5", "--out", out)
        assert rc == 0
        verdict = read_json(out)
        assert verdict["reject"] is True
        assert verdict["n_scored"] == 300
        assert verdict["statistic"] >= verdict["critical_value"]

    def test_wrong_key_accepts(self, seq_file, tmp_path):
        out = str(tmp_path / "w.json")
        rc = run("detect", "--in", seq_file, "--key", "deadbeef", "--detector", "trgof",
                 "--s", "2", "--calibrate", "--reps", "2000", "--outer", "3",
                 "--alpha", "0.01", "--seed", "5", "--out", out)
        assert rc == 0
        assert read_json(out)["reject"] is False

    def test_sum_detector(self, seq_file, tmp_path):
        out = str(tmp_path / "s.json")
        rc = run("detect", "--in", seq_file, "--key", KEY, "--detector", "sum",
                 "--score", "ars", "--calibrate", "--alpha", "0.01", "--out", out)
        assert rc == 0
        assert read_json(out)["reject"] is True

    def test_missing_file_is_usage_error(self, tmp_path):
        out = str(tmp_path / "x.json")
        assert run("detect", "--in", str(tmp_path / "nope.json"), "--key", KEY,
                   "--critical-value", "1", "--out", out) == 2

    def test_corrupt_file_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("detect", "--in", str(bad), "--key", KEY,
                   "--critical-value", "1", "--out", str(tmp_path / "x.json")) == 3


class TestEdit:
    def test_edit_then_detect(self, tmp_path):
        seq = str(tmp_path / "seq.json")
        edited = str(tmp_path / "edited.json")
        assert run("generate", "--key", KEY, "--n", "100", "--vocab-size", "20",
                   "--seed", "2", "--out", seq) == 0
        assert run("edit", "--in", seq, "--edit", "sub", "--fraction", "0.1",
                   "--seed", "3", "--vocab-size", "20", "--out", edited) == 0
        before = TokenSeq.from_json(read_text(seq))
        after = TokenSeq.from_json(read_text(edited))
        assert len(after) == len(before)
        assert sum(c == "E" for c in after.provenance) == 10

    def test_adversarial_needs_key(self, tmp_path, monkeypatch):
        monkeypatch.delenv("GUMBELMARK_KEY", raising=False)
        seq = str(tmp_path / "seq.json")
        assert run("generate", "--key", KEY, "--n", "40", "--vocab-size", "20",
                   "--seed", "2", "--out", seq) == 0
        assert run("edit", "--in", seq, "--edit", "adv", "--fraction", "0.1",
                   "--vocab-size", "20", "--out", str(tmp_path / "e.json")) == 2


class TestCalibrateCmd:
    def test_writes_result_and_cache(self, tmp_path):
        out = str(tmp_path / "calib.json")
        cache = str(tmp_path / "cache")
        rc = run("calibrate", "--detector", "trgof", "--s", "2", "--n", "100",
                 "--alpha", "0.05", "--reps", "500", "--outer", "2", "--seed", "1",
                 "--cache-dir", cache, "--out", out)
        assert rc == 0
        res = read_json(out)
        assert res["n"] == 100 and res["alpha"] == 0.05
        assert len(os.listdir(cache)) == 1

    def test_sum_clt(self, tmp_path):
        out = str(tmp_path / "calib.json")
        rc = run("calibrate", "--detector", "sum", "--score", "ars", "--n", "400",
                 "--alpha", "0.01", "--out", out)
        assert rc == 0
        assert read_json(out)["critical_value"] == pytest.approx(446.5269574808168, abs=1e-6)


class TestExperimentSuites:
    def test_efficiency_suite_monotone(self, tmp_path):
        out_dir = str(tmp_path / "eff")
        rc = run("experiment", "efficiency", "--eps", "1.0", "--delta-min", "0.05",
                 "--delta-max", "0.5", "--step", "0.05", "--seed", "0", "--out-dir", out_dir)
        assert rc == 0
        rows = read_text(os.path.join(out_dir, "efficiency.csv")).strip().split("\n")[1:]
        rates = [float(r.split(",")[2]) for r in rows]
        assert all(b > a for a, b in zip(rates, rates[1:]))
        manifest = read_json(os.path.join(out_dir, "manifest.json"))
        assert manifest["outputs"]

    def test_hist_suite(self, tmp_path):
        out_dir = str(tmp_path / "hist")
        rc = run("experiment", "hist", "--n", "300", "--p", "0.1", "--q", "0.3",
                 "--vocab-size", "30", "--trials", "30", "--s-list", "2,1",
                 "--seed", "1", "--out-dir", out_dir)
        assert rc == 0
        assert os.path.exists(os.path.join(out_dir, "hist_samples.csv"))
        power = read_json(os.path.join(out_dir, "hist_power.json"))
        assert set(power) == {"2.0", "1.0"}

    def test_boundary_suite_smoke(self, tmp_path):
        out_dir = str(tmp_path / "bnd")
        rc = run("experiment", "boundary", "--n", "200", "--grid", "3", "--trials", "20",
                 "--vocab-size", "20", "--seed", "2", "--out-dir", out_dir)
        assert rc == 0
        rows = read_text(os.path.join(out_dir, "boundary.csv")).strip().split("\n")
        assert len(rows) == 1 + 9

    def test_reproducible_suite(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        for d in (a, b):
            assert run("experiment", "hist", "--n", "200", "--p", "0.2", "--q", "0.4",
                       "--vocab-size", "20", "--trials", "15", "--s-list", "2",
                       "--seed", "9", "--out-dir", d) == 0
        fa = read_text(os.path.join(a, "hist_samples.csv"))
        fb = read_text(os.path.join(b, "hist_samples.csv"))
        assert fa == fb


class TestDetectPower:
    def test_right_key_power_and_wrong_key_level(self, tmp_path):
        # end-to-end: 200 seeded runs at n = 400, delta = 0.3, alpha = 0.01;
        # right key must reject in >= 95% of runs, a wrong key in about alpha
        from gumbelmark import (
            GenConfig, Key, ToySource, TrGoF, generate, mc_critical, pivot_series,
        )
        from gumbelmark.streams import child_seed, substream

        vocab, m, n = 20, 5, 400
        det = TrGoF(s=2.0, c_plus=1.0 / n)
        crit = mc_critical(det, n, 0.01, reps=4000, outer=5, seed=55).critical_value
        key, wrong = Key(bytes.fromhex(KEY)), Key(b"not-the-key")
        hits = miss = 0
        for i in range(200):
            src = ToySource(vocab, (0.3, 0.3), seed=child_seed(42, i, 0))
            prompt = substream(42, i, 1).integers(0, vocab, size=m).tolist()
            seq = generate(src, key, prompt, GenConfig(n=n, m=m, masking=True,
                                                       seed=child_seed(42, i, 2)))
            hits += det.statistic(pivot_series(seq, key, vocab)) >= crit
            miss += det.statistic(pivot_series(seq, wrong, vocab)) >= crit
        assert hits / 200 >= 0.95
        assert miss / 200 <= 0.04


class TestRemainingSuites:
    def test_sumboundary_suite(self, tmp_path):
        out_dir = str(tmp_path / "sb")
        rc = run("experiment", "sumboundary", "--n", "300", "--grid", "3", "--trials", "20",
                 "--vocab-size", "20", "--seed", "1", "--out-dir", out_dir)
        assert rc == 0
        rows = read_text(os.path.join(out_dir, "sumboundary.csv")).strip().split("\n")
        assert len(rows) == 1 + 9 * 4  # header + grid cells x four scores

    def test_gapcheck_suite(self, tmp_path):
        out_dir = str(tmp_path / "gc")
        rc = run("experiment", "gapcheck", "--trials", "30000", "--seed", "2",
                 "--out-dir", out_dir)
        assert rc == 0
        rows = read_text(os.path.join(out_dir, "gapcheck.csv")).strip().split("\n")[1:]
        assert all(r.endswith("True") for r in rows)

    def test_tolerance_suite(self, tmp_path):
        out_dir = str(tmp_path / "tol")
        rc = run("experiment", "tolerance", "--key", KEY, "--vocab-size", "20",
                 "--n0", "120", "--n-test", "65", "--m", "5", "--delta", "0.3",
                 "--trials", "1", "--reps", "1200", "--outer", "2", "--alpha", "0.01",
                 "--seed", "3", "--out-dir", out_dir)
        assert rc == 0
        rows = read_text(os.path.join(out_dir, "tolerance.csv")).strip().split("\n")[1:]
        assert len(rows) == 3  # sub, ins, del for the one sequence
        for r in rows:
            frac = float(r.split(",")[2])
            assert 0.0 <= frac <= 1.0
