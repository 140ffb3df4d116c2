import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from anisolab.cli import main
from anisolab.io import read_checkpoint, read_norms_csv

CONFIG = {
    "grid": {"L": 16.0, "N": 16, "Z": 6.0, "M": 33},
    "time": {"dt": 0.5, "t_max": 6.0, "save_every": 1},
    "ic": {"profile": "gaussian_bump", "amplitude": 1e-5, "seed": 3},
    "fit": {"t0": 2.0, "t1": 6.0},
    "norms": [{"component": "vertical", "p": 2, "q": "inf"}, {"component": "horizontal", "p": 2, "q": 2}],
}


def _write(tmp_path, cfg, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


@pytest.fixture
def config(tmp_path):
    return _write(tmp_path, CONFIG)


class TestSimulate:
    def test_outputs(self, tmp_path, config):
        out = tmp_path / "out"
        code = main(["simulate", "--config", str(config), "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert code in (0, 1)
        assert code == (0 if report["passed"] else 1)
        assert report["status"] == "completed" and report["within_smallness"]
        assert report["residuals"]["div_max"] < 1e-5
        assert len(list(out.glob("ckpt_*.ans"))) == 13
        u, t = read_checkpoint(out / "ckpt_6.000000.ans")
        assert t == 6.0
        assert len(read_norms_csv(out / "norms.csv")) == 2
        assert {e["status"] for e in report["fits"]} == {"fitted"}

    def test_deterministic(self, tmp_path, config):
        outs = []
        for name in ("a", "b"):
            assert main(["simulate", "--config", str(config), "--out", str(tmp_path / name)]) in (0, 1)
            outs.append(tmp_path / name)
        for f in ("norms.csv", "report.json", "ckpt_3.000000.ans"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()

    def test_zero_amplitude(self, tmp_path):
        cfg = dict(CONFIG, ic={"profile": "shear_roll", "amplitude": 0.0, "seed": 1})
        out = tmp_path / "zero"
        assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert {e["status"] for e in report["fits"]} == {"zero_field"}

    def test_linear_mode(self, tmp_path):
        cfg = dict(CONFIG, mode="linear", ic={"profile": "gaussian_bump", "amplitude": 1.0, "seed": 3})
        out = tmp_path / "lin"
        assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) in (0, 1)
        report = json.loads((out / "report.json").read_text())
        assert report["mode"] == "linear" and report["residual_tolerance"] == 1e-6
        assert report["residuals"]["div_max"] < 1e-6

    def test_config_error_creates_nothing(self, tmp_path):
        bad = _write(tmp_path, dict(CONFIG, grid={"L": 16.0, "N": 12, "Z": 6.0, "M": 33}))
        out = tmp_path / "never"
        assert main(["simulate", "--config", str(bad), "--out", str(out)]) == 2
        assert not out.exists()

    def test_blowup(self, tmp_path):
        cfg = dict(CONFIG, ic={"profile": "gaussian_bump", "amplitude": 100.0, "seed": 1}, checkpoints=False)
        out = tmp_path / "boom"
        assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 3
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "blowup" and not report["passed"]
        assert (out / "norms.csv").exists()


class TestDecayFit:
    def test_fits_each_series(self, tmp_path, config, capsys):
        out = tmp_path / "out"
        main(["simulate", "--config", str(config), "--out", str(out)])
        capsys.readouterr()
        assert main(["decay-fit", "--series", str(out / "norms.csv"), "--t0", "2", "--t1", "6"]) == 0
        lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
        assert len(lines) == 2 and all("slope" in x for x in lines)
        assert lines[0]["n_samples"] == 9

    def test_schema_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,value\n1,2\n")
        assert main(["decay-fit", "--series", str(p), "--t0", "1", "--t1", "2"]) == 2
        assert main(["decay-fit", "--series", str(tmp_path / "none.csv"), "--t0", "1", "--t1", "2"]) == 2

    def test_bad_arguments(self):
        assert main(["decay-fit", "--series", "x.csv", "--t0", "nan", "--t1", "2"]) == 2
        assert main(["frobnicate"]) == 2


class TestChecks:
    def test_verify_ops_needs_trials(self):
        assert main(["verify-ops", "--seed", "1", "--trials", "5"]) == 2
        assert main(["verify-ops", "--seed", "-1", "--trials", "50"]) == 2

    def test_lp_check(self, config, capsys):
        assert main(["lp-check", "--config", str(config)]) == 0
        rows = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
        assert all(r["passed"] for r in rows)

    def test_lp_check_fault_injection(self, config):
        assert main(["lp-check", "--config", str(config), "--fault", "corrupt-phi"]) == 1

    def test_lp_check_bad_config(self, tmp_path):
        assert main(["lp-check", "--config", str(tmp_path / "missing.yaml")]) == 2


class TestSpecExamples:
    def test_zero_amplitude_norms_are_zero(self, tmp_path):
        cfg = dict(CONFIG, ic={"profile": "gaussian_bump", "amplitude": 0.0, "seed": 1}, checkpoints=False)
        out = tmp_path / "zero"
        assert main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
        for ts, vs in read_norms_csv(out / "norms.csv").values():
            assert all(v == 0.0 for v in vs)

    def test_decay_fit_synthetic_series(self, tmp_path, capsys):
        from anisolab.io import norms_csv_text
        from anisolab.lp_besov import NormSpec
        from anisolab.mild import NormSeries

        s = NormSeries("horizontal", NormSpec(2.0, 2.0))
        for t in np.geomspace(1, 100, 30):
            s.append(float(t), float(3.0 * t**-0.75))
        p = tmp_path / "synthetic.csv"
        p.write_text(norms_csv_text([s]))
        assert main(["decay-fit", "--series", str(p), "--t0", "1", "--t1", "100"]) == 0
        line = json.loads(capsys.readouterr().out)
        assert line["slope"] == pytest.approx(-0.75, abs=1e-12)

    def test_linear_run_matches_campaign(self, tmp_path, capsys):
        from anisolab import RateQuery, fit_exponent, run_linear_campaign

        cfg = dict(CONFIG, mode="linear", time={"dt": 0.25, "t_max": 4.0, "save_every": 1},
                   ic={"profile": "gaussian_bump", "amplitude": 1.0, "seed": 3}, checkpoints=False,
                   fit={"t0": 1.0, "t1": 4.0})
        out = tmp_path / "lin"
        main(["simulate", "--config", str(_write(tmp_path, cfg)), "--out", str(out)])
        groups = read_norms_csv(out / "norms.csv")
        times = next(iter(groups.values()))[0]
        queries = [RateQuery("vertical", 2, float("inf")), RateQuery("horizontal", 2, 2)]
        camp = run_linear_campaign(CONFIG["grid"], queries, (1.0, 4.0), seed=3, times=times)
        for q, s in zip(queries, camp["series"]):
            key = next(k for k in groups if k[0] == q.component)
            np.testing.assert_allclose(groups[key][1], s.values, rtol=1e-12, atol=0)
            capsys.readouterr()
            main(["decay-fit", "--series", str(out / "norms.csv"), "--t0", "1", "--t1", "4"])
            lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
            slope = next(x["slope"] for x in lines if x["component"] == q.component)
            assert slope == pytest.approx(fit_exponent(s, 1.0, 4.0).slope, abs=1e-12)

    @pytest.mark.slow
    def test_reference_small_data_config(self, tmp_path):
        cfg = Path(__file__).resolve().parents[1] / "demos" / "configs" / "small_nonlinear.yaml"
        out = tmp_path / "ref"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        slope = next(e["fitted"] for e in report["fits"]
                     if e["component"] == "vertical" and e["p"] == "inf" and e["q"] == "inf")
        assert -1.65 <= slope <= -1.35

    @pytest.mark.slow
    def test_verify_ops_default_seed(self, capsys):
        assert main(["verify-ops"]) == 0
        rows = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
        assert rows and all(r["passed"] for r in rows)
