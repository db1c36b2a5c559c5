import csv
import json

import numpy as np

from fpcascade.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main

FAST = [
    "--t0", "0.1", "--t-max", "2", "--x-min", "-16", "--x-max", "16",
    "--nx", "241", "--nt", "39", "--paths", "2000", "--seed", "42",
]
# with these t nodes (step 0.05), t = 1.0 is a grid node and a default checkpoint target


def run_example1(out, extra=()):
    return main(["example1", "--v", "cos", "--omega", "1", "--lambda", "0.5", "--d", "1",
                 *FAST, *extra, "--out", str(out)])


def read_summary(out):
    with open(out / "summary.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def read_density(out):
    with open(out / "density.csv", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestExample1:
    def test_happy_path(self, tmp_path):
        out = tmp_path / "run"
        assert run_example1(out) == EXIT_OK
        assert (out / "density.csv").exists() and (out / "summary.json").exists()
        summary = read_summary(out)
        assert summary["translation_residual"] <= 1e-12
        assert summary["scaling_fit"] is None

    def test_lambda_zero_is_pure_diffusion(self, tmp_path):
        out = tmp_path / "run0"
        assert main(["example1", "--v", "cos", "--lambda", "0", *FAST, "--out", str(out)]) == EXIT_OK
        rows = read_density(out)
        # w_exact degenerates to the heat kernel, and the normalized
        # perturbative column agrees with it to quadrature accuracy
        w_pert = np.array([float(r["w_pert"]) for r in rows])
        w_exact = np.array([float(r["w_exact"]) for r in rows])
        assert np.abs(w_pert - w_exact).max() <= 1e-10 * w_exact.max()

    def test_byte_identical_rerun(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_example1(out1) == EXIT_OK
        assert run_example1(out2) == EXIT_OK
        assert (out1 / "density.csv").read_bytes() == (out2 / "density.csv").read_bytes()
        s1 = (out1 / "summary.json").read_bytes()
        s2 = (out2 / "summary.json").read_bytes()
        assert s1 == s2

    def test_csv_schema_and_order(self, tmp_path):
        out = tmp_path / "run"
        assert run_example1(out) == EXIT_OK
        rows = read_density(out)
        assert list(rows[0].keys()) == ["x", "t", "w_pert", "w_pert_numeric", "w_exact", "w_fd", "w_mc"]
        # time-major ordering: t is non-decreasing, x cycles
        t_vals = [float(r["t"]) for r in rows]
        assert t_vals == sorted(t_vals)
        assert rows[0]["w_mc"] == ""  # first slice is not a checkpoint
        populated = [r for r in rows if r["w_mc"] != ""]
        assert populated, "checkpoint slices must carry MC data"


class TestOu:
    def test_summary_carries_fit_and_gaps(self, tmp_path):
        out = tmp_path / "ou"
        code = main(["ou", "--lambda", "0.1", "--d", "1",
                     "--lambda-sweep", "0.02,0.04,0.08,0.16", *FAST, "--out", str(out)])
        assert code == EXIT_OK
        s = read_summary(out)
        fit = s["scaling_fit"]
        assert fit["lambdas"] == [0.02, 0.04, 0.08, 0.16]
        assert len(fit["errors"]) == 4 and "slope" in fit
        assert len(s["resummation_gaps"]["gap"]) == 39
        # perturbative vs exact stays tight over the whole run
        dist = s["distances"]["w_pert_vs_w_exact"]["peak-relative-Linf"]["value"]
        assert max(dist) <= 2e-3

    def test_bad_sweep_rejected(self, tmp_path):
        assert main(["ou", "--lambda-sweep", "0.1,oops", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["ou", "--lambda-sweep", "0.1,0.2", "--out", str(tmp_path)]) == EXIT_CONFIG


class TestCustom:
    def test_config_file_run(self, tmp_path):
        cfg = {
            "family": "linear_time_modulated", "v_kind": "sin", "omega": 2.0,
            "lam": 0.3, "d_coeff": 1.0, "x_min": -16.0, "x_max": 16.0, "nx": 241,
            "t0": 0.1, "t_max": 2.0, "nt": 39, "n_paths": 1500, "seed": 11,
            "out_dir": str(tmp_path / "custom"),
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert main(["custom", "--config", str(path)]) == EXIT_OK
        assert (tmp_path / "custom" / "summary.json").exists()

    def test_flags_override_config(self, tmp_path):
        cfg = {"family": "zero", "t0": 0.1, "t_max": 1.0, "nx": 201, "nt": 21,
               "x_min": -12.0, "x_max": 12.0, "n_paths": 500, "seed": 1,
               "out_dir": str(tmp_path / "o1")}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out2 = tmp_path / "o2"
        assert main(["custom", "--config", str(path), "--out", str(out2)]) == EXIT_OK
        assert (out2 / "summary.json").exists()
        assert read_summary(out2)["config"]["family"] == "zero"

    def test_order_cap_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"family": "zero", "order": 9}))
        assert main(["custom", "--config", str(path)]) == EXIT_CONFIG

    def test_t0_zero_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"family": "zero", "t0": 0.0}))
        assert main(["custom", "--config", str(path)]) == EXIT_CONFIG

    def test_missing_config_rejected(self, tmp_path):
        assert main(["custom", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"familly": "zero"}))
        assert main(["custom", "--config", str(path)]) == EXIT_CONFIG


def test_narrow_domain_solver_abort(tmp_path):
    # FD boundary-leak guard trips on a domain that cannot hold the density
    code = main(["example1", "--lambda", "0.2", "--t0", "0.1", "--t-max", "2",
                 "--x-min", "-4", "--x-max", "4", "--nx", "161", "--nt", "41",
                 "--paths", "200", "--out", str(tmp_path / "narrow")])
    assert code == EXIT_SOLVER


def test_cli_float_format_is_17g(tmp_path):
    out = tmp_path / "fmt"
    assert run_example1(out) == EXIT_OK
    rows = read_density(out)
    # a full-precision value round-trips exactly through the text form
    val = rows[len(rows) // 2]["w_pert"]
    assert float(val) == float(f"{float(val):.17g}")
