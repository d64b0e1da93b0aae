import csv
import json
import math
import os
import subprocess
import sys

import pytest

from contspec import cli
from contspec import weightfit as W


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


class TestHelpers:
    def test_num(self):
        assert cli._num("0.2pi") == pytest.approx(0.2 * math.pi)
        assert cli._num("pi") == pytest.approx(math.pi)
        assert cli._num("2*pi") == pytest.approx(2 * math.pi)
        assert cli._num("1.5") == 1.5

    def test_lists(self):
        assert cli.parse_int_list("8,16, 32") == [8, 16, 32]
        assert cli.parse_float_list("1,2.5") == [1.0, 2.5]
        for bad in ("6x4", "0", "-3", ""):
            with pytest.raises(cli.ValidationError):
                cli.parse_int_list(bad)
        with pytest.raises(cli.ValidationError):
            cli.parse_float_list("a,b")

    def test_resolve_precedence(self):
        defaults = {"eps": 1e-3, "R": 1.0}
        out = cli.resolve(defaults, {"eps": "0.01"}, {"eps": 0.2, "R": None})
        assert out == {"eps": 0.2, "R": 1.0}
        with pytest.raises(cli.ValidationError):
            cli.resolve(defaults, {"bogus": "1"}, {})

    def test_read_config(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nmax-iter = 3   # trailing\n\nmu0=1e-4\n")
        assert cli.read_config(p) == {"max_iter": "3", "mu0": "1e-4"}
        p.write_text("just words\n")
        with pytest.raises(cli.ValidationError):
            cli.read_config(p)


class TestCommands:
    def test_basis(self, tmp_path):
        code, out = run(tmp_path, "basis", "--ell", "1", "--m", "0")
        assert code == 0
        with open(out / "basis.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:4] == ["theta", "phi", "comp", "re"] and len(rows) == 1 + 16 * 8
        man = load(out / "manifest.json")
        assert man["command"] == "basis" and man["outputs"]["samples"] == "basis.csv"
        assert man["backend"] in ("numba", "numpy")

    def test_basis_pole_check(self, tmp_path):
        code, out = run(tmp_path, "basis", "--ell", "0.7", "--m", "0.3", "--pole-check")
        assert code == 0
        assert abs(load(out / "pole_check.json")["north"] - 0.3) < 0.01

    def test_invalid_mode(self, tmp_path):
        code, out = run(tmp_path, "basis", "--ell", "0.2", "--m", "1.5")
        assert code == 2
        rec = load(out / "error.json")
        assert rec["error"] == "ValidationError" and rec["exit_code"] == 2

    def test_eigen_single(self, tmp_path):
        code, out = run(tmp_path, "eigen", "--ell", "2", "--m", "0", "--N", "16")
        assert code == 0
        rec = load(out / "eigen.json")
        assert rec["lambda"] == pytest.approx(6.0, rel=1e-12)
        assert rec["lambda_alpha_roundtrip"] < 1e-10

    def test_eigen_list_and_bad_list(self, tmp_path):
        code, out = run(tmp_path, "eigen", "--ell", "1.5", "--m", "0.5", "--N", "8,16,32")
        assert code == 0 and (out / "convergence.csv").exists()
        code, _ = run(tmp_path, "eigen", "--ell", "1", "--m", "0", "--N", "6x4", name="bad")
        assert code == 2

    def test_eigen_table_check(self, tmp_path):
        code, out = run(tmp_path, "eigen", "--ell", "0.5", "--m", "0.1", "--table-check", "galerkin")
        assert code == 0
        rec = load(out / "table_check.json")
        assert rec["passed"] and rec["strictly_decreasing"] and set(rec["ratios"]) == {"64", "128", "256"}

    def test_field(self, tmp_path):
        code, out = run(tmp_path, "field", "--n-ell", "6", "--n-m", "6", "--grid", "4")
        assert code == 0 and (out / "field.csv").exists() and (out / "field.json").exists()

    def test_convergence_small(self, tmp_path):
        code, out = run(tmp_path, "convergence", "--N", "8,16", "--grid", "16")
        assert code == 0
        with open(out / "convergence.csv") as fh:
            rows = list(csv.reader(fh))
        assert [r[0] for r in rows[1:]] == ["8", "16"]

    @pytest.mark.parametrize("ell,verdict", [(-0.6, "divergent"), (0.3, "convergent")])
    def test_energy(self, tmp_path, ell, verdict):
        code, out = run(tmp_path, "energy", "--ell", str(ell))
        assert code == 0
        rec = load(out / "energy.json")
        assert rec["verdict"] == verdict
        assert rec["fitted_epsilon_exponent"] == pytest.approx(2 * ell + 1, abs=1e-6)
        assert (out / "cutoff.csv").exists()

    def test_cavity(self, tmp_path):
        code, out = run(tmp_path, "cavity", "--phi0", "pi")
        assert code == 0
        rec = load(out / "cavity.json")
        assert rec["ell"] == pytest.approx(0.5) and rec["k1a_estimate"] == pytest.approx(1.0)

    def test_solve_mode(self, tmp_path):
        code, out = run(tmp_path, "solve-mode", "--ell", "1.2", "--m", "0.4", "--b-theta=-1,0",
                        "--b-phi", "0,0.8", "--coupling", "0,0.01")
        assert code == 0
        rec = load(out / "solve.json")
        assert rec["contraction_estimate"] <= rec["contraction_bound"] < 1.0

    def test_fit_self_generated(self, tmp_path):
        code, out = run(tmp_path, "fit")
        assert code == 0
        rec = load(out / "params.json")
        assert all(v < 0.05 for v in rec["relative_error"].values())
        assert rec["boundary_error"] < 0.012

    def test_fit_from_data(self, tmp_path):
        cfg = W.FitConfig()
        truth = W.WeightParams(0.8, 1.8, 0.9, 0.4)
        data = W.synthetic_boundary(truth, cfg)
        path = tmp_path / "boundary.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "et_re", "et_im", "ep_re", "ep_im"])
            for i, th in enumerate(data.theta):
                for j, ph in enumerate(data.phi):
                    et, ep = data.samples[0, i, j], data.samples[1, i, j]
                    w.writerow([repr(float(v)) for v in (th, ph, et.real, et.imag, ep.real, ep.imag)])
        code, out = run(tmp_path, "fit", "--data", str(path))
        assert code == 0
        got = load(out / "params.json")["params"]
        for k, v in truth.as_dict().items():
            assert abs(got[k] - v) < 0.05 * v

    def test_fit_cap_via_config(self, tmp_path):
        cfg = tmp_path / "fit.cfg"
        cfg.write_text("max_iter = 3\n")
        code, out = run(tmp_path, "fit", "--config", str(cfg))
        assert code == 6
        assert (out / "params.json").exists() and (out / "manifest.json").exists()
        assert load(out / "error.json")["error"] == "IterationCap"

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 1\n")
        code, _ = run(tmp_path, "energy", "--ell", "0.3", "--config", str(cfg))
        assert code == 2

    def test_manifest_reproducible(self, tmp_path):
        _, a = run(tmp_path, "energy", "--ell", "0.3", "--seed", "7", name="a")
        _, b = run(tmp_path, "energy", "--ell", "0.3", "--seed", "7", name="b")
        for f in ("manifest.json", "energy.json", "cutoff.csv"):
            assert (a / f).read_bytes() == (b / f).read_bytes()
        assert load(a / "manifest.json")["seed"] == 7

    def test_argument_error(self, tmp_path):
        code, _ = run(tmp_path, "energy", "--ell", "abc")
        assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "contspec", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "contspec" in res.stdout


def test_backend_env_switch():
    code = "from contspec import _accel; print(_accel.backend())"
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**os.environ, "CONTSPEC_DISABLE_NUMBA": "1"})
    assert res.returncode == 0 and res.stdout.strip() == "numpy"
