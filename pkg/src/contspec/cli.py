"""Command-line interface.

Every command resolves its parameters as flags > ``--config`` file > defaults,
writes its outputs plus ``manifest.json`` into ``--out``, and on failure
writes ``error.json`` and exits with the code attached to the error class
(2 validation, 3 numerical, 4 quadrature/solver, 5 table lookup, 6 fitting).
A failed ``--table-check`` exits with 1.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from . import io as cio
from .errors import ContspecError, ValidationError

TABLE_CHECK_FAILED = 1
EISENSTEIN_BAND = (3.5, 4.5)
REGULARIZED_BAND = (4.4, 5.2)
GALERKIN_BAND = (1.25, 1.60)
TABLE_NS = (16, 32, 64)
GALERKIN_NS = (64, 128, 256)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"argument error: {message}")


def parse_float_list(text, name="list"):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"malformed {name}: {text!r}") from None
    if not vals:
        raise ValidationError(f"empty {name}")
    return vals


def parse_int_list(text, name="N list"):
    out = []
    for v in str(text).split(","):
        v = v.strip()
        if not v.isdigit() or int(v) < 1:
            raise ValidationError(f"malformed {name}: {text!r}")
        out.append(int(v))
    return out


def read_config(path):
    """``key = value`` lines with ``#`` comments; dashes in keys become underscores."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno} is not key = value", line=raw)
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _coerce(value, default):
    if isinstance(value, str) and default is not None and not isinstance(default, str):
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes", "on")
        try:
            return type(default)(value)
        except ValueError:
            raise ValidationError(f"cannot parse {value!r}") from None
    return value


def resolve(defaults: dict, config: dict, flags: dict) -> dict:
    out = dict(defaults)
    for key, value in config.items():
        if key not in defaults:
            raise ValidationError(f"unknown config key {key!r}")
        out[key] = _coerce(value, defaults[key])
    for key, value in flags.items():
        if value is not None and key in defaults:
            out[key] = value
    return out


def _num(text: str) -> float:
    """Float flag that also accepts ``pi`` multiples such as ``0.2pi``."""
    t = str(text).strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(t)


DEFAULTS = {
    "basis": {"ell": None, "m": None, "variant": "plain", "n_theta": 16, "n_phi": 8, "pole_check": False,
              "phi0": 2.0 * math.pi},
    "eigen": {"ell": None, "m": None, "N": "64", "potential": None, "table_check": None},
    "field": {"weight": "appendixB", "params": None, "n_ell": 32, "n_m": 32, "c": 1.0, "grid": 8,
              "components": "scalar", "rc": None, "alpha_source": "fixed_ell_minus_1"},
    "convergence": {"weight": "appendixB", "params": None, "N": "8,16,32,64,128", "grid": 256,
                    "full_grid": False, "rc": None, "c": 1.0, "table_check": None},
    "energy": {"ell": None, "m": 0.0, "law": "ell-minus-1", "phi_law": "regularized", "eps": 1e-3, "R": 1.0,
               "phi0": 2.0 * math.pi},
    "cavity": {"phi0": None, "n": 1, "a": 1.0},
    "fit": {"data": None, "radius": 1.5, "truth": "0.8,1.8,0.9,0.4", "init": "1.0,2.0,1.0,0.5",
            "lambda_div": 1.0, "mu0": 1e-3, "max_iter": 500, "ell_min": 0.1},
    "solve-mode": {"ell": None, "m": None, "k": 1.0, "r_inner": 1e-5, "r_outer": 10.0, "n_radial": 24,
                   "tol": 1e-8, "max_iter": 200, "alpha": 0.5, "beta": 0.5, "b_theta": None, "b_phi": None,
                   "coupling": None},
}


def build_parser():
    p = _Parser(prog="contspec", description="Continuous-index spherical field analysis")
    p.add_argument("--version", action="version", version=f"contspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", default=None, help="output directory (default ./contspec_out/<command>)")
        sp.add_argument("--config", default=None, help="key = value configuration file")
        sp.add_argument("--seed", type=int, default=0, help="seed recorded in the manifest")
        return sp

    sp = common(sub.add_parser("basis", help="sample Psi, its dual or a VSH family"))
    sp.add_argument("--ell", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--variant", choices=["plain", "sin_weighted", "dual", "radial", "even", "odd"])
    sp.add_argument("--n-theta", type=int)
    sp.add_argument("--n-phi", type=int)
    sp.add_argument("--phi0", type=_num)
    sp.add_argument("--pole-check", action="store_true", default=None)

    sp = common(sub.add_parser("eigen", help="Galerkin eigenvalue and convergence rows"))
    sp.add_argument("--ell", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--N")
    sp.add_argument("--potential", help="CSV with columns theta,value")
    sp.add_argument("--table-check", choices=["galerkin"])

    sp = common(sub.add_parser("field", help="synthesize a spectral-integral field"))
    sp.add_argument("--weight", choices=["appendixB", "constrained", "single"])
    sp.add_argument("--params", help="comma list: p for appendixB, A,p,q,beta for constrained, ell,m for single")
    sp.add_argument("--n-ell", type=int)
    sp.add_argument("--n-m", type=int)
    sp.add_argument("--c", type=float)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--components", choices=["scalar", "vector"])
    sp.add_argument("--rc", type=float)

    sp = common(sub.add_parser("convergence", help="truncation-error table"))
    sp.add_argument("--weight", choices=["appendixB", "constrained"])
    sp.add_argument("--params")
    sp.add_argument("--N")
    sp.add_argument("--grid", type=int)
    sp.add_argument("--full-grid", action="store_true", default=None, help="1024 points per dimension")
    sp.add_argument("--rc", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--table-check", choices=["eisenstein", "regularized"])

    sp = common(sub.add_parser("energy", help="cutoff-sequence energy verdict"))
    sp.add_argument("--ell", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--law", choices=["ell-minus-1"])
    sp.add_argument("--phi-law", choices=["regularized", "unregularized"])
    sp.add_argument("--eps", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--phi0", type=_num)

    sp = common(sub.add_parser("cavity", help="wedge-cavity mode analysis"))
    sp.add_argument("--phi0", type=_num)
    sp.add_argument("--n", type=int)
    sp.add_argument("--a", type=float)

    sp = common(sub.add_parser("fit", help="fit the spectral weight to boundary data"))
    sp.add_argument("--data", help="CSV theta,phi,et_re,et_im,ep_re,ep_im on the 32x64 fit grid")
    sp.add_argument("--radius", type=float)
    sp.add_argument("--truth", help="A,p,q,beta used to self-generate data when --data is absent")
    sp.add_argument("--init")
    sp.add_argument("--lambda-div", type=float)
    sp.add_argument("--mu0", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--ell-min", type=float)

    sp = common(sub.add_parser("solve-mode", help="coupled radial solve for one mode"))
    sp.add_argument("--ell", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--k", type=float)
    sp.add_argument("--r-inner", type=float)
    sp.add_argument("--r-outer", type=float)
    sp.add_argument("--n-radial", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--alpha", type=float, help="E_r = alpha j + beta y")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--b-theta", help="override: re,im")
    sp.add_argument("--b-phi", help="override: re,im")
    sp.add_argument("--coupling", help="override of C: re,im")
    return p


def _require(params, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ValidationError("missing required parameter(s): " + ", ".join(missing))


def _complex(text, name):
    vals = parse_float_list(text, name)
    if len(vals) == 1:
        return complex(vals[0])
    if len(vals) == 2:
        return complex(vals[0], vals[1])
    raise ValidationError(f"{name} takes re or re,im")


def _weight(params):
    from .spectral import SpectralWeight
    kind = params["weight"]
    extra = parse_float_list(params["params"], "params") if params.get("params") else None
    if kind == "appendixB":
        return SpectralWeight.test_weight(extra[0] if extra else 3.0)
    if kind == "constrained":
        if not extra or len(extra) != 4:
            raise ValidationError("constrained weight needs --params A,p,q,beta")
        return SpectralWeight("constrained_param", dict(zip(("A", "p", "q", "beta"), extra)))
    if kind == "single":
        if not extra or len(extra) != 2:
            raise ValidationError("single weight needs --params ell,m")
        return SpectralWeight.single_mode(*extra)
    raise ValidationError(f"unknown weight {kind!r}")


def cmd_basis(params, out: Path) -> dict:
    from . import angular as ang
    _require(params, "ell", "m")
    idx = ang.ModeIndex(params["ell"], params["m"], params["phi0"])
    theta, _, phi = ang.gauss_sphere_grid(params["n_theta"], params["n_phi"], params["phi0"])
    variant = params["variant"]
    rows = []
    if variant in ("plain", "sin_weighted"):
        val, dth = ang.psi_grid(idx, theta, phi, variant)
        for i, t in enumerate(theta):
            for j, f in enumerate(phi):
                v, d = val[i, j], dth[i, j]
                rows.append((t, f, 0, v.real, v.imag, d.real, d.imag))
    elif variant == "dual":
        for t in theta:
            for f in phi:
                e = ang.eval_dual(idx, float(t), float(f))
                rows.append((t, f, 0, e.value.real, e.value.imag, e.dtheta.real, e.dtheta.imag))
    else:
        comps = ang.vsh_grid(variant, idx, theta, phi, normalized=idx.ell > 0)
        for c in range(3):
            for i, t in enumerate(theta):
                for j, f in enumerate(phi):
                    v = comps[c, i, j]
                    rows.append((t, f, c, v.real, v.imag, "", ""))
    header = ("theta", "phi", "comp", "re", "im", "dtheta_re", "dtheta_im")
    files = {"samples": str(cio.write_csv(out / "basis.csv", header, rows))}
    if params["pole_check"]:
        report = {"mode": [idx.ell, idx.m], "expected_north": idx.mu}
        for side in ("north", "south"):
            try:
                report[side] = ang.pole_scaling_exponent(idx, side)
            except ContspecError as exc:
                report[side] = None
                report[f"{side}_error"] = type(exc).__name__
        files["pole_check"] = str(cio.write_json(out / "pole_check.json", report))
        print(f"north pole slope {report['north']:.6f} (|m| = {idx.mu:g})")
    return files


def _potential(path):
    if path is None:
        return None
    _, rows = cio.read_csv(path)
    data = np.array([[float(a), float(b)] for a, b, *_ in rows])
    order = np.argsort(data[:, 0])
    th, val = data[order, 0], data[order, 1]
    return lambda theta: np.interp(theta, th, val)


def cmd_eigen(params, out: Path) -> dict:
    from . import galerkin as gal
    from .angular import ModeIndex
    _require(params, "ell", "m")
    ns = parse_int_list(params["N"])
    if params["table_check"] == "galerkin" and len(ns) == 1:
        # the first table ratio needs the row at half the smallest table size
        ns = [GALERKIN_NS[0] // 2, *GALERKIN_NS]
    idx = ModeIndex(params["ell"], params["m"])
    pot = _potential(params["potential"])
    files = {}
    if len(ns) == 1:
        res = gal.mode_eigenvalue(idx, ns[0], pot)
        record = {"mode": [idx.ell, idx.m], "N": ns[0], "lambda": res.lam.real, "alpha": res.alpha,
                  "residual": res.residual, "lambda_alpha_roundtrip": abs(res.alpha * (res.alpha + 1) - res.lam)}
        print(f"lambda = {res.lam.real:.17g}")
    else:
        rep = gal.convergence_study(idx, ns, pot)
        files["convergence"] = str(cio.write_csv(out / "convergence.csv", ("N", "delta", "ratio"),
                                                 [(n, d, "" if r is None else r) for n, d, r in rep.rows]))
        record = {"mode": [idx.ell, idx.m], "N": ns, "lambdas": {str(k): v for k, v in sorted(rep.lambdas.items())},
                  "regime": rep.regime, "domain": rep.domain}
        for n, d, r in rep.rows:
            print(f"N={n:4d} delta={d:.6e} ratio={'' if r is None else f'{r:.4f}'}")
    files["eigen"] = str(cio.write_json(out / "eigen.json", record))
    if params["table_check"] == "galerkin":
        rows = {n: (d, r) for n, d, r in rep.rows}
        ratios = {n: rows[n][1] for n in GALERKIN_NS if n in rows}
        deltas = [d for _, d, _ in rep.rows]
        ok_band = bool(ratios) and all(r is not None and GALERKIN_BAND[0] <= r <= GALERKIN_BAND[1]
                                       for r in ratios.values())
        ok_mono = all(b < a for a, b in zip(deltas, deltas[1:]))
        files.update(_table_result(out, "galerkin", ratios, GALERKIN_BAND, ok_band and ok_mono,
                                   {"strictly_decreasing": ok_mono}))
    return files


def _table_result(out, name, ratios, band, passed, extra=None):
    record = {"table": name, "band": list(band), "ratios": {str(k): v for k, v in ratios.items()},
              "passed": passed}
    record.update(extra or {})
    print(f"table check {name}: {'PASS' if passed else 'FAIL'}")
    return {"table_check": str(cio.write_json(out / "table_check.json", record)), "_passed": passed}


def cmd_field(params, out: Path) -> dict:
    from . import spectral as sp
    weight = _weight(params)
    reg = sp.RegularizationParams(params["rc"]) if params["rc"] else None
    n = params["grid"]
    grid = sp.ErrorGrid(n, n, n)
    if weight.discrete:
        lq, mq = ([], []), ([], [])
    else:
        m_lo = 0.0 if params["weight"] == "constrained" else sp.DEFAULT_M_RANGE[0]
        lq = sp.MappedQuadConfig(params["n_ell"], params["c"], *sp.DEFAULT_ELL_RANGE)
        mq = sp.MappedQuadConfig(params["n_m"], params["c"], m_lo, sp.DEFAULT_M_RANGE[1])
    fg = sp.synthesize(weight, lq, mq, grid, reg=reg, components=params["components"])
    files = {"csv": str(cio.write_csv(out / "field.csv", ("r", "theta", "phi", "comp", "re", "im"), fg.long_rows()))}
    payload = {"r": fg.r_nodes, "theta": fg.theta_nodes, "phi": fg.phi_nodes,
               "components": int(fg.values.shape[0]),
               "re": [cio.fmt(v) for v in fg.values.real.ravel()],
               "im": [cio.fmt(v) for v in fg.values.imag.ravel()], "l2_norm": fg.l2_norm()}
    files["json"] = str(cio.write_json(out / "field.json", payload))
    print(f"grid L2 norm {fg.l2_norm():.17g}")
    return files


def cmd_convergence(params, out: Path) -> dict:
    from . import spectral as sp
    weight = _weight(params)
    ns = parse_int_list(params["N"])
    n = sp.FULL_GRID if params["full_grid"] else params["grid"]
    grid = sp.ErrorGrid(n, n, n)
    check = params["table_check"]
    rc = params["rc"]
    if check == "regularized" and not rc:
        rc = 0.05
    reg = sp.RegularizationParams(rc) if rc else None
    rep = sp.truncation_error(weight, ns, grid, reg=reg, c=params["c"])
    files = {"convergence": str(cio.write_csv(out / "convergence.csv", ("N", "error", "ratio"), rep.as_rows()))}
    for n_, e, r in rep.rows:
        print(f"N={n_:4d} error={e:.6e} ratio={'' if r is None else f'{r:.4f}'}")
    if check:
        ratios = {k: v for k, v in rep.ratios().items() if k in TABLE_NS}
        if check == "eisenstein":
            passed = bool(ratios) and all(EISENSTEIN_BAND[0] <= v <= EISENSTEIN_BAND[1] for v in ratios.values())
            files.update(_table_result(out, check, ratios, EISENSTEIN_BAND, passed))
        else:
            base = sp.truncation_error(weight, ns, grid, c=params["c"]).ratios()
            in_band = bool(ratios) and all(REGULARIZED_BAND[0] <= v <= REGULARIZED_BAND[1] for v in ratios.values())
            exceeds = all(ratios[k] > base[k] for k in ratios)
            files.update(_table_result(out, check, ratios, REGULARIZED_BAND, in_band and exceeds,
                                       {"unregularized": {str(k): base[k] for k in ratios}, "exceeds": exceeds}))
    return files


def cmd_energy(params, out: Path) -> dict:
    from . import energy as en
    _require(params, "ell")
    mode = en.EnergyMode(params["ell"], params["m"], params["phi0"], params["phi_law"])
    rep = en.energy_integral(mode, params["eps"], params["R"], params["phi0"])
    record = rep.as_dict()
    record.update({"ell": params["ell"], "m": params["m"], "admissible": en.admissible(params["ell"]),
                   "expected_exponent": 2.0 * params["ell"] + 1.0})
    seq = record.pop("cutoff_sequence")
    files = {"energy": str(cio.write_json(out / "energy.json", record)),
             "cutoff": str(cio.write_csv(out / "cutoff.csv", ("eps", "W"), seq))}
    print(f"verdict {rep.verdict}; fitted exponent {rep.fitted_epsilon_exponent:.6f}")
    return files


def cmd_cavity(params, out: Path) -> dict:
    from . import energy as en
    _require(params, "phi0")
    rec = en.cavity_analyze(en.CavitySpec(params["phi0"], params["a"], params["n"]))
    print(f"ell = {rec['ell']:.6g}, k1 a = {rec['k1a_estimate']:.6g}, energy {rec['energy_verdict']}")
    return {"cavity": str(cio.write_json(out / "cavity.json", rec))}


def _read_boundary(path, cfg):
    from .weightfit import BoundaryData, boundary_grid
    theta, tw, phi = boundary_grid(cfg)
    _, rows = cio.read_csv(path)
    if len(rows) != theta.size * phi.size:
        raise ValidationError("boundary data must cover the 32 x 64 fit grid", rows=len(rows))
    arr = np.array([[float(v) for v in row[:6]] for row in rows])
    samples = np.empty((2, theta.size, phi.size), dtype=complex)
    samples[0] = (arr[:, 2] + 1j * arr[:, 3]).reshape(theta.size, phi.size)
    samples[1] = (arr[:, 4] + 1j * arr[:, 5]).reshape(theta.size, phi.size)
    if not (np.allclose(arr[:, 0].reshape(theta.size, phi.size)[:, 0], theta, atol=1e-9)
            and np.allclose(arr[:, 1].reshape(theta.size, phi.size)[0], phi, atol=1e-9)):
        raise ValidationError("boundary sample nodes do not match the fit grid")
    return BoundaryData(cfg.radius, theta, tw, phi, samples, cfg.phi0)


def cmd_fit(params, out: Path) -> dict:
    from . import weightfit as wf
    from .errors import IterationCap
    cfg = wf.FitConfig(lambda_div=params["lambda_div"], mu0=params["mu0"], max_iter=params["max_iter"],
                       ell_min=params["ell_min"], radius=params["radius"])
    model = wf.FitModel(cfg)
    if params["data"]:
        data = _read_boundary(params["data"], cfg)
        truth = None
    else:
        truth = wf.WeightParams(*parse_float_list(params["truth"], "truth"))
        data = wf.synthetic_boundary(truth, cfg, model)
    init = wf.WeightParams(*parse_float_list(params["init"], "init"))
    res = wf.optimize(data, init, cfg, model)
    record = {"params": res.params.as_dict(), "status": res.status, "iterations": res.iterations,
              "boundary_error": res.boundary_error, "gradient_check": res.gradient_check}
    if truth is not None:
        record["truth"] = truth.as_dict()
        record["relative_error"] = {k: abs(v - truth.as_dict()[k]) / abs(truth.as_dict()[k])
                                    for k, v in res.params.as_dict().items()}
    files = {"params": str(cio.write_json(out / "params.json", record)),
             "trace": str(cio.write_csv(out / "fit_trace.csv", wf.TRACE_HEADER, res.trace_rows()))}
    p = res.params
    print(f"A={p.A:.6g} p={p.p:.6g} q={p.q:.6g} beta={p.beta:.6g} boundary error {100 * res.boundary_error:.4f}%")
    if res.capped:
        files["_error"] = IterationCap("iteration cap reached; best iterate returned", iterations=res.iterations)
    return files


def cmd_solve_mode(params, out: Path) -> dict:
    from . import coupling as cp
    from . import radial as rd
    from .angular import ModeIndex
    _require(params, "ell", "m")
    idx = ModeIndex(params["ell"], params["m"])
    cfg = rd.SolverConfig(k=params["k"], r_inner=params["r_inner"], r_outer=params["r_outer"],
                          n_radial=params["n_radial"], tol=params["tol"], max_iter=params["max_iter"])
    proj = cp.projections(idx, strict=False)
    over = {}
    for key, field_name in (("b_theta", "b_theta"), ("b_phi", "b_phi"), ("coupling", "c_thetaphi")):
        if params[key] is not None:
            over[field_name] = _complex(params[key], key)
    if over:
        from dataclasses import replace
        proj = replace(proj, **over)
    coeffs = rd.HomogeneousCoeffs(alpha=params["alpha"], beta=params["beta"])
    sol = rd.coupled_solve(idx, coeffs, cfg, proj)
    files = {
        "solution": str(cio.write_csv(out / "solution.csv",
                                      ("r", "er_re", "er_im", "etheta_re", "etheta_im", "ephi_re", "ephi_im"),
                                      sol.rows())),
        "summary": str(cio.write_json(out / "solve.json", {
            "mode": [idx.ell, idx.m], "iterations": sol.iterations,
            "contraction_estimate": sol.contraction_estimate, "contraction_bound": sol.contraction_bound,
            "residuals": sol.residuals, "projections": proj.as_dict()})),
    }
    print(f"converged in {sol.iterations} iterations; observed ratio {sol.contraction_estimate:.3e}, "
          f"bound {sol.contraction_bound:.3e}")
    return files


COMMANDS = {
    "basis": cmd_basis, "eigen": cmd_eigen, "field": cmd_field, "convergence": cmd_convergence,
    "energy": cmd_energy, "cavity": cmd_cavity, "fit": cmd_fit, "solve-mode": cmd_solve_mode,
}


def _error_record(exc: ContspecError) -> dict:
    record = exc.record()
    record["exit_code"] = exc.exit_code
    return record


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = next((a for a in argv if a in COMMANDS), None)
    out = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        out = Path(args.out) if args.out else Path("contspec_out") / command
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "out", "config", "seed")}
        config = read_config(args.config) if args.config else {}
        params = resolve(DEFAULTS[command], config, flags)
        out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[command](params, out)
        pending = files.pop("_error", None)
        passed = files.pop("_passed", True)
        outputs = {k: Path(v).name for k, v in files.items()}
        manifest = {"command": command, "parameters": params, "seed": args.seed, "version": __version__,
                    "backend": _accel.backend(), "outputs": outputs}
        cio.write_json(out / "manifest.json", manifest)
        if pending is not None:
            raise pending
        return 0 if passed else TABLE_CHECK_FAILED
    except ContspecError as exc:
        record = _error_record(exc)
        if out is None and "--out" in argv:
            i = argv.index("--out")
            out = Path(argv[i + 1]) if i + 1 < len(argv) else None
        if out is None:
            out = Path("contspec_out") / (command or "error")
        try:
            cio.write_json(out / "error.json", record)
        except OSError:
            pass
        print(f"error: {record['error']}: {record['message']}", file=sys.stderr)
        print(cio.dumps(record), end="", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
