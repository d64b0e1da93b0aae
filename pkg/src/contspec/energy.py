"""Energy integrals, admissibility predicates and near-origin field laws.

Energies are evaluated on a cutoff sequence ``eps_k = R 2^{-k}``; a sequence
is called convergent when its last relative change is below ``CAUCHY_TOL``.
Units take ``eps0 = mu0 = 1`` unless given, and ``omega = k``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import specfun
from .angular import ModeIndex, normalization, theta_profile, vector_mode_grid
from .errors import FitDegenerate, GridTooCoarse, NearPole, ValidationError
from .quadrature import tanh_sinh_nested
from .spectral import FieldGrid

CAUCHY_TOL = 1e-3
EPS_FLOOR = 1e-30
SEGMENT_ORDER = 16
EXPONENT_LEVELS = 10
POLE_EXCLUSION = 0.05
MIN_FIT_SAMPLES = 8
STENCIL = 5
TWO_PI = 2.0 * math.pi


@dataclass
class CutoffSequence:
    eps: list
    values: list
    verdict: str
    exponent: float
    increments: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.eps, self.values))


def _segment(integrand, a: float, b: float) -> float:
    """∫_a^b f(x) dx by Gauss-Legendre in log x (exact for smooth power laws)."""
    t, w = np.polynomial.legendre.leggauss(SEGMENT_ORDER)
    la, lb = math.log(a), math.log(b)
    lx = 0.5 * (lb - la) * (t + 1.0) + la
    x = np.exp(lx)
    return float(np.sum(w * integrand(x) * x) * 0.5 * (lb - la))


def _integral(integrand, a: float, b: float) -> float:
    """∫_a^b f over dyadic segments in log x."""
    total = 0.0
    hi = b
    while hi > a:
        lo = max(hi / 2.0, a)
        total += _segment(integrand, lo, hi)
        hi = lo
    return total


def increment_exponent(eps, values, increments=None) -> float:
    """Slope of log|W(eps_{k+1}) - W(eps_k)| against log eps_k over the last levels.

    ``increments`` are the per-level segment integrals; when given they replace
    differences of the cumulative values, which lose digits once the sum has
    converged.
    """
    eps = np.asarray(eps, dtype=float)
    if increments is None:
        inc = np.abs(np.diff(np.asarray(values, dtype=float)))
    else:
        inc = np.abs(np.asarray(increments, dtype=float)[1:])
    e = eps[:-1]
    keep = inc > 0
    e, inc = e[keep][-EXPONENT_LEVELS:], inc[keep][-EXPONENT_LEVELS:]
    if e.size < 2:
        return math.nan
    return float(np.polyfit(np.log(e), np.log(inc), 1)[0])


def cutoff_sequence(integrand, upper: float, floor: float = EPS_FLOOR) -> CutoffSequence:
    """W(eps) = ∫_eps^upper f over eps = upper/2, upper/4, ... down to ``floor``."""
    if not upper > 0.0:
        raise ValidationError("upper limit must be positive")
    eps = []
    values = []
    increments = []
    hi = upper
    total = 0.0
    while hi / 2.0 >= floor:
        lo = hi / 2.0
        piece = _segment(integrand, lo, hi)
        total += piece
        eps.append(lo)
        values.append(total)
        increments.append(piece)
        hi = lo
    return _verdict(eps, values, increments)


def _verdict(eps, values, increments) -> CutoffSequence:
    last = values[-1]
    rel = abs(increments[-1]) / max(abs(last), 1e-300)
    finite = all(math.isfinite(v) for v in values)
    verdict = "convergent" if finite and rel < CAUCHY_TOL else "divergent"
    return CutoffSequence(eps, values, verdict, increment_exponent(eps, values, increments), increments)


def admissible(ell: float) -> bool:
    """Finite-energy criterion ell > -1/2."""
    return ell > -0.5


def lambda_admissible(lam: float) -> bool:
    """Equivalent eigenvalue form lambda > -3/4."""
    return lam > -0.75


@dataclass(frozen=True)
class EnergyMode:
    """Single-mode field with E_r = r^{ell-1} Psi and the component laws
    E_θ ~ ell/r and E_φ ~ m r^{ell-1} sin^{|m|-1} θ (regularized law).

    ``phi_law = "unregularized"`` uses E_φ ~ m r^{-3} sin^{-2} θ as a diagnostic.
    """

    ell: float
    m: float = 0.0
    phi0: float = TWO_PI
    phi_law: str = "regularized"


@dataclass
class EnergyReport:
    W_r: float
    W_theta: float
    W_phi: float
    cutoff_sequence: list
    verdict: str
    fitted_epsilon_exponent: float
    component_exponents: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"W_r": self.W_r, "W_theta": self.W_theta, "W_phi": self.W_phi, "verdict": self.verdict,
                "fitted_epsilon_exponent": self.fitted_epsilon_exponent,
                "component_exponents": self.component_exponents,
                "cutoff_sequence": [list(row) for row in self.cutoff_sequence]}


def polar_norm_squared(ell: float, mu: float, level: int = 7) -> float:
    """∫_0^π |P(ell, mu; cos θ)|^2 sin θ dθ by the double-exponential rule."""
    z, w, wt, coarse = tanh_sinh_nested(level)
    p, _, status = K.ferrers_table_zw(np.array([ell]), np.array([mu]), z, w, False)
    if status[0] != K.OK:
        specfun._raise_status(int(status[0]), "polar norm", ell=ell, mu=mu)
    terms = 2.0 * p[0] ** 2 * wt
    return float(np.sum(terms))


def angular_density(ell: float, m: float, phi0: float) -> float:
    """∫|Psi|^2 dΩ of the radial-component angular factor.

    For ell > -1/2 the factor is N P e^{imφ}; below that the normalization
    constant does not exist and the factor is scaled to unit polar norm.
    """
    if ell > -0.5:
        nrm = normalization(ModeIndex(ell, m, phi0))
        return phi0 * nrm * nrm * polar_norm_squared(ell, abs(m))
    return phi0


def _sin_power_integral(power: float):
    """∫_0^π sin^power θ dθ as a cutoff sequence in the distance from both poles."""
    seq = cutoff_sequence(lambda t: np.sin(t) ** power, math.pi / 2.0)
    return seq


def energy_integral(source, eps: float, R: float, phi0: float = TWO_PI, eps0: float = 1.0,
                    mu0: float = 1.0, H: FieldGrid = None, floor: float = EPS_FLOOR) -> EnergyReport:
    """(1/4)∫(eps0|E|^2 + mu0|H|^2) r^2 dr dΩ over eps < r < R.

    ``source`` is an :class:`EnergyMode` (component laws, full cutoff sequence)
    or a :class:`FieldGrid` (grid quadrature restricted to r >= eps).
    """
    if not 0.0 < eps < R:
        raise ValidationError("need 0 < eps < R", eps=eps, R=R)
    if isinstance(source, FieldGrid):
        return _grid_energy(source, eps, eps0, mu0, H)
    if not isinstance(source, EnergyMode):
        raise ValidationError("energy source must be an EnergyMode or a FieldGrid")
    ell, m = source.ell, source.m
    if not ell > abs(m) - 1.0:
        raise ValidationError("mode requires ell > |m| - 1", ell=ell, m=m)
    mu = abs(m)
    a_r = angular_density(ell, m, source.phi0)
    comps = {
        "r": (a_r, lambda r: r ** (2.0 * ell)),
        "theta": (ell * ell * 2.0 * source.phi0, lambda r: np.ones_like(r)),
    }
    if mu > 0.0:
        if source.phi_law == "regularized":
            ang = _sin_power_integral(2.0 * mu - 1.0)
            a_phi = m * m * source.phi0 * 2.0 * ang.values[-1]
            comps["phi"] = (a_phi, lambda r: r ** (2.0 * ell))
        elif source.phi_law == "unregularized":
            ang = _sin_power_integral(-3.0)
            a_phi = m * m * source.phi0 * 2.0 * ang.values[-1]
            comps["phi"] = (a_phi, lambda r: r ** -4.0)
        else:
            raise ValidationError(f"unknown phi law {source.phi_law!r}")
    scale = 0.25 * eps0
    seqs = {name: cutoff_sequence(lambda r, f=f, a=a: scale * a * f(r), R, floor) for name, (a, f) in comps.items()}
    n = min(len(s.values) for s in seqs.values())
    eps_list = seqs["r"].eps[:n]
    total = [sum(s.values[k] for s in seqs.values()) for k in range(n)]
    pieces = [sum(s.increments[k] for s in seqs.values()) for k in range(n)]
    summary = _verdict(eps_list, total, pieces)

    exps = {name: s.exponent for name, s in seqs.items()}
    return EnergyReport(
        W_r=scale * a_r * _integral(comps["r"][1], eps, R),
        W_theta=scale * comps["theta"][0] * _integral(comps["theta"][1], eps, R),
        W_phi=scale * comps["phi"][0] * _integral(comps["phi"][1], eps, R) if "phi" in comps else 0.0,
        cutoff_sequence=list(zip(eps_list, total)),
        verdict=summary.verdict,
        fitted_epsilon_exponent=exps["r"],
        component_exponents=exps,
    )


def _grid_energy(grid: FieldGrid, eps: float, eps0: float, mu0: float, H: FieldGrid) -> EnergyReport:
    rw, tw, pw = grid.weights
    keep = np.asarray(grid.r_nodes) >= eps
    w = np.einsum("r,t,p->rtp", rw * keep, tw, pw)
    parts = [0.25 * eps0 * float(np.sum(np.abs(c) ** 2 * w)) for c in grid.values]
    if H is not None:
        for i, c in enumerate(H.values):
            parts[i % len(parts)] += 0.25 * mu0 * float(np.sum(np.abs(c) ** 2 * w))
    parts += [0.0] * (3 - len(parts))
    total = sum(parts)
    return EnergyReport(parts[0], parts[1], parts[2], [(eps, total)], "convergent", math.nan)


@dataclass
class RadialFit:
    slope: float
    residual: float


def fit_radial_exponent(r, values) -> RadialFit:
    """Least-squares slope of log|E| against log r."""
    r = np.asarray(r, dtype=float)
    mag = np.abs(np.asarray(values))
    if r.size < MIN_FIT_SAMPLES or r.size != mag.size:
        raise FitDegenerate("need at least 8 samples for the exponent fit", n=int(r.size))
    if np.any(r <= 0) or np.any(mag <= 0) or np.ptp(np.log(r)) == 0:
        raise FitDegenerate("samples must be positive with distinct radii")
    A = np.vstack([np.log(r), np.ones_like(r)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(mag), rcond=None)
    resid = np.log(mag) - A @ coef
    return RadialFit(float(coef[0]), float(np.sqrt(np.mean(resid ** 2))))


def _pattern(idx: ModeIndex, family: str, theta, phi):
    """Components and θ-derivatives of an angular vector pattern."""
    if family == "vector":
        return vector_mode_grid(idx, theta, phi, with_derivatives=True)
    p, dp, d2p = theta_profile(idx, theta, derivative=True)
    st, ct = np.sin(theta), np.cos(theta)
    phase = np.exp(1j * idx.m * np.asarray(phi))
    zero = np.zeros((len(theta), len(phase)), dtype=complex)
    im = 1j * idx.m
    if family == "radial":
        c = np.stack([np.outer(p, phase), zero, zero])
        d = np.stack([np.outer(dp, phase), zero, zero])
    elif family == "even":
        c = np.stack([zero, np.outer(dp, phase), np.outer(im * p / st, phase)])
        d = np.stack([zero, np.outer(d2p, phase), np.outer(im * (dp / st - p * ct / st ** 2), phase)])
    elif family == "odd":
        c = np.stack([zero, np.outer(im * p / st, phase), np.outer(-dp, phase)])
        d = np.stack([zero, np.outer(im * (dp / st - p * ct / st ** 2), phase), np.outer(-d2p, phase)])
    else:
        raise ValidationError(f"unknown pattern family {family!r}")
    return c, d


def divergence_residual(idx: ModeIndex, alpha: float, theta, phi, family: str = "vector") -> float:
    """max |(alpha+2) Φ_r + (1/sinθ) ∂θ(sinθ Φ_θ) + (1/sinθ) ∂φ Φ_φ| over the samples."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if np.any((theta <= POLE_EXCLUSION) | (theta >= math.pi - POLE_EXCLUSION)):
        raise NearPole("divergence samples must lie in (0.05, π - 0.05)")
    c, d = _pattern(idx, family, theta, phi)
    st = np.sin(theta)[:, None]
    ct = np.cos(theta)[:, None]
    div = (alpha + 2.0) * c[0] + d[1] + ct / st * c[1] + 1j * idx.m * c[2] / st
    return float(np.max(np.abs(div)))


def fd_matrix(x, stencil: int = STENCIL) -> np.ndarray:
    """First-derivative matrix with Fornberg weights on ``stencil`` nearest nodes."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < stencil:
        raise GridTooCoarse("fewer nodes than the derivative stencil", n=n, stencil=stencil)
    D = np.zeros((n, n))
    half = stencil // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - stencil)
        idx = np.arange(lo, lo + stencil)
        D[i, idx] = _fornberg(x[i], x[idx])
    return D


def _fornberg(x0: float, xs) -> np.ndarray:
    """Weights of the first derivative at x0 from nodes xs (Fornberg 1988)."""
    n = len(xs)
    c = np.zeros((n, 2))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, 1)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, 1]


def _derivatives(grid: FieldGrid):
    """Partial derivatives of every component along r, θ and φ."""
    v = grid.values
    Dr = fd_matrix(grid.r_nodes)
    Dt = fd_matrix(grid.theta_nodes)
    dr = np.einsum("ij,cjtp->citp", Dr, v)
    dt = np.einsum("ij,crjp->crip", Dt, v)
    if grid.azimuthal_order is not None:
        dp = 1j * grid.azimuthal_order * v
    else:
        dp = np.einsum("ij,crtj->crti", fd_matrix(grid.phi_nodes), v)
    return dr, dt, dp


def curl(grid: FieldGrid) -> np.ndarray:
    """Spherical curl of a 3-component grid field by fourth-order stencils."""
    if grid.values.shape[0] != 3:
        raise ValidationError("curl needs a 3-component field")
    r = np.asarray(grid.r_nodes)[:, None, None]
    st = np.sin(np.asarray(grid.theta_nodes))[None, :, None]
    ct = np.cos(np.asarray(grid.theta_nodes))[None, :, None]
    er, et, ep = grid.values
    dr, dt, dp = _derivatives(grid)
    out = np.empty_like(grid.values)
    out[0] = (ct * ep + st * dt[2] - dp[1]) / (r * st)
    out[1] = (dp[0] / st - (ep + r * dr[2])) / r
    out[2] = (et + r * dr[1] - dt[0]) / r
    return out


def curl_magnetic(grid: FieldGrid, k: float, mu0: float = 1.0) -> FieldGrid:
    """H = ∇×E / (i ω mu0) with ω = k."""
    if k == 0:
        raise ValidationError("frequency must be nonzero")
    H = curl(grid) / (1j * k * mu0)
    return FieldGrid(grid.r_nodes, grid.theta_nodes, grid.phi_nodes, H, grid.weights, grid.azimuthal_order)


def te_mode_field(ell: int, m: int, k: float, r, theta) -> FieldGrid:
    """Transverse-electric multipole j_ell(kr) X_{ell m} as a single-order grid."""
    from .specfun import sph_bessel
    idx = ModeIndex(float(ell), float(m))
    c, _ = _pattern(idx, "odd", np.asarray(theta), np.array([0.0]))
    jl = np.array([sph_bessel("j", float(ell), k * x).real for x in np.asarray(r)])
    values = jl[None, :, None, None] * c[:, None, :, :]
    return FieldGrid(np.asarray(r), np.asarray(theta), np.array([0.0]), values, None, float(m))


def maxwell_residual(E: FieldGrid, k: float, trim: int = 3) -> dict:
    """Relative residuals of ∇×H + iωE = 0 and ∇×∇×E - k^2 E = 0 away from grid edges."""
    H = curl_magnetic(E, k)
    curl_h = curl(H)
    cc = curl(FieldGrid(E.r_nodes, E.theta_nodes, E.phi_nodes, curl(E), None, E.azimuthal_order))
    inner = np.s_[:, trim:-trim, trim:-trim, :]
    norm_e = np.linalg.norm(E.values[inner])
    ampere = np.linalg.norm((curl_h + 1j * k * E.values)[inner]) / (k * norm_e)
    helm = np.linalg.norm((cc - k * k * E.values)[inner]) / (k * k * norm_e)
    return {"ampere": float(ampere), "helmholtz": float(helm)}


@dataclass(frozen=True)
class CavitySpec:
    phi0: float
    a: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.phi0 <= TWO_PI + 1e-12:
            raise ValidationError("opening angle must lie in (0, 2π]", phi0=self.phi0)
        if not self.a > 0.0 or self.n < 1:
            raise ValidationError("need a > 0 and n >= 1")


def cavity_analyze(spec: CavitySpec) -> dict:
    """Index, frequency estimate, energy verdicts and near-origin laws of a wedge cavity mode."""
    ell = spec.n * spec.phi0 / TWO_PI
    radial = cutoff_sequence(lambda r: r ** (2.0 * ell), spec.a)
    angular = _sin_power_integral(2.0 * ell - 1.0)
    r = np.geomspace(1e-6, 1e-3, 16)
    transverse = fit_radial_exponent(r, r ** (ell - 1.0))
    radial_law = fit_radial_exponent(r, r ** ell)
    verdict = "convergent" if radial.verdict == angular.verdict == "convergent" else "divergent"
    return {
        "ell": ell,
        "m": ell,
        "k1a_estimate": math.sqrt(2.0 * ell),
        "k1_estimate": math.sqrt(2.0 * ell) / spec.a,
        "radial_energy_verdict": radial.verdict,
        "angular_energy_verdict": angular.verdict,
        "energy_verdict": verdict,
        "transverse_exponent": ell - 1.0,
        "fitted_transverse_exponent": transverse.slope,
        "radial_component_exponent": ell,
        "fitted_radial_component_exponent": radial_law.slope,
        "predicate_admissible": admissible(ell) and ell > 0.0,
    }


def single_mode_profile(ell: float, m: float, r, theta: float = 1.0, phi: float = 0.3):
    """|E_r| of the synthesized single mode r^{ell-1} Psi along a ray."""
    from .spectral import SampleGrid, SpectralWeight, synthesize
    grid = SampleGrid(tuple(np.asarray(r, dtype=float)), (theta,), (phi,))
    weight = SpectralWeight.single_mode(ell, m)
    field_grid = synthesize(weight, ([], []), ([], []), grid)
    return field_grid.values[0, :, 0, 0]


__all__ = [
    "CutoffSequence", "EnergyMode", "EnergyReport", "RadialFit", "CavitySpec",
    "cutoff_sequence", "admissible", "lambda_admissible", "energy_integral", "fit_radial_exponent",
    "divergence_residual", "curl", "curl_magnetic", "te_mode_field", "maxwell_residual",
    "cavity_analyze", "single_mode_profile", "polar_norm_squared", "angular_density",
]
