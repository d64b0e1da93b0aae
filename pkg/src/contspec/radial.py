"""Radial Green's function, kernel integrals and the coupled fixed-point solver.

The angular components obey the spherical Bessel equation of order
``nu = sqrt(ell(ell+1) - 1)``. In self-adjoint form

    (r² u')' + (k² r² - nu(nu+1)) u = f,

the Green's function is ``G(r, r') = k j_nu(k r<) y_nu(k r>)``, symmetric in
its arguments, and a source ``S`` of the r⁻²-scaled equation enters as
``f = r² S``. Integrals over [r_inner, r_outer] use composite Gauss-Legendre
panels graded toward the inner cutoff; the panel holding the evaluation point
is split there so the kink of G does not spoil the rule.
"""

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .angular import ModeIndex, eval_psi
from .coupling import ProjectionSet
from .errors import (
    ComplexOrderUnsupported,
    MaxIterExceeded,
    NotContractive,
    QuadratureStall,
    UnsupportedPoleOrder,
    ValidationError,
)
from .quadrature import composite_gauss, graded_panels

PANEL_RATIO = 2.0
RESIDUE_STEP = 1e-5
NOT_CONTRACTIVE_RUN = 5


@dataclass(frozen=True)
class SolverConfig:
    k: float = 1.0
    r_inner: float = 1e-5
    r_outer: float = 10.0
    n_radial: int = 24
    tol: float = 1e-8
    max_iter: int = 200
    order: int = 16
    allow_complex_order: bool = False

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError("k must be positive", k=self.k)
        if not 0.0 <= self.r_inner < self.r_outer:
            raise ValidationError("need 0 <= r_inner < r_outer", r_inner=self.r_inner, r_outer=self.r_outer)
        if not self.tol > 0:
            raise ValidationError("tol must be positive", tol=self.tol)
        if self.n_radial < 1 or self.order < 2 or self.max_iter < 1:
            raise ValidationError("n_radial, order and max_iter must be positive")


@dataclass(frozen=True)
class HomogeneousCoeffs:
    c1: complex = 0j
    c2: complex = 0j
    d1: complex = 0j
    d2: complex = 0j
    alpha: complex = 1.0 + 0j
    beta: complex = 0j


REGULAR_SOURCE = HomogeneousCoeffs(alpha=0.5, beta=0.5)


@dataclass
class RadialSolution:
    mode: ModeIndex
    grid: np.ndarray
    e_r: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray
    iterations: int
    contraction_estimate: float
    contraction_bound: float = float("nan")
    residuals: list = field(default_factory=list)

    def rows(self):
        return [(r, a.real, a.imag, b.real, b.imag, c.real, c.imag)
                for r, a, b, c in zip(self.grid, self.e_r, self.e_theta, self.e_phi)]


def bessel_order(ell: float, allow_complex: bool = False):
    """nu = sqrt(ell(ell+1) - 1); complex orders only behind the research flag."""
    rad = ell * (ell + 1.0) - 1.0
    if rad >= 0.0:
        return math.sqrt(rad)
    if not allow_complex:
        raise ComplexOrderUnsupported("ell(ell+1) < 1 gives a complex Bessel order", ell=ell)
    return complex(0.0, math.sqrt(-rad))


def _jy(nu, x):
    """(j_nu(x), y_nu(x)) on an array; complex orders use the small-x series."""
    x = np.asarray(x, dtype=float)
    if isinstance(nu, complex):
        j = np.array([specfun.sph_bessel("j", nu, t) for t in x.ravel()]).reshape(x.shape)
        y = np.array([specfun.sph_bessel("y", nu, t) for t in x.ravel()]).reshape(x.shape)
        return j, y
    return specfun.sph_bessel_array("j", nu, x).real, specfun.sph_bessel_array("y", nu, x).real


def _djy(nu, x):
    x = np.asarray(x, dtype=float)
    j0, y0 = _jy(nu, x)
    j1, y1 = _jy(nu - 1.0, x)
    return j1 - (nu + 1.0) / x * j0, y1 - (nu + 1.0) / x * y0


def radial_er(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig, r: float) -> complex:
    """alpha h1_ell(k r) + beta h2_ell(k r)."""
    if not cfg.r_inner < r <= cfg.r_outer:
        raise ValidationError("r outside (r_inner, r_outer]", r=r)
    x = cfg.k * r
    h1 = specfun.sph_bessel("h1", mode.ell, x)
    h2 = specfun.sph_bessel("h2", mode.ell, x)
    return complex(coeffs.alpha * h1 + coeffs.beta * h2)


def radial_er_array(mode: ModeIndex, coeffs: HomogeneousCoeffs, k: float, r, derivative: bool = False):
    x = k * np.asarray(r, dtype=float)
    if derivative:
        h1 = k * specfun.sph_bessel_deriv_array("h1", mode.ell, x)
        h2 = k * specfun.sph_bessel_deriv_array("h2", mode.ell, x)
    else:
        h1 = specfun.sph_bessel_array("h1", mode.ell, x)
        h2 = specfun.sph_bessel_array("h2", mode.ell, x)
    return coeffs.alpha * h1 + coeffs.beta * h2


def greens_theta(nu, cfg: SolverConfig, r: float, rp: float):
    """k j_nu(k min(r, r')) y_nu(k max(r, r'))."""
    lo, hi = (r, rp) if r <= rp else (rp, r)
    j = specfun.sph_bessel("j", nu, cfg.k * lo)
    y = specfun.sph_bessel("y", nu, cfg.k * hi)
    val = cfg.k * j * y
    return val.real if not isinstance(nu, complex) else val


def delta_mass(nu: float, cfg: SolverConfig, rp: float, n: int = 2000, window: int = 10) -> float:
    """Mass of the discrete self-adjoint operator applied to G(·, r').

    Uniform grid of ``n`` points on [r_lo, r_hi] with r' at a node; the
    operator is the conservative three-point flux difference.
    """
    lo = max(cfg.r_inner, 0.5 * rp)
    hi = min(cfg.r_outer, 1.5 * rp)
    h = (hi - lo) / (n - 1)
    i0 = int(round((rp - lo) / h))
    r = rp + h * (np.arange(n) - i0)
    r = r[r > 0]
    i0 = int(np.argmin(np.abs(r - rp)))
    g = np.array([greens_theta(nu, cfg, t, rp) for t in r])
    rh = 0.5 * (r[1:] + r[:-1])
    flux = rh ** 2 * np.diff(g) / h
    lg = np.zeros_like(g)
    lg[1:-1] = np.diff(flux) / h + (cfg.k ** 2 * r[1:-1] ** 2 - nu * (nu + 1.0)) * g[1:-1]
    sl = slice(max(i0 - window, 1), min(i0 + window + 1, len(r) - 1))
    return float(h * np.sum(lg[sl]))


def _lagrange_matrix(nodes, points):
    """Rows evaluate the interpolant through ``nodes`` at ``points``."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    centre = 0.5 * (nodes.max() + nodes.min())
    half = 0.5 * (nodes.max() - nodes.min())
    nodes = (nodes - centre) / half
    points = (points - centre) / half
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    d = points[:, None] - nodes[None, :]
    exact = d == 0.0
    d[exact] = 1.0
    mat = bw / d
    mat /= mat.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    for i in rows:
        mat[i] = exact[i].astype(float)
    return mat


class RadialOperator:
    """Discrete Green's-function integrals for one Bessel order on a panel grid."""

    def __init__(self, nu, cfg: SolverConfig, refine: int = 1):
        self.nu = nu
        self.cfg = cfg
        self.k = cfg.k
        edges = graded_panels(cfg.r_inner, cfg.r_outer, cfg.n_radial, PANEL_RATIO)
        if refine > 1:
            frac = np.arange(refine) / refine
            edges = np.append((edges[:-1, None] + np.diff(edges)[:, None] * frac).ravel(), edges[-1])
        self.edges = edges
        self.order = cfg.order
        self.nodes, self.weights = composite_gauss(self.edges, self.order)
        self.x_ref, self.w_ref = np.polynomial.legendre.leggauss(self.order)
        self.j, self.y = _jy(nu, self.k * self.nodes)
        self.dj, self.dy = _djy(nu, self.k * self.nodes)
        self.endpoint_rows = _lagrange_matrix(self.nodes[: self.order], [cfg.r_inner]), \
            _lagrange_matrix(self.nodes[-self.order:], [cfg.r_outer])

    @property
    def size(self) -> int:
        return self.nodes.size

    def _kernel(self, t, jt, yt, djt, dyt, x, jx, yx, djx, dyx, derivative):
        """G(t, x) or ∂G/∂x for arrays x at one target t."""
        k = self.k
        below = x < t
        if derivative:
            return np.where(below, k * k * djx * yt, k * k * jt * dyx)
        return np.where(below, k * jx * yt, k * jt * yx)

    def rows(self, targets, derivative: bool = False):
        """Matrix M with (M f)_i = ∫ K(t_i, r') f(r') dr' for f sampled on the nodes.

        ``derivative`` selects K = ∂G/∂r' instead of G.
        """
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        jt, yt = _jy(self.nu, self.k * targets)
        djt, dyt = _djy(self.nu, self.k * targets)
        dtype = complex if isinstance(self.nu, complex) else float
        out = np.zeros((targets.size, self.size), dtype=dtype)
        order = self.order
        for i, t in enumerate(targets):
            ker = self._kernel(t, jt[i], yt[i], djt[i], dyt[i], self.nodes, self.j, self.y,
                               self.dj, self.dy, derivative)
            row = ker * self.weights
            p = int(np.searchsorted(self.edges, t, side="right")) - 1
            if 0 <= p < len(self.edges) - 1 and self.edges[p] < t < self.edges[p + 1]:
                a, b = self.edges[p], self.edges[p + 1]
                sl = slice(p * order, (p + 1) * order)
                sub_x = np.concatenate([a + 0.5 * (t - a) * (self.x_ref + 1.0),
                                        t + 0.5 * (b - t) * (self.x_ref + 1.0)])
                sub_w = np.concatenate([0.5 * (t - a) * self.w_ref, 0.5 * (b - t) * self.w_ref])
                sj, sy = _jy(self.nu, self.k * sub_x)
                sdj, sdy = _djy(self.nu, self.k * sub_x)
                sker = self._kernel(t, jt[i], yt[i], djt[i], dyt[i], sub_x, sj, sy, sdj, sdy, derivative)
                interp = _lagrange_matrix(self.nodes[sl], sub_x)
                row[sl] = (sker * sub_w) @ interp
            out[i] = row
        return out

    def green_values(self, targets, rp: float):
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        return np.array([greens_theta(self.nu, self.cfg, t, rp) for t in targets])

    def endpoint_values(self, u):
        lo_rows, hi_rows = self.endpoint_rows
        return complex(lo_rows[0] @ u[: self.order]), complex(hi_rows[0] @ u[-self.order:])

    def transfer(self, targets):
        """Linear map u ↦ ∫ G(t, r') d/dr'[r'² u(r')] dr', integrated by parts."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        d_rows = self.rows(targets, derivative=True)
        mat = -d_rows * self.nodes ** 2
        r0, r1 = self.cfg.r_inner, self.cfg.r_outer
        lo_rows, hi_rows = self.endpoint_rows
        g_hi = self.green_values(targets, r1) * r1 ** 2
        mat[:, -self.order:] += np.outer(g_hi, hi_rows[0])
        if r0 > 0:
            g_lo = self.green_values(targets, r0) * r0 ** 2
            mat[:, : self.order] -= np.outer(g_lo, lo_rows[0])
        return mat


def _source_terms(mode, coeffs, cfg, proj, op: RadialOperator, targets):
    """Homogeneous-plus-E_r-driven parts (A for theta, B for phi) at the targets."""
    nodes = op.nodes
    der = radial_er_array(mode, coeffs, cfg.k, nodes, derivative=True)
    er = radial_er_array(mode, coeffs, cfg.k, nodes)
    g_rows = op.rows(targets)
    jt, yt = _jy(op.nu, cfg.k * np.atleast_1d(targets))
    a = coeffs.c1 * jt + coeffs.c2 * yt + proj.b_theta * (g_rows @ der)
    b = coeffs.d1 * jt + coeffs.d2 * yt + proj.b_phi * (g_rows @ er)
    return np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)


def _check_proj(proj: ProjectionSet):
    vals = [proj.b_theta, proj.b_phi, proj.c_thetaphi]
    if not all(cmath.isfinite(complex(v)) for v in vals):
        raise ValidationError("projections must be finite for the radial solve", singular=list(proj.singular))


def _stable_integral(fn, scale_floor: float = 1e-300):
    """Evaluate fn(refine) with every panel split 1, 2 and 4 ways; raise on stalled refinement."""
    vals = [fn(1), fn(2), fn(4)]
    e1 = abs(vals[1] - vals[0])
    e2 = abs(vals[2] - vals[1])
    scale = max(abs(vals[2]), scale_floor)
    if e2 > 1e-10 * scale and e2 > 0.5 * e1:
        raise QuadratureStall("panel refinement does not halve the error estimate",
                              estimates=[complex(v) for v in vals])
    return vals[2]


def kernel_theta(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig, r: float,
                 proj: ProjectionSet) -> complex:
    """B_θ ∫ G(r, r') dE_r/dr' dr' plus the homogeneous part, at one radius."""
    _check_proj(proj)
    if not cfg.r_inner < r < cfg.r_outer:
        raise ValidationError("r must be interior", r=r)
    nu = bessel_order(mode.ell, cfg.allow_complex_order)
    if proj.b_theta == 0 and coeffs.c1 == 0 and coeffs.c2 == 0:
        return 0j

    def at(refine):
        op = RadialOperator(nu, cfg, refine)
        a, _ = _source_terms(mode, coeffs, cfg, proj, op, [r])
        return complex(a[0])

    return _stable_integral(at)


def kernel_phi(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig, r: float,
               proj: ProjectionSet) -> complex:
    """First-order φ kernel: B_φ ∫ G E_r dr' + C* ∫ G d/dr'[r'² K_θ] dr' at one radius."""
    _check_proj(proj)
    if not cfg.r_inner < r < cfg.r_outer:
        raise ValidationError("r must be interior", r=r)
    nu = bessel_order(mode.ell, cfg.allow_complex_order)

    def at(refine):
        op = RadialOperator(nu, cfg, refine)
        a_nodes, _ = _source_terms(mode, coeffs, cfg, proj, op, op.nodes)
        _, b = _source_terms(mode, coeffs, cfg, proj, op, [r])
        coupling = np.conj(proj.c_thetaphi) * (op.transfer([r]) @ a_nodes)
        return complex(b[0] + coupling[0])

    return _stable_integral(at)


def loglog_slope(r, values) -> float:
    """Least-squares slope of log|values| against log r."""
    lr = np.log(np.asarray(r, dtype=float))
    lv = np.log(np.abs(np.asarray(values)))
    return float(np.polyfit(lr, lv, 1)[0])


def kernel_exponents(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig, proj: ProjectionSet,
                     window=(1e-3, 1e-2), n: int = 9) -> dict:
    """Small-r log-log slopes of the first-order kernels on ``window``."""
    r = np.geomspace(window[0], window[1], n)
    kt, kp = spectral_kernels_first_order(mode, coeffs, cfg, proj.scaled_coupling(0.0), r)
    _, kp1 = spectral_kernels_first_order(mode, coeffs, cfg, proj, r)
    out = {"theta": loglog_slope(r, kt)}
    out["phi"] = loglog_slope(r, kp1) if np.all(np.abs(kp1) > 0) else float("nan")
    out["phi_uncoupled"] = loglog_slope(r, kp) if np.all(np.abs(kp) > 0) else float("nan")
    return out


def spectral_kernels_first_order(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig,
                                 proj: ProjectionSet, r_grid):
    """K_θ = A - C T B and K_φ = B + C* T A, truncated at first order in the coupling."""
    _check_proj(proj)
    nu = bessel_order(mode.ell, cfg.allow_complex_order)
    op = RadialOperator(nu, cfg)
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    a_nodes, b_nodes = _source_terms(mode, coeffs, cfg, proj, op, op.nodes)
    a_t, b_t = _source_terms(mode, coeffs, cfg, proj, op, r_grid)
    c = complex(proj.c_thetaphi)
    if c == 0:
        return a_t, b_t
    tmat = op.transfer(r_grid)
    return a_t - c * (tmat @ b_nodes), b_t + np.conj(c) * (tmat @ a_nodes)


def contraction_bound(proj: ProjectionSet, op: RadialOperator) -> float:
    """(|C| ‖T‖∞)² for one full θ-then-φ sweep, ‖T‖∞ the discrete row-sum norm."""
    tmat = op.transfer(op.nodes)
    tnorm = float(np.max(np.sum(np.abs(tmat), axis=1)))
    return (abs(complex(proj.c_thetaphi)) * tnorm) ** 2


def coupled_solve(mode: ModeIndex, coeffs: HomogeneousCoeffs, cfg: SolverConfig,
                  proj: ProjectionSet) -> RadialSolution:
    """Alternating Green's-function updates of (E_θ, E_φ) from E_φ = 0."""
    _check_proj(proj)
    nu = bessel_order(mode.ell, cfg.allow_complex_order)
    op = RadialOperator(nu, cfg)
    grid = op.nodes
    a, b = _source_terms(mode, coeffs, cfg, proj, op, grid)
    c = complex(proj.c_thetaphi)
    tmat = op.transfer(grid)
    tnorm = float(np.max(np.sum(np.abs(tmat), axis=1)))
    bound = (abs(c) * tnorm) ** 2
    if bound >= 1.0:
        warnings.warn(f"contraction pre-estimate {bound:.3g} >= 1; attempting anyway", RuntimeWarning)
    e_th = np.zeros_like(a)
    e_ph = np.zeros_like(b)
    residuals = []
    ratio = 0.0
    above = 0
    for n in range(1, cfg.max_iter + 1):
        new_th = a - c * (tmat @ e_ph)
        new_ph = b + np.conj(c) * (tmat @ new_th)
        delta = max(np.max(np.abs(new_th - e_th)), np.max(np.abs(new_ph - e_ph)))
        scale = max(1.0, np.max(np.abs(new_th)), np.max(np.abs(new_ph)))
        e_th, e_ph = new_th, new_ph
        residuals.append(float(delta))
        if len(residuals) >= 2 and residuals[-2] > 0:
            ratio_n = residuals[-1] / residuals[-2]
            if delta > cfg.tol * scale:
                ratio = ratio_n
                above = above + 1 if ratio_n >= 1.0 else 0
                if above >= NOT_CONTRACTIVE_RUN:
                    raise NotContractive("residual ratio stayed >= 1", ratios=residuals[-6:], bound=bound)
        if delta <= cfg.tol * scale:
            er = radial_er_array(mode, coeffs, cfg.k, grid)
            return RadialSolution(mode=mode, grid=grid, e_r=er, e_theta=e_th, e_phi=e_ph,
                                  iterations=n - 1, contraction_estimate=float(ratio),
                                  contraction_bound=bound, residuals=residuals)
    raise MaxIterExceeded("fixed point not reached", max_iter=cfg.max_iter, last=residuals[-3:], bound=bound)


def _mode_value(ell: float, m: float, r: float, theta: float, phi: float) -> complex:
    """r^{alpha(ell)} Y(ell, m) with alpha = ell - 1."""
    psi = eval_psi(ModeIndex(ell, m), theta, phi).value
    return r ** (ell - 1.0) * psi


def residue_field(poles, mode_m: float, r: float, theta: float, phi: float) -> complex:
    """2πi Σ residues of a(ell) r^{ell-1} Y at real poles of order one or two.

    Each pole is ``(ell_n, order, data)``. For order one ``data`` is the
    residue of the weight; for order two it is the regular numerator
    N(ell) = (ell - ell_n)² a(ell), given as a callable or a constant, and the
    limit derivative is a central difference with step 1e-5.
    """
    total = 0j
    for ell_n, order, data in poles:
        ell_n = complex(ell_n)
        if abs(ell_n.imag) > 1e-14:
            raise ComplexOrderUnsupported("pole off the real ell axis", ell=str(ell_n))
        ell0 = ell_n.real
        if order == 1:
            total += 2j * math.pi * complex(data) * _mode_value(ell0, mode_m, r, theta, phi)
        elif order == 2:
            num = data if callable(data) else (lambda _e, c=complex(data): c)
            h = RESIDUE_STEP
            fp = num(ell0 + h) * _mode_value(ell0 + h, mode_m, r, theta, phi)
            fm = num(ell0 - h) * _mode_value(ell0 - h, mode_m, r, theta, phi)
            total += 2j * math.pi * (fp - fm) / (2.0 * h)
        else:
            raise UnsupportedPoleOrder("only simple and double poles are supported", order=order)
    return total
