"""Continuous spectral-integral field synthesis and truncation studies.

A field is the double integral over (ell, m) of ``a(ell, m) r^alpha Phi`` with
``Phi`` the scalar mode ``N P(ell, |m|; cos θ) e^{i m φ}`` or its promotion
to the three-component pattern ``(Psi, ∂θPsi/ell, i m Psi/(ell sin θ))``.
The integral is discretized by a tensor product of mapped Gauss-Legendre rules.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator, RegularGridInterpolator
from scipy.special import gammaln

from . import _kernels as K
from . import specfun
from .errors import AlphaTableMiss, DomainError, SingularIntegrand, ValidationError
from .quadrature import gauss_legendre, tanh_sinh_nested

TWO_PI = 2.0 * math.pi
DEFAULT_ELL_RANGE = (0.05, 3.0)
DEFAULT_M_RANGE = (-0.9, 0.9)
DEFAULT_CLUSTER = 1.0
REFERENCE_ELL_NODES = 160
REFERENCE_M_NODES_HALF = 80
DESK_GRID = 256
FULL_GRID = 1024
R_CHUNK = 32
DE_LEVEL = 6
BOUND_SLACK = 0.2


@dataclass(frozen=True)
class SpectralWeight:
    """Spectral weight a(ell, m).

    ``rational_peak``: ``A0 / ((1+(ell-ell0)^2)^{p/2} (1+(m-m0)^2)^{p/2})``.
    ``constrained_param``: ``A ell^p |m|^q exp(-beta (ell^2+m^2))``.
    ``tabulated``: ``table = (ell_nodes, m_nodes, values)``; with ``discrete`` the
    entries are point masses added directly to the field, otherwise the table is
    linearly interpolated and zero outside its hull.
    """

    form: str = "rational_peak"
    params: dict = field(default_factory=lambda: {"A0": 1.0, "ell0": 0.5, "m0": 0.3, "p": 3.0})
    table: tuple = None
    discrete: bool = False
    ell_min: float = DEFAULT_ELL_RANGE[0]

    def __post_init__(self):
        if self.form == "rational_peak":
            if not self.params.get("A0", 0.0) > 0.0:
                raise ValidationError("rational_peak requires A0 > 0", **self.params)
        elif self.form == "constrained_param":
            p = self.params["p"]
            if not p > 1.5 - self.ell_min:
                raise ValidationError("constrained_param requires p > 3/2 - ell_min", p=p, ell_min=self.ell_min)
            if not (self.params["A"] > 0 and self.params["q"] > 0 and self.params["beta"] > 0):
                raise ValidationError("constrained_param requires A, q, beta > 0", **self.params)
        elif self.form == "tabulated":
            if self.table is None:
                raise ValidationError("tabulated weight needs a table")
            ell, m, val = self.table
            if np.shape(val) != (len(ell), len(m)):
                raise ValidationError("table values must have shape (len(ell), len(m))")
        else:
            raise ValidationError(f"unknown weight form {self.form!r}")

    @classmethod
    def test_weight(cls, p: float = 3.0):
        return cls("rational_peak", {"A0": 1.0, "ell0": 0.5, "m0": 0.3, "p": float(p)})

    @classmethod
    def single_mode(cls, ell: float, m: float, amplitude: complex = 1.0):
        return cls("tabulated", {}, (np.array([ell]), np.array([m]), np.array([[amplitude]])), discrete=True)

    def __call__(self, ell, m):
        ell = np.asarray(ell, dtype=float)
        m = np.asarray(m, dtype=float)
        if self.form == "rational_peak":
            q = self.params
            return q["A0"] / ((1.0 + (ell - q["ell0"]) ** 2) ** (q["p"] / 2.0)
                              * (1.0 + (m - q["m0"]) ** 2) ** (q["p"] / 2.0))
        if self.form == "constrained_param":
            q = self.params
            return q["A"] * ell ** q["p"] * np.abs(m) ** q["q"] * np.exp(-q["beta"] * (ell ** 2 + m ** 2))
        if self.discrete:
            return np.zeros(np.broadcast(ell, m).shape)
        t_ell, t_m, val = self.table
        val = np.asarray(val)
        pts = np.stack(np.broadcast_arrays(ell, m), axis=-1)
        if len(t_ell) == 1 or len(t_m) == 1:
            raise ValidationError("interpolated table needs at least two nodes per axis")
        interp = RegularGridInterpolator((np.asarray(t_ell, float), np.asarray(t_m, float)), val,
                                         bounds_error=False, fill_value=0.0)
        return interp(pts).reshape(pts.shape[:-1])

    def point_masses(self):
        """(ell, m, amplitude) triples of a discrete table; empty otherwise."""
        if not (self.form == "tabulated" and self.discrete):
            return []
        t_ell, t_m, val = self.table
        out = []
        for i, ell in enumerate(t_ell):
            for j, m in enumerate(t_m):
                if val[i][j] != 0:
                    out.append((float(ell), float(m), complex(val[i][j])))
        return out


@dataclass(frozen=True)
class MappedQuadConfig:
    """Gauss-Legendre rule on [lo, hi] pulled through the symmetric tanh map."""

    n_nodes: int
    c: float = DEFAULT_CLUSTER
    lo: float = DEFAULT_ELL_RANGE[0]
    hi: float = DEFAULT_ELL_RANGE[1]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValidationError("n_nodes must be positive", n_nodes=self.n_nodes)
        if not self.c > 0.0:
            raise ValidationError("clustering parameter c must be positive", c=self.c)
        if not self.hi > self.lo:
            raise ValidationError("empty interval", lo=self.lo, hi=self.hi)


def mapped_nodes(cfg: MappedQuadConfig):
    """Nodes ``lo + (hi-lo)(tanh(c x) + tanh c)/(2 tanh c)`` and chain-rule weights."""
    x, w = np.polynomial.legendre.leggauss(cfg.n_nodes)
    span = cfg.hi - cfg.lo
    if cfg.c < 1e-8:
        return cfg.lo + span * (x + 1.0) / 2.0, w * span / 2.0
    t = math.tanh(cfg.c)
    u = (np.tanh(cfg.c * x) + t) / (2.0 * t)
    du = cfg.c / np.cosh(cfg.c * x) ** 2 / (2.0 * t)
    nodes = np.clip(cfg.lo + span * u, cfg.lo, cfg.hi)
    return nodes, w * span * du


def quad_points(spec):
    """Nodes and weights from a config, a list of configs (composite) or a (nodes, weights) pair."""
    if isinstance(spec, MappedQuadConfig):
        return mapped_nodes(spec)
    if isinstance(spec, (list, tuple)) and spec and all(isinstance(s, MappedQuadConfig) for s in spec):
        parts = [mapped_nodes(s) for s in spec]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    nodes, weights = spec
    return np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)


def split_rule(n_half: int, lo: float, hi: float, at: float = 0.0):
    """Affine Gauss-Legendre rule with a panel break at ``at``."""
    return [MappedQuadConfig(n_half, 1e-9, lo, at), MappedQuadConfig(n_half, 1e-9, at, hi)]


@dataclass(frozen=True)
class RegularizationParams:
    r_c: float = 0.05
    epsilon_theta: float = 0.0

    def __post_init__(self):
        if not self.r_c > 0.0:
            raise ValidationError("core radius must be positive", r_c=self.r_c)


def core_multiplier(r, r_c: float):
    """r^2 / (r^2 + r_c^2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("core multiplier needs r >= 0")
    r2 = r * r
    return r2 / (r2 + r_c * r_c)


def regularized_core(field_term, params: RegularizationParams, r):
    """Radial factor multiplied by the core function."""
    return np.asarray(field_term) * core_multiplier(r, params.r_c)


@dataclass(frozen=True)
class ErrorGrid:
    """Tensor grid for L² norms: Gauss in r (r² weights), Gauss in cos θ, Gauss in φ."""

    n_r: int = DESK_GRID
    n_theta: int = DESK_GRID
    n_phi: int = DESK_GRID
    r_lo: float = 0.1
    r_hi: float = 1.0
    phi0: float = TWO_PI

    def __post_init__(self):
        if not 0.0 < self.r_lo < self.r_hi:
            raise ValidationError("radial interval must satisfy 0 < r_lo < r_hi")

    def nodes(self):
        r, rw = gauss_legendre(self.n_r, self.r_lo, self.r_hi)
        x, xw = gauss_legendre(self.n_theta)
        order = np.argsort(-x)
        theta = np.arccos(x[order])
        phi, pw = gauss_legendre(self.n_phi, 0.0, self.phi0)
        return r, rw * r * r, theta, xw[order], phi, pw


@dataclass(frozen=True)
class SampleGrid:
    """Explicit sample nodes with unit weights, for profiles rather than norms."""

    r: tuple
    theta: tuple
    phi: tuple

    def nodes(self):
        r = np.asarray(self.r, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if np.any(r <= 0):
            raise ValidationError("radial sample nodes must be positive")
        return r, np.ones_like(r), theta, np.ones_like(theta), phi, np.ones_like(phi)


@dataclass
class FieldGrid:
    r_nodes: np.ndarray
    theta_nodes: np.ndarray
    phi_nodes: np.ndarray
    values: np.ndarray
    weights: tuple = None
    azimuthal_order: float = None

    def __post_init__(self):
        shape = (len(self.r_nodes), len(self.theta_nodes), len(self.phi_nodes))
        if self.values.ndim != 4 or self.values.shape[1:] != shape:
            raise ValidationError("field values must have shape (components, n_r, n_theta, n_phi)")
        if np.any(np.asarray(self.r_nodes) <= 0):
            raise ValidationError("radial nodes must be positive")

    def l2_norm(self, other=None) -> float:
        """Grid L² norm over all components, of ``self - other`` when given."""
        rw, tw, pw = self.weights
        diff = self.values if other is None else self.values - other.values
        total = 0.0
        for comp in diff:
            total += float(np.einsum("r,t,p,rtp->", rw, tw, pw, (comp * comp.conj()).real))
        return math.sqrt(total)

    def long_rows(self):
        """(r, theta, phi, comp, re, im) rows."""
        for c, comp in enumerate(self.values):
            for i, r in enumerate(self.r_nodes):
                for j, th in enumerate(self.theta_nodes):
                    for k, ph in enumerate(self.phi_nodes):
                        v = comp[i, j, k]
                        yield (r, th, ph, c, v.real, v.imag)


class AlphaTable:
    """Radial exponents on an (ell, m) tensor grid with barycentric interpolation."""

    def __init__(self, ell_nodes, m_nodes, alpha):
        self.ell = np.asarray(ell_nodes, dtype=float)
        self.m = np.asarray(m_nodes, dtype=float)
        self.alpha = np.asarray(alpha)
        if self.alpha.shape != (self.ell.size, self.m.size):
            raise ValidationError("alpha table must have shape (len(ell), len(m))")

    def __call__(self, ell, m):
        ell = np.atleast_1d(np.asarray(ell, dtype=float))
        m = np.atleast_1d(np.asarray(m, dtype=float))
        tol = 1e-12
        if (ell.min() < self.ell.min() - tol or ell.max() > self.ell.max() + tol
                or m.min() < self.m.min() - tol or m.max() > self.m.max() + tol):
            raise AlphaTableMiss("interpolation requested outside the eigen table",
                                 ell=(float(ell.min()), float(ell.max())), m=(float(m.min()), float(m.max())))
        along_ell = self._interp(self.ell, self.alpha, ell)
        return self._interp(self.m, along_ell.T, m).T

    @staticmethod
    def _interp(nodes, values, points):
        if nodes.size == 1:
            return np.repeat(values, points.size, axis=0)
        return BarycentricInterpolator(nodes, values)(points)


def log_normalization(ell, mu):
    """log N(ell, mu) for arrays; requires 2 ell + 1 > 0."""
    ell = np.asarray(ell, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(2.0 * ell + 1.0 <= 0.0):
        raise DomainError("normalization needs ell > -1/2")
    return 0.5 * (np.log((2.0 * ell + 1.0) / (4.0 * math.pi)) + gammaln(ell - mu + 1.0) - gammaln(ell + mu + 1.0))


def _theta_tables(ell, m, theta, components: str):
    """Per-mode polar profiles, shape (n_comp, n_mode, n_theta)."""
    mu = np.abs(m)
    vector = components == "vector"
    p, dp, status = K.ferrers_table(np.ascontiguousarray(ell), np.ascontiguousarray(mu),
                                    np.ascontiguousarray(theta), vector)
    bad = np.nonzero(status)[0]
    if bad.size:
        i = int(bad[0])
        specfun._raise_status(int(status[i]), "synthesis table", ell=float(ell[i]), mu=float(mu[i]))
    nrm = np.exp(log_normalization(ell, mu))[:, None]
    if not vector:
        return (p * nrm)[None]
    if np.any(ell == 0):
        raise ValidationError("vector synthesis needs ell != 0")
    inv = (1.0 / ell)[:, None]
    return np.stack([p * nrm, dp * nrm * inv, p * nrm * inv / np.sin(theta)[None, :]])


def _mode_alpha(ell, m, alpha_source, alpha_table):
    if alpha_source == "fixed_ell_minus_1":
        return ell - 1.0
    if alpha_source == "eigen_table":
        if alpha_table is None:
            raise ValidationError("eigen_table alpha source needs an AlphaTable")
        return np.array([alpha_table(e, mm)[0, 0] for e, mm in zip(ell, m)])
    raise ValidationError(f"unknown alpha source {alpha_source!r}")


def _accumulate(values, coef, ell, m, r, theta, phi, alpha, reg, components):
    """Add sum_j coef_j r^alpha_j Phi_j to ``values`` in radial chunks."""
    tables = _theta_tables(ell, m, theta, components)
    m_values, m_index = np.unique(m, return_inverse=True)
    phase = np.exp(1j * np.outer(m_values, phi))
    core = core_multiplier(r, reg.r_c) if reg is not None else np.ones_like(r)
    n_comp = values.shape[0]
    for start in range(0, r.size, R_CHUNK):
        rc = r[start:start + R_CHUNK]
        radial = np.power(rc[None, :], alpha[:, None]) * core[start:start + R_CHUNK][None, :]
        weighted = coef[:, None] * radial
        for comp in range(n_comp):
            block = np.zeros((m_values.size, rc.size, theta.size), dtype=complex)
            tab = tables[comp]
            if comp == 2:
                tab = tab * (1j * m)[:, None]
            for b in range(m_values.size):
                sel = m_index == b
                block[b] = weighted[sel].T @ tab[sel]
            values[comp, start:start + R_CHUNK] += np.tensordot(block, phase, axes=([0], [0]))


def synthesize(weight: SpectralWeight, ell_quad, m_quad, grid=None,
               alpha_source: str = "fixed_ell_minus_1", alpha_table: AlphaTable = None,
               reg: RegularizationParams = None, components: str = "scalar") -> FieldGrid:
    """Tensor quadrature of a r^alpha Phi over (ell, m) sampled on ``grid``.

    ``grid`` is an ErrorGrid or a SampleGrid.
    ``components`` is ``scalar`` (one component) or ``vector`` (three).
    """
    grid = grid or ErrorGrid()
    if components not in ("scalar", "vector"):
        raise ValidationError(f"unknown component mode {components!r}")
    r, rw, theta, tw, phi, pw = grid.nodes()
    n_comp = 1 if components == "scalar" else 3
    values = np.zeros((n_comp, r.size, theta.size, phi.size), dtype=complex)

    ln, lw = quad_points(ell_quad)
    mn, mw = quad_points(m_quad)
    L, M = np.meshgrid(ln, mn, indexing="ij")
    coef = (np.outer(lw, mw) * weight(L, M)).ravel()
    ell, m = L.ravel(), M.ravel()
    keep = coef != 0
    if np.any(ell[keep] <= np.abs(m[keep]) - 1.0):
        raise ValidationError("quadrature nodes leave the admissible region ell > |m| - 1")
    if np.any(keep):
        alpha = _mode_alpha(ell[keep], m[keep], alpha_source, alpha_table)
        _accumulate(values, coef[keep].astype(complex), ell[keep], m[keep], r, theta, phi, alpha, reg, components)

    points = weight.point_masses()
    if points:
        pe = np.array([p[0] for p in points])
        pm = np.array([p[1] for p in points])
        pa = np.array([p[2] for p in points])
        alpha = _mode_alpha(pe, pm, alpha_source, alpha_table)
        _accumulate(values, pa, pe, pm, r, theta, phi, alpha, reg, components)
    return FieldGrid(r, theta, phi, values, (rw, tw, pw))


@dataclass
class TruncationReport:
    rows: list
    reference_norm: float
    regularized: bool
    notes: list = field(default_factory=list)

    def ratios(self) -> dict:
        return {n: ratio for n, _, ratio in self.rows if ratio is not None}

    def as_rows(self):
        return [(n, err, "" if ratio is None else ratio) for n, err, ratio in self.rows]


def test_rules(n: int, ell_range=DEFAULT_ELL_RANGE, m_range=DEFAULT_M_RANGE, c: float = DEFAULT_CLUSTER):
    """The N-node mapped rules used on both axes."""
    return MappedQuadConfig(n, c, *ell_range), MappedQuadConfig(n, c, *m_range)


def reference_rules(ell_range=DEFAULT_ELL_RANGE, m_range=DEFAULT_M_RANGE, c: float = DEFAULT_CLUSTER,
                    n_ell: int = REFERENCE_ELL_NODES, n_m_half: int = REFERENCE_M_NODES_HALF):
    """High-order rules with the m axis split where |m| has its kink."""
    at = 0.0 if m_range[0] < 0.0 < m_range[1] else 0.5 * (m_range[0] + m_range[1])
    return MappedQuadConfig(n_ell, c, *ell_range), split_rule(n_m_half, m_range[0], m_range[1], at)


def truncation_error(weight: SpectralWeight, ns, grid: ErrorGrid = None, reference=None,
                     ell_range=DEFAULT_ELL_RANGE, m_range=DEFAULT_M_RANGE, c: float = DEFAULT_CLUSTER,
                     reg: RegularizationParams = None, components: str = "scalar",
                     alpha_source: str = "fixed_ell_minus_1", alpha_table: AlphaTable = None) -> TruncationReport:
    """Relative L² errors of N-node syntheses against a reference field.

    Each row is ``(N, eps_N, eps_N / eps_2N)``; the ratio is ``None`` when 2N
    is not among ``ns``.
    """
    grid = grid or ErrorGrid()
    ref_rules = reference or reference_rules(ell_range, m_range, c)
    kw = dict(grid=grid, reg=reg, components=components, alpha_source=alpha_source, alpha_table=alpha_table)
    ref = synthesize(weight, *ref_rules, **kw)
    ref_norm = ref.l2_norm()
    if ref_norm == 0.0:
        raise ValidationError("reference field vanishes")
    errors = {}
    for n in sorted(set(int(v) for v in ns)):
        approx = synthesize(weight, *test_rules(n, ell_range, m_range, c), **kw)
        errors[n] = approx.l2_norm(ref) / ref_norm
        del approx
    rows = []
    for n in sorted(errors):
        nxt = errors.get(2 * n)
        ratio = errors[n] / nxt if nxt else None
        rows.append((n, errors[n], ratio))
    return TruncationReport(rows, ref_norm, reg is not None)


@dataclass
class BoundReport:
    exponent: float
    target: float
    passed: bool
    rows: list


def decay_exponent(ns, errors) -> float:
    """Least-squares slope of -log eps against log N over positive errors."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = errors > 0
    if ok.sum() < 2:
        return math.inf
    slope = np.polyfit(np.log(ns[ok]), np.log(errors[ok]), 1)[0]
    return float(-slope)


def truncation_bound_check(weight: SpectralWeight, s: float, ns, **kwargs) -> BoundReport:
    """Compare the measured decay exponent with s - 1/2 (slack 0.2)."""
    report = truncation_error(weight, ns, **kwargs)
    ns_ = [row[0] for row in report.rows]
    errs = [row[1] for row in report.rows]
    expo = decay_exponent(ns_, errs)
    target = s - 0.5
    return BoundReport(expo, target, expo >= target - BOUND_SLACK, report.rows)


class SeparableOverlap:
    """L² overlaps of the synthesis modes on an ErrorGrid domain.

    The overlap of modes (ell_a, m_b) and (ell_a', m_b') factorizes into a
    radial factor (Gauss rule), an azimuthal factor (closed form) and a polar
    factor built from double-exponential node tables, so the quadratic form
    is evaluated without storing the full overlap matrix.
    """

    def __init__(self, ell_nodes, m_nodes, grid: ErrorGrid = None, reg: RegularizationParams = None,
                 level: int = DE_LEVEL, radial_order: int = 96):
        grid = grid or ErrorGrid()
        self.ell = np.asarray(ell_nodes, dtype=float)
        self.m = np.asarray(m_nodes, dtype=float)
        r, rw = gauss_legendre(radial_order, grid.r_lo, grid.r_hi)
        core = core_multiplier(r, reg.r_c) if reg is not None else np.ones_like(r)
        rad = np.power(r[None, :], self.ell[:, None] - 1.0) * core[None, :]
        self.radial = (rad * (rw * r * r)[None, :]) @ rad.T
        dm = self.m[None, :] - self.m[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            az = (np.exp(1j * dm * grid.phi0) - 1.0) / (1j * dm)
        self.azimuthal = np.where(np.abs(dm) < 1e-14, grid.phi0 + 0j, az)
        z, w, wt, _ = tanh_sinh_nested(level)
        self.polar_weights = 2.0 * wt
        L, M = np.meshgrid(self.ell, self.m, indexing="ij")
        s, mu = L.ravel(), np.abs(M).ravel()
        p, _, status = K.ferrers_table_zw(s, mu, z, w, False)
        bad = np.nonzero(status)[0]
        if bad.size:
            i = int(bad[0])
            specfun._raise_status(int(status[i]), "overlap table", ell=float(s[i]), mu=float(mu[i]))
        p *= np.exp(log_normalization(s, mu))[:, None]
        self.polar = p.reshape(self.ell.size, self.m.size, -1)

    def quadratic_form(self, coeffs) -> float:
        """sum_jk conj(c_j) G_jk c_k for coefficients on the (ell, m) grid."""
        coeffs = np.asarray(coeffs, dtype=complex)
        total = 0.0
        for q, wq in enumerate(self.polar_weights):
            x = coeffs * self.polar[:, :, q]
            mixed = self.radial @ x @ self.azimuthal.T
            total += wq * float(np.vdot(x, mixed).real)
        return total


def sobolev_norm(coeffs, ell_nodes, m_nodes, ell_weights, m_weights, s: float = 0.0,
                 weight_fn=None, overlap: SeparableOverlap = None) -> float:
    """Weighted H^s norm of spectral coefficients on a quadrature grid.

    With ``weight_fn`` it is ``sqrt(∬ (1+λ)^s |a|^2 w dℓ dm)`` with
    ``λ = ell(ell+1)``. With ``overlap`` the quadrature-weighted coefficients are
    paired through the mode overlaps, which for ``s = 0`` is the L² norm of the
    synthesized field.
    """
    ell = np.asarray(ell_nodes, dtype=float)
    m = np.asarray(m_nodes, dtype=float)
    a = np.asarray(coeffs, dtype=complex)
    if a.shape != (ell.size, m.size):
        raise ValidationError("coefficients must have shape (len(ell), len(m))")
    lam = ell * (ell + 1.0)
    factor = (1.0 + lam) ** s
    if np.any(factor < 0) or not np.all(np.isfinite(factor)):
        raise DomainError("(1 + lambda)^s must be finite and non-negative")
    quad = np.outer(np.asarray(ell_weights, float), np.asarray(m_weights, float))
    if overlap is not None:
        c = a * quad * np.sqrt(factor)[:, None]
        return math.sqrt(max(overlap.quadratic_form(c), 0.0))
    if weight_fn is None:
        w = np.ones_like(quad)
    else:
        L, M = np.meshgrid(ell, m, indexing="ij")
        w = np.asarray(weight_fn(L, M), dtype=float)
    return math.sqrt(float(np.sum(factor[:, None] * np.abs(a) ** 2 * w * quad)))


def plancherel_check(weight: SpectralWeight, ell_quad, m_quad, grid: ErrorGrid = None,
                     reg: RegularizationParams = None, field_grid: FieldGrid = None):
    """Grid L² norm of the synthesized field and the spectral-side norm."""
    grid = grid or ErrorGrid()
    ln, lw = quad_points(ell_quad)
    mn, mw = quad_points(m_quad)
    L, M = np.meshgrid(ln, mn, indexing="ij")
    a = weight(L, M)
    if field_grid is None:
        field_grid = synthesize(weight, ell_quad, m_quad, grid, reg=reg)
    grid_norm = field_grid.l2_norm()
    spectral = sobolev_norm(a, ln, mn, lw, mw, 0.0, overlap=SeparableOverlap(ln, mn, grid, reg))
    return grid_norm, spectral


def _de_power_integral(g, scale: float, level: int):
    """∫_0^scale g(x) dx on the double-exponential rule; returns (fine, coarse, floor-trimmed)."""
    z, w, wt, coarse = tanh_sinh_nested(level)
    x = scale * z
    with np.errstate(all="ignore"):
        terms = g(x) * wt * scale
    fine = float(np.sum(terms))
    near = z >= 1e-150
    return fine, 2.0 * float(np.sum(terms[coarse])), float(np.sum(terms[near]))


def singularity_quadrature(fn, alpha_min: float, r_max: float, route: str = "transformed",
                           level: int = DE_LEVEL, tol: float = 1e-10) -> float:
    """∫_0^r_max |fn(r)|^2 r^2 dr.

    The transformed route substitutes ``xi = r^{1/(1-alpha_min)}``, so
    ``r = xi^{1-alpha_min}`` and ``dr = (1-alpha_min) xi^{-alpha_min} dxi``. Divergence shows
    as a sum that keeps moving when the endpoint floor or step is refined.
    """
    if not alpha_min < 1.0:
        raise DomainError("singularity transform needs alpha_min < 1", alpha_min=alpha_min)
    if not r_max > 0.0:
        raise DomainError("r_max must be positive", r_max=r_max)

    def plain(r):
        out = np.zeros_like(r)
        # subnormal radii carry negligible weight and would overflow r^{-k}
        live = r > np.finfo(float).tiny
        out[live] = np.abs(fn(r[live]) * r[live]) ** 2
        return out

    if route == "plain":
        g, scale = plain, r_max
    elif route == "transformed":
        k = 1.0 - alpha_min
        scale = r_max ** (1.0 / k)

        def g(xi):
            return plain(xi ** k) * k * xi ** (-alpha_min)
    else:
        raise ValidationError(f"unknown route {route!r}")
    fine, coarse, trimmed = _de_power_integral(g, scale, level)
    if not (math.isfinite(fine) and math.isfinite(trimmed)):
        raise SingularIntegrand("integrand overflows near the origin", alpha_min=alpha_min)
    ref = max(abs(fine), 1.0)
    if abs(fine - trimmed) > tol * ref or abs(fine - coarse) > max(tol, 1e-8) * ref:
        raise SingularIntegrand("integral does not settle under refinement", fine=fine, coarse=coarse,
                                trimmed=trimmed)
    return fine
