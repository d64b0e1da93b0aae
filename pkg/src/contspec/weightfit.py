"""Spectral-weight determination from tangential boundary data.

The model boundary field is ``E_T(R) = ∬ a(ell, m) R^alpha T(ell, m) dℓ dm``
with ``T`` the unit-normalized tangential part of the divergence-free vector
pattern of :func:`contspec.angular.vector_mode_grid`. The weight takes the
form ``a = A ell^p m^q exp(-beta (ell^2 + m^2))`` and is fitted by a
log-barrier objective minimized with BFGS and Armijo backtracking.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .angular import ModeIndex, gauss_sphere_grid, vector_mode_grid
from .errors import (
    ConstraintViolation,
    NoDescentStep,
    TinyRadialFactor,
    ValidationError,
)
from .quadrature import gauss_legendre
from .spectral import MappedQuadConfig, mapped_nodes

TWO_PI = 2.0 * math.pi
MAX_HALVINGS = 40
FD_STEP = 1e-6
GRID_SWITCH_ITER = 20
RADIAL_SHELLS = 16
TINY_RADIAL = 1e-300
MU_FLOOR = 1e-300


@dataclass(frozen=True)
class WeightParams:
    A: float
    p: float
    q: float
    beta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.p, self.q, self.beta], dtype=float)

    @classmethod
    def from_array(cls, x):
        return cls(*(float(v) for v in x))

    def as_dict(self) -> dict:
        return {"A": self.A, "p": self.p, "q": self.q, "beta": self.beta}


def check_feasible(params: WeightParams, ell_min: float):
    """Raise ConstraintViolation unless A, q, beta > 0 and p > 3/2 - ell_min."""
    bound = 1.5 - ell_min
    if not params.p > bound:
        raise ConstraintViolation("p must exceed 3/2 - ell_min", p=params.p, bound=bound)
    for name in ("A", "q", "beta"):
        value = getattr(params, name)
        if not value > 0.0:
            raise ConstraintViolation(f"{name} must be positive", **{name: value})


def is_feasible(params: WeightParams, ell_min: float) -> bool:
    try:
        check_feasible(params, ell_min)
    except ConstraintViolation:
        return False
    return True


@dataclass(frozen=True)
class FitConfig:
    lambda_div: float = 1.0
    mu0: float = 1e-3
    c1: float = 1e-4
    alpha0: float = 1.0
    eps_grad: float = 1e-5
    eps_rel: float = 1e-7
    n_theta: int = 32
    n_phi: int = 64
    max_iter: int = 500
    ell_min: float = 0.1
    ell_max: float = 3.0
    m_max: float = 0.9
    n_ell: int = 24
    n_m: int = 16
    radius: float = 1.5
    phi0: float = TWO_PI
    coarse_until: int = GRID_SWITCH_ITER

    def __post_init__(self):
        for name in ("mu0", "c1", "alpha0", "eps_grad", "eps_rel", "radius", "m_max"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive")
        if self.lambda_div < 0.0:
            raise ValidationError("lambda_div must be non-negative")
        if not 0.0 < self.ell_min < self.ell_max:
            raise ValidationError("need 0 < ell_min < ell_max")


@dataclass
class BoundaryData:
    radius: float
    theta: np.ndarray
    theta_weights: np.ndarray
    phi: np.ndarray
    samples: np.ndarray
    phi0: float = TWO_PI

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValidationError("boundary radius must be positive")
        if self.samples.shape != (2, len(self.theta), len(self.phi)):
            raise ValidationError("samples must have shape (2, n_theta, n_phi)")

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.theta_weights, np.full(len(self.phi), self.phi0 / len(self.phi)))

    def matches(self, cfg: FitConfig) -> bool:
        return len(self.theta) == cfg.n_theta and len(self.phi) == cfg.n_phi


def boundary_grid(cfg: FitConfig):
    return gauss_sphere_grid(cfg.n_theta, cfg.n_phi, cfg.phi0)


def tangential_pattern(idx: ModeIndex, theta, phi):
    """Unit-norm tangential pattern and the matching scale of the full vector pattern."""
    comps = vector_mode_grid(idx, theta, phi)
    scale = idx.ell / math.sqrt(idx.ell * (idx.ell + 1.0))
    return comps[1:] * scale, scale


def sphere_inner(f, g, weights) -> complex:
    return complex(np.sum(np.conj(g) * f * weights[None]))


def project_boundary(data: BoundaryData, modes, alpha_source="fixed_ell_minus_1"):
    """a(ell, m) = <E_T, T(ell, m)> / R^alpha for each mode.

    ``alpha_source`` is ``fixed_ell_minus_1`` or a callable ``(ell, m) -> alpha``.
    Returns a list of ``(ModeIndex, a)``.
    """
    out = []
    w = data.weights
    for idx in modes:
        alpha = idx.ell - 1.0 if alpha_source == "fixed_ell_minus_1" else complex(alpha_source(idx.ell, idx.m))
        if not np.isfinite(alpha):
            raise ValidationError("radial exponent is not finite", ell=idx.ell, m=idx.m)
        factor = data.radius ** alpha
        if abs(factor) < TINY_RADIAL:
            raise TinyRadialFactor("R^alpha underflows", radius=data.radius, alpha=alpha)
        pattern, _ = tangential_pattern(idx, data.theta, data.phi)
        out.append((idx, sphere_inner(data.samples, pattern, w) / factor))
    return out


class FitModel:
    """Precomputed mode tables for fast objective evaluation."""

    def __init__(self, cfg: FitConfig, theta=None, phi=None):
        self.cfg = cfg
        if theta is None:
            theta, tw, phi = boundary_grid(cfg)
        else:
            tw = None
        self.theta, self.phi = np.asarray(theta), np.asarray(phi)
        ln, lw = mapped_nodes(MappedQuadConfig(cfg.n_ell, 1.0, cfg.ell_min, cfg.ell_max))
        mn, mw = mapped_nodes(MappedQuadConfig(cfg.n_m, 1.0, 0.0, cfg.m_max))
        L, M = np.meshgrid(ln, mn, indexing="ij")
        self.ell, self.m = L.ravel(), M.ravel()
        self.quad = np.outer(lw, mw).ravel()
        self.alpha = self.ell - 1.0
        lam = self.ell * (self.ell + 1.0)
        tang = []
        scalar = []
        scales = []
        for e, m in zip(self.ell, self.m):
            idx = ModeIndex(float(e), float(m), cfg.phi0)
            pattern, scale = tangential_pattern(idx, self.theta, self.phi)
            tang.append(pattern)
            scalar.append(vector_mode_grid(idx, self.theta, self.phi)[0])
            scales.append(scale)
        self.tangential = np.array(tang) * (cfg.radius ** self.alpha * self.quad)[:, None, None, None]
        # Divergence of r^alpha * scale * (Psi, grad Psi / ell): r^{alpha-1} scale (alpha + 2 - lam/ell) Psi.
        self.div_factor = np.array(scales) * (self.alpha + 2.0 - lam / self.ell) * self.quad
        self.scalar = np.array(scalar)
        shells, sw = gauss_legendre(RADIAL_SHELLS, 0.2 * cfg.radius, cfg.radius)
        self.shells = shells
        self.shell_weights = sw * shells * shells
        self.shell_power = shells[None, :] ** (self.alpha - 1.0)[:, None]
        self.theta_weights = tw

    def coefficients(self, params: WeightParams) -> np.ndarray:
        return (params.A * self.ell ** params.p * self.m ** params.q
                * np.exp(-params.beta * (self.ell ** 2 + self.m ** 2)))

    def boundary_field(self, params: WeightParams) -> np.ndarray:
        return np.tensordot(self.coefficients(params), self.tangential, axes=(0, 0))

    def divergence_energy(self, params: WeightParams, weights) -> float:
        c = self.coefficients(params) * self.div_factor
        if not np.any(c):
            return 0.0
        flat = self.scalar.reshape(self.scalar.shape[0], -1)
        per_shell = (c[:, None] * self.shell_power).T @ flat
        dens = (per_shell * per_shell.conj()).real @ weights.ravel()
        return float(self.shell_weights @ dens)


def synthetic_boundary(params: WeightParams, cfg: FitConfig = None, model: FitModel = None) -> BoundaryData:
    """Boundary data generated by the model itself from known parameters."""
    cfg = cfg or FitConfig()
    model = model or FitModel(cfg)
    theta, tw, phi = boundary_grid(cfg)
    return BoundaryData(cfg.radius, theta, tw, phi, model.boundary_field(params), cfg.phi0)


def barrier(p: float, ell_min: float, mu: float) -> float:
    """-mu log(p - (3/2 - ell_min))."""
    gap = p - (1.5 - ell_min)
    if not gap > 0.0:
        raise ConstraintViolation("barrier evaluated at or below the bound", p=p, bound=1.5 - ell_min)
    return -mu * math.log(gap)


@dataclass
class ObjectiveParts:
    misfit: float
    divergence: float
    barrier: float
    value: float


def _grid_weights(data: BoundaryData, coarse: bool):
    w = data.weights
    if not coarse:
        return w, np.s_[:, :, :]
    sel = np.s_[:, ::2, ::2]
    return 4.0 * w[::2, ::2], sel


def objective(params: WeightParams, data: BoundaryData, cfg: FitConfig, mu: float = None,
              model: FitModel = None, coarse: bool = False):
    """Boundary misfit + lambda_div * divergence energy + barrier terms."""
    check_feasible(params, cfg.ell_min)
    if not data.matches(cfg):
        raise ValidationError("boundary samples do not match the configured grid")
    model = model or FitModel(cfg)
    mu = cfg.mu0 if mu is None else mu
    weights, sel = _grid_weights(data, coarse)
    diff = model.boundary_field(params)[sel] - data.samples[sel]
    misfit = float(np.sum(np.abs(diff) ** 2 * weights[None]))
    div = model.divergence_energy(params, data.weights) if cfg.lambda_div > 0.0 else 0.0
    bar = barrier(params.p, cfg.ell_min, mu) - mu * (math.log(params.q) + math.log(params.beta) + math.log(params.A))
    value = misfit + cfg.lambda_div * div + bar
    return value, ObjectiveParts(misfit, div, bar, value)


def boundary_error(params: WeightParams, data: BoundaryData, model: FitModel) -> float:
    """Relative L² boundary misfit."""
    w = data.weights[None]
    diff = model.boundary_field(params) - data.samples
    den = math.sqrt(float(np.sum(np.abs(data.samples) ** 2 * w)))
    return math.sqrt(float(np.sum(np.abs(diff) ** 2 * w))) / den if den > 0 else 0.0


def fd_gradient(f, x, rel_step: float = FD_STEP, scheme: str = "central") -> np.ndarray:
    """Finite-difference gradient with step ``rel_step * max(|x_i|, 1)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    f0 = f(x) if scheme == "forward" else None
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        e = np.zeros_like(x)
        e[i] = h
        if scheme == "central":
            g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
        elif scheme == "forward":
            g[i] = (f(x + e) - f0) / h
        else:
            raise ValidationError(f"unknown difference scheme {scheme!r}")
    return g


def armijo_step(f, x, d, cfg: FitConfig = None, fx: float = None, grad=None):
    """Backtracking from ``alpha0`` by halving until the Armijo condition holds.

    Returns ``(alpha, x_new, f_new)``. Infeasible trial points evaluate to +inf
    and are rejected like any other failing trial.
    """
    cfg = cfg or FitConfig()
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    fx = f(x) if fx is None else fx
    grad = fd_gradient(f, x) if grad is None else np.asarray(grad, dtype=float)
    slope = float(grad @ d)
    if not slope < 0.0:
        raise ValidationError("search direction is not a descent direction", slope=slope)
    alpha = cfg.alpha0
    for _ in range(MAX_HALVINGS + 1):
        trial = x + alpha * d
        ft = f(trial)
        if math.isfinite(ft) and ft <= fx + cfg.c1 * alpha * slope:
            return alpha, trial, ft
        alpha *= 0.5
    raise NoDescentStep("Armijo condition not met after 40 halvings", slope=slope)


@dataclass
class FitResult:
    params: WeightParams
    trace: list
    status: str
    iterations: int
    boundary_error: float
    gradient_check: dict = field(default_factory=dict)

    @property
    def capped(self) -> bool:
        return self.status == "iteration_cap"

    def trace_rows(self):
        return [(r["iter"], r["A"], r["p"], r["q"], r["beta"], r["objective"], r["grad_norm"], r["step"])
                for r in self.trace]


TRACE_HEADER = ("iter", "A", "p", "q", "beta", "objective", "grad_norm", "step")


def optimize(data: BoundaryData, init: WeightParams = WeightParams(1.0, 2.0, 1.0, 0.5),
             cfg: FitConfig = None, model: FitModel = None) -> FitResult:
    """Barrier BFGS with Armijo backtracking in variables scaled by ``init``.

    The barrier weight halves after every accepted step; the first
    ``coarse_until`` iterations, or fewer if the coarse objective settles, use
    every other angular node. Stops on the fine grid when the
    gradient norm drops below ``eps_grad`` or the relative objective change
    below ``eps_rel``; after ``max_iter`` steps the best iterate is returned
    with status ``iteration_cap``.
    """
    cfg = cfg or FitConfig()
    check_feasible(init, cfg.ell_min)
    if not data.matches(cfg):
        raise ValidationError("boundary samples do not match the configured grid")
    if abs(data.radius - cfg.radius) > 1e-14 * cfg.radius:
        cfg = replace(cfg, radius=data.radius)
        model = None
    model = model or FitModel(cfg)
    scale = np.abs(init.as_array())

    def make_f(mu, coarse):
        def f(y):
            params = WeightParams.from_array(y * scale)
            if not is_feasible(params, cfg.ell_min):
                return math.inf
            return objective(params, data, cfg, mu, model, coarse)[0]
        return f

    mu = cfg.mu0
    coarse = cfg.coarse_until > 0
    y = np.ones(4)
    f = make_f(mu, coarse)
    fy = f(y)
    g = fd_gradient(f, y)
    g2 = fd_gradient(f, y, 2.0 * FD_STEP)
    g1 = fd_gradient(f, y, FD_STEP, "forward")
    gn = max(np.linalg.norm(g), 1e-300)
    check = {"doubled_step_rel": float(np.linalg.norm(g - g2) / gn),
             "one_sided_rel": float(np.linalg.norm(g - g1) / gn)}
    H = np.eye(4)
    trace = [_trace_row(0, y * scale, fy, g, 0.0)]
    status = "iteration_cap"
    it = 0
    while it < cfg.max_iter:
        if np.linalg.norm(g) < cfg.eps_grad:
            if not coarse:
                status = "gradient"
                break
            coarse = False
            f = make_f(mu, coarse)
            fy = f(y)
            g = fd_gradient(f, y)
            continue
        d = -H @ g
        if not g @ d < 0.0:
            H = np.eye(4)
            d = -g
        try:
            step, y_new, f_new = armijo_step(f, y, d, cfg, fy, g)
        except NoDescentStep:
            if not np.allclose(H, np.eye(4)):
                H = np.eye(4)
                continue
            status = "no_descent"
            break
        it += 1
        rel = abs(fy - f_new) / max(abs(fy), 1e-300)
        g_new = fd_gradient(f, y_new)
        s = y_new - y
        yk = g_new - g
        sy = float(s @ yk)
        if sy > 1e-16 * np.linalg.norm(s) * np.linalg.norm(yk):
            rho = 1.0 / sy
            V = np.eye(4) - rho * np.outer(s, yk)
            H = V @ H @ V.T + rho * np.outer(s, s)
        y = y_new
        trace.append(_trace_row(it, y * scale, f_new, g_new, step, f_before=fy, mu=mu))
        if rel < cfg.eps_rel:
            if not coarse:
                status = "relative_change"
                break
            coarse = False
        coarse = coarse and it < cfg.coarse_until
        mu = max(0.5 * mu, MU_FLOOR)
        f = make_f(mu, coarse)
        fy = f(y)
        g = fd_gradient(f, y)
    params = WeightParams.from_array(y * scale)
    return FitResult(params, trace, status, it, boundary_error(params, data, model), check)


def _trace_row(it, x, value, grad, step, f_before=None, mu=None) -> dict:
    return {"iter": it, "A": x[0], "p": x[1], "q": x[2], "beta": x[3], "objective": value,
            "grad_norm": float(np.linalg.norm(grad)), "step": step,
            "objective_before": value if f_before is None else f_before, "mu": mu}


def admissibility_verdict(p: float, ell_min: float):
    """Cutoff-sequence verdict for the near-origin energy model of the weighted field.

    The energy of the weighted field near the lowest index behaves like
    ``∫_0^1 t^{2(p - (3/2 - ell_min)) - 1} dt``, which converges exactly when the
    weight constraint holds.
    """
    from .energy import cutoff_sequence
    gap = p - (1.5 - ell_min)
    return cutoff_sequence(lambda t: t ** (2.0 * gap - 1.0), 1.0)
