"""Angular projection coefficients, coupling elements and Gram matrices.

Sphere integrals of a single mode factor into ``Φ₀`` times a polar integral.
Polar integrals are evaluated in ``z = sin²(θ/2)`` (so ``sinθ dθ = 2 dz``)
with a double-exponential rule whose nodes approach both poles to 1e-300.
An integral is accepted only if it is stable both under step halving and
under moving the truncation point from 1e-150 to 1e-300; otherwise the
integrand is reported as singular.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from . import _kernels as K
from . import specfun
from .angular import ModeIndex, gauss_sphere_grid, normalization
from .errors import ModelMismatch, NodeFailure, SingularIntegrand, ValidationError
from .quadrature import tanh_sinh_nested

DE_LEVEL = 6
REFINE_TOL = 1e-9
TRUNCATION_PROBE = 1e-150


@dataclass(frozen=True)
class QuadratureRule:
    theta_nodes: np.ndarray
    theta_weights: np.ndarray
    n_phi: int
    phi0: float = 2.0 * math.pi

    def __post_init__(self):
        t = np.asarray(self.theta_nodes, dtype=float)
        if np.any((t <= 0) | (t >= math.pi)):
            raise ValidationError("theta nodes must be strictly interior")
        if abs(float(np.sum(self.theta_weights)) - 2.0) > 1e-10:
            raise ValidationError("theta weights must integrate cos(theta) over [-1, 1] (sum 2)")

    @property
    def phi_nodes(self) -> np.ndarray:
        return self.phi0 * np.arange(self.n_phi) / self.n_phi

    @property
    def phi_weight(self) -> float:
        return self.phi0 / self.n_phi

    def weight_grid(self) -> np.ndarray:
        return np.outer(self.theta_weights, np.full(self.n_phi, self.phi_weight))


def default_rule(n_theta: int = 64, n_phi: int = 128, phi0: float = 2.0 * math.pi) -> QuadratureRule:
    theta, w, _ = gauss_sphere_grid(n_theta, n_phi, phi0)
    return QuadratureRule(theta, w, n_phi, phi0)


@dataclass(frozen=True)
class ProjectionSet:
    a_theta: complex
    a_phi: complex
    b_theta: complex
    b_phi: complex
    c_thetaphi: complex
    a_theta_closed: float = float("nan")
    a_theta_discrepancy: float = float("nan")
    singular: tuple = field(default=())

    def scaled_coupling(self, factor: float) -> "ProjectionSet":
        return replace(self, c_thetaphi=self.c_thetaphi * factor)

    def as_dict(self) -> dict:
        return {
            "a_theta": self.a_theta, "a_phi": self.a_phi, "b_theta": self.b_theta,
            "b_phi": self.b_phi, "c_thetaphi": self.c_thetaphi,
            "a_theta_closed": self.a_theta_closed, "a_theta_discrepancy": self.a_theta_discrepancy,
            "singular": list(self.singular),
        }


def sphere_inner_product(f, g, rule: QuadratureRule) -> complex:
    """Σ f* g w_k Φ₀/N_φ over the rule; f, g map (theta, phi) arrays to samples.

    Handles return arrays of shape (n_theta, n_phi) or (n_comp, n_theta, n_phi).
    """
    theta = np.asarray(rule.theta_nodes)
    phi = rule.phi_nodes
    fv = np.asarray(f(theta, phi))
    gv = np.asarray(g(theta, phi))
    for name, arr in (("f", fv), ("g", gv)):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            rows = sorted({int(i) for i in np.nonzero(bad.reshape(-1, theta.size, phi.size))[1]})
            raise NodeFailure(f"{name} is not finite at some nodes", theta_nodes=[float(theta[i]) for i in rows])
    wq = rule.weight_grid()
    return complex(np.sum(np.conj(fv) * gv * wq))


class _PolarTable:
    """P and dP/dθ of one mode on the double-exponential nodes."""

    def __init__(self, ell: float, mu: float, level: int = DE_LEVEL):
        z, w, wt, coarse = tanh_sinh_nested(level + 1)
        self.z, self.w, self.wt, self.coarse = z, w, wt, coarse
        p, dp, status = K.ferrers_table_zw(np.array([ell]), np.array([mu]), z, w, True)
        if status[0] != K.OK:
            specfun._raise_status(int(status[0]), "projection table", ell=ell, mu=mu)
        self.p = p[0]
        self.dp = dp[0]
        self.sin = 2.0 * np.sqrt(z * w)
        self.cos = w - z

    def integral(self, values, name: str, strict: bool = True) -> float:
        """2 ∫ values dz with refinement and truncation checks."""
        with np.errstate(over="ignore", invalid="ignore"):
            terms = values * self.wt
        fine = float(np.sum(terms))
        coarse = 2.0 * float(np.sum(terms[self.coarse]))
        near = np.minimum(self.z, self.w) >= TRUNCATION_PROBE
        truncated = float(np.sum(terms[near]))
        scale = max(abs(fine), 1.0)
        ok = (np.isfinite(fine) and abs(fine - coarse) <= REFINE_TOL * scale
              and abs(fine - truncated) <= REFINE_TOL * scale)
        if not ok:
            if strict:
                raise SingularIntegrand(f"polar integral {name!r} does not settle under refinement",
                                        refined=fine, coarse=coarse, truncated=truncated)
            return float("nan")
        return 2.0 * fine


def _mode_table(idx: ModeIndex, level: int = DE_LEVEL) -> _PolarTable:
    return _PolarTable(idx.ell, idx.mu, level)


def projections(idx: ModeIndex, rule: QuadratureRule = None, strict: bool = True,
                level: int = DE_LEVEL) -> ProjectionSet:
    """The five projection coefficients of one mode by polar quadrature.

    ``rule`` only supplies Φ₀. With ``strict=False`` divergent coefficients are
    returned as NaN and listed in ``singular`` instead of raising.
    """
    phi0 = rule.phi0 if rule is not None else idx.phi0
    tab = _mode_table(idx, level)
    n2 = normalization(idx) ** 2
    pre = phi0 * n2
    im = 1j * idx.m
    singular = []

    def get(values, name, needs_m=False):
        if needs_m and idx.m == 0:
            return 0.0
        try:
            return tab.integral(values, name, strict=True)
        except SingularIntegrand:
            if strict:
                raise
            singular.append(name)
            return float("nan")

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        pp = tab.p * tab.dp
        a_th = pre * get(pp, "a_theta")
        a_ph = im * pre * get(tab.p ** 2 / tab.sin, "a_phi", True)
        b_ph = im * pre * get(tab.p ** 2 / tab.sin ** 2, "b_phi", True)
        c = im * pre * get(pp / tab.sin ** 2, "c_thetaphi", True)
    closed = -(idx.ell * (idx.ell + 1.0) - idx.m ** 2) * phi0 / 2.0
    disc = abs(a_th - closed) / abs(closed) if closed != 0 else abs(a_th)
    return ProjectionSet(a_theta=complex(a_th), a_phi=complex(a_ph), b_theta=complex(a_th),
                         b_phi=complex(b_ph), c_thetaphi=complex(c), a_theta_closed=closed,
                         a_theta_discrepancy=float(disc), singular=tuple(singular))


def coupling_rtheta(idx: ModeIndex, rule: QuadratureRule = None, level: int = DE_LEVEL) -> complex:
    """i m N² ∫ |P|² dΩ."""
    if idx.m == 0:
        return 0j
    phi0 = rule.phi0 if rule is not None else idx.phi0
    tab = _mode_table(idx, level)
    return 1j * idx.m * phi0 * normalization(idx) ** 2 * tab.integral(tab.p ** 2, "norm")


def ladder_coefficient(ell: float, mu: float) -> float:
    """sqrt((ell-|m|)(ell+|m|+1)/((2ell+1)(2ell+3))) for the (ell, ell+1) band."""
    val = (ell - mu) * (ell + mu + 1.0) / ((2.0 * ell + 1.0) * (2.0 * ell + 3.0))
    if val < 0:
        raise ValidationError("ladder coefficient radicand negative", ell=ell, mu=mu)
    return math.sqrt(val)


def coupling_thetaphi(idx: ModeIndex, idx2: ModeIndex, rule: QuadratureRule = None,
                      level: int = DE_LEVEL) -> complex:
    """Matrix element of (∂θ - cotθ) between modes of equal order."""
    if idx.m != idx2.m:
        return 0j
    if abs(abs(idx.ell - idx2.ell) - 1.0) < 1e-14:
        lo = min(idx.ell, idx2.ell)
        return complex(ladder_coefficient(lo, idx.mu))
    phi0 = rule.phi0 if rule is not None else idx.phi0
    t1 = _mode_table(idx2, level)
    t0 = _mode_table(idx, level)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = t1.p * (t0.dp - t0.cos / t0.sin * t0.p)
    val = t0.integral(vals, "ladder")
    return complex(phi0 * normalization(idx) * normalization(idx2) * val)


def legendre_norm(idx: ModeIndex, level: int = DE_LEVEL):
    """Closed form 2Γ(ell+|m|+1)/((2ell+1)Γ(ell-|m|+1)) and ∫P² sinθ dθ by quadrature."""
    closed = 2.0 * specfun.gamma_ratio(idx.ell + idx.mu + 1.0, idx.ell - idx.mu + 1.0) / (2.0 * idx.ell + 1.0)
    tab = _mode_table(idx, level)
    try:
        quad = tab.integral(tab.p ** 2, "norm")
    except SingularIntegrand:
        quad = float("inf")
    return closed, quad


@dataclass
class GramMatrix:
    dim: int
    entries: np.ndarray
    basis_labels: list

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) if self.dim else 0.0


def sample_matrix(basis, rule: QuadratureRule) -> np.ndarray:
    """Rows are the flattened samples of each handle on the rule's grid."""
    theta = np.asarray(rule.theta_nodes)
    phi = rule.phi_nodes
    rows = []
    for _, handle in basis:
        v = np.asarray(handle(theta, phi), dtype=complex)
        if v.ndim == 2:
            v = v[None]
        rows.append(v.reshape(v.shape[0], -1))
    ncomp = max(r.shape[0] for r in rows)
    out = np.zeros((len(rows), ncomp, theta.size * phi.size), dtype=complex)
    for i, r in enumerate(rows):
        out[i, : r.shape[0]] = r
    return out.reshape(len(rows), -1)


def gram(basis, rule: QuadratureRule) -> GramMatrix:
    """Pairwise inner products of labelled handles ``[(label, handle), ...]``."""
    labels = [lab for lab, _ in basis]
    if not basis:
        return GramMatrix(0, np.zeros((0, 0), dtype=complex), labels)
    B = sample_matrix(basis, rule)
    ncomp = B.shape[1] // (len(rule.theta_nodes) * rule.n_phi)
    wq = np.tile(rule.weight_grid().ravel(), ncomp)
    G = (B.conj() * wq) @ B.T
    G = 0.5 * (G + G.conj().T)
    return GramMatrix(len(basis), G, labels)


def singularity_extracted_integral(f, exponent: float, a: float = 0.0, b: float = math.pi) -> float:
    """∫_a^b f dθ with a c·θ^exponent model term removed at the lower end.

    The model coefficient c is the limit of f(θ)θ^{-exponent} as θ → a, found
    by Richardson extrapolation on a geometric sequence of small offsets.
    """
    if exponent <= -1.0:
        raise ValidationError("model exponent must exceed -1 for an integrable term", exponent=exponent)
    offsets = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    ratios = np.array([f(a + t) * t ** (-exponent) for t in offsets])
    diffs = np.abs(np.diff(ratios))
    scale = max(abs(ratios[-1]), 1e-300)
    if diffs[-1] > 1e-3 * scale and diffs[-1] > 0.5 * diffs[0]:
        raise ModelMismatch("remainder does not vanish against the model term", ratios=ratios.tolist())
    c = float(ratios[-1])
    span = b - a
    model = c * span ** (exponent + 1.0) / (exponent + 1.0)

    def remainder(t):
        return f(t) - c * (t - a) ** exponent

    if c == 0.0:
        rest, _ = integrate.quad(f, a, b, limit=200, epsabs=1e-14, epsrel=1e-13)
    else:
        rest, _ = integrate.quad(remainder, a, b, limit=200, epsabs=1e-13, epsrel=1e-12)
    return model + rest
