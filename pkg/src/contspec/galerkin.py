"""Galerkin discretization of the angular operator and its eigenproblem.

Two discretizations are provided.

* :func:`assemble` works on a labelled continuous-index basis (scalar modes and
  the two tangential vector families). The Laplace-Beltrami part uses the
  analytic eigen-action, so stiffness entries are eigenvalue-weighted Gram
  entries; a potential, if supplied, is added by quadrature.
* :func:`mode_system` discretizes the order-|m| Legendre operator in
  x = cos θ by Rayleigh-Ritz with a polynomial basis. When ell - |m| is a
  non-negative integer the mode is a full-sphere eigenfunction and the basis
  ``sin^{|m|}θ P_k(x)`` reproduces it exactly. Otherwise the mode is the ground
  state of the polar cap bounded by its first nodal line θ₀, and the basis
  ``P_{k+2}(t) - P_k(t)`` (t the cap coordinate mapped to [-1, 1], vanishing at
  both ends, the span of ``(1 - x)(x - x₀) P_k(t)``) converges
  algebraically because the mode behaves like sin^{|m|}θ at the pole.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.optimize as so
import scipy.sparse.linalg as ssla

from . import _kernels as K
from .angular import ModeIndex, psi_grid, vsh_grid
from .quadrature import gauss_jacobi_symmetric
from .coupling import QuadratureRule, default_rule, gram, sample_matrix
from .errors import DomainError, IndefiniteMass, NonConvergent, ValidationError

DENSE_LIMIT = 512
RIDGE = 1e-12
RESIDUAL_TOL = 1e-8
MASS_TOL = 1e-10
FAMILIES = ("scalar", "even", "odd")
FAMILY_BLOCK = {"scalar": "r", "even": "theta", "odd": "phi"}
QUADRATIC_MIN = 3.5
SLOW_BAND = (1.25, 1.60)
EXACT_DELTA = 1e-11


@dataclass(frozen=True)
class AngularOperatorSpec:
    potential: object = None
    phi0: float = 2.0 * math.pi


@dataclass
class EigenResult:
    lam: complex
    alpha: complex
    coefficients: np.ndarray
    basis_labels: list
    residual: float

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "alpha": self.alpha, "residual": self.residual,
                "basis_labels": [str(b) for b in self.basis_labels],
                "coefficients": [complex(c) for c in self.coefficients]}


@dataclass
class BlockSystem:
    """Block stiffness and mass. Keys of ``blocks`` are 'L_r', 'C_r_theta', ...

    Missing blocks are zero. ``labels`` lists the basis in block order.
    """

    blocks: dict
    mass_blocks: dict
    labels: list
    sizes: dict

    def _full(self, store, diag_prefix):
        names = [n for n in ("r", "theta", "phi") if self.sizes.get(n, 0)]
        rows = []
        for a in names:
            row = []
            for b in names:
                key = f"{diag_prefix}_{a}" if a == b else f"C_{a}_{b}"
                blk = store.get(key)
                if blk is None:
                    blk = np.zeros((self.sizes[a], self.sizes[b]), dtype=complex)
                row.append(blk)
            rows.append(row)
        return np.block(rows) if rows else np.zeros((0, 0), dtype=complex)

    def stiffness(self) -> np.ndarray:
        return self._full(self.blocks, "L")

    def mass(self) -> np.ndarray:
        return self._full(self.mass_blocks, "M")

    @property
    def dim(self) -> int:
        return sum(self.sizes.values())


class LabelledBasis(list):
    """List of ``((family, ModeIndex), handle)`` with the rejected labels kept aside."""

    def __init__(self, items, rejected):
        super().__init__(items)
        self.rejected = rejected


def _handle(family, idx):
    if family == "scalar":
        return lambda theta, phi: psi_grid(idx, theta, phi)[0]
    return lambda theta, phi: vsh_grid(family, idx, theta, phi)


def build_basis(ell_grid, m_grid, families=("scalar",), strict: bool = False, phi0: float = 2.0 * math.pi):
    """Labelled handles in (family, ell index, m index) order.

    Pairs with ell <= |m| - 1 are skipped and listed in ``rejected``; with
    ``strict`` they raise instead. Vector families need ell > 0.
    """
    fams = [f for f in FAMILIES if f in set(families)]
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValidationError("unknown basis family", families=sorted(unknown))
    items, rejected = [], []
    for fam in fams:
        for ell in ell_grid:
            for m in m_grid:
                ell, m = float(ell), float(m)
                if not ell > abs(m) - 1.0 or (fam != "scalar" and ell <= 0.0):
                    rejected.append((fam, ell, m))
                    continue
                idx = ModeIndex(ell, m, phi0)
                items.append(((fam, idx), _handle(fam, idx)))
    if strict and rejected:
        raise ValidationError("basis labels violate ell > |m| - 1", rejected=rejected)
    return LabelledBasis(items, rejected)


def _eigen_action(label) -> float:
    _, idx = label
    return idx.ell * (idx.ell + 1.0)


def assemble(spec: AngularOperatorSpec, basis, rule: QuadratureRule = None) -> BlockSystem:
    """Stiffness from the analytic eigen-action plus the potential; mass is the Gram.

    The eigen-action gives L_ij = <f_i, -Δ f_j> = λ_j G_ij. This is Hermitian
    only when the Gram is diagonal on each eigenvalue cluster; continuous modes
    with south-pole singularities break Green's identity, so no symmetrization
    is applied.
    """
    rule = rule or default_rule(phi0=spec.phi0)
    g = gram(basis, rule)
    mass = g.entries
    if g.dim:
        low = float(np.linalg.eigvalsh(mass)[0])
        if low < -MASS_TOL:
            raise IndefiniteMass("Gram matrix is indefinite", min_eigenvalue=low)
    lam = np.array([_eigen_action(lab) for lab, _ in basis])
    stiff = mass * lam[None, :]
    if spec.potential is not None and g.dim:
        samples = sample_matrix(basis, rule)
        theta = np.asarray(rule.theta_nodes)
        pot = np.asarray(spec.potential(theta[:, None], rule.phi_nodes[None, :]), dtype=complex)
        ncomp = samples.shape[1] // pot.size
        wq = np.tile((pot * rule.weight_grid()).ravel(), ncomp)
        vmat = (samples.conj() * wq) @ samples.T
        stiff = stiff + 0.5 * (vmat + vmat.conj().T)
    fams = [lab[0] for lab, _ in basis]
    sizes = {FAMILY_BLOCK[f]: fams.count(f) for f in FAMILIES}
    order = np.argsort([FAMILIES.index(f) for f in fams], kind="stable")
    if np.any(order != np.arange(len(order))):
        raise ValidationError("basis must be ordered by family")
    blocks, mass_blocks = {}, {}
    offs, start = {}, 0
    for f in FAMILIES:
        n = sizes[FAMILY_BLOCK[f]]
        offs[FAMILY_BLOCK[f]] = slice(start, start + n)
        start += n
    for a, sa in offs.items():
        for b, sb in offs.items():
            if sa.stop == sa.start or sb.stop == sb.start:
                continue
            key_l = f"L_{a}" if a == b else f"C_{a}_{b}"
            key_m = f"M_{a}" if a == b else f"C_{a}_{b}"
            blocks[key_l] = stiff[sa, sb]
            mass_blocks[key_m] = mass[sa, sb]
    return BlockSystem(blocks=blocks, mass_blocks=mass_blocks, labels=[lab for lab, _ in basis],
                       sizes={k: v for k, v in sizes.items()})


def alpha_from_lambda(lam) -> complex:
    """Branch of α(α+1) = λ with the principal square root: (√(1+4λ) - 1)/2."""
    return 0.5 * (cmath.sqrt(1.0 + 4.0 * complex(lam)) - 1.0)


def _factorable(mass):
    try:
        np.linalg.cholesky(mass)
        return True
    except np.linalg.LinAlgError:
        return False


def polish(stiff, mass, lam, vec, steps: int = 2):
    """Shifted inverse iteration with Rayleigh-quotient updates."""
    for _ in range(steps):
        try:
            y = np.linalg.solve(stiff - lam * mass, mass @ vec)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(y)):
            break
        vec = y / np.sqrt(abs(np.vdot(y, mass @ y)))
        lam = np.vdot(vec, stiff @ vec) / np.vdot(vec, mass @ vec)
        if np.isrealobj(stiff) or abs(lam.imag) < 1e-14 * abs(lam):
            lam = lam.real
    return lam, vec


def _residual(stiff, mass, lam, vec) -> float:
    mv = mass @ vec
    return float(np.linalg.norm(stiff @ vec - lam * mv) / np.linalg.norm(mv))


def solve_gevp(system: BlockSystem, n_eigs: int = 1, target: float = 0.0):
    """Eigenpairs of L a = λ M a nearest ``target``, dense up to dimension 512."""
    stiff = system.stiffness()
    mass = system.mass()
    dim = stiff.shape[0]
    if dim == 0 or n_eigs < 1:
        raise ValidationError("empty system or n_eigs < 1")
    n_eigs = min(n_eigs, dim)
    if not _factorable(mass):
        mass = mass + RIDGE * np.trace(mass).real / dim * np.eye(dim)
        if not _factorable(mass):
            raise IndefiniteMass("mass not factorizable after ridge")
    hermitian = np.max(np.abs(stiff - stiff.conj().T)) <= 1e-12 * max(np.max(np.abs(stiff)), 1.0)
    if dim <= DENSE_LIMIT:
        if hermitian:
            vals, vecs = sla.eigh(stiff, mass)
        else:
            vals, vecs = sla.eig(stiff, mass)
            vecs = vecs / np.sqrt(np.abs(np.einsum("ij,ij->j", vecs.conj(), mass @ vecs)))
        pick = np.argsort(np.abs(vals - target), kind="stable")[:n_eigs]
        pick = np.sort(pick)
        vals, vecs = vals[pick], vecs[:, pick]
    else:
        solver = ssla.eigsh if hermitian else ssla.eigs
        try:
            vals, vecs = solver(stiff, k=n_eigs, M=mass, sigma=target, which="LM")
        except ssla.ArpackNoConvergence as exc:
            raise NonConvergent("shift-invert Arnoldi did not converge", nconv=len(exc.eigenvalues)) from exc
        order = np.argsort(vals.real)
        vals, vecs = vals[order], vecs[:, order]
    results = []
    for lam, vec in zip(vals, vecs.T):
        res = _residual(stiff, mass, lam, vec)
        if res > RESIDUAL_TOL * 1e-3:
            lam2, vec2 = polish(stiff, mass, lam, vec)
            res2 = _residual(stiff, mass, lam2, vec2)
            if res2 < res:
                lam, vec, res = lam2, vec2, res2
        if res > RESIDUAL_TOL:
            raise NonConvergent("eigenpair residual above threshold", residual=res, lam=str(lam))
        results.append(EigenResult(lam=complex(lam), alpha=alpha_from_lambda(lam), coefficients=vec,
                                   basis_labels=list(system.labels), residual=res))
    return results


def _legendre_vander(t, n):
    """P_k(t) and P_k'(t) for k < n."""
    v = np.polynomial.legendre.legvander(t, n - 1)
    dv = np.zeros_like(v)
    if n > 1:
        dv[:, 1] = 1.0
    for k in range(1, n - 1):
        dv[:, k + 1] = dv[:, k - 1] + (2 * k + 1) * v[:, k]
    return v, dv


def first_nodal_angle(idx: ModeIndex) -> float:
    """Smallest θ in (0, π) where P(ell, |m|; cos θ) changes sign."""
    theta = np.linspace(1e-3, math.pi - 1e-3, 2001)
    vals = np.array([K.ferrers_p(idx.ell, idx.mu, t)[0] for t in theta])
    sign = np.nonzero(np.diff(np.sign(vals)))[0]
    if sign.size == 0:
        raise DomainError("mode has no interior nodal line", ell=idx.ell, m=idx.m)
    i = int(sign[0])
    return so.brentq(lambda t: K.ferrers_p(idx.ell, idx.mu, t)[0], theta[i], theta[i + 1], xtol=1e-15)


def _is_sphere_mode(idx: ModeIndex) -> bool:
    d = idx.ell - idx.mu
    return d > -1e-12 and abs(d - round(d)) < 1e-12


def mode_system(idx: ModeIndex, n: int, potential=None):
    """Ritz system of dimension ``n`` for the order-|m| Legendre operator.

    ``potential`` is an optional real function of θ added to the operator.
    Returns ``(system, target_index, domain)``; ``target_index`` is the
    position of the requested mode in the ascending spectrum.
    """
    if n < 1:
        raise ValidationError("basis dimension must be positive", n=n)
    mu = idx.mu
    nq = 4 * n + 200
    t, w = np.polynomial.legendre.leggauss(nq)
    if _is_sphere_mode(idx):
        x0 = -1.0
        target_index = int(round(idx.ell - mu))
        if target_index >= n:
            raise ValidationError("basis dimension too small for this mode", n=n, needed=target_index + 1)
        domain = "sphere"
        # with basis sin^mu θ P_k(x), every integrand is (1 - x²)^{mu-1} times a
        # polynomial of degree <= 2n + 2; a short Gauss-Jacobi rule is exact and
        # avoids the accuracy loss of long rules with exponent near -1
        nj = n + 4
        if mu:
            x, wx = gauss_jacobi_symmetric(nj, mu - 1.0)
        else:
            x, wx = np.polynomial.legendre.leggauss(nj)
        v, dv = _legendre_vander(x, n)
        scale = np.sqrt(np.arange(n) + 0.5)
        v, dv = v * scale, dv * scale
        s2 = 1.0 - x * x
        if mu:
            grad = s2[:, None] * dv - mu * x[:, None] * v
            stiff = (grad * wx[:, None]).T @ grad + mu * mu * (v * wx[:, None]).T @ v
            wmass = wx * s2
        else:
            stiff = (dv * (s2 * wx)[:, None]).T @ dv
            wmass = wx
        basis = v
    else:
        x0 = math.cos(first_nodal_angle(idx))
        half = 0.5 * (1.0 - x0)
        x = x0 + half * (t + 1.0)
        wx = half * w
        v, dv = _legendre_vander(t, n + 2)
        scale = 1.0 / np.sqrt(4.0 * np.arange(n) + 6.0)
        basis, dv = (v[:, 2:] - v[:, :-2]) * scale, (dv[:, 2:] - dv[:, :-2]) * scale / half
        target_index = 0
        domain = "cap"
        s2 = 1.0 - x * x
        stiff = (dv * (s2 * wx)[:, None]).T @ dv
        if mu:
            stiff = stiff + mu * mu * (basis * (wx / s2)[:, None]).T @ basis
        wmass = wx
    mass = (basis * wmass[:, None]).T @ basis
    if potential is not None:
        pot = np.asarray(potential(np.arccos(np.clip(x, -1.0, 1.0))), dtype=float)
        stiff = stiff + (basis * (pot * wmass)[:, None]).T @ basis
    stiff = 0.5 * (stiff + stiff.T)
    mass = 0.5 * (mass + mass.T)
    labels = [("scalar", idx, k) for k in range(n)]
    system = BlockSystem(blocks={"L_r": stiff.astype(complex)}, mass_blocks={"M_r": mass.astype(complex)},
                         labels=labels, sizes={"r": n, "theta": 0, "phi": 0})
    return system, target_index, {"kind": domain, "x0": x0}


def mode_eigenvalue(idx: ModeIndex, n: int, potential=None) -> EigenResult:
    system, k, _ = mode_system(idx, n, potential)
    stiff, mass = system.stiffness().real, system.mass().real
    vals, vecs = sla.eigh(stiff, mass, subset_by_index=[k, k])
    lam, vec = polish(stiff, mass, vals[0], vecs[:, 0])
    res = _residual(stiff, mass, lam, vec)
    if res > RESIDUAL_TOL:
        raise NonConvergent("eigenpair residual above threshold", residual=res)
    return EigenResult(lam=complex(lam), alpha=alpha_from_lambda(lam), coefficients=vec,
                       basis_labels=system.labels, residual=res)


@dataclass
class ConvergenceReport:
    mode: ModeIndex
    rows: list
    lambdas: dict
    regime: str
    domain: str = ""
    notes: list = field(default_factory=list)


def classify(ratios, deltas) -> str:
    if deltas and max(deltas) < EXACT_DELTA:
        return "exact"
    if not ratios:
        return "undetermined"
    if all(r >= QUADRATIC_MIN for r in ratios):
        return "quadratic"
    if all(SLOW_BAND[0] <= r <= SLOW_BAND[1] for r in ratios):
        return "slow"
    return "mixed"


def convergence_study(idx: ModeIndex, ns, potential=None) -> ConvergenceReport:
    """Rows (N, |λ_N - λ_2N|, ratio) with ratio = previous delta / this delta.

    A ratio appears only when the previous row used N/2.
    """
    ns = [int(v) for v in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("basis dimensions must be increasing", ns=ns)
    need = sorted(set(ns) | {2 * v for v in ns})
    lams = {v: mode_eigenvalue(idx, v, potential).lam.real for v in need}
    rows, ratios, deltas = [], [], []
    prev = None
    for v in ns:
        d = abs(lams[v] - lams[2 * v])
        ratio = None
        if prev is not None and prev[0] * 2 == v and d > 0:
            ratio = prev[1] / d
            ratios.append(ratio)
        rows.append((v, d, ratio))
        deltas.append(d)
        prev = (v, d)
    return ConvergenceReport(mode=idx, rows=rows, lambdas=lams, regime=classify(ratios, deltas),
                             domain="sphere" if _is_sphere_mode(idx) else "cap")


def radial_transform(alpha_min: float, r: float, direction: str = "to_xi") -> float:
    """ξ = r^{1/(1 - alpha_min)} and its inverse."""
    if not alpha_min < 1.0:
        raise DomainError("alpha_min must be below 1", alpha_min=alpha_min)
    if r < 0:
        raise DomainError("r must be non-negative", r=r)
    expo = 1.0 / (1.0 - alpha_min)
    if direction == "to_xi":
        return r ** expo
    if direction == "to_r":
        return r ** (1.0 / expo)
    raise ValidationError(f"unknown direction {direction!r}")


def theta_regularize(handle, epsilon: float):
    """Wrap a (theta, phi) handle to evaluate at sqrt(theta² + epsilon²)."""
    if epsilon < 0:
        raise ValidationError("epsilon must be non-negative", epsilon=epsilon)
    if epsilon == 0:
        return handle

    def wrapped(theta, phi):
        return handle(np.sqrt(np.asarray(theta, dtype=float) ** 2 + epsilon ** 2), phi)

    return wrapped
