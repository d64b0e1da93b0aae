"""Continuous-index angular basis, duals and vector spherical harmonics.

The scalar mode is ``Psi = N(ell, m) P(ell, |m|; cos θ) e^{i m φ}`` with the
phase-free Ferrers function of :mod:`contspec.specfun`. For integer indices this
is the orthonormal spherical harmonic without the Condon-Shortley phase.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import (
    DomainError,
    FitDegenerate,
    GridTooCoarse,
    IntegerDifferencePole,
    NearPole,
    ValidationError,
)

POLE_GUARD = 1e-8
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModeIndex:
    ell: float
    m: float
    phi0: float = TWO_PI

    def __post_init__(self):
        if not self.ell > abs(self.m) - 1.0:
            raise ValidationError(f"mode requires ell > |m| - 1 (ell={self.ell}, m={self.m})",
                                  ell=self.ell, m=self.m)
        if not 0.0 < self.phi0 <= TWO_PI + 1e-15:
            raise ValidationError("phi0 must lie in (0, 2π]", phi0=self.phi0)

    @property
    def mu(self) -> float:
        return abs(self.m)

    @property
    def label(self) -> str:
        return f"({self.ell:g},{self.m:g})"


def is_valid(ell: float, m: float) -> bool:
    return ell > abs(m) - 1.0


@dataclass(frozen=True)
class AngularEval:
    value: complex
    dtheta: complex
    dphi_factor: complex


@dataclass(frozen=True)
class VshSample:
    family: str
    components: tuple


@dataclass(frozen=True)
class SpectralParam:
    s: complex


def normalization(idx: ModeIndex) -> float:
    """sqrt((2ell+1)/(4π) Γ(ell-|m|+1)/Γ(ell+|m|+1))."""
    radicand = (2.0 * idx.ell + 1.0) / (4.0 * math.pi) * specfun.gamma_ratio(idx.ell - idx.mu + 1.0,
                                                                             idx.ell + idx.mu + 1.0)
    if radicand <= 0.0:
        raise DomainError("normalization radicand is not positive (ell <= -1/2)", ell=idx.ell, m=idx.m)
    return math.sqrt(radicand)


def spectral_weight(idx: ModeIndex) -> float:
    """π Γ(ell+|m|+1) / (sin(π(ell-|m|)) Γ(ell-|m|+1))."""
    sn = math.sin(math.pi * (idx.ell - idx.mu))
    if abs(sn) < 1e-12:
        raise IntegerDifferencePole("spectral weight pole: ell - |m| is an integer", ell=idx.ell, m=idx.m)
    return math.pi * specfun.gamma_ratio(idx.ell + idx.mu + 1.0, idx.ell - idx.mu + 1.0) / sn


def _guard_theta(theta: float):
    if theta < POLE_GUARD or theta > math.pi - POLE_GUARD:
        raise NearPole("evaluation within 1e-8 of a pole", theta=theta)


def eval_psi(idx: ModeIndex, theta: float, phi: float, variant: str = "plain") -> AngularEval:
    """Psi and its θ-derivative at a point; ``sin_weighted`` multiplies by sin^{|m|}θ."""
    _guard_theta(theta)
    nrm = normalization(idx)
    p = specfun.legendre_p_theta(idx.ell, idx.mu, theta)
    dp = specfun.legendre_p_dtheta(idx.ell, idx.mu, theta)
    if variant == "sin_weighted":
        st = math.sin(theta)
        w = st ** idx.mu
        dw = idx.mu * st ** (idx.mu - 1.0) * math.cos(theta) if idx.mu else 0.0
        p, dp = w * p, dw * p + w * dp
    elif variant != "plain":
        raise ValidationError(f"unknown basis variant {variant!r}")
    phase = cmath.exp(1j * idx.m * phi)
    value = nrm * p * phase
    return AngularEval(value=value, dtheta=nrm * dp * phase, dphi_factor=1j * idx.m * value)


def theta_profile(idx: ModeIndex, theta, derivative: bool = False, normalized: bool = True):
    """N P(cos θ) on an array of interior θ, optionally with d/dθ and d²/dθ²."""
    theta = np.asarray(theta, dtype=float)
    nrm = normalization(idx) if normalized else 1.0
    if not derivative:
        return nrm * specfun.legendre_p_table([idx.ell], [idx.mu], theta)[0]
    p, dp = specfun.legendre_p_table([idx.ell], [idx.mu], theta, derivative=True)
    p, dp = p[0], dp[0]
    st = np.sin(theta)
    d2p = -np.cos(theta) / st * dp - (idx.ell * (idx.ell + 1.0) - idx.mu ** 2 / st ** 2) * p
    return nrm * p, nrm * dp, nrm * d2p


def psi_grid(idx: ModeIndex, theta, phi, variant: str = "plain"):
    """Psi and dPsi/dθ on the tensor grid (theta, phi)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any((theta < POLE_GUARD) | (theta > math.pi - POLE_GUARD)):
        raise NearPole("grid contains nodes within 1e-8 of a pole")
    p, dp, _ = theta_profile(idx, theta, derivative=True)
    if variant == "sin_weighted":
        st = np.sin(theta)
        w = st ** idx.mu
        dw = idx.mu * st ** (idx.mu - 1.0) * np.cos(theta) if idx.mu else np.zeros_like(theta)
        p, dp = w * p, dw * p + w * dp
    elif variant != "plain":
        raise ValidationError(f"unknown basis variant {variant!r}")
    phase = np.exp(1j * idx.m * phi)
    return np.outer(p, phase), np.outer(dp, phase)


def _cot_pi(x: float) -> float:
    sn = math.sin(math.pi * x)
    if abs(sn) < 1e-12:
        raise IntegerDifferencePole("cot(π(ell-|m|)) is infinite", diff=x)
    return math.cos(math.pi * x) / sn


def eval_dual(idx: ModeIndex, theta: float, phi: float) -> AngularEval:
    """w^{-1/2} [P + i cot(π(ell-|m|)) Q](cos θ) e^{imφ}."""
    _guard_theta(theta)
    w = spectral_weight(idx)
    cot = _cot_pi(idx.ell - idx.mu)
    scale = 1.0 / cmath.sqrt(w)
    x = math.cos(theta)
    st = math.sin(theta)
    p = specfun.legendre_p(idx.ell, idx.mu, x)
    dp = specfun.legendre_p_dtheta(idx.ell, idx.mu, theta)
    if abs(cot) < 1e-15:
        q = dq = 0.0
    else:
        q = specfun.legendre_q(idx.ell, idx.mu, x)
        q1 = specfun.legendre_q(idx.ell - 1.0, idx.mu, x) if idx.ell - 1.0 > -1.0 else None
        if q1 is None:
            h = 1e-6
            dq = (specfun.legendre_q(idx.ell, idx.mu, math.cos(theta + h))
                  - specfun.legendre_q(idx.ell, idx.mu, math.cos(theta - h))) / (2 * h)
        else:
            dq = (idx.ell * x * q - (idx.ell + idx.mu) * q1) / st
    phase = cmath.exp(1j * idx.m * phi)
    value = scale * (p + 1j * cot * q) * phase
    dtheta = scale * (dp + 1j * cot * dq) * phase
    return AngularEval(value=value, dtheta=dtheta, dphi_factor=1j * idx.m * value)


VSH_FAMILIES = ("radial", "even", "odd")


def eval_vsh(family: str, idx: ModeIndex, theta: float, phi: float, normalized: bool = False) -> VshSample:
    """Appendix-style vector harmonics Y(r), Y(e), Y(o) as (r, θ, φ) components."""
    if family not in VSH_FAMILIES:
        raise ValidationError(f"unknown VSH family {family!r}")
    ev = eval_psi(idx, theta, phi)
    if family == "radial":
        return VshSample(family, (ev.value, 0j, 0j))
    st = math.sin(theta)
    if st < POLE_GUARD:
        raise NearPole("1/sin(theta) term at the pole", theta=theta)
    d_theta = ev.dtheta
    d_phi = ev.dphi_factor / st
    if family == "even":
        comps = (0j, d_theta, d_phi)
    else:
        comps = (0j, d_phi, -d_theta)
    if normalized:
        lam = idx.ell * (idx.ell + 1.0)
        if lam <= 0:
            raise DomainError("rescaling needs ell(ell+1) > 0", ell=idx.ell)
        s = 1.0 / math.sqrt(lam)
        comps = tuple(c * s for c in comps)
    return VshSample(family, comps)


def vsh_grid(family: str, idx: ModeIndex, theta, phi, normalized: bool = False):
    """Array form of :func:`eval_vsh` with shape (3, n_theta, n_phi)."""
    if family not in VSH_FAMILIES:
        raise ValidationError(f"unknown VSH family {family!r}")
    val, dth = psi_grid(idx, theta, phi)
    out = np.zeros((3,) + val.shape, dtype=complex)
    if family == "radial":
        out[0] = val
        return out
    st = np.sin(np.asarray(theta, dtype=float))[:, None]
    dph = 1j * idx.m * val / st
    if family == "even":
        out[1], out[2] = dth, dph
    else:
        out[1], out[2] = dph, -dth
    if normalized:
        out /= math.sqrt(idx.ell * (idx.ell + 1.0))
    return out


def vector_mode_grid(idx: ModeIndex, theta, phi, with_derivatives: bool = False):
    """Divergence-free pattern Φ = (Ψ, ∂θΨ/ell, imΨ/(ell sinθ)).

    ``r^{ell-1} Φ`` equals ``∇(r^ell Ψ)/ell``, so it is curl free and, because
    Ψ is a Laplace-Beltrami eigenfunction, divergence free with radial exponent
    ``alpha = ell - 1``. With ``with_derivatives`` the θ-derivatives of the
    three components are returned as a second array.
    """
    if idx.ell == 0.0:
        raise DomainError("vector pattern needs ell != 0")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    p, dp, d2p = theta_profile(idx, theta, derivative=True)
    st = np.sin(theta)
    ct = np.cos(theta)
    phase = np.exp(1j * idx.m * phi)
    comps = np.stack([
        np.outer(p, phase),
        np.outer(dp / idx.ell, phase),
        np.outer(1j * idx.m * p / (idx.ell * st), phase),
    ])
    if not with_derivatives:
        return comps
    dcomps = np.stack([
        np.outer(dp, phase),
        np.outer(d2p / idx.ell, phase),
        np.outer(1j * idx.m / idx.ell * (dp / st - p * ct / st ** 2), phase),
    ])
    return comps, dcomps


def gauss_sphere_grid(n_theta: int, n_phi: int, phi0: float = TWO_PI):
    """Gauss-Legendre nodes in cos θ and uniform φ nodes on [0, phi0)."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x[::-1])
    w = w[::-1]
    phi = phi0 * np.arange(n_phi) / n_phi
    return theta, w, phi


def integer_modes(lmax: int, lmin: int = 0):
    """(ell, m) integer pairs in lexicographic order."""
    return [(ell, m) for ell in range(lmin, lmax + 1) for m in range(-ell, ell + 1)]


def vsh_decompose(samples, theta, theta_weights, phi, lmax: int, phi0: float = TWO_PI):
    """Project a tangential/radial vector field onto orthonormal integer VSH.

    ``samples`` has shape (3, n_theta, n_phi) with (r, θ, φ) components on a
    Gauss-Legendre (in cos θ) by uniform φ grid. Returns the coefficient rows
    ``(family, ell, m, coeff)`` and the relative reconstruction error.
    """
    samples = np.asarray(samples, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    if theta.size < lmax + 1:
        raise GridTooCoarse("theta quadrature order below lmax + 1", n_theta=theta.size, lmax=lmax)
    if samples.shape != (3, theta.size, len(phi)):
        raise ValidationError("samples must have shape (3, n_theta, n_phi)")
    wq = np.outer(theta_weights, np.full(len(phi), phi0 / len(phi)))
    rows = []
    recon = np.zeros_like(samples)
    for ell, m in integer_modes(lmax):
        idx = ModeIndex(float(ell), float(m), phi0)
        for family in VSH_FAMILIES:
            if family != "radial" and ell == 0:
                continue
            basis = vsh_grid(family, idx, theta, phi, normalized=True)
            coeff = np.sum(np.conj(basis) * samples * wq[None])
            rows.append((family, ell, m, complex(coeff)))
            recon += coeff * basis
    total = math.sqrt(np.sum(np.abs(samples) ** 2 * wq[None]))
    err = math.sqrt(np.sum(np.abs(samples - recon) ** 2 * wq[None]))
    rel = err / total if total > 0 else err
    return rows, rel


def pole_scaling_exponent(idx: ModeIndex, side: str = "north", window=(1e-4, 1e-2), n: int = 25) -> float:
    """Slope of log|Ψ| against log of the polar distance on a small window."""
    if idx.mu == 0:
        raise ValidationError("pole scaling needs |m| > 0")
    dist = np.geomspace(window[0], window[1], n)
    theta = dist if side == "north" else math.pi - dist
    if side not in ("north", "south"):
        raise ValidationError(f"unknown side {side!r}")
    vals = np.abs(theta_profile(idx, theta))
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise FitDegenerate("Psi underflows or overflows in the fit window")
    slope, _ = np.polyfit(np.log(dist), np.log(vals), 1)
    return float(slope)


def ell_to_s(ell) -> SpectralParam:
    """Root of s(1-s) = ell(ell+1) with non-negative imaginary part."""
    disc = complex(0.25 - ell * (ell + 1.0))
    root = cmath.sqrt(disc)
    s = 0.5 + root
    if s.imag < 0:
        s = 0.5 - root
    return SpectralParam(s=s)


def s_to_ell(s) -> complex:
    """Physical-branch ell (real part above -1/2) with ell(ell+1) = s(1-s)."""
    s = complex(s)
    return -0.5 + cmath.sqrt(0.25 + s * (1.0 - s))


def ell_s_map(direction: str, value):
    if direction == "ell_to_s":
        return ell_to_s(value)
    if direction == "s_to_ell":
        ell = s_to_ell(value)
        return ell.real if abs(ell.imag) < 1e-15 else ell
    raise ValidationError(f"unknown direction {direction!r}")
