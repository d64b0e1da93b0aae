"""Special functions of real, non-integer order.

Conventions
-----------
``legendre_p(s, mu, x)`` is the Ferrers function regular at ``x = 1`` with no
Condon-Shortley phase::

    P(s, mu; cos t) = Γ(s+mu+1) / (Γ(s-mu+1) Γ(1+mu) 2^mu)
                      * sin^mu(t) * 2F1(mu-s, mu+s+1; 1+mu; sin²(t/2))

For integers ``0 <= mu <= s`` this is ``(1-x²)^{mu/2} d^mu P_s/dx^mu``. The
hypergeometric parameters never include ``Γ(1-mu)``, so integer orders need no
limiting procedure. ``legendre_q`` is the companion second-kind function with
the same normalisation; it reduces to the classical ``Q_n`` for ``mu = 0``.

Spherical Bessel functions of real order delegate to ``scipy.special.jv`` and
``yv``; complex orders are supported only through the ascending series for
small arguments.
"""

import math

import numpy as np
from scipy import special as sp

from . import _kernels as K
from .errors import (
    ComplexOrderUnsupported,
    DomainError,
    NearPole,
    NonConvergent,
    Overflow,
    PoleAtC,
    PoleError,
    Underflow,
)

NEAR_POLE_FLOOR = 1e-10
COMPLEX_SERIES_XMAX = 2.0

__all__ = [
    "hyp2f1",
    "hyp2f1_cf",
    "gauss_cf_ratio",
    "legendre_p",
    "legendre_p_theta",
    "legendre_p_dtheta",
    "legendre_p_table",
    "legendre_q",
    "sph_bessel",
    "sph_bessel_deriv",
    "wronskian_jy",
    "gamma_ratio",
    "double_factorial_cont",
    "digamma",
    "rgamma",
]


def _raise_status(status, what, **details):
    if status == K.OK:
        return
    if status == K.NONCONVERGENT:
        raise NonConvergent(f"{what}: no convergence within {K.MAX_TERMS} terms", **details)
    if status == K.POLE_AT_C:
        raise PoleAtC(f"{what}: c is a non-positive integer and the series does not terminate", **details)
    if status == K.POLE_GAMMA:
        raise PoleError(f"{what}: gamma function pole", **details)
    if status == K.DOMAIN:
        raise DomainError(f"{what}: argument outside the domain", **details)
    raise RuntimeError(f"{what}: unknown status {status}")


def digamma(x: float) -> float:
    return float(K.digamma(float(x)))


def rgamma(x: float) -> float:
    return float(K.rgamma(float(x)))


def gamma_ratio(a: float, b: float) -> float:
    """Γ(a)/Γ(b) in log space.

    When both arguments sit on poles the ratio is the finite limit obtained by
    approaching both along the same offset.
    """
    a = float(a)
    b = float(b)
    a_pole = K.is_nonpos_int(a)
    b_pole = K.is_nonpos_int(b)
    if a_pole and b_pole:
        n, k = int(-a), int(-b)
        sign = -1.0 if (n - k) % 2 else 1.0
        return sign * math.exp(math.lgamma(k + 1.0) - math.lgamma(n + 1.0))
    if a_pole:
        raise PoleError("gamma_ratio: numerator at a pole", a=a, b=b)
    if b_pole:
        return 0.0
    la, sa = K.lgamma_sign(a)
    lb, sb = K.lgamma_sign(b)
    return sa * sb * math.exp(la - lb)


def double_factorial_cont(ell: float) -> float:
    """(2ell+1)!! continued as 2^{ell+1} Γ(ell+3/2)/√π."""
    arg = float(ell) + 1.5
    if K.is_nonpos_int(arg):
        raise PoleError("double_factorial_cont: pole", ell=ell)
    lg, sg = K.lgamma_sign(arg)
    return sg * math.exp((ell + 1.0) * math.log(2.0) + lg - 0.5 * math.log(math.pi))


def hyp2f1(a: float, b: float, c: float, x: float) -> float:
    """Gauss hypergeometric function on the principal branch, x < 1."""
    a, b, c, x = float(a), float(b), float(c), float(x)
    if not x < 1.0:
        raise DomainError("hyp2f1 requires x < 1", x=x)
    val, status = K.hyp2f1(a, b, c, x)
    if status == K.NONCONVERGENT:
        return hyp2f1_cf(a, b, c, x)
    _raise_status(status, "hyp2f1", a=a, b=b, c=c, x=x)
    return float(val)


def gauss_cf_ratio(a: float, b: float, c: float, x: float) -> float:
    """F(a,b+1;c+1;x) / F(a,b;c;x) from Gauss's continued fraction."""
    val, status = K.gauss_cf_ratio(float(a), float(b), float(c), float(x))
    _raise_status(status, "gauss_cf_ratio", a=a, b=b, c=c, x=x)
    return float(val)


def hyp2f1_cf(a: float, b: float, c: float, x: float) -> float:
    """2F1 as a product of continued-fraction ratios.

    Requires ``a`` or ``b`` to be a positive integer n: stepping that parameter
    down to 0 gives F(a, 0; c-n; x) = 1 and each step is one CF ratio.
    """
    a, b, c, x = float(a), float(b), float(c), float(x)
    if not (b > 0 and b == math.floor(b)):
        if a > 0 and a == math.floor(a):
            a, b = b, a
        else:
            raise NonConvergent("hyp2f1: series failed and no integer parameter for the continued fraction",
                                a=a, b=b, c=c, x=x)
    n = int(b)
    val = 1.0
    for k in range(n):
        bb = float(k)
        cc = c - n + k
        if K.is_nonpos_int(cc):
            raise PoleAtC("hyp2f1_cf: intermediate lower parameter hits a pole", a=a, b=b, c=c)
        val *= gauss_cf_ratio(a, bb, cc, x)
    return val


def legendre_p_theta(s: float, mu: float, theta: float) -> float:
    """Ferrers function of degree s, order mu >= 0, evaluated at cos(theta)."""
    if mu < 0:
        raise DomainError("legendre_p: order must be non-negative", mu=mu)
    if not 0.0 <= theta <= math.pi:
        raise DomainError("legendre_p: theta outside [0, pi]", theta=theta)
    if theta == math.pi and mu == 0 and s == math.floor(s):
        return (-1.0) ** int(s) if s >= 0 else (-1.0) ** int(-s - 1)
    if theta == math.pi:
        raise DomainError("legendre_p: the south pole is singular for this order", s=s, mu=mu)
    val, status = K.ferrers_p(float(s), float(mu), float(theta))
    _raise_status(status, "legendre_p", s=s, mu=mu, theta=theta)
    return float(val)


def legendre_p(s: float, mu: float, x: float) -> float:
    """Ferrers function of degree s, order mu >= 0 at x in (-1, 1)."""
    x = float(x)
    if not -1.0 < x < 1.0:
        raise DomainError("legendre_p requires |x| < 1", x=x)
    return legendre_p_theta(s, mu, math.acos(x))


def legendre_p_dtheta(s: float, mu: float, theta: float, floor: float = NEAR_POLE_FLOOR) -> float:
    """d/dθ P(s, mu; cos θ) from (1-x²)P' = (s+mu)P_{s-1} - s x P_s."""
    if abs(math.sin(theta)) < floor:
        raise NearPole("legendre_p_dtheta: sin(theta) below floor", theta=theta, floor=floor)
    val, status = K.ferrers_p_dtheta(float(s), float(mu), float(theta))
    _raise_status(status, "legendre_p_dtheta", s=s, mu=mu, theta=theta)
    return float(val)


def legendre_p_table(s, mu, theta, derivative: bool = False):
    """Tabulate P for paired (s, mu) rows over theta columns.

    Returns ``values`` (and ``dtheta`` when requested) of shape
    ``(len(s), len(theta))``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    s, mu = np.broadcast_arrays(s, mu)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(mu < 0):
        raise DomainError("legendre_p_table: orders must be non-negative")
    if np.any((theta <= 0) | (theta >= math.pi)):
        raise DomainError("legendre_p_table: theta nodes must be interior")
    val, der, status = K.ferrers_table(np.ascontiguousarray(s), np.ascontiguousarray(mu),
                                       np.ascontiguousarray(theta), bool(derivative))
    bad = np.nonzero(status)[0]
    if bad.size:
        i = int(bad[0])
        _raise_status(int(status[i]), "legendre_p_table", s=float(s[i]), mu=float(mu[i]))
    if derivative:
        return val, der
    return val


def _is_int(v: float, tol: float = 1e-12) -> bool:
    return abs(v - round(v)) < tol


def _classical_q(n: int, m: int, x: float) -> float:
    """Integer-index Ferrers Q without phase via degree then order recurrences."""
    q0 = 0.5 * math.log((1.0 + x) / (1.0 - x))
    qs = [q0, x * q0 - 1.0]
    for k in range(1, n):
        qs.append(((2 * k + 1) * x * qs[k] - k * qs[k - 1]) / (k + 1))
    if m == 0:
        return qs[n]
    sq = math.sqrt(1.0 - x * x)
    if n == 0:
        dq = 1.0 / (1.0 - x * x)
    else:
        dq = n * (x * qs[n] - qs[n - 1]) / (x * x - 1.0)
    lower, upper = qs[n], sq * dq
    for k in range(0, m - 1):
        nxt = 2.0 * (k + 1) * x / sq * upper - (n - k) * (n + k + 1) * lower
        lower, upper = upper, nxt
    return upper


def _ferrers_p_upper(s: float, mu: float, x: float) -> float:
    """((1+x)/(1-x))^{mu/2} F(s+1, -s; 1-mu; (1-x)/2) / Γ(1-mu)."""
    r = rgamma(1.0 - mu)
    if r == 0.0:
        return 0.0
    z = 0.5 * (1.0 - x)
    return ((1.0 + x) / (1.0 - x)) ** (0.5 * mu) * hyp2f1(s + 1.0, -s, 1.0 - mu, z) * r


def legendre_q(s: float, mu: float, x: float) -> float:
    """Second-kind Legendre function with the normalisation of :func:`legendre_p`.

    For x > 1 the convergent series in 1/x² is used. Interior arguments use
    the P/Q connection formulas; integer (s, mu) use the classical recurrence.
    """
    s, mu, x = float(s), float(mu), float(x)
    if mu < 0:
        raise DomainError("legendre_q: order must be non-negative", mu=mu)
    if x > 1.0:
        if K.is_nonpos_int(s + mu + 1.0) or K.is_nonpos_int(s + 1.5):
            raise PoleError("legendre_q: gamma pole", s=s, mu=mu)
        lg1, sg1 = K.lgamma_sign(s + mu + 1.0)
        lg2, sg2 = K.lgamma_sign(s + 1.5)
        logc = 0.5 * math.log(math.pi) + lg1 - lg2 - (s + 1.0) * math.log(2.0) \
            + 0.5 * mu * math.log(x * x - 1.0) - (s + mu + 1.0) * math.log(x)
        f = hyp2f1(0.5 * (s + mu) + 1.0, 0.5 * (s + mu + 1.0), s + 1.5, 1.0 / (x * x))
        return sg1 * sg2 * math.exp(logc) * f
    if not -1.0 < x < 1.0:
        raise DomainError("legendre_q: x must lie in (-1, 1) or exceed 1", x=x)
    d = s - mu
    if not _is_int(d):
        pd = math.pi * d
        return 0.5 * math.pi * (math.cos(pd) * legendre_p(s, mu, x) - legendre_p(s, mu, -x)) / math.sin(pd)
    if not _is_int(mu):
        return 0.5 * math.pi / math.sin(math.pi * mu) * (
            _ferrers_p_upper(s, mu, x) - math.cos(math.pi * mu) * legendre_p(s, mu, x))
    n, m = int(round(s)), int(round(mu))
    if n < 0:
        raise DomainError("legendre_q: negative integer degree", s=s)
    return _classical_q(n, m, x)


def _check_order(nu):
    if isinstance(nu, complex) and nu.imag != 0.0:
        return complex(nu)
    return float(np.real(nu))


def _sph_series_complex(kind: str, nu: complex, x: float) -> complex:
    """Ascending series, valid for complex order when x is small."""
    if x > COMPLEX_SERIES_XMAX:
        raise ComplexOrderUnsupported("complex order supported only for x <= 2", nu=str(nu), x=x)

    def jser(alpha):
        total = 0j
        half = 0.5 * x
        term_pow = half ** alpha
        for k in range(K.MAX_TERMS):
            term = (-1) ** k * half ** (2 * k) / math.factorial(k) * sp.rgamma(alpha + k + 1) * term_pow
            total += term
            if k > 4 and abs(term) <= 1e-17 * abs(total):
                return total
        raise NonConvergent("complex-order Bessel series did not converge")

    alpha = nu + 0.5
    jv = jser(alpha)
    pref = np.sqrt(np.pi / (2 * x))
    if kind == "j":
        return complex(pref * jv)
    yv = (jv * np.cos(np.pi * alpha) - jser(-alpha)) / np.sin(np.pi * alpha)
    if kind == "y":
        return complex(pref * yv)
    if kind == "h1":
        return complex(pref * (jv + 1j * yv))
    if kind == "h2":
        return complex(pref * (jv - 1j * yv))
    raise DomainError(f"unknown Bessel kind {kind!r}")


def sph_bessel(kind: str, nu, x: float) -> complex:
    """Spherical Bessel j, y or Hankel h1, h2 of order nu at x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError("sph_bessel requires x > 0", x=x)
    nu = _check_order(nu)
    if isinstance(nu, complex):
        return _sph_series_complex(kind, nu, x)
    pref = math.sqrt(math.pi / (2.0 * x))
    if kind == "j":
        val = pref * float(sp.jv(nu + 0.5, x))
        if val == 0.0 and nu > 0:
            raise Underflow("j underflows at this order and argument", nu=nu, x=x)
        return complex(val, 0.0)
    yv = pref * float(sp.yv(nu + 0.5, x))
    if not math.isfinite(yv):
        raise Overflow("y overflows at this order and argument", nu=nu, x=x)
    if kind == "y":
        return complex(yv, 0.0)
    jv = pref * float(sp.jv(nu + 0.5, x))
    if kind == "h1":
        return complex(jv, yv)
    if kind == "h2":
        return complex(jv, -yv)
    raise DomainError(f"unknown Bessel kind {kind!r}")


def sph_bessel_deriv(kind: str, nu, x: float) -> complex:
    """d/dx of :func:`sph_bessel` from f'_nu = f_{nu-1} - (nu+1) f_nu / x."""
    return sph_bessel(kind, nu - 1.0, x) - (nu + 1.0) / x * sph_bessel(kind, nu, x)


def sph_bessel_array(kind: str, nu: float, x):
    """Vectorised real-order variant returning a complex array."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("sph_bessel requires x > 0")
    pref = np.sqrt(np.pi / (2.0 * x))
    j = pref * sp.jv(nu + 0.5, x)
    if kind == "j":
        return j.astype(complex)
    y = pref * sp.yv(nu + 0.5, x)
    if not np.all(np.isfinite(y)):
        raise Overflow("y overflows on part of the grid", nu=nu)
    if kind == "y":
        return y.astype(complex)
    if kind == "h1":
        return j + 1j * y
    if kind == "h2":
        return j - 1j * y
    raise DomainError(f"unknown Bessel kind {kind!r}")


def sph_bessel_deriv_array(kind: str, nu: float, x):
    x = np.asarray(x, dtype=float)
    return sph_bessel_array(kind, nu - 1.0, x) - (nu + 1.0) / x * sph_bessel_array(kind, nu, x)


def wronskian_jy(nu: float, k: float, r: float) -> float:
    """j(kr) d/dr y(kr) - y(kr) d/dr j(kr); analytically 1/(k r²)."""
    x = k * r
    if not x > 0:
        raise DomainError("wronskian_jy requires k r > 0", k=k, r=r)
    j = sph_bessel("j", nu, x).real
    y = sph_bessel("y", nu, x).real
    dj = sph_bessel_deriv("j", nu, x).real
    dy = sph_bessel_deriv("y", nu, x).real
    return k * (j * dy - y * dj)
