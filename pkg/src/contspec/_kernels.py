"""Scalar and tabulation kernels for the hypergeometric and Ferrers functions.

Every routine returns ``(value, status)`` instead of raising so the same source
compiles under numba. Status codes are translated into exceptions by the
public wrappers in :mod:`contspec.specfun`.
"""

import math

import numpy as np

from ._accel import jit

OK = 0
NONCONVERGENT = 1
POLE_AT_C = 2
POLE_GAMMA = 3
DOMAIN = 4

MAX_TERMS = 5000
TOL = 1e-14
# Series stop once a term drops below this fraction of the running sum.
TERM_EPS = 1e-17
DEGENERATE_EPS = 1e-12
LOG2 = math.log(2.0)
# Direct summation is preferred up to this argument when it does not cancel.
DIRECT_Z_MAX = 0.9
CANCEL_LIMIT = 10.0


@jit
def is_nonpos_int(x):
    return x <= 0.0 and x == math.floor(x)


@jit
def lgamma_sign(x):
    """log|Γ(x)| and the sign of Γ(x); x must not be a pole."""
    lg = math.lgamma(x)
    if x > 0.0:
        return lg, 1.0
    k = int(math.ceil(-x))
    if k % 2 == 1:
        return lg, -1.0
    return lg, 1.0


@jit
def rgamma(x):
    """1/Γ(x), zero at the poles."""
    if is_nonpos_int(x):
        return 0.0
    lg, sg = lgamma_sign(x)
    return sg * math.exp(-lg)


@jit
def digamma(x):
    if is_nonpos_int(x):
        return np.nan
    acc = 0.0
    if x < 0.0:
        acc = -math.pi / math.tan(math.pi * x)
        x = 1.0 - x
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    x2 = 1.0 / (x * x)
    tail = x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 * (1.0 / 132.0)))))
    return acc + math.log(x) - 0.5 / x - tail


@jit
def pochhammer_terms_finite(a, b, c, z, n_max):
    """Sum of the terminating series up to and including index n_max."""
    term = 1.0
    total = 1.0
    for n in range(n_max):
        den = (c + n) * (n + 1.0)
        if den == 0.0:
            return np.nan, POLE_AT_C
        term *= (a + n) * (b + n) / den * z
        total += term
    return total, OK


@jit
def hyp_series(a, b, c, z):
    """Plain Gauss series; assumes |z| < 1 and c not a non-positive integer."""
    term = 1.0
    total = 1.0
    for n in range(MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if term == 0.0 or abs(term) <= TERM_EPS * abs(total):
            return total, OK
    return total, NONCONVERGENT


@jit
def hyp_series_guarded(a, b, c, z, max_terms):
    """Gauss series that reports failure on slow convergence or heavy cancellation."""
    term = 1.0
    total = 1.0
    peak = 1.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if abs(term) > peak:
            peak = abs(term)
        if term == 0.0 or abs(term) <= TERM_EPS * abs(total):
            if peak <= CANCEL_LIMIT * abs(total):
                return total, OK
            return total, NONCONVERGENT
    return total, NONCONVERGENT


@jit
def _terminating_degree(a, b):
    n = -1
    if is_nonpos_int(a):
        n = int(-a)
    if is_nonpos_int(b):
        nb = int(-b)
        if n < 0 or nb < n:
            n = nb
    return n


@jit
def _log_series_minus(a, b, m, w):
    """Degenerate connection for c = a + b - m (m >= 0), evaluated at w = 1 - z."""
    c = a + b - m
    lgc, sgc = lgamma_sign(c)
    lw = math.log(w)
    total = 0.0
    if m >= 1:
        coef = rgamma(a) * rgamma(b)
        if coef != 0.0:
            lgm = math.lgamma(float(m))
            head = 0.0
            term = 1.0
            for k in range(m):
                if k > 0:
                    term *= (a - m + k - 1.0) * (b - m + k - 1.0) / (k * (1.0 - m + k - 1.0)) * w
                head += term
            total += sgc * math.exp(lgc + lgm) * coef * head * w ** (-m)
    coef2 = rgamma(a - m) * rgamma(b - m)
    if coef2 == 0.0:
        return total, OK
    pref = -((-1.0) ** m) * sgc * math.exp(lgc) * coef2
    term = 1.0 / math.exp(math.lgamma(m + 1.0))
    acc = 0.0
    for k in range(MAX_TERMS):
        if k > 0:
            term *= (a + k - 1.0) * (b + k - 1.0) / (k * (k + m)) * w
        bracket = lw - digamma(k + 1.0) - digamma(k + m + 1.0) + digamma(a + k) + digamma(b + k)
        piece = term * bracket
        acc += piece
        if k > 2 and (piece == 0.0 or abs(piece) <= TERM_EPS * abs(acc)):
            return total + pref * acc, OK
    return total + pref * acc, NONCONVERGENT


@jit
def _log_series_plus(a, b, m, w):
    """Degenerate connection for c = a + b + m (m >= 1), evaluated at w = 1 - z."""
    c = a + b + m
    lgc, sgc = lgamma_sign(c)
    lw = math.log(w)
    total = 0.0
    coef = rgamma(a + m) * rgamma(b + m)
    if coef != 0.0:
        head = 0.0
        term = 1.0
        for k in range(m):
            if k > 0:
                term *= (a + k - 1.0) * (b + k - 1.0) / (k * (1.0 - m + k - 1.0)) * w
            head += term
        total += sgc * math.exp(lgc + math.lgamma(float(m))) * coef * head
    coef2 = rgamma(a) * rgamma(b)
    if coef2 == 0.0:
        return total, OK
    pref = -((-w) ** m) * sgc * math.exp(lgc) * coef2
    term = 1.0 / math.exp(math.lgamma(m + 1.0))
    acc = 0.0
    for k in range(MAX_TERMS):
        if k > 0:
            term *= (a + m + k - 1.0) * (b + m + k - 1.0) / (k * (k + m)) * w
        bracket = lw - digamma(k + 1.0) - digamma(k + m + 1.0) + digamma(a + k + m) + digamma(b + k + m)
        piece = term * bracket
        acc += piece
        if k > 2 and (piece == 0.0 or abs(piece) <= TERM_EPS * abs(acc)):
            return total + pref * acc, OK
    return total + pref * acc, NONCONVERGENT


@jit
def hyp_unit(a, b, c, z, w):
    """2F1(a,b;c;z) for z in [0, 1) with w = 1 - z supplied to full precision."""
    n_term = _terminating_degree(a, b)
    if n_term >= 0:
        return pochhammer_terms_finite(a, b, c, z, n_term)
    if is_nonpos_int(c):
        return np.nan, POLE_AT_C
    if z == 0.0:
        return 1.0, OK
    if z <= 0.5:
        return hyp_series(a, b, c, z)
    if z <= DIRECT_Z_MAX:
        val, st = hyp_series_guarded(a, b, c, z, 600)
        if st == OK:
            return val, OK
    d = c - a - b
    dr = math.floor(d + 0.5)
    if abs(d - dr) < DEGENERATE_EPS:
        m = int(dr)
        if m <= 0:
            return _log_series_minus(a, b, -m, w)
        return _log_series_plus(a, b, m, w)
    lgc, sgc = lgamma_sign(c)
    total = 0.0
    r1 = rgamma(c - a) * rgamma(c - b)
    if r1 != 0.0:
        lgd, sgd = lgamma_sign(d)
        f1, st = hyp_series(a, b, 1.0 - d, w)
        if st != OK:
            return np.nan, st
        total += sgc * sgd * math.exp(lgc + lgd) * r1 * f1
    r2 = rgamma(a) * rgamma(b)
    if r2 != 0.0:
        lgmd, sgmd = lgamma_sign(-d)
        f2, st = hyp_series(c - a, c - b, 1.0 + d, w)
        if st != OK:
            return np.nan, st
        total += sgc * sgmd * math.exp(lgc + lgmd) * r2 * f2 * w ** d
    return total, OK


@jit
def hyp2f1(a, b, c, x):
    """Gauss hypergeometric function for real x < 1 (principal branch)."""
    if not x < 1.0:
        return np.nan, DOMAIN
    n_term = _terminating_degree(a, b)
    if n_term >= 0:
        return pochhammer_terms_finite(a, b, c, x, n_term)
    if is_nonpos_int(c):
        return np.nan, POLE_AT_C
    if x >= 0.0:
        return hyp_unit(a, b, c, x, 1.0 - x)
    # Pfaff transformation onto (0, 1); prefer the parameter that terminates.
    zp = x / (x - 1.0)
    wp = 1.0 / (1.0 - x)
    if is_nonpos_int(c - b) or not is_nonpos_int(c - a):
        val, st = hyp_unit(a, c - b, c, zp, wp)
        return val * (1.0 - x) ** (-a), st
    val, st = hyp_unit(b, c - a, c, zp, wp)
    return val * (1.0 - x) ** (-b), st


@jit
def gauss_cf_ratio(a, b, c, x):
    """F(a,b+1;c+1;x)/F(a,b;c;x) from Gauss's continued fraction (modified Lentz)."""
    tiny = 1e-300
    f = 1.0
    cc = 1.0
    dd = 0.0
    for j in range(1, MAX_TERMS + 1):
        if j % 2 == 1:
            n = (j - 1) // 2
            kj = (a + n) * (c - b + n) / ((c + 2.0 * n) * (c + 2.0 * n + 1.0))
        else:
            n = j // 2
            kj = (b + n) * (c - a + n) / ((c + 2.0 * n - 1.0) * (c + 2.0 * n))
        an = -kj * x
        dd = 1.0 + an * dd
        if abs(dd) < tiny:
            dd = tiny
        cc = 1.0 + an / cc
        if abs(cc) < tiny:
            cc = tiny
        dd = 1.0 / dd
        delta = cc * dd
        f *= delta
        if abs(delta - 1.0) < TOL * 1e-2:
            return 1.0 / f, OK
    return 1.0 / f, NONCONVERGENT


@jit
def ferrers_p_zw(s, mu, z, w):
    """Ferrers function of degree s and order mu >= 0 with z = sin²(θ/2), w = cos²(θ/2).

    Uses the representation regular at theta = 0,
    Γ(s+mu+1)/(Γ(s-mu+1)Γ(1+mu)2^mu) sin^mu(theta) F(mu-s, mu+s+1; 1+mu; z),
    which equals the classical associated Legendre function without the
    Condon-Shortley phase whenever s and mu are integers. Passing z and w
    separately keeps full relative precision next to either pole.
    """
    q = s - mu + 1.0
    if is_nonpos_int(q):
        return 0.0, OK
    p = s + mu + 1.0
    if mu == 0.0:
        log_pref = 0.0
        sign = 1.0
    else:
        if is_nonpos_int(p):
            return np.nan, POLE_GAMMA
        if z <= 0.0:
            return 0.0, OK
        lg1, sg1 = lgamma_sign(p)
        lg2, sg2 = lgamma_sign(q)
        log_sin = LOG2 + 0.5 * (math.log(z) + math.log(w))
        log_pref = lg1 - lg2 - math.lgamma(1.0 + mu) - mu * LOG2 + mu * log_sin
        sign = sg1 * sg2
    f, status = hyp_unit(mu - s, mu + s + 1.0, 1.0 + mu, z, w)
    return sign * math.exp(log_pref) * f, status


@jit
def ferrers_p(s, mu, theta):
    """Ferrers function at cos(theta); see :func:`ferrers_p_zw`."""
    half = 0.5 * theta
    return ferrers_p_zw(s, mu, math.sin(half) ** 2, math.cos(half) ** 2)


@jit
def ferrers_table_zw(s_arr, mu_arr, z_arr, w_arr, with_derivative):
    """Tabulate P (and dP/dθ) for paired (s, mu) over nodes given as (z, w)."""
    n_mode = s_arr.shape[0]
    n_node = z_arr.shape[0]
    val = np.empty((n_mode, n_node))
    der = np.empty((n_mode, n_node))
    status = np.zeros(n_mode, dtype=np.int64)
    for i in range(n_mode):
        s = s_arr[i]
        mu = mu_arr[i]
        for t in range(n_node):
            z = z_arr[t]
            w = w_arr[t]
            v, st = ferrers_p_zw(s, mu, z, w)
            val[i, t] = v
            if st != OK:
                status[i] = st
            if with_derivative:
                v1, st1 = ferrers_p_zw(s - 1.0, mu, z, w)
                if st1 != OK:
                    status[i] = st1
                der[i, t] = (s * (w - z) * v - (s + mu) * v1) / (2.0 * math.sqrt(z * w))
            else:
                der[i, t] = 0.0
    return val, der, status


@jit
def ferrers_p_dtheta(s, mu, theta):
    """d/dθ of :func:`ferrers_p` from the degree-lowering recurrence."""
    st = math.sin(theta)
    p0, s0 = ferrers_p(s, mu, theta)
    if s0 != OK:
        return np.nan, s0
    p1, s1 = ferrers_p(s - 1.0, mu, theta)
    if s1 != OK:
        return np.nan, s1
    return (s * math.cos(theta) * p0 - (s + mu) * p1) / st, OK


@jit
def ferrers_table(s_arr, mu_arr, theta_arr, with_derivative):
    """Tabulate P (and optionally dP/dθ) for paired (s, mu) over all theta nodes."""
    n_mode = s_arr.shape[0]
    n_theta = theta_arr.shape[0]
    val = np.empty((n_mode, n_theta))
    der = np.empty((n_mode, n_theta))
    status = np.zeros(n_mode, dtype=np.int64)
    for i in range(n_mode):
        s = s_arr[i]
        mu = mu_arr[i]
        for t in range(n_theta):
            th = theta_arr[t]
            v, st = ferrers_p(s, mu, th)
            val[i, t] = v
            if st != OK:
                status[i] = st
            if with_derivative:
                v1, st1 = ferrers_p(s - 1.0, mu, th)
                if st1 != OK:
                    status[i] = st1
                der[i, t] = (s * math.cos(th) * v - (s + mu) * v1) / math.sin(th)
            else:
                der[i, t] = 0.0
    return val, der, status
