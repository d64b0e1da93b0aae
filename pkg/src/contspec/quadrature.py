"""Quadrature rules shared by the angular, coupling and radial modules."""

import math

import numpy as np
import scipy.linalg as sla
from scipy.special import gammaln

# Smallest endpoint distance reached by the double-exponential rule.
DE_FLOOR = 1e-300


def tanh_sinh_unit(level: int = 6, floor: float = DE_FLOOR):
    """Double-exponential rule on (0, 1).

    Returns ``(z, w, weights)`` with ``w = 1 - z`` computed without
    cancellation, so integrands singular at either end can be evaluated right
    up to distance ``floor``. Step size is ``2**-level``.
    """
    z, w, weights, _ = tanh_sinh_nested(level, floor)
    return z, w, weights


def tanh_sinh_nested(level: int = 6, floor: float = DE_FLOOR):
    """The rule at ``level`` plus a mask selecting the nodes of ``level - 1``."""
    h = 2.0 ** (-level)
    u_max = math.asinh(math.log(1.0 / floor) / math.pi)
    n = int(math.floor(u_max / h))
    k = np.arange(-n, n + 1)
    u = h * k
    e = np.pi * np.sinh(u)
    z = 1.0 / (1.0 + np.exp(-e))
    w = 1.0 / (1.0 + np.exp(e))
    weights = h * np.pi * np.cosh(u) * z * w
    keep = (z > 0) & (w > 0) & (weights > 0)
    return z[keep], w[keep], weights[keep], (k[keep] % 2) == 0


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_jacobi_symmetric(n: int, a: float):
    """Nodes and weights for the weight (1 - x²)^a on [-1, 1], a > -1.

    Golub-Welsch on the three-term recurrence. Unlike the Newton-based library
    rule it stays near machine precision for a close to -1.
    """
    k = np.arange(1, n, dtype=float)
    num = k * (k + 2 * a)
    den = (2 * k + 2 * a) ** 2 - 1.0
    # the only 0/0 entry (a = -1/2, k = 1) has limit 1/2
    sq = np.divide(num, den, out=np.full_like(k, 0.5), where=den != 0.0)
    off = np.sqrt(sq)
    x, vec = sla.eigh_tridiagonal(np.zeros(n), off)
    total = math.exp((2 * a + 1) * math.log(2.0) + 2 * gammaln(a + 1) - gammaln(2 * a + 2))
    return x, total * vec[0] ** 2


def graded_panels(a: float, b: float, n_panels: int, ratio: float = 2.0):
    """Panel edges on [a, b] whose widths grow geometrically away from a."""
    if n_panels < 1:
        raise ValueError("need at least one panel")
    widths = ratio ** np.arange(n_panels, dtype=float)
    edges = a + (b - a) * np.concatenate([[0.0], np.cumsum(widths)]) / widths.sum()
    edges[-1] = b
    return edges


def composite_gauss(edges, order: int):
    """Nodes and weights of a composite Gauss-Legendre rule over the panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = []
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)
