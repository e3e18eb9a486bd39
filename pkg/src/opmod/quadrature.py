"""Composite Gauss-Legendre quadrature used as an independent moment oracle.

Panels are split at every breakpoint the caller names (singularities,
jumps, support edges) and graded geometrically toward each of them, so
integrable algebraic and logarithmic singularities converge fast. Every
node is stored as an anchor breakpoint plus a small offset, and weights
built with :class:`LocalWeight` evaluate ``x - t`` from that offset, which
keeps full relative accuracy arbitrarily close to the singular points.

On bounded families the integral is taken in the angle variable x = cos(t),
which removes the Chebyshev endpoint singularities from the Jacobian and
spreads the polynomial oscillations uniformly.

This is deliberately a different route from the recurrences it checks and
is only used for tests, diagnostics and for seeding the first few moments
of an ODE recurrence.
"""
from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np

from .families import Family, evaluate

__all__ = ["LocalWeight", "integrate", "quadrature_moments"]

NODES = 64
GRADING_RATIO = 0.1


class LocalWeight:
    """w(x) = smooth(x) * prod |x - t_i|^g_i * prod log(s_j / |x - u_j|).

    ``points``/``exponents`` give the algebraic factors and ``logs`` is a
    sequence of ``(u_j, s_j)`` pairs. Every t_i and u_j should be passed to
    the oracle as a breakpoint.
    """

    def __init__(self, points=(), exponents=(), logs=(), smooth=None):
        self.points = tuple(float(p) for p in points)
        self.exponents = tuple(float(g) for g in exponents)
        if len(self.points) != len(self.exponents):
            raise ValueError("points and exponents differ in length")
        self.logs = tuple((float(u), float(s)) for u, s in logs)
        self.smooth = smooth

    @property
    def singular_points(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.points) | {u for u, _ in self.logs}))

    def local(self, anchor, offset):
        anchor = np.asarray(anchor, dtype=float)
        offset = np.asarray(offset, dtype=float)
        x = anchor + offset
        val = np.ones_like(x) if self.smooth is None else np.asarray(self.smooth(x), dtype=float)
        for t, g in zip(self.points, self.exponents):
            if g:
                val = val * np.abs((anchor - t) + offset) ** g
        for u, s in self.logs:
            val = val * np.log(s / np.abs((anchor - u) + offset))
        return val

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.local(x, np.zeros_like(x))


def _local(weight, anchor, offset):
    if weight is None:
        return np.ones_like(offset)
    if hasattr(weight, "local"):
        return weight.local(anchor, offset)
    return np.asarray(weight(anchor + offset), dtype=float)


@lru_cache(maxsize=None)
def _gauss_legendre(n=NODES):
    return np.polynomial.legendre.leggauss(n)


def _graded_edges(length, per_unit, levels):
    """Panel edges on [0, length], graded geometrically toward 0."""
    edges = np.concatenate([[0.0], length * GRADING_RATIO ** np.arange(levels, -1, -1)])
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(np.ceil((b - a) * per_unit)))
        out.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(out)


def _rule(breaks, per_unit, levels):
    """Nodes as (anchor index, signed offset, weight) triples.

    Each interval between consecutive breaks is halved; the left half is
    anchored at its left break with offsets >= 0 and the right half at its
    right break with offsets <= 0.
    """
    t, w = _gauss_legendre()
    idx, tau, wts = [], [], []
    for i in range(len(breaks) - 1):
        half = (breaks[i + 1] - breaks[i]) / 2
        if half <= 0:
            continue
        e = _graded_edges(half, per_unit, levels)
        a, b = e[:-1, None], e[1:, None]
        loc = (((b - a) * t[None, :] + (a + b)) / 2).ravel()
        wl = ((b - a) / 2 * w[None, :]).ravel()
        for anchor, sign in ((i, 1.0), (i + 1, -1.0)):
            idx.append(np.full(loc.size, anchor))
            tau.append(sign * loc)
            wts.append(wl)
    return np.concatenate(idx), np.concatenate(tau), np.concatenate(wts)


def _accumulate(values, n_nodes, chunk=8192):
    total = None
    for s in range(0, n_nodes, chunk):
        part = values(slice(s, min(s + chunk, n_nodes)))
        total = part if total is None else total + part
    return total


def integrate(
    integrand,
    lo: float,
    hi: float,
    breakpoints=(),
    *,
    weight=None,
    oscillation: int = 0,
    angular: bool = False,
    tol: float = 1e-13,
    max_refinements: int = 6,
):
    """Integrate ``integrand(x) * weight(x)`` over [lo, hi].

    ``integrand(x)`` returns an array whose leading axis runs over x and
    should be smooth between breakpoints; singular behaviour belongs in
    ``weight``. With ``angular=True`` (requires [lo, hi] within [-1, 1])
    the substitution x = cos(t) is applied. ``oscillation`` is the largest
    polynomial degree in the integrand and sets the base panel density.
    The rule is refined (panel count doubled, grading deepened) until two
    successive estimates agree to ``tol`` relative to the largest component.
    """
    pts = sorted({float(p) for p in breakpoints if lo < p < hi})
    xb = np.array([lo, *pts, hi], dtype=float)
    if angular:
        xb = xb[::-1]
        breaks = np.arccos(np.clip(xb, -1.0, 1.0))
        cos_a = xb
        sin_a = np.sqrt(np.clip(1.0 - xb * xb, 0.0, None))
    else:
        breaks = xb

    def build(per_unit, levels):
        idx, tau, wq = _rule(breaks, per_unit, levels)
        anchor = xb[idx]
        if angular:
            c, s = cos_a[idx], sin_a[idx]
            # cos(theta_a + tau) - cos(theta_a) and sin(theta_a + tau) without cancellation
            offset = -2.0 * c * np.sin(tau / 2) ** 2 - s * np.sin(tau)
            jac = s * np.cos(tau) + c * np.sin(tau)
            wq = wq * jac
        else:
            offset = tau
        wq = wq * _local(weight, anchor, offset)
        x = anchor + offset
        keep = wq != 0
        return x[keep], wq[keep]

    def estimate(per_unit, levels):
        x, wq = build(per_unit, levels)

        def values(sl):
            v = integrand(x[sl])
            return np.tensordot(wq[sl], v, axes=(0, 0))

        return _accumulate(values, x.size)

    per_unit = (oscillation + 8) / 12
    levels = 24
    prev = estimate(per_unit, levels)
    for _ in range(max_refinements):
        per_unit *= 2
        levels += 8
        cur = estimate(per_unit, levels)
        scale = max(np.max(np.abs(cur)), np.finfo(float).tiny)
        if np.max(np.abs(cur - prev)) <= tol * scale:
            return cur
        prev = cur
    warnings.warn("quadrature oracle did not reach the requested agreement", RuntimeWarning)
    return prev


def _laguerre_cutoff(m: int) -> float:
    return 80.0 + 6.0 * m


def quadrature_moments(
    weight,
    family: Family,
    m: int,
    breakpoints=(),
    *,
    support: tuple[float, float] | None = None,
    tol: float = 1e-13,
) -> np.ndarray:
    """Moments  int p_k(x) w(x) dx,  k < m, by composite quadrature.

    ``weight`` is the full weight (including any classical factor), either
    a :class:`LocalWeight` or a plain vectorized callable. Its singular
    points are added to ``breakpoints`` automatically. ``support``
    restricts the interval; by default it is the family's domain, truncated
    far into the tail for Laguerre.
    """
    lo, hi = support if support is not None else family.domain
    if np.isinf(hi):
        hi = _laguerre_cutoff(m)
    pts = set(breakpoints) | set(getattr(weight, "singular_points", ()))

    return integrate(
        lambda x: evaluate(family, m, x),
        lo,
        hi,
        pts,
        weight=weight,
        oscillation=m,
        angular=family.bounded,
        tol=tol,
    )
