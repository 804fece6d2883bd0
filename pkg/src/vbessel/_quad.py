"""Internal quadrature toolkit.

Rules come in two flavors: Gauss-Jacobi rules whose weights absorb
algebraic endpoint singularities (x - lo)^left * (hi - x)^right, and
composite Gauss-Legendre rules over explicit panel breakpoints used for
spatial integrals with a graded approach to 0 and clusters around
concentration points.

All functions return (nodes, weights) as float arrays; integrate f by
(weights * f(nodes)).sum().
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def jacobi_rule(n, lo, hi, left_exp=0.0, right_exp=0.0):
    """Rule for ∫_lo^hi (x-lo)^left (hi-x)^right f(x) dx ≈ Σ w_i f(x_i).

    The algebraic weight is folded into the returned weights, so ``f``
    should be the *regular* part of the integrand only.
    """
    if hi <= lo:
        raise ValueError("jacobi_rule needs hi > lo")
    if left_exp <= -1.0 or right_exp <= -1.0:
        raise ValueError("endpoint exponents must exceed -1")
    if left_exp == 0.0 and right_exp == 0.0:
        u, w = roots_legendre(n)
    else:
        # scipy's convention: weight (1-u)^alpha (1+u)^beta on [-1, 1],
        # so alpha sits at the right endpoint and beta at the left.
        u, w = roots_jacobi(n, right_exp, left_exp)
    half = 0.5 * (hi - lo)
    x = lo + half * (u + 1.0)
    scale = half ** (1.0 + left_exp + right_exp)
    return x, w * scale


def composite_legendre(breaks, n_per_panel):
    """Gauss-Legendre rule over consecutive panels [b0,b1], [b1,b2], ...

    ``breaks`` must be strictly increasing; panels of zero width are
    rejected. Returns the concatenated nodes and weights.
    """
    b = np.asarray(breaks, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("need at least two breakpoints")
    if np.any(np.diff(b) <= 0.0):
        raise ValueError("breakpoints must be strictly increasing")
    u, w = roots_legendre(n_per_panel)
    half = 0.5 * np.diff(b)
    mid = 0.5 * (b[:-1] + b[1:])
    nodes = (mid[:, None] + half[:, None] * u[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_breaks(lo, hi, n, exponent, toward_lo=True):
    """n+1 breakpoints on [lo, hi] graded toward one endpoint.

    Spacing follows u^exponent with u uniform; exponent > 1 concentrates
    points at the chosen endpoint (used to resolve z^{b+1} behavior with
    exponent ≈ 1/(b+1)).
    """
    u = np.linspace(0.0, 1.0, n + 1) ** float(exponent)
    if toward_lo:
        return lo + (hi - lo) * u
    return hi - (hi - lo) * u[::-1]


def cluster_breaks(center, scale, inner=1.0, outer=8.0, rings=3):
    """Symmetric breakpoints around a concentration point.

    Produces offsets ±scale·inner·ratio^k up to ±scale·outer, suitable
    for resolving a kernel of width ``scale`` centered at ``center``.
    """
    if rings < 1:
        raise ValueError("rings must be >= 1")
    radii = inner * (outer / inner) ** (np.arange(rings + 1) / rings)
    offs = np.concatenate([-radii[::-1], [0.0], radii]) * scale
    return center + offs


def merge_breaks(*groups, lo, hi, min_gap=1e-12):
    """Sorted union of breakpoint groups clipped to [lo, hi].

    Points closer than ``min_gap`` (relative to the span) collapse to
    one, so degenerate panels never reach composite_legendre.
    """
    allpts = np.concatenate([np.asarray(g, dtype=float).ravel() for g in groups])
    allpts = allpts[(allpts > lo) & (allpts < hi)]
    pts = np.unique(np.concatenate([[lo], allpts, [hi]]))
    gap = min_gap * (hi - lo)
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > gap:
            keep.append(p)
    keep[-1] = hi
    return np.asarray(keep)
