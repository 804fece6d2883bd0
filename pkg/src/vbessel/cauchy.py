"""Initial-value and forced problems driven by the assembled kernel.

For initial data f the solution is u(t,x) = ∫ p̂(t,x,s,y) f(y) dy. Writing
p̂ = Z + Z*Φ (frozen kernel plus correction series) and exchanging
integrals, the data-dependence folds into the series source:

    u(t,x) = ∫ Z(t,x,s,y) f(y) dy + ∫_s^t dθ ∫ Z(t,x,θ,ζ) φ_f(θ,ζ) dζ,
    φ_f = K_f + K * φ_f,   K_f(θ,ζ) = ∫ K(θ,ζ,s,y) f(y) dy,

so one series build serves every evaluation point. The forced problem
uses the same structure with a time-integrated source column.

Admissible data grow no faster than exp((1-Δ)x²/2) for a declared
Δ ∈ (0,1); the solvers refuse horizons for which the Gaussian decay of
the kernel no longer dominates that growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quad
from .errors import DomainError, GrowthError, ParameterError
from .kernels import bessel_kernel
from .parametrix import FundamentalSolutionApprox, _field_order, _RowRules, levi_kernel

__all__ = [
    "InitialData",
    "SourceTerm",
    "GrowthReport",
    "check_growth",
    "solve_homogeneous",
    "solve_inhomogeneous",
]

# Largest admitted value of (1-Δ)·(t-s): beyond it the quadrature
# envelope exp(-(y-x)²/2τ + (1-Δ)y²/2) decays too slowly to truncate.
_GROWTH_MARGIN = 0.85


@dataclass(frozen=True)
class InitialData:
    """Initial condition f with declared growth exponent margin Δ."""

    f: object
    Delta: float = 0.5

    def __post_init__(self):
        if not callable(self.f):
            raise ParameterError("InitialData.f must be callable")
        if not (0.0 < self.Delta < 1.0):
            raise ParameterError("InitialData.Delta must lie in (0, 1)")


@dataclass(frozen=True)
class SourceTerm:
    """Forcing term g(t, x) with declared growth exponent margin Δ."""

    g: object
    Delta: float = 0.5

    def __post_init__(self):
        if not callable(self.g):
            raise ParameterError("SourceTerm.g must be callable")
        if not (0.0 < self.Delta < 1.0):
            raise ParameterError("SourceTerm.Delta must lie in (0, 1)")


@dataclass(frozen=True)
class GrowthReport:
    ok: bool
    max_ratio: float
    worst_x: float


def check_growth(data, t_probe=(0.0, 1.0, 2.0, 5.0)):
    """Verify |data| ≤ exp((1-Δ)x²/2) on a logarithmic probe grid.

    Positions run up to x = 20; source terms are probed at the given
    times as well. The report carries the worst ratio and its position.
    """
    xs = np.geomspace(1e-3, 20.0, 160)
    env = np.exp((1.0 - data.Delta) * xs**2 / 2.0)
    if isinstance(data, InitialData):
        vals = np.abs(np.asarray(data.f(xs), dtype=float))
        ratio = vals / env
    elif isinstance(data, SourceTerm):
        ratio = np.zeros_like(xs)
        for tp in t_probe:
            vals = np.abs(np.asarray(data.g(tp, xs), dtype=float))
            ratio = np.maximum(ratio, vals / env)
    else:
        raise ParameterError("check_growth expects InitialData or SourceTerm")
    k = int(np.argmax(ratio))
    return GrowthReport(
        ok=bool(ratio[k] <= 1.0 + 1e-12),
        max_ratio=float(ratio[k]),
        worst_x=float(xs[k]),
    )


def _tail_cutoff(x, tau, delta_margin):
    """Position beyond which kernel decay beats the admitted growth.

    Solves y²κ/2 - xy/τ ≥ 30 with κ = 1/τ - (1-Δ), the net Gaussian
    rate of kernel times envelope.
    """
    kappa = 1.0 / tau - delta_margin
    if kappa <= 0.0:
        raise GrowthError(
            "horizon too long for the declared data growth: "
            f"(1-Delta)*(t-s) = {delta_margin * tau:.3f} >= 1"
        )
    a = x / tau
    return (a + math.sqrt(a * a + 2.0 * 30.0 * kappa)) / kappa


def _validate_grid(eval_grid, s):
    pts = [(float(t), float(x)) for (t, x) in eval_grid]
    if not pts:
        raise ParameterError("eval_grid must contain at least one (t, x) point")
    for (t, x) in pts:
        if not (t > s):
            raise DomainError("every evaluation time must exceed the initial time")
        if not (x > 0.0):
            raise DomainError("evaluation positions must be positive")
    return pts


def _frozen_kernel_average(fs, data, s, t, x):
    """∫ p_{b(s,y)}(t,x,s,y) f(y) dy by a clustered-plus-graded rule."""
    fld = fs.field
    tau = t - s
    cut = fs.quad.space_rule.domain_cutoff_sigmas
    hi = max(_tail_cutoff(x, tau, 1.0 - data.Delta), x + (cut + 1.0) * math.sqrt(tau))
    breaks = _quad.merge_breaks(
        _quad.cluster_breaks(x, math.sqrt(tau), inner=0.5, outer=cut, rings=4),
        _quad.graded_breaks(0.0, hi, 8, 2.0),
        lo=1e-9,
        hi=hi,
    )
    yn, yw = _quad.composite_legendre(breaks, 5)
    orders = _field_order(fld, s, yn)
    pv = bessel_kernel(orders, t, x, s, yn)
    fv = np.asarray(data.f(yn), dtype=float)
    return float(np.sum(yw * pv * fv))


def solve_homogeneous(fs, data, s, eval_grid):
    """u(t,x) = ∫ p̂(t,x,s,y) f(y) dy over a list of (t, x) targets.

    Returns an array parallel to ``eval_grid``. Raises GrowthError when
    the data violate the declared envelope or the horizon is too long
    for it.
    """
    if not isinstance(fs, FundamentalSolutionApprox):
        raise ParameterError("solve_homogeneous requires an assembled solution")
    if not isinstance(data, InitialData):
        raise ParameterError("solve_homogeneous requires InitialData")
    s = float(s)
    rep = check_growth(data)
    if not rep.ok:
        raise GrowthError(
            f"initial data exceed the declared envelope by x{rep.max_ratio:.3g} "
            f"near x = {rep.worst_x:.3g}"
        )
    pts = _validate_grid(eval_grid, s)
    T = max(t for (t, _) in pts)
    # Horizon admissibility for the declared growth.
    _tail_cutoff(1.0, T - s, 1.0 - data.Delta)

    fld = fs.field
    rows = _RowRules(
        fs.quad.space_rule.nodes,
        fs.quad.space_rule.domain_cutoff_sigmas,
        min(4.0, max(1.5, 1.0 / (1.0 + fld.beta))),
    )

    def source_column(theta, zeta):
        """K_f(θ, ·) = ∫ K(θ,·,s,y) f(y) dy on one cache row."""
        h = math.sqrt(theta - s)
        z, wz = rows.centered_rule(zeta, np.array([h]))
        z = z[:, 0, :]
        wz = wz[:, 0, :]
        kv = levi_kernel(fld, theta, zeta[:, None], s, z)
        fv = np.asarray(data.f(z), dtype=float)
        return np.sum(wz * kv * fv, axis=1)

    hints = sorted({x for (_, x) in pts})
    hints = [hints[0], hints[len(hints) // 2], hints[-1]]
    sigma0 = (fld.alpha - 1.0) / 2.0
    cache = fs.functional_cache(s, T, source_column, sigma0, hints)

    out = np.empty(len(pts))
    for i, (t, x) in enumerate(pts):
        lead = _frozen_kernel_average(fs, data, s, t, x)
        out[i] = lead + cache.correction(t, x)
    return out


def solve_inhomogeneous(fs, src, s, eval_grid):
    """u(t,x) = ∫_s^t dθ ∫ p̂(t,x,θ,y) g(θ,y) dy with zero initial data.

    Same evaluation contract as :func:`solve_homogeneous`.
    """
    if not isinstance(fs, FundamentalSolutionApprox):
        raise ParameterError("solve_inhomogeneous requires an assembled solution")
    if not isinstance(src, SourceTerm):
        raise ParameterError("solve_inhomogeneous requires a SourceTerm")
    s = float(s)
    rep = check_growth(src)
    if not rep.ok:
        raise GrowthError(
            f"source term exceeds the declared envelope by x{rep.max_ratio:.3g} "
            f"near x = {rep.worst_x:.3g}"
        )
    pts = _validate_grid(eval_grid, s)
    T = max(t for (t, _) in pts)
    _tail_cutoff(1.0, T - s, 1.0 - src.Delta)

    fld = fs.field
    alpha = fld.alpha
    nt = fs.quad.time_rule.nodes
    rows = _RowRules(
        fs.quad.space_rule.nodes,
        fs.quad.space_rule.domain_cutoff_sigmas,
        min(4.0, max(1.5, 1.0 / (1.0 + fld.beta))),
    )

    def source_column(theta_p, zeta):
        """S_g(θ', ·) = ∫_s^{θ'} dθ ∫ K(θ',·,θ,y) g(θ,y) dy."""
        r, wr = _quad.jacobi_rule(nt, s, theta_p, left_exp=0.0, right_exp=alpha / 2.0 - 1.0)
        h = np.sqrt(theta_p - r)
        z, wz = rows.centered_rule(zeta, h)
        kv = levi_kernel(fld, theta_p, zeta[:, None, None], r[None, :, None], z)
        gv = np.asarray(src.g(r[None, :, None], z), dtype=float)
        gv = np.broadcast_to(gv, z.shape)
        inner = np.sum(wz * kv * gv, axis=2)
        reg = (theta_p - r) ** (1.0 - alpha / 2.0)
        return np.sum(wr[None, :] * reg[None, :] * inner, axis=1)

    hints = sorted({x for (_, x) in pts})
    hints = [hints[0], hints[len(hints) // 2], hints[-1]]
    cache = fs.functional_cache(s, T, source_column, alpha / 2.0, hints)

    out = np.empty(len(pts))
    for i, (t, x) in enumerate(pts):
        # Frozen-kernel part: ∫_s^t dθ ∫ p_{b(θ,y)}(t,x,θ,y) g(θ,y) dy.
        # Regular at both time endpoints (the inner integral tends to
        # g(t, x) as θ → t), so a plain Legendre rule suffices.
        r, wr = _quad.jacobi_rule(nt, s, t, left_exp=0.0, right_exp=0.0)
        total = 0.0
        for rk, wk in zip(r, wr):
            h = math.sqrt(max(t - rk, 1e-300))
            z, wz = rows.centered_rule(np.array([x]), np.array([h]))
            z = z[0, 0]
            wz = wz[0, 0]
            orders = _field_order(fld, rk, z)
            pv = bessel_kernel(orders, t, x, rk, z)
            gv = np.asarray(src.g(rk, z), dtype=float)
            gv = np.broadcast_to(gv, z.shape)
            total += wk * float(np.sum(wz * pv * gv))
        out[i] = total + cache.correction(t, x)
    return out
