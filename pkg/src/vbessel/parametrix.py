"""Variable-coefficient fundamental solution by parametrix iteration.

The approximation freezes the drift index of the closed-form kernel at
the source point, measures the defect with the correction kernel

    K(t, x, s, y) = [(b(t,x) - b(s,y)) / x] · ∂p_{b(s,y)}(t,x,s,y)/∂x,

and corrects through the Volterra series Φ = Σ Φ_m, Φ_0 = K,
Φ_{m+1} = K * Φ_m, where * is the space-time convolution
(f * g)(t,x,s,y) = ∫_s^t dr ∫_0^∞ f(t,x,r,z) g(r,z,s,y) dz. The result

    p̂(t,x,s,y) = p_{b(s,y)}(t,x,s,y) + ∫_s^t dθ ∫_0^∞ p_{b(θ,ζ)}(t,x,θ,ζ) Φ(θ,ζ,s,y) dζ

is exact for constant fields (K ≡ 0) and carries quadrature/truncation
error otherwise.

Numerical structure
-------------------
Each series term behaves like (θ-s)^{σ_m} near the source time with
σ_m increasing by alpha/2 per term; terms are cached on a graded
(θ, ζ) tensor grid in the compensated form Φ_m·(θ-s)^{-min(σ_m,0)}
and interpolated by bicubic splines. Time integrals use Gauss-Jacobi
rules that absorb the algebraic endpoint factors; space integrals use
rules recentered and rescaled to the width √(θ-r) at which the
correction kernel concentrates, falling back to a 0-graded rule when
the concentration window touches the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import _quad
from .coeff import CoefficientField
from .errors import ArtifactError, ConvergenceError, DomainError, ParameterError
from .kernels import BoundParams, bessel_kernel, bessel_kernel_dx, bound_kernel
from .specfun import g_alpha, gamma, log_gamma

__all__ = [
    "SpaceRule",
    "TimeRule",
    "QuadratureSpec",
    "SeriesControl",
    "PhiResult",
    "FundamentalSolutionApprox",
    "levi_kernel",
    "convolve",
    "phi_series",
    "v_delta",
    "assemble_fs",
    "upper_bound",
    "lower_bound",
    "correction_majorant",
    "fit_bound_params",
]


# ---------------------------------------------------------------------------
# Specs


@dataclass(frozen=True)
class SpaceRule:
    """Spatial quadrature budget: node count and truncation radius."""

    nodes: int = 48
    domain_cutoff_sigmas: float = 8.0

    def __post_init__(self):
        if self.nodes < 8:
            raise ParameterError("space rule needs at least 8 nodes")
        if self.domain_cutoff_sigmas < 6.0:
            raise ParameterError("domain cutoff must be at least 6 sigmas")


@dataclass(frozen=True)
class TimeRule:
    """Temporal quadrature budget.

    The left endpoint of every time integral carries an algebraic
    singularity (exponent alpha/2 - 1 for the leading term); it is
    absorbed by a Jacobi weight when ``singular_left`` is set. The right
    endpoint is regular for the integrals this engine performs.
    """

    nodes: int = 12
    singular_left: bool = True
    regular_right: bool = True

    def __post_init__(self):
        if self.nodes < 8:
            raise ParameterError("time rule needs at least 8 nodes")


@dataclass(frozen=True)
class QuadratureSpec:
    space_rule: SpaceRule = dc_field(default_factory=SpaceRule)
    time_rule: TimeRule = dc_field(default_factory=TimeRule)
    tol: float = 5e-3

    def __post_init__(self):
        if not (0.0 < self.tol <= 1e-2):
            raise ParameterError("quadrature tol must lie in (0, 1e-2]")

    def refine(self, factor=2):
        """A strictly finer spec (used for self-oracle comparisons)."""
        return QuadratureSpec(
            space_rule=SpaceRule(
                nodes=self.space_rule.nodes * factor,
                domain_cutoff_sigmas=self.space_rule.domain_cutoff_sigmas,
            ),
            time_rule=TimeRule(
                nodes=self.time_rule.nodes + (self.time_rule.nodes * (factor - 1)) // 2,
                singular_left=self.time_rule.singular_left,
                regular_right=self.time_rule.regular_right,
            ),
            tol=self.tol,
        )


@dataclass(frozen=True)
class SeriesControl:
    max_terms: int = 20
    term_tol: float = 1e-8

    def __post_init__(self):
        if self.max_terms < 1:
            raise ParameterError("max_terms must be at least 1")
        if not (self.term_tol > 0.0):
            raise ParameterError("term_tol must be positive")


@dataclass(frozen=True)
class PhiResult:
    value: float
    terms_used: int
    tail_estimate: float


DEFAULT_QUAD = QuadratureSpec()
DEFAULT_CTRL = SeriesControl()

# The series is summed directly while the majorant argument
# v_delta(tau) stays below this; beyond it the evaluation chains two
# half-interval solutions through the semigroup property instead, which
# keeps term counts small for long horizons.
_SPLIT_VTILDE = 2.0


# ---------------------------------------------------------------------------
# Correction kernel


def levi_kernel(fld, t, x, s, y):
    """Defect kernel K(t,x,s,y) = [(b(t,x)-b(s,y))/x] · ∂p_{b(s,y)}/∂x.

    Identically zero for constant fields; for Hölder fields it inherits
    the bound |K| ≤ H(|t-s|+|x-y|)^alpha / x · |∂p/∂x| pointwise.
    """
    bt = np.asarray(fld.eval(t, x), dtype=float)
    bs = np.asarray(fld.eval(s, y), dtype=float)
    diff = bt - bs
    out = np.where(
        diff == 0.0,
        0.0,
        diff / np.asarray(x, dtype=float) * bessel_kernel_dx(bs, t, x, s, y),
    )
    return out if out.ndim else float(out)


def v_delta(fld, delta, tau, cal_const=1.0):
    """Majorant argument H·cal·Γ(alpha/2)·(1-δ)^{-1}(eδ)^{-1}·τ^{alpha/2}.

    At δ = 1/2 the prefactor reduces to 4/e times H·cal·Γ(alpha/2).
    Monotone increasing in τ; vanishes as τ → 0.
    """
    if not (0.0 < delta < 1.0):
        raise DomainError("v_delta requires delta in (0, 1)")
    taua = np.asarray(tau, dtype=float)
    if np.any(taua <= 0.0):
        raise DomainError("v_delta requires tau > 0")
    out = (
        fld.H
        * cal_const
        * gamma(fld.alpha / 2.0)
        / ((1.0 - delta) * math.e * delta)
        * taua ** (fld.alpha / 2.0)
    )
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Engine internals


def _field_order(fld, t, x):
    """Field values clipped into the open index interval.

    Evaluation can graze the declared bounds by rounding; a hair of
    clipping keeps the kernel-order domain check honest without
    masking genuine bound violations (validate_bounds covers those).
    """
    b = np.asarray(fld.eval(t, x), dtype=float)
    return np.clip(b, -1.0 + 1e-12, -1e-12)


class _RowRules:
    """Prebuilt unit-interval rules shared by all row integrations."""

    def __init__(self, space_nodes, cutoff, grade_exp):
        per_u = max(5, space_nodes // 10)
        breaks_u = _quad.cluster_breaks(0.0, 1.0, inner=0.6, outer=cutoff, rings=4)
        self.u_nodes, self.u_weights = _quad.composite_legendre(breaks_u, per_u)
        n_panels = max(6, space_nodes // 8)
        breaks_g = _quad.graded_breaks(0.0, 1.0, n_panels, grade_exp, toward_lo=True)
        g_nodes, g_weights = _quad.composite_legendre(breaks_g, 5)
        # Pad the graded rule to the cluster rule's length so the two can
        # be blended by masks without ragged shapes.
        U = self.u_nodes.size
        if g_nodes.size < U:
            pad = U - g_nodes.size
            g_nodes = np.concatenate([g_nodes, np.full(pad, 0.5)])
            g_weights = np.concatenate([g_weights, np.zeros(pad)])
        elif g_nodes.size > U:
            pad = g_nodes.size - U
            self.u_nodes = np.concatenate([self.u_nodes, np.full(pad, 0.0)])
            self.u_weights = np.concatenate([self.u_weights, np.zeros(pad)])
        self.g_nodes = g_nodes
        self.g_weights = g_weights
        self.cutoff = cutoff

    def centered_rule(self, centers, widths):
        """Nodes/weights for ∫ f(z) dz with f concentrated at ``centers``.

        centers: (Q,), widths: (K,) → arrays of shape (Q, K, U). Where the
        window [c-cutoff·w, c+cutoff·w] stays inside (0, ∞) the rule is the
        recentered cluster rule; where it touches the origin it becomes a
        0-graded rule on (0, c+cutoff·w].
        """
        c = np.asarray(centers, dtype=float)[:, None, None]
        w = np.asarray(widths, dtype=float)[None, :, None]
        inside = c > self.cutoff * w
        z_u = c + w * self.u_nodes[None, None, :]
        w_u = w * self.u_weights[None, None, :]
        top = c + self.cutoff * w
        z_g = top * self.g_nodes[None, None, :]
        w_g = top * self.g_weights[None, None, :]
        z = np.where(inside, z_u, z_g)
        wt = np.where(inside, w_u, w_g)
        return z, wt


class _Term:
    """One cached series term: exponent, grid values, interpolant."""

    __slots__ = ("sigma", "values", "spline", "max_abs")

    def __init__(self, sigma, theta, zeta, comp_values, max_abs):
        self.sigma = sigma
        self.values = np.asarray(comp_values, dtype=float)
        self.spline = RectBivariateSpline(theta, zeta, comp_values, kx=3, ky=3, s=0)
        self.max_abs = max_abs

    def phi_at(self, tau, theta, zeta, zeta_lo, zeta_hi):
        th = np.asarray(theta, dtype=float)
        ze = np.asarray(zeta, dtype=float)
        th, ze = np.broadcast_arrays(th, ze)
        vals = self.spline.ev(th.ravel(), ze.ravel()).reshape(th.shape)
        inside = (ze >= zeta_lo) & (ze <= zeta_hi)
        vals = np.where(inside, vals, 0.0)
        expo = min(self.sigma, 0.0)
        if expo != 0.0:
            vals = vals * (th - tau) ** expo
        return vals


class _VolterraCache:
    """Series terms of the correction for one source configuration.

    ``source`` is either ("point", xi) — the public fundamental-solution
    case, where the zeroth term is the correction kernel itself and is
    evaluated in closed form — or ("grid", fn, sigma0, hints) for
    source columns produced by integrating the correction kernel
    against data (initial-value machinery).
    """

    def __init__(self, fld, tau, horizon, quad, ctrl, source):
        if horizon <= tau:
            raise DomainError("cache horizon must exceed the source time")
        self.fld = fld
        self.tau = float(tau)
        self.T = float(horizon)
        self.quad = quad
        self.ctrl = ctrl
        self.kind = source[0]
        self.alpha = fld.alpha
        cutoff = quad.space_rule.domain_cutoff_sigmas
        self.grade_exp = min(4.0, max(1.5, 1.0 / (1.0 + fld.beta)))
        self.rows = _RowRules(quad.space_rule.nodes, cutoff, self.grade_exp)
        span = math.sqrt(self.T - self.tau)
        if self.kind == "point":
            self.xi = float(source[1])
            self.sigma0 = self.alpha / 2.0 - 1.0
            hints = [self.xi]
        else:
            _, self.source_fn, self.sigma0, hints = source
            self.xi = None
        n_theta = quad.time_rule.nodes
        idx = np.arange(n_theta + 1) / n_theta
        self.theta = self.tau + (self.T - self.tau) * idx**2
        zmax = max(h for h in hints) + cutoff * span + 0.5
        nb = quad.space_rule.nodes
        bg = zmax * (np.arange(1, nb + 1) / nb) ** self.grade_exp
        pts = [bg]
        for h in hints:
            for k in range(4):
                sc = span * 0.5**k
                pts.append(h + sc * np.array([-4.0, -2.0, -1.0, -0.45, 0.45, 1.0, 2.0, 4.0]))
        allz = np.concatenate(pts)
        allz = np.unique(allz[(allz > 1e-9) & (allz <= zmax)])
        keep = [allz[0]]
        for zv in allz[1:]:
            if zv - keep[-1] > 1e-7 * zmax:
                keep.append(zv)
        self.zeta = np.asarray(keep)
        self.terms: list[_Term] = []
        self.terms_used = 0
        self.tail_estimate = 0.0
        self.is_zero = False
        self.cal_fit = 0.0
        self._build()
        self._row_cache = {}  # kernel tensors are only needed during the build

    # -- source column ----------------------------------------------------

    def _phi0_exact(self, r, z):
        """Zeroth term at arbitrary points (closed form, point mode)."""
        return levi_kernel(self.fld, r, z, self.tau, self.xi)

    def _phi_m(self, m, r, z):
        """Term m at scattered points; closed form for m=0 in point mode."""
        if self.kind == "point" and m == 0:
            return self._phi0_exact(r, z)
        term = self.terms[m]
        return term.phi_at(self.tau, r, z, self.zeta[0], self.zeta[-1])

    def _compensated(self, m, r, z):
        """Term m divided by its singular factor (r-tau)^{min(sigma,0)}."""
        if self.kind == "point" and m == 0:
            f = self._phi0_exact(r, z)
            expo = -min(self.sigma0, 0.0)
            return f * (np.asarray(r, dtype=float) - self.tau) ** expo
        term = self.terms[m]
        th = np.asarray(r, dtype=float)
        ze = np.asarray(z, dtype=float)
        th, ze = np.broadcast_arrays(th, ze)
        vals = term.spline.ev(th.ravel(), ze.ravel()).reshape(th.shape)
        inside = (ze >= self.zeta[0]) & (ze <= self.zeta[-1])
        return np.where(inside, vals, 0.0)

    # -- build ------------------------------------------------------------

    def _row_tensors(self, i, lam):
        """Kernel tensor and rules for row i at time-rule exponent lam.

        The defect-kernel values depend on m only through the Jacobi
        left exponent, which takes few distinct values across the whole
        series; caching them makes later terms nearly free of kernel
        evaluations.
        """
        key = (i, round(lam, 12))
        hit = self._row_cache.get(key)
        if hit is not None:
            return hit
        th = self.theta[i]
        nt = self.quad.time_rule.nodes
        r, wr = _quad.jacobi_rule(
            nt, self.tau, th, left_exp=lam, right_exp=self.alpha / 2.0 - 1.0
        )
        h = np.sqrt(th - r)
        z, wz = self.rows.centered_rule(self.zeta, h)
        thb = np.broadcast_to(np.asarray(th), z.shape)
        zb = np.broadcast_to(self.zeta[:, None, None], z.shape)
        rb = np.broadcast_to(r[None, :, None], z.shape)
        kv = levi_kernel(self.fld, thb, zb, rb, z)
        reg = (th - r) ** (1.0 - self.alpha / 2.0)
        hit = (r, wr * reg, rb, z, wz * kv)
        self._row_cache[key] = hit
        return hit

    def _grid_column(self, m):
        """Apply the convolution step to term m on the cache grid."""
        sig_m = self.sigma0 + 0.5 * self.alpha * m
        lam = min(sig_m, 0.0)
        out = np.zeros((self.theta.size, self.zeta.size))
        for i in range(1, self.theta.size):
            r, wreg, rb, z, wkv = self._row_tensors(i, lam)
            fv = self._compensated(m, rb, z)
            inner = np.sum(wkv * fv, axis=2)
            out[i] = np.sum(wreg[None, :] * inner, axis=1)
        return out

    def _store_term(self, sigma, phi_grid):
        comp = phi_grid.copy()
        expo = -min(sigma, 0.0)
        if expo != 0.0:
            dt = self.theta[1:] - self.tau
            comp[1:] = comp[1:] * dt[:, None] ** expo
        if sigma > 0.0:
            comp[0] = 0.0
        else:
            comp[0] = comp[1]
        max_abs = float(np.max(np.abs(phi_grid[1:]))) if phi_grid.shape[0] > 1 else 0.0
        self.terms.append(_Term(sigma, self.theta, self.zeta, comp, max_abs))
        return max_abs

    def _majorant_terms(self, m_from, m_to):
        """Per-term sup-norm majorants with the fitted front constant.

        Shape: (cal·H·Γ(α/2))^{m+1} / Γ((m+1)α/2) · span^{(m+1)α/2-1}
        scaled by the comparison-kernel sup; used for the truncation tail.
        """
        if self.cal_fit <= 0.0:
            return [0.0] * max(0, m_to - m_from)
        alpha = self.alpha
        span = self.T - self.tau
        base = math.log(self.cal_fit * self.fld.H * gamma(alpha / 2.0))
        out = []
        for m in range(m_from, m_to):
            k = m + 1
            lg = (
                k * base
                - float(log_gamma(k * alpha / 2.0))
                + (k * alpha / 2.0 - 1.0) * math.log(span)
            )
            out.append(self._pbar * math.exp(lg))
        return out

    def _build(self):
        self._row_cache = {}
        # Zeroth column.
        if self.kind == "point":
            thb = np.broadcast_to(self.theta[1:, None], (self.theta.size - 1, self.zeta.size))
            zb = np.broadcast_to(self.zeta[None, :], thb.shape)
            phi0 = np.zeros((self.theta.size, self.zeta.size))
            phi0[1:] = self._phi0_exact(thb, zb)
        else:
            phi0 = np.zeros((self.theta.size, self.zeta.size))
            for i in range(1, self.theta.size):
                phi0[i] = self.source_fn(self.theta[i], self.zeta)
        m0 = float(np.max(np.abs(phi0[1:])))
        if m0 == 0.0:
            # Constant coefficients: the defect kernel vanishes
            # identically and the series is exactly zero.
            self.is_zero = True
            self.terms_used = 1
            self.tail_estimate = 0.0
            return
        norm0 = self._store_term(self.sigma0, phi0)

        # Fitted front constant for the sup-norm majorant (point mode):
        # the smallest constant making the shaped bound dominate the
        # computed zeroth term on the grid.
        self._pbar = 1.0
        if self.kind == "point":
            bp = BoundParams(delta=0.5, beta=self.fld.beta, cal_const=1.0)
            dt = self.theta[1:] - self.tau
            thb = np.broadcast_to(self.theta[1:, None], (dt.size, self.zeta.size))
            zb = np.broadcast_to(self.zeta[None, :], thb.shape)
            pb = bound_kernel(bp, thb, zb, self.tau, self.xi)
            self._pbar = max(float(np.max(pb)), 1e-300)
            shape = (
                self.fld.H
                * gamma(self.alpha / 2.0)
                * dt[:, None] ** (self.alpha / 2.0 - 1.0)
                * np.maximum(pb, 1e-300)
            )
            self.cal_fit = float(np.max(np.abs(phi0[1:]) / shape))
        else:
            self.cal_fit = 0.0

        sums = norm0
        norms = [norm0]
        for m in range(self.ctrl.max_terms):
            if self.kind == "point" and self.cal_fit > 0.0:
                nxt = self._majorant_terms(m + 1, m + 2)[0]
            else:
                ratio = norms[-1] / norms[-2] if len(norms) > 1 else 1.0
                nxt = norms[-1] * min(ratio, 1.0)
            if nxt <= self.ctrl.term_tol * sums and m >= 1:
                tail = sum(self._majorant_terms(m + 1, m + 40)) if self.cal_fit else nxt
                self.tail_estimate = float(tail)
                self.terms_used = m + 1
                return
            if m == self.ctrl.max_terms - 1:
                break
            sig = self.sigma0 + 0.5 * self.alpha * m
            col = self._grid_column(m)
            nm = self._store_term(sig + 0.5 * self.alpha, col)
            norms.append(nm)
            sums += nm
            if nm <= self.ctrl.term_tol * sums:
                tail = (
                    sum(self._majorant_terms(m + 2, m + 41)) if self.cal_fit else nm
                )
                self.tail_estimate = float(tail)
                self.terms_used = m + 2
                return
        if len(norms) > 2 and norms[-1] >= norms[-2] >= norms[-3]:
            raise ConvergenceError(
                "series terms stopped decaying within max_terms; "
                "reduce the horizon or raise max_terms"
            )
        self.terms_used = len(norms)
        self.tail_estimate = float(
            sum(self._majorant_terms(len(norms), len(norms) + 39))
            if self.cal_fit
            else norms[-1]
        )

    # -- persistence ------------------------------------------------------

    def state(self):
        """Plain-array snapshot of a built point-source cache."""
        if self.kind != "point":
            raise ArtifactError("only point-source caches can be exported")
        return {
            "tau": self.tau,
            "horizon": self.T,
            "xi": self.xi,
            "sigma0": self.sigma0,
            "is_zero": bool(self.is_zero),
            "cal_fit": self.cal_fit,
            "pbar": getattr(self, "_pbar", 1.0),
            "terms_used": self.terms_used,
            "tail_estimate": self.tail_estimate,
            "theta": np.asarray(self.theta),
            "zeta": np.asarray(self.zeta),
            "sigmas": np.asarray([tm.sigma for tm in self.terms]),
            "values": (
                np.stack([tm.values for tm in self.terms])
                if self.terms
                else np.zeros((0, self.theta.size, self.zeta.size))
            ),
        }

    @classmethod
    def from_state(cls, fld, quad, ctrl, st):
        """Rebuild a point-source cache from a state() snapshot."""
        self = object.__new__(cls)
        self.fld = fld
        self.tau = float(st["tau"])
        self.T = float(st["horizon"])
        self.quad = quad
        self.ctrl = ctrl
        self.kind = "point"
        self.alpha = fld.alpha
        cutoff = quad.space_rule.domain_cutoff_sigmas
        self.grade_exp = min(4.0, max(1.5, 1.0 / (1.0 + fld.beta)))
        self.rows = _RowRules(quad.space_rule.nodes, cutoff, self.grade_exp)
        self.xi = float(st["xi"])
        self.sigma0 = float(st["sigma0"])
        self.theta = np.asarray(st["theta"], dtype=float)
        self.zeta = np.asarray(st["zeta"], dtype=float)
        self.is_zero = bool(st["is_zero"])
        self.cal_fit = float(st["cal_fit"])
        self._pbar = float(st["pbar"])
        self.terms_used = int(st["terms_used"])
        self.tail_estimate = float(st["tail_estimate"])
        self._row_cache = {}
        self.terms = []
        values = np.asarray(st["values"], dtype=float)
        sigmas = np.asarray(st["sigmas"], dtype=float)
        for sigma, grid in zip(sigmas, values):
            max_abs = float(np.max(np.abs(grid[1:]))) if grid.shape[0] > 1 else 0.0
            self.terms.append(_Term(float(sigma), self.theta, self.zeta, grid, max_abs))
        return self

    # -- evaluation -------------------------------------------------------

    def phi(self, theta, zeta):
        """Full series Φ(θ, ζ) for this source, broadcastable arguments."""
        th = np.asarray(theta, dtype=float)
        ze = np.asarray(zeta, dtype=float)
        th, ze = np.broadcast_arrays(th, ze)
        if np.any(th <= self.tau) or np.any(th > self.T + 1e-12):
            raise DomainError("phi evaluated outside the cached time window")
        if self.is_zero:
            out = np.zeros(th.shape)
            return out if out.ndim else float(out)
        acc = np.zeros(th.shape)
        if self.kind == "point":
            acc = acc + self._phi0_exact(th, ze)
            rest = self.terms[1:]
        else:
            rest = self.terms
        for term in rest:
            acc = acc + term.phi_at(self.tau, th, ze, self.zeta[0], self.zeta[-1])
        return acc if acc.ndim else float(acc)

    def correction(self, t, x):
        """∫_tau^t dθ ∫ p_{b(θ,ζ)}(t,x,θ,ζ) Φ(θ,ζ) dζ at one target."""
        if self.is_zero:
            return 0.0
        if not (self.tau < t <= self.T + 1e-12):
            raise DomainError("correction target outside the cached window")
        alpha = self.alpha
        lam = min(self.sigma0, 0.0)
        nt = self.quad.time_rule.nodes
        cutoff = self.quad.space_rule.domain_cutoff_sigmas
        th_nodes, th_w = _quad.jacobi_rule(nt, self.tau, t, left_exp=lam, right_exp=0.0)
        total = 0.0
        for th, w in zip(th_nodes, th_w):
            hx = math.sqrt(max(t - th, 1e-300))
            groups = [_quad.cluster_breaks(x, hx, inner=0.5, outer=cutoff, rings=4)]
            hi = x + (cutoff + 1.0) * hx
            if self.kind == "point":
                hs = math.sqrt(th - self.tau)
                groups.append(
                    _quad.cluster_breaks(self.xi, hs, inner=0.5, outer=cutoff, rings=4)
                )
                hi = max(hi, self.xi + (cutoff + 1.0) * hs)
            hi = min(hi, max(self.zeta[-1], x + (cutoff + 1.0) * hx))
            groups.append(_quad.graded_breaks(0.0, hi, 6, self.grade_exp))
            breaks = _quad.merge_breaks(*groups, lo=1e-9, hi=hi)
            zn, zw = _quad.composite_legendre(breaks, 5)
            orders = _field_order(self.fld, th, zn)
            pv = bessel_kernel(orders, t, x, th, zn)
            phv = self.phi(th, zn)
            W = float(np.sum(zw * pv * phv))
            total += w * W * (th - self.tau) ** (-lam)
        return total


# ---------------------------------------------------------------------------
# Public operations


def _as_spec(quad, ctrl):
    quad = DEFAULT_QUAD if quad is None else quad
    ctrl = DEFAULT_CTRL if ctrl is None else ctrl
    return quad, ctrl


def phi_series(fld, t, x, s, y, quad=None, ctrl=None):
    """Volterra series Φ(t,x,s,y) for one source point.

    Returns a PhiResult carrying the value, the number of series terms
    actually summed, and a majorant-based estimate of the truncated
    tail. For constant fields the value is exactly 0 with one term.
    """
    quad, ctrl = _as_spec(quad, ctrl)
    if not (t > s >= 0.0 and x > 0.0 and y > 0.0):
        raise DomainError("phi_series requires t > s >= 0 and x, y > 0")
    cache = _VolterraCache(fld, s, t, quad, ctrl, ("point", y))
    value = float(cache.phi(np.asarray(t), np.asarray(x)))
    return PhiResult(value=value, terms_used=cache.terms_used, tail_estimate=cache.tail_estimate)


def convolve(f, g, t, x, s, y, quad=None, left_exp=0.0, mid_exp=0.0):
    """Space-time convolution ∫_s^t dr ∫_0^∞ f(t,x,r,z) g(r,z,s,y) dz.

    ``left_exp`` declares an algebraic factor (r-s)^{left_exp} carried
    by g near r = s, and ``mid_exp`` a factor (t-r)^{mid_exp} carried by
    f near r = t; both are absorbed into the time rule's weight. The
    spatial rule assumes kernel-like concentration of f at z ≈ x on
    scale √(t-r) and of g at z ≈ y on scale √(r-s), plus an algebraic
    approach to the origin. The result is refined once by doubling both
    rules; refinement disagreement beyond quad.tol triggers another
    doubling, and persistent disagreement raises ConvergenceError.
    """
    quad = DEFAULT_QUAD if quad is None else quad
    if not (t > s >= 0.0):
        raise DomainError("convolve requires t > s >= 0")

    def attempt(nt, nz_panels):
        r, wr = _quad.jacobi_rule(nt, s, t, left_exp=left_exp, right_exp=mid_exp)
        total = 0.0
        for rk, wk in zip(r, wr):
            hf = math.sqrt(max(t - rk, 1e-300))
            hg = math.sqrt(max(rk - s, 1e-300))
            cut = quad.space_rule.domain_cutoff_sigmas
            hi = max(x + (cut + 1) * hf, y + (cut + 1) * hg)
            breaks = _quad.merge_breaks(
                _quad.cluster_breaks(x, hf, inner=0.5, outer=cut, rings=4),
                _quad.cluster_breaks(y, hg, inner=0.5, outer=cut, rings=4),
                _quad.graded_breaks(0.0, hi, nz_panels, 2.0),
                lo=1e-9,
                hi=hi,
            )
            zn, zw = _quad.composite_legendre(breaks, 5)
            fv = np.asarray(f(t, x, rk, zn), dtype=float)
            gv = np.asarray(g(rk, zn, s, y), dtype=float)
            val = float(np.sum(zw * fv * gv))
            total += wk * val * (rk - s) ** (-left_exp) * (t - rk) ** (-mid_exp)
        return total

    nt = quad.time_rule.nodes
    prev = attempt(nt, 6)
    for level in range(1, 3):
        cur = attempt(nt * (level + 1), 6 * (level + 1))
        scale = max(abs(cur), abs(prev), 1e-300)
        if abs(cur - prev) <= quad.tol * scale:
            return cur
        prev = cur
    raise ConvergenceError("convolve refinement did not reach quad.tol")


class FundamentalSolutionApprox:
    """Evaluable approximation of the variable-coefficient kernel.

    Built by :func:`assemble_fs`. Evaluation is lazy: the series cache
    for a source configuration (s, y) is constructed on first use and
    reused afterwards (``phi_cache`` maps source keys to caches).
    Instances are immutable in spirit: evaluation never mutates
    numerical state besides cache insertion, and cached values are
    never recomputed differently.
    """

    def __init__(self, fld, quad=None, ctrl=None):
        if not isinstance(fld, CoefficientField):
            raise ParameterError("assemble_fs requires a CoefficientField")
        quad, ctrl = _as_spec(quad, ctrl)
        self.field = fld
        self.quad = quad
        self.ctrl = ctrl
        self.phi_cache: dict = {}
        self.terms_used = 0
        self.tail_estimate = 0.0

    # -- cache management -------------------------------------------------

    def _cache_for(self, s, y, t_needed):
        key = (round(float(s), 12), round(float(y), 12))
        cache = self.phi_cache.get(key)
        if cache is None or cache.T < t_needed:
            horizon = max(t_needed, s + 1e-6)
            cache = _VolterraCache(
                self.field, s, horizon, self.quad, self.ctrl, ("point", float(y))
            )
            self.phi_cache[key] = cache
            self.terms_used = cache.terms_used
            self.tail_estimate = cache.tail_estimate
        return cache

    def functional_cache(self, s, horizon, source_fn, sigma0, hints):
        """Series cache for an integrated (non-point) source column."""
        return _VolterraCache(
            self.field, s, horizon, self.quad, self.ctrl,
            ("grid", source_fn, sigma0, list(hints)),
        )

    def export_caches(self):
        """Snapshots of all built point caches, keyed by (s, y)."""
        out = []
        for (s, y), cache in sorted(self.phi_cache.items()):
            if cache.kind == "point":
                out.append({"s": s, "y": y, "state": cache.state()})
        return out

    def install_cache(self, s, y, state):
        """Adopt a snapshot produced by export_caches."""
        cache = _VolterraCache.from_state(self.field, self.quad, self.ctrl, state)
        key = (round(float(s), 12), round(float(y), 12))
        self.phi_cache[key] = cache
        self.terms_used = cache.terms_used
        self.tail_estimate = cache.tail_estimate

    # -- evaluation -------------------------------------------------------

    def _split_eval(self, t, x, s, y):
        v = 0.5 * (t + s)
        cut = self.quad.space_rule.domain_cutoff_sigmas
        hf = math.sqrt(t - v)
        hg = math.sqrt(v - s)
        hi = max(x + (cut + 1) * hf, y + (cut + 1) * hg)
        breaks = _quad.merge_breaks(
            _quad.cluster_breaks(x, hf, inner=0.5, outer=cut, rings=4),
            _quad.cluster_breaks(y, hg, inner=0.5, outer=cut, rings=4),
            _quad.graded_breaks(0.0, hi, 6, 2.0),
            lo=1e-9,
            hi=hi,
        )
        zn, zw = _quad.composite_legendre(breaks, 5)
        left = np.array([self.evaluate(t, x, v, z) for z in zn])
        right = np.array([self.evaluate(v, z, s, y) for z in zn])
        return float(np.sum(zw * left * right))

    def evaluate(self, t, x, s, y):
        """p̂(t, x, s, y) for scalar arguments."""
        t = float(t)
        x = float(x)
        s = float(s)
        y = float(y)
        if not (t > s >= 0.0):
            raise DomainError("evaluate requires t > s >= 0")
        if not (x > 0.0 and y > 0.0):
            raise DomainError("evaluate requires x > 0 and y > 0")
        tau = t - s
        if v_delta(self.field, 0.5, tau) > _SPLIT_VTILDE:
            return self._split_eval(t, x, s, y)
        order = float(_field_order(self.field, s, y))
        lead = bessel_kernel(order, t, x, s, y)
        cache = self._cache_for(s, y, t)
        corr = cache.correction(t, x)
        val = lead + corr
        if val < -self.quad.tol:
            raise ConvergenceError(
                f"evaluated density {val:.3e} fell below -quad.tol; "
                "the quadrature budget is insufficient here"
            )
        return val

    def evaluate_grid(self, ts, xs, s, y):
        """Vector evaluation over parallel target arrays (shared source)."""
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(xs, dtype=float)
        ts_b, xs_b = np.broadcast_arrays(ts, xs)
        out = np.empty(ts_b.shape)
        for idx in np.ndindex(ts_b.shape):
            out[idx] = self.evaluate(ts_b[idx], xs_b[idx], s, y)
        return out

    __call__ = evaluate

    def density_grid(self, t, x, s, ys):
        """p̂(t, x, s, ·) over an array of end positions."""
        return np.array([self.evaluate(t, x, s, yv) for yv in np.asarray(ys, dtype=float)])


def assemble_fs(fld, quad=None, ctrl=None):
    """Construct the evaluable fundamental-solution approximation."""
    return FundamentalSolutionApprox(fld, quad, ctrl)


# ---------------------------------------------------------------------------
# Two-sided comparison bounds


def correction_majorant(fld, bound, t, x, s, y):
    """Shared shape of the two-sided correction term.

    cal·H·Γ(alpha/2)·(t-s)^{alpha/2-1}·p_beta(t,(1-δ)x,s,(1-δ)y)·
    g_alpha(v_delta(t-s)), with the calibration constant inside the
    majorant argument as well (monotonicity keeps fitted bounds valid).
    """
    tau = np.asarray(t, dtype=float) - np.asarray(s, dtype=float)
    if np.any(tau <= 0.0):
        raise DomainError("correction_majorant requires t > s")
    shape = (
        bound.cal_const
        * fld.H
        * gamma(fld.alpha / 2.0)
        * tau ** (fld.alpha / 2.0 - 1.0)
        * bound_kernel(bound, t, x, s, y)
    )
    varg = v_delta(fld, bound.delta, tau, cal_const=bound.cal_const)
    ml = np.vectorize(lambda zz: g_alpha(fld.alpha, float(zz)))(varg)
    out = shape * ml
    return out if np.ndim(out) else float(out)


def upper_bound(fld, bound, t, x, s, y):
    """Frozen-kernel value plus the fitted correction majorant."""
    order = _field_order(fld, s, y)
    lead = bessel_kernel(order, t, x, s, y)
    out = lead + correction_majorant(fld, bound, t, x, s, y)
    return out if np.ndim(out) else float(out)


def lower_bound(fld, bound, t, x, s, y):
    """Frozen-kernel value minus the fitted correction majorant.

    May be negative for short horizons with large H; it is reported
    as computed.
    """
    order = _field_order(fld, s, y)
    lead = bessel_kernel(order, t, x, s, y)
    out = lead - correction_majorant(fld, bound, t, x, s, y)
    return out if np.ndim(out) else float(out)


def fit_bound_params(fs, grid, delta=0.5, margin=3.0):
    """Calibrate the two correction constants on a fitting grid.

    ``grid`` is an iterable of (t, x, s, y). Returns (upper, lower)
    BoundParams whose constants are the smallest making the sandwich
    hold on the grid, inflated by ``margin``. Because the majorant is
    increasing in its constant, the inflated bounds remain valid on the
    fitting grid; validity elsewhere is an empirical assertion checked
    on held-out points.
    """
    fld = fs.field
    pts = list(grid)
    if not pts:
        raise ParameterError("fit_bound_params requires a non-empty grid")
    ref = BoundParams(delta=delta, beta=fld.beta, cal_const=1.0)
    # Fit against the zero-argument floor of the envelope factor: the
    # actual majorant carries g(v(cal)) >= g(0), so a constant fitted
    # this way keeps its full safety factor no matter how small the
    # fitted constant turns out to be.
    floor = g_alpha(fld.alpha, 0.0)
    need = 1e-12
    for (t, x, s, y) in pts:
        ph = fs.evaluate(t, x, s, y)
        lead = bessel_kernel(float(_field_order(fld, s, y)), t, x, s, y)
        tau = t - s
        shape = (
            fld.H
            * gamma(fld.alpha / 2.0)
            * tau ** (fld.alpha / 2.0 - 1.0)
            * bound_kernel(ref, t, x, s, y)
            * floor
        )
        if shape <= 0.0:
            raise ConvergenceError("degenerate majorant shape while fitting")
        need = max(need, abs(ph - lead) / shape)
    cal = need * margin
    up = BoundParams(delta=delta, beta=fld.beta, cal_const=cal)
    lo = BoundParams(delta=delta, beta=fld.beta, cal_const=cal)
    return up, lo
