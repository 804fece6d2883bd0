"""Named verification batteries with machine-readable reports.

Each check measures residuals of one analytic identity or estimate and
compares them against tolerances supplied through its configuration —
tolerances are data here, never constants inside check logic. Reports
are pure functions of (inputs, config): re-running a check sequentially
reproduces its report bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate

from . import _quad
from .cauchy import InitialData, solve_homogeneous
from .coeff import get_field
from .errors import CatalogError, ParameterError
from .kernels import BoundParams, bessel_kernel, gauss_kernel
from .parametrix import (
    FundamentalSolutionApprox,
    QuadratureSpec,
    SeriesControl,
    assemble_fs,
    fit_bound_params,
    levi_kernel,
    lower_bound,
    phi_series,
    upper_bound,
)
from .specfun import bessel_i_scaled

__all__ = [
    "CheckReport",
    "check_normalization",
    "check_chapman_kolmogorov",
    "check_bessel_identity",
    "check_pde_residual",
    "check_reflection",
    "check_bound_sandwich",
    "check_constant_exactness",
    "run_battery",
    "BATTERY_NAMES",
    "DEFAULT_VERIFY_CONFIG",
]


@dataclass(frozen=True)
class CheckReport:
    check_name: str
    inputs_digest: str
    residuals: dict
    tolerances: dict
    passed: bool
    runtime_s: float

    def to_json(self):
        return json.dumps(asdict(self), default=float, sort_keys=True)


def _digest(payload):
    text = json.dumps(payload, default=repr, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _report(name, payload, residuals, tolerances, t0):
    passed = all(
        abs(residuals[k]) <= tolerances[k] for k in residuals
    )
    return CheckReport(
        check_name=name,
        inputs_digest=_digest(payload),
        residuals={k: float(v) for k, v in residuals.items()},
        tolerances={k: float(tolerances[k]) for k in residuals},
        passed=passed,
        runtime_s=time.time() - t0,
    )


def _kernel_callable(obj):
    """Normalize (index | callable | assembled solution) to a callable.

    Assembled solutions are evaluated point by point so every argument
    slot may vary; intended for modest grids.
    """
    if isinstance(obj, FundamentalSolutionApprox):

        def k(t, x, s, y, _fs=obj):
            tb, xb, yb = np.broadcast_arrays(
                np.asarray(t, dtype=float),
                np.asarray(x, dtype=float),
                np.asarray(y, dtype=float),
            )
            if tb.ndim == 0:
                return _fs.evaluate(float(tb), float(xb), float(s), float(yb))
            out = np.empty(tb.shape)
            for idx in np.ndindex(tb.shape):
                out[idx] = _fs.evaluate(tb[idx], xb[idx], float(s), yb[idx])
            return out

        return k
    if callable(obj):
        return obj
    a = float(obj)
    return lambda t, x, s, y: bessel_kernel(a, t, x, s, y)


def _mass_rule(x, tau, grade=3.0, rings=5, per_panel=7):
    cut = 10.0
    hi = x + (cut + 2.0) * math.sqrt(tau)
    breaks = _quad.merge_breaks(
        _quad.cluster_breaks(x, math.sqrt(tau), inner=0.4, outer=cut, rings=rings),
        _quad.graded_breaks(0.0, hi, 10, grade),
        lo=1e-12,
        hi=hi,
    )
    return _quad.composite_legendre(breaks, per_panel)


# ---------------------------------------------------------------------------


def check_normalization(kernel, grid, tol=1e-8, variable_tol=5e-3):
    """Unit mass of the density in its end-point slot.

    ``grid`` rows are (t, x, s). Closed-form kernels are integrated by
    a clustered-plus-graded rule; an assembled variable solution is
    massed through its initial-value solver with unit data (the same
    integral, one series build instead of one per quadrature node).
    """
    t0 = time.time()
    grid = [tuple(map(float, row)) for row in grid]
    residuals, tolerances = {}, {}
    if isinstance(kernel, FundamentalSolutionApprox):
        by_s = {}
        for (t, x, s) in grid:
            by_s.setdefault(s, []).append((t, x))
        ones = InitialData(f=lambda y: np.ones_like(np.asarray(y, dtype=float)))
        worst = 0.0
        for s, pts in by_s.items():
            u = solve_homogeneous(kernel, ones, s, pts)
            worst = max(worst, float(np.max(np.abs(u - 1.0))))
        residuals["mass"] = worst
        tolerances["mass"] = variable_tol
    else:
        k = _kernel_callable(kernel)
        worst = 0.0
        for (t, x, s) in grid:
            yn, yw = _mass_rule(x, t - s)
            mass = float(np.sum(yw * np.asarray(k(t, x, s, yn), dtype=float)))
            worst = max(worst, abs(mass - 1.0))
        residuals["mass"] = worst
        tolerances["mass"] = tol
    return _report(
        "normalization", {"grid": grid, "tol": tol}, residuals, tolerances, t0
    )


def check_chapman_kolmogorov(kernel, triples, tol=1e-6):
    """Semigroup property: composing over an intermediate time is exact.

    ``triples`` rows are (t, v, s, x, y) with s < v < t. The residual is
    relative to the direct kernel value.
    """
    t0 = time.time()
    k = _kernel_callable(kernel)
    worst = 0.0
    for (t, v, s, x, y) in [tuple(map(float, r)) for r in triples]:
        if not (s < v < t):
            raise ParameterError("need s < v < t in every triple")
        hf = math.sqrt(t - v)
        hg = math.sqrt(v - s)
        hi = max(x + 12.0 * hf, y + 12.0 * hg)
        breaks = _quad.merge_breaks(
            _quad.cluster_breaks(x, hf, inner=0.4, outer=10.0, rings=5),
            _quad.cluster_breaks(y, hg, inner=0.4, outer=10.0, rings=5),
            _quad.graded_breaks(0.0, hi, 10, 3.0),
            lo=1e-12,
            hi=hi,
        )
        zn, zw = _quad.composite_legendre(breaks, 7)
        left = np.asarray(k(t, x, v, zn), dtype=float)
        right = np.asarray(k(v, zn, s, y), dtype=float)
        composed = float(np.sum(zw * left * right))
        direct = float(k(t, x, s, y))
        worst = max(worst, abs(composed - direct) / abs(direct))
    residuals = {"relative_residual": worst}
    return _report(
        "chapman-kolmogorov",
        {"triples": triples, "tol": tol},
        residuals,
        {"relative_residual": tol},
        t0,
    )


def check_bessel_identity(a_grid, w_grid, tol=1e-8):
    """∫₀^∞ z^{a+1} e^{-wz²/2} I_a(z) dz = w^{-a-1} e^{1/(2w)}."""
    t0 = time.time()
    worst = 0.0
    for a in a_grid:
        for w in w_grid:
            zstar = (1.0 + math.sqrt(1.0 + 160.0 * w)) / w

            def f(z, a=a, w=w):
                return z ** (a + 1.0) * math.exp(z - w * z * z / 2.0) * bessel_i_scaled(
                    a, z
                )

            lhs, _ = integrate.quad(f, 0.0, zstar, limit=200)
            rhs = w ** (-a - 1.0) * math.exp(1.0 / (2.0 * w))
            worst = max(worst, abs(lhs - rhs) / rhs)
    residuals = {"relative_residual": worst}
    return _report(
        "bessel-identity",
        {"a_grid": list(a_grid), "w_grid": list(w_grid), "tol": tol},
        residuals,
        {"relative_residual": tol},
        t0,
    )


def _pde_residual_at(k, drift_of, t, x, s, y, h):
    """|∂_t u - ½∂²_x u - drift·∂_x u| by central differences."""
    pc = float(k(t, x, s, y))
    pt = (float(k(t + h, x, s, y)) - float(k(t - h, x, s, y))) / (2 * h)
    pp = float(k(t, x + h, s, y))
    pm = float(k(t, x - h, s, y))
    px = (pp - pm) / (2 * h)
    pxx = (pp - 2 * pc + pm) / (h * h)
    return abs(pt - 0.5 * pxx - drift_of(t, x) * px)


def check_pde_residual(
    obj,
    points,
    h0=0.08,
    levels=3,
    order_range=(1.7, 2.3),
    variable_bound_const=2.0,
    drop_drift=False,
):
    """Finite-difference residual of the governing equation.

    Closed-form kernels (``obj`` a scalar index, or the string "gauss"
    with ``drop_drift``) get a Richardson convergence-order assertion
    over halved steps; an assembled variable solution gets a residual
    bound C·(h² + quad.tol) at the coarsest step, since its own
    quadrature error floors the refinement.
    """
    t0 = time.time()
    payload = {"obj": repr(obj), "points": points, "h0": h0, "levels": levels}
    if isinstance(obj, FundamentalSolutionApprox):
        fld = obj.field
        drift = lambda t, x: (1.0 + 2.0 * float(fld.eval(t, x))) / (2.0 * x)
        k = _kernel_callable(obj)
        worst = 0.0
        for (t, x, s, y) in points:
            worst = max(worst, _pde_residual_at(k, drift, t, x, s, y, h0))
        bound = variable_bound_const * (h0 * h0 + obj.quad.tol)
        residuals = {"residual": worst}
        tolerances = {"residual": bound}
        return _report("pde-residual", payload, residuals, tolerances, t0)

    if obj == "gauss":
        k = lambda t, x, s, y: gauss_kernel(t, x, s, y)
        drift = lambda t, x: 0.0
    else:
        a = float(obj)
        k = _kernel_callable(a)
        drift = lambda t, x: (1.0 + 2.0 * a) / (2.0 * x)
    if drop_drift:
        drift = lambda t, x: 0.0
    lo, hi = order_range
    worst_lo, worst_hi = hi, lo
    orders = []
    for (t, x, s, y) in points:
        res = [
            _pde_residual_at(k, drift, t, x, s, y, h0 / 2**lev)
            for lev in range(levels)
        ]
        for lev in range(levels - 1):
            orders.append(math.log2(res[lev] / res[lev + 1]))
    med = float(np.median(orders))
    residuals = {"order_low_excess": max(0.0, lo - med), "order_high_excess": max(0.0, med - hi)}
    tolerances = {"order_low_excess": 0.0, "order_high_excess": 0.0}
    rep = _report("pde-residual", payload, residuals, tolerances, t0)
    return CheckReport(
        check_name=rep.check_name,
        inputs_digest=rep.inputs_digest,
        residuals={**rep.residuals, "median_order": med},
        tolerances={**rep.tolerances, "median_order": float("inf")},
        passed=rep.passed,
        runtime_s=rep.runtime_s,
    )


def check_reflection(obj, x_ladder=(1e-2, 1e-3, 1e-4), t=1.0, s=0.0, y=1.0, tol=0.999):
    """Boundary behaviour at the origin: x^{1-2a}·∂_x u decays with x.

    Closed-form kernels must decay monotonically along the descending
    x-ladder (worst consecutive ratio reported). Assembled variable
    solutions are held to the overall trend — last rung versus first —
    because their quadrature noise dominates centered differences at
    the deepest rungs.
    """
    t0 = time.time()
    variable = isinstance(obj, FundamentalSolutionApprox)
    if variable:
        k = _kernel_callable(obj)
        a_of = lambda x: float(obj.field.eval(t, x))
    else:
        a = float(obj)
        k = _kernel_callable(a)
        a_of = lambda x: a
    flux = []
    for x in x_ladder:
        h = 0.2 * x
        du = (float(k(t, x + h, s, y)) - float(k(t, x - h, s, y))) / (2 * h)
        flux.append(x ** (1.0 - 2.0 * a_of(x)) * abs(du))
    if variable:
        worst = flux[-1] / flux[0] if flux[0] > 0 else 0.0
    else:
        ratios = [flux[i + 1] / flux[i] for i in range(len(flux) - 1) if flux[i] > 0]
        worst = max(ratios) if ratios else 0.0
    residuals = {"decay_ratio": worst}
    return _report(
        "reflection",
        {"obj": repr(obj), "x_ladder": list(x_ladder), "t": t, "y": y},
        residuals,
        {"decay_ratio": tol},
        t0,
    )


def check_bound_sandwich(
    fs, grid_a, grid_b, delta=0.5, margin=3.0, collapse_tol=1e-12, delta_grid=(0.25, 0.5, 0.75)
):
    """Two-sided comparison bounds: fit on grid A, assert on grid B.

    Also asserts the δ-family inclusion (the δ=½ member dominates the
    minimum over a δ-grid containing ½) and, for effectively constant
    fields, the collapse of both bounds onto the frozen kernel.
    """
    t0 = time.time()
    fld = fs.field
    up, lo = fit_bound_params(fs, grid_a, delta=delta, margin=margin)
    worst_low = 0.0
    worst_high = 0.0
    for (t, x, s, y) in grid_b:
        ph = fs.evaluate(t, x, s, y)
        u = upper_bound(fld, up, t, x, s, y)
        l = lower_bound(fld, lo, t, x, s, y)
        scale = max(abs(ph), 1e-12)
        worst_low = max(worst_low, (l - ph) / scale)
        worst_high = max(worst_high, (ph - u) / scale)
    residuals = {"lower_violation": worst_low, "upper_violation": worst_high}
    tolerances = {"lower_violation": 0.0, "upper_violation": 0.0}

    # δ-family inclusion at a representative argument.
    t, x, s, y = grid_b[0]
    members = [
        upper_bound(fld, BoundParams(delta=d, beta=up.beta, cal_const=up.cal_const), t, x, s, y)
        for d in delta_grid
    ]
    at_half = upper_bound(
        fld, BoundParams(delta=0.5, beta=up.beta, cal_const=up.cal_const), t, x, s, y
    )
    residuals["delta_family_excess"] = max(0.0, min(members) - at_half)
    tolerances["delta_family_excess"] = 0.0

    # Vanishing-variation collapse.
    if fld.H <= 1e-12:
        t, x, s, y = grid_b[0]
        a = float(fld.eval(s, y))
        base = bessel_kernel(a, t, x, s, y)
        gap = max(
            abs(upper_bound(fld, up, t, x, s, y) - base),
            abs(base - lower_bound(fld, lo, t, x, s, y)),
        )
        residuals["collapse_gap"] = gap
        tolerances["collapse_gap"] = collapse_tol
    return _report(
        "bound-sandwich",
        {"grid_a": grid_a, "grid_b": grid_b, "delta": delta, "margin": margin},
        residuals,
        tolerances,
        t0,
    )


def check_constant_exactness(a_values, n_args=100, seed=1234, tol=1e-12):
    """Constant coefficients: the engine must reproduce the closed form.

    The defect kernel vanishes identically, the series returns zero
    with a single counted term, and the assembled solution agrees with
    the frozen kernel to relative machine scale.
    """
    t0 = time.time()
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_levi = 0.0
    terms_ok = True
    for a in a_values:
        fld = get_field("CONST", a=float(a))
        fs = assemble_fs(fld)
        for _ in range(n_args):
            s = rng.uniform(0.0, 1.0)
            t = s + rng.uniform(0.05, 2.0)
            x = rng.uniform(0.1, 3.0)
            y = rng.uniform(0.1, 3.0)
            ref = bessel_kernel(float(a), t, x, s, y)
            val = fs.evaluate(t, x, s, y)
            worst = max(worst, abs(val - ref) / ref)
            worst_levi = max(worst_levi, abs(float(levi_kernel(fld, t, x, s, y))))
        pr = phi_series(fld, 1.0, 1.0, 0.0, 1.0)
        terms_ok &= pr.value == 0.0 and pr.terms_used == 1
    residuals = {
        "relative_gap": worst,
        "levi_magnitude": worst_levi,
        "series_shortcut_failed": 0.0 if terms_ok else 1.0,
    }
    tolerances = {
        "relative_gap": tol,
        "levi_magnitude": 0.0,
        "series_shortcut_failed": 0.0,
    }
    return _report(
        "constant-exactness",
        {"a_values": list(a_values), "n_args": n_args, "seed": seed},
        residuals,
        tolerances,
        t0,
    )


# ---------------------------------------------------------------------------
# Batteries


DEFAULT_VERIFY_CONFIG = {
    "field": {"name": "CONST", "params": {"a": -0.5}},
    "quad": {},
    "series": {},
    "normalization": {
        "tol": 1e-8,
        "variable_tol": 5e-3,
        "grid": [(tau, x, 0.0) for tau in (0.1, 1.0, 10.0) for x in (0.1, 1.0, 5.0)],
    },
    "chapman-kolmogorov": {
        "tol": 1e-6,
        "triples": [
            (1.0, 0.5, 0.0, 1.0, 0.8),
            (2.0, 1.0, 0.0, 1.0, 1.0),
            (0.6, 0.35, 0.1, 0.5, 1.5),
            (1.0, 1e-6, 0.0, 1.0, 0.8),
        ],
    },
    "bessel-identity": {
        "tol": 1e-8,
        "a_grid": (-0.9, -0.5, -0.1),
        "w_grid": (0.5, 1.0, 2.0),
    },
    "pde-residual": {
        "h0": 0.08,
        "levels": 3,
        "order_range": (1.7, 2.3),
        "variable_bound_const": 2.0,
        "points": [
            (1.0, 1.0, 0.0, 1.2),
            (0.8, 1.5, 0.0, 0.9),
            (1.5, 0.8, 0.3, 1.1),
        ],
    },
    "reflection": {"x_ladder": (1e-2, 1e-3, 1e-4), "tol": 0.999},
    "bound-sandwich": {
        "delta": 0.5,
        "margin": 3.0,
        "collapse_tol": 1e-12,
        "grid_a": [
            (t, x, 0.0, 0.9)
            for t in (0.3, 0.6, 0.9, 1.3)
            for x in (0.4, 0.8, 1.3, 2.0, 2.8)
        ],
        "grid_b": [
            (t, x, 0.0, 0.9)
            for t in (0.45, 0.75, 1.1)
            for x in (0.5, 1.0, 1.6, 2.4)
        ],
    },
    "constant-exactness": {"a_values": (-0.9, -0.5, -0.25, -0.1), "n_args": 25, "seed": 99},
}


def _field_from_config(config):
    fc = config.get("field", DEFAULT_VERIFY_CONFIG["field"])
    if "expression" in fc:
        from .config import expression_field

        fld, _canon = expression_field(
            fc["expression"],
            H=fc["H"],
            alpha=fc.get("alpha", 1.0),
            beta=fc["beta"],
            beta_plus=fc["beta_plus"],
        )
        return fld
    params = fc.get("params")
    if params is None:
        params = {k: v for k, v in fc.items() if k != "name"}
    return get_field(fc["name"], **params)


def _engine_from_config(config):
    fld = _field_from_config(config)
    qc = config.get("quad", {})
    quad = QuadratureSpec(**qc) if qc else None
    sc = config.get("series", {})
    ctrl = SeriesControl(**sc) if sc else SeriesControl(max_terms=20, term_tol=1e-4)
    return assemble_fs(fld, quad=quad, ctrl=ctrl)


def _kernel_or_fs(config):
    fld = _field_from_config(config)
    if fld.H <= 1e-12:
        return float(fld.eval(0.0, 1.0))
    return _engine_from_config(config)


def _battery_normalization(config):
    c = {**DEFAULT_VERIFY_CONFIG["normalization"], **config.get("normalization", {})}
    obj = _kernel_or_fs(config)
    if isinstance(obj, FundamentalSolutionApprox):
        grid = [(s + tau, x, s) for (tau, x, s) in c["grid"] if tau <= 2.0]
    else:
        grid = [(s + tau, x, s) for (tau, x, s) in c["grid"]]
    return check_normalization(obj, grid, tol=c["tol"], variable_tol=c["variable_tol"])


def _battery_chapman(config):
    c = {**DEFAULT_VERIFY_CONFIG["chapman-kolmogorov"], **config.get("chapman-kolmogorov", {})}
    obj = _kernel_or_fs(config)
    tol = c["tol"] if not isinstance(obj, FundamentalSolutionApprox) else c.get("variable_tol", 1e-2)
    triples = [(t, v, s, x, y) for (t, v, s, x, y) in c["triples"]]
    return check_chapman_kolmogorov(obj, triples, tol=tol)


def _battery_bessel(config):
    c = {**DEFAULT_VERIFY_CONFIG["bessel-identity"], **config.get("bessel-identity", {})}
    return check_bessel_identity(c["a_grid"], c["w_grid"], tol=c["tol"])


def _battery_pde(config):
    c = {**DEFAULT_VERIFY_CONFIG["pde-residual"], **config.get("pde-residual", {})}
    obj = _kernel_or_fs(config)
    return check_pde_residual(
        obj,
        c["points"],
        h0=c["h0"],
        levels=c["levels"],
        order_range=tuple(c["order_range"]),
        variable_bound_const=c["variable_bound_const"],
    )


def _battery_reflection(config):
    c = {**DEFAULT_VERIFY_CONFIG["reflection"], **config.get("reflection", {})}
    obj = _kernel_or_fs(config)
    return check_reflection(obj, x_ladder=tuple(c["x_ladder"]), tol=c["tol"])


def _battery_sandwich(config):
    c = {**DEFAULT_VERIFY_CONFIG["bound-sandwich"], **config.get("bound-sandwich", {})}
    fs = _engine_from_config(config)
    return check_bound_sandwich(
        fs,
        [tuple(r) for r in c["grid_a"]],
        [tuple(r) for r in c["grid_b"]],
        delta=c["delta"],
        margin=c["margin"],
        collapse_tol=c["collapse_tol"],
    )


def _battery_const_exact(config):
    c = {**DEFAULT_VERIFY_CONFIG["constant-exactness"], **config.get("constant-exactness", {})}
    return check_constant_exactness(c["a_values"], n_args=c["n_args"], seed=c["seed"])


_BATTERIES = {
    "normalization": _battery_normalization,
    "chapman-kolmogorov": _battery_chapman,
    "bessel-identity": _battery_bessel,
    "pde-residual": _battery_pde,
    "reflection": _battery_reflection,
    "bound-sandwich": _battery_sandwich,
    "constant-exactness": _battery_const_exact,
}

BATTERY_NAMES = tuple(sorted(_BATTERIES))


def run_battery(names, config=None):
    """Run the named batteries and return their reports, name-ordered.

    ``names`` may be a list of battery names or the string "all". An
    unknown name raises CatalogError before anything runs.
    """
    config = config or {}
    if names == "all":
        names = list(BATTERY_NAMES)
    names = list(names)
    for n in names:
        if n not in _BATTERIES:
            raise CatalogError(
                f"unknown battery {n!r}; available: {', '.join(BATTERY_NAMES)}"
            )
    reports = [_BATTERIES[n](config) for n in sorted(set(names))]
    return reports
