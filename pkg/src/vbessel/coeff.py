"""Variable drift-index fields b(t, x) and their hypothesis checks.

A field carries its declared regularity data: a Hölder constant H and
exponent alpha for the metric |t-s| + |x-y|, two-sided bounds
-1 < beta <= b <= beta_plus < 0, and a growth margin Delta used by the
initial-value solvers. The engine treats b as a black box: it only ever
needs values, never derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CatalogError, DomainError, ParameterError


@dataclass(frozen=True)
class CoefficientField:
    """A drift-index field b(t, x) with declared regularity constants.

    ``eval`` must accept scalars or broadcastable arrays (t, x) and
    return values in [beta, beta_plus]. Fields are immutable; evaluation
    must be pure.
    """

    name: str
    eval: Callable
    H: float
    alpha: float
    beta: float
    beta_plus: float
    Delta: float = 0.5

    def __post_init__(self):
        if not (self.H > 0.0 and math.isfinite(self.H)):
            raise ParameterError("H must be positive and finite")
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError("alpha must lie in (0, 1]")
        if not (-1.0 < self.beta <= self.beta_plus < 0.0):
            raise ParameterError(
                "bounds must satisfy -1 < beta <= beta_plus < 0"
            )
        if not (0.0 < self.Delta < 1.0):
            raise ParameterError("Delta must lie in (0, 1)")

    def __call__(self, t, x):
        return self.eval(t, x)


@dataclass(frozen=True)
class BoundsReport:
    ok: bool
    worst_low: float
    worst_high: float


def validate_bounds(field, grid):
    """Sample b on ``grid`` (iterable of (t, x)) against its declared bounds.

    Returns a BoundsReport whose worst_low/worst_high are the extreme
    sampled values; ok means every sample lies in [beta, beta_plus].
    """
    pts = list(grid)
    if not pts:
        raise ParameterError("validate_bounds requires a non-empty grid")
    t = np.asarray([p[0] for p in pts], dtype=float)
    x = np.asarray([p[1] for p in pts], dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("validate_bounds requires x > 0 on the grid")
    v = np.asarray(field.eval(t, x), dtype=float)
    lo = float(np.min(v))
    hi = float(np.max(v))
    ok = (lo >= field.beta - 1e-15) and (hi <= field.beta_plus + 1e-15)
    return BoundsReport(ok=bool(ok), worst_low=lo, worst_high=hi)


def estimate_holder(field, pairs):
    """Empirical Hölder quotient max |b(t,x)-b(s,y)| / (|t-s|+|x-y|)^alpha.

    The caller compares the result against the declared H. Coincident
    pairs are rejected (zero denominator).
    """
    pts = list(pairs)
    if not pts:
        raise ParameterError("estimate_holder requires a non-empty pair list")
    t = np.asarray([p[0][0] for p in pts], dtype=float)
    x = np.asarray([p[0][1] for p in pts], dtype=float)
    s = np.asarray([p[1][0] for p in pts], dtype=float)
    y = np.asarray([p[1][1] for p in pts], dtype=float)
    dist = np.abs(t - s) + np.abs(x - y)
    if np.any(dist == 0.0):
        raise DomainError("estimate_holder: coincident pair has zero distance")
    num = np.abs(
        np.asarray(field.eval(t, x), dtype=float)
        - np.asarray(field.eval(s, y), dtype=float)
    )
    return float(np.max(num / dist**field.alpha))


def _const_eval(a):
    def ev(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        out = a + 0.0 * (t + x)
        return out if out.ndim else float(out)

    return ev


# Constant fields carry a vanishingly small H so that the bound-collapse
# limit (corrections proportional to H) is exercised without violating
# the H > 0 invariant.
_CONST_H = 1e-15


def const_field(a, H=_CONST_H):
    """The constant field b ≡ a for a ∈ (-1, 0)."""
    if not (-1.0 < a < 0.0):
        raise ParameterError("const_field requires a in (-1, 0)")
    return CoefficientField(
        name=f"CONST({a})",
        eval=_const_eval(float(a)),
        H=H,
        alpha=1.0,
        beta=float(a),
        beta_plus=float(a),
    )


def _sin_tx_eval(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = -0.5 + 0.2 * np.sin(t + x)
    return out if out.ndim else float(out)


def _space_bump_eval(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = -0.5 + 0.3 * np.exp(-(x**2)) + 0.0 * t
    return out if out.ndim else float(out)


def _time_ramp_eval(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = -0.6 + 0.2 * t / (1.0 + t) + 0.0 * x
    return out if out.ndim else float(out)


SIN_TX = CoefficientField(
    name="SIN_TX",
    eval=_sin_tx_eval,
    H=0.283,  # 0.2·√2, the gradient bound for the declared metric
    alpha=1.0,
    beta=-0.7,
    beta_plus=-0.3,
)

SPACE_BUMP = CoefficientField(
    name="SPACE_BUMP",
    eval=_space_bump_eval,
    H=0.26,  # max |d/dx 0.3 e^{-x²}| = 0.6·x·e^{-x²} at x = 1/√2 ≈ 0.2573
    alpha=1.0,
    beta=-0.5,
    beta_plus=-0.2,
)

TIME_RAMP = CoefficientField(
    name="TIME_RAMP",
    eval=_time_ramp_eval,
    H=0.2,  # sup |d/dt| = 0.2 at t = 0
    alpha=1.0,
    beta=-0.6,
    beta_plus=-0.4,
)


def builtin_fields():
    """Catalog of named fields; CONST is a factory taking the level a."""
    return {
        "CONST": const_field,
        "SIN_TX": SIN_TX,
        "SPACE_BUMP": SPACE_BUMP,
        "TIME_RAMP": TIME_RAMP,
    }


def get_field(name, **params):
    """Resolve a catalog name to a field; CONST accepts a=... parameter."""
    cat = builtin_fields()
    if name not in cat:
        raise CatalogError(
            f"unknown field {name!r}; known: {sorted(cat)}"
        )
    entry = cat[name]
    if callable(entry) and not isinstance(entry, CoefficientField):
        try:
            return entry(**params)
        except TypeError as exc:
            raise ParameterError(f"bad parameters for field {name}: {exc}")
    if params:
        raise ParameterError(f"field {name} takes no parameters")
    return entry
