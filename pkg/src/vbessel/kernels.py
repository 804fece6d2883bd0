"""Closed-form transition kernels on the positive half-line.

The central object is the constant-index kernel

    p_a(t, x, s, y) = τ^{-1} x^{-a} y^{a+1} exp(-(x²+y²)/(2τ)) I_a(xy/τ),

with τ = t - s and I_a the modified Bessel function. It is the
transition density (in y) of the index-a Bessel-type diffusion reflected
at the origin, started at x. Everything is evaluated in the stable
regrouping exp(-(x-y)²/(2τ)) · [e^{-xy/τ} I_a(xy/τ)], which never
overflows: the naive product does once xy/τ grows past ~700.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .specfun import _ive_core

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelArgs:
    """A space-time quadruple (t, x, s, y) with t > s and x, y > 0."""

    t: float
    x: float
    s: float
    y: float

    def __post_init__(self):
        if not (self.t > self.s >= 0.0):
            raise DomainError("KernelArgs requires t > s >= 0")
        if not (self.x > 0.0 and self.y > 0.0):
            raise DomainError("KernelArgs requires x > 0 and y > 0")

    def astuple(self):
        return (self.t, self.x, self.s, self.y)


@dataclass(frozen=True)
class BoundParams:
    """Parameters of the comparison kernel used inside estimate checks.

    ``cal_const`` is an empirically calibrated stand-in for the
    unspecified constants of the two-sided bounds; it is fitted on a
    calibration grid and frozen, never derived.
    """

    delta: float
    beta: float
    cal_const: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ParameterError("delta must lie in (0, 1)")
        if not (-1.0 < self.beta < 0.0):
            raise ParameterError("beta must lie in (-1, 0)")
        if not (self.cal_const > 0.0 and math.isfinite(self.cal_const)):
            raise ParameterError("cal_const must be positive and finite")


def _tau(t, s):
    ta = np.asarray(t, dtype=float)
    sa = np.asarray(s, dtype=float)
    tau = ta - sa
    if np.any(~np.isfinite(tau)) or np.any(tau <= 0.0):
        raise DomainError("kernel arguments require t > s")
    return tau


def _positive(name, v):
    va = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(va)) or np.any(va <= 0.0):
        raise DomainError(f"kernel arguments require {name} > 0")
    return va


def _check_index(a):
    aa = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(aa)) or np.any(aa <= -1.0) or np.any(aa >= 0.0):
        raise DomainError("kernel index must lie in (-1, 0)")
    return aa


def gauss_kernel(t, x, s, y):
    """Heat kernel (2πτ)^{-1/2} exp(-(x-y)²/(2τ)) on the whole line."""
    tau = _tau(t, s)
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    out = np.exp(-((xa - ya) ** 2) / (2.0 * tau)) / np.sqrt(2.0 * math.pi * tau)
    return out if out.ndim else float(out)


def bessel_kernel(a, t, x, s, y):
    """Constant-index transition density p_a(t, x, s, y), index a ∈ (-1, 0).

    Parameters broadcast like ufunc arguments. The result is a density
    in y: ∫₀^∞ p_a(t, x, s, y) dy = 1 for every t > s, x > 0.
    """
    aa = _check_index(a)
    tau = _tau(t, s)
    xa = _positive("x", x)
    ya = _positive("y", y)
    u = xa * ya / tau
    core = np.exp(-((xa - ya) ** 2) / (2.0 * tau)) * _ive_core(aa, u)
    out = core * xa ** (-aa) * ya ** (aa + 1.0) / tau
    return out if out.ndim else float(out)


def bessel_kernel_dx(a, t, x, s, y):
    """Derivative ∂p_a/∂x of the constant-index kernel.

    Evaluated in the cancellation-free regrouping

        ∂p_a/∂x = -(x/τ)·p_a + (y/τ)·[τ^{-1} x^{-a} y^{a+1}
                    exp(-(x-y)²/(2τ)) · e^{-xy/τ} I_{a+1}(xy/τ)],

    which follows from I_a'(u) = I_{a+1}(u) + (a/u) I_a(u); the a/x
    terms cancel exactly, so the expression stays finite as x → 0+.
    """
    aa = _check_index(a)
    tau = _tau(t, s)
    xa = _positive("x", x)
    ya = _positive("y", y)
    u = xa * ya / tau
    front = np.exp(-((xa - ya) ** 2) / (2.0 * tau)) * xa ** (-aa) * ya ** (
        aa + 1.0
    ) / tau
    out = front * (-(xa / tau) * _ive_core(aa, u) + (ya / tau) * _ive_core(aa + 1.0, u))
    return out if out.ndim else float(out)


def reflected_bm_kernel(t, x, s, y):
    """Transition density of Brownian motion reflected at the origin.

    (2πτ)^{-1/2} [exp(-(x-y)²/(2τ)) + exp(-(x+y)²/(2τ))]; coincides with
    bessel_kernel(-1/2, ...) — both exponents are negative, which unit
    mass forces.
    """
    tau = _tau(t, s)
    xa = _positive("x", x)
    ya = _positive("y", y)
    out = (
        np.exp(-((xa - ya) ** 2) / (2.0 * tau))
        + np.exp(-((xa + ya) ** 2) / (2.0 * tau))
    ) / np.sqrt(2.0 * math.pi * tau)
    return out if out.ndim else float(out)


def bound_kernel(params, t, x, s, y):
    """Comparison kernel p_beta(t, (1-δ)x, s, (1-δ)y) for estimate checks."""
    if not isinstance(params, BoundParams):
        raise ParameterError("bound_kernel expects a BoundParams instance")
    shrink = 1.0 - params.delta
    xa = _positive("x", x)
    ya = _positive("y", y)
    return bessel_kernel(params.beta, t, shrink * xa, s, shrink * ya)
