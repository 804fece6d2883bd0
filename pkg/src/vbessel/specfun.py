"""Scalar special functions used by every kernel in the package.

All routines accept scalars or numpy arrays and broadcast like ufuncs.
The modified Bessel function is evaluated in its exponentially scaled form
everywhere downstream; the unscaled variant exists for completeness and
raises on overflow instead of returning inf.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError, OverflowDomainError, ParameterError

# Switch between power series and uniform asymptotic expansion.
Z_SWITCH = 20.0

# Classic g=7, n=9 double-precision Lanczos coefficient set.
_LANCZOS_G = 7.0
_LANCZOS_C = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)

_GAMMA_OVERFLOW_X = 171.62


def _as_array(x):
    return np.asarray(x, dtype=float)


def gamma(x):
    """Gamma function for positive real arguments.

    Parameters
    ----------
    x : float or ndarray
        Argument, must be strictly positive.

    Returns
    -------
    float or ndarray
        Gamma(x) to about 1e-14 relative accuracy.

    Raises
    ------
    DomainError
        If any argument is not strictly positive.
    OverflowDomainError
        If Gamma(x) exceeds double range (x > ~171.62); use log_gamma.
    """
    xa = _as_array(x)
    if np.any(~np.isfinite(xa)) or np.any(xa <= 0.0):
        raise DomainError("gamma requires finite x > 0")
    if np.any(xa > _GAMMA_OVERFLOW_X):
        raise OverflowDomainError(
            "gamma overflows double precision for x > %.2f; use log_gamma"
            % _GAMMA_OVERFLOW_X
        )
    out = np.exp(log_gamma(xa))
    # One Newton-style cleanup through the recurrence is not needed: the
    # Lanczos set already delivers ~1e-14. Return scalars as scalars.
    return out if out.ndim else float(out)


def log_gamma(x):
    """Natural log of Gamma(x) for x > 0, Lanczos approximation."""
    xa = _as_array(x)
    if np.any(~np.isfinite(xa)) or np.any(xa <= 0.0):
        raise DomainError("log_gamma requires finite x > 0")
    z = xa - 1.0
    t = z + _LANCZOS_G + 0.5
    series = np.full_like(z, _LANCZOS_C[0])
    for i in range(1, len(_LANCZOS_C)):
        series = series + _LANCZOS_C[i] / (z + i)
    out = 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * np.log(t) - t + np.log(series)
    return out if out.ndim else float(out)


def _check_order(a):
    aa = _as_array(a)
    if np.any(~np.isfinite(aa)) or np.any(aa <= -1.0) or np.any(aa > 1.0):
        raise ParameterError("Bessel order must lie in (-1, 1]")
    return aa


def _ive_series(a, z):
    # Power series of I_a(z), scaled by e^{-z}. Terms are positive, no
    # cancellation; 80 terms cover z <= Z_SWITCH to beyond double precision.
    half = 0.5 * z
    term = np.exp(a * np.log(half) - log_gamma(a + 1.0))
    total = term.copy()
    h2 = half * half
    for k in range(80):
        term = term * h2 / ((k + 1.0) * (a + k + 1.0))
        total += term
        if np.all(term <= 1e-18 * total):
            break
    return total * np.exp(-z)


def _ive_asymptotic(a, z):
    # Uniform large-argument expansion of e^{-z} I_a(z); coefficients follow
    # the recurrence c_k = c_{k-1} (mu - (2k-1)^2)/(8k), mu = 4a^2.
    mu = 4.0 * a * a
    coef = np.ones_like(z)
    total = np.ones_like(z)
    sign = 1.0
    prev = np.full_like(z, np.inf)
    for k in range(1, 26):
        coef = coef * (mu - (2.0 * k - 1.0) ** 2) / (8.0 * k)
        sign = -sign
        term = sign * coef / z**k
        mag = np.abs(term)
        grow = mag >= prev
        term = np.where(grow, 0.0, term)
        total += term
        prev = np.where(grow, prev, mag)
        if np.all(mag <= 1e-18):
            break
    return total / np.sqrt(2.0 * math.pi * z)


def _ive_core(aa, za):
    # Branch dispatch without the public order check; the derivative
    # recurrence needs orders up to one above the public window.
    aa, za = np.broadcast_arrays(aa, za)
    aa = np.asarray(aa, dtype=float)
    za = np.asarray(za, dtype=float)
    out = np.empty_like(za)

    zero = za == 0.0
    if np.any(zero):
        a0 = aa[zero]
        if np.any(a0 < 0.0):
            raise DomainError("bessel_i diverges at z = 0 for negative order")
        out[zero] = np.where(a0 == 0.0, 1.0, 0.0)

    small = (~zero) & (za <= Z_SWITCH)
    if np.any(small):
        out[small] = _ive_series(aa[small], za[small])
    large = za > Z_SWITCH
    if np.any(large):
        out[large] = _ive_asymptotic(aa[large], za[large])
    return out


def bessel_i_scaled(a, z):
    """Exponentially scaled modified Bessel function e^{-z} I_a(z).

    Parameters
    ----------
    a : float or ndarray
        Order, in (-1, 1].
    z : float or ndarray
        Argument, z >= 0.

    Returns
    -------
    float or ndarray
        e^{-z} I_a(z). Power series below ``Z_SWITCH``, uniform asymptotic
        expansion above; both branches agree to ~1e-13 at the switch.
    """
    aa = _check_order(a)
    za = _as_array(z)
    if np.any(~np.isfinite(za)) or np.any(za < 0.0):
        raise DomainError("bessel_i_scaled requires finite z >= 0")
    out = _ive_core(aa, za)
    return out if out.ndim else float(out)


def bessel_i(a, z):
    """Modified Bessel function I_a(z) of real order a in (-1, 1].

    Raises
    ------
    OverflowDomainError
        When e^z overflows double range; callers needing large z must use
        :func:`bessel_i_scaled`.
    """
    za = _as_array(z)
    if np.any(za > 705.0):
        raise OverflowDomainError(
            "bessel_i overflows for z > 705; use bessel_i_scaled"
        )
    scaled = bessel_i_scaled(a, z)
    return scaled * np.exp(za) if np.ndim(scaled) else float(scaled * np.exp(za))


def bessel_i_deriv_scaled(a, z):
    """e^{-z} dI_a/dz via the recurrence I_a'(z) = I_{a+1}(z) + (a/z) I_a(z)."""
    aa = _check_order(a)
    za = _as_array(z)
    if np.any(~np.isfinite(za)) or np.any(za <= 0.0):
        raise DomainError("bessel_i_deriv requires finite z > 0")
    out = _ive_core(aa + 1.0, za) + (aa / za) * _ive_core(aa, za)
    return out if out.ndim else float(out)


def bessel_i_deriv(a, z):
    """Derivative dI_a/dz for z > 0, unscaled."""
    za = _as_array(z)
    if np.any(za > 705.0):
        raise OverflowDomainError(
            "bessel_i_deriv overflows for z > 705; use bessel_i_deriv_scaled"
        )
    out = bessel_i_deriv_scaled(a, z) * np.exp(za)
    return out if np.ndim(out) else float(out)


_ML_MAX_TERMS = 500
_ML_TERM_RATIO = 1e-16
_EXP_OVERFLOW = 709.0


def _ml_series_log(A, B, z):
    """Log of the defining series of E_{A,B}(z), or None if not converged.

    Works for z >= 0. Terms are computed in log space so that the partial
    sums stay representable whenever the final value is.
    """
    if z == 0.0:
        if B == 0.0:
            return -math.inf  # 1/Gamma(0) = 0
        return -float(log_gamma(B)) if B > 0 else None
    logz = math.log(z)
    # log-sum-exp accumulation with a running maximum.
    logs = []
    k = 0
    best = -math.inf
    while k < _ML_MAX_TERMS:
        g = A * k + B
        if g <= 0.0:
            lt = -math.inf  # reciprocal Gamma vanishes at the poles
        else:
            lt = k * logz - float(log_gamma(g))
        logs.append(lt)
        best = max(best, lt)
        # Converged once terms are past the peak and negligible.
        if k > 2 and lt < best + math.log(_ML_TERM_RATIO) and logs[-1] < logs[-2]:
            arr = np.array(logs)
            return best + math.log(np.sum(np.exp(arr - best)))
        k += 1
    return None


def mittag_leffler_log(params, z):
    """Natural log of the two-parameter Mittag-Leffler function E_{A,B}(z).

    Uses the defining series when it converges within the term budget and
    the standard large-argument form (1/A) z^{(1-B)/A} exp(z^{1/A})
    otherwise. The log form never overflows for representable exponents.
    """
    A, B = params
    if not (A > 0.0) or not (B >= 0.0):
        raise ParameterError("mittag_leffler requires A > 0 and B >= 0")
    zf = float(z)
    if not math.isfinite(zf) or zf < 0.0:
        raise DomainError("mittag_leffler requires finite z >= 0")
    got = _ml_series_log(A, B, zf)
    if got is not None:
        return got
    # Large-argument branch. The algebraic prefactor z^{(1-B)/A} keeps the
    # two branches continuous at the handover; dropping it would introduce
    # an O(z^{(1-B)/A}) jump.
    return zf ** (1.0 / A) + ((1.0 - B) / A) * math.log(zf) - math.log(A)


def mittag_leffler(params, z):
    """Two-parameter Mittag-Leffler function E_{A,B}(z) for z >= 0.

    Parameters
    ----------
    params : tuple of float
        (A, B) with A > 0 and B >= 0.
    z : float
        Nonnegative argument.

    Raises
    ------
    OverflowDomainError
        If the value exceeds double range; use :func:`mittag_leffler_log`.
    """
    lg = mittag_leffler_log(params, z)
    if lg > _EXP_OVERFLOW:
        raise OverflowDomainError(
            "mittag_leffler overflows double range; use mittag_leffler_log"
        )
    return math.exp(lg)


def g_alpha(alpha, z):
    """Series majorant kernel E_{alpha/2, alpha/2}(z) for alpha in (0, 1]."""
    if not (0.0 < alpha <= 1.0):
        raise ParameterError("g_alpha requires alpha in (0, 1]")
    return mittag_leffler((alpha / 2.0, alpha / 2.0), z)


def g_alpha_log(alpha, z):
    """Log of :func:`g_alpha`; safe for large arguments."""
    if not (0.0 < alpha <= 1.0):
        raise ParameterError("g_alpha requires alpha in (0, 1]")
    return mittag_leffler_log((alpha / 2.0, alpha / 2.0), z)
