"""Reflected Euler simulation and path statistics.

The scheme integrates dX = [(1 + 2g(t,X)) / X] dt + dW with reflection
at the origin: X' = |X + drift·dt + √dt·N|. Near the origin the drift
is stiff; whenever X < x_floor = 10·√dt the drift contribution is
integrated in 10 deterministic substeps with the state argument clamped
to x_floor, and the noise increment is applied once per step, so the
number of normal draws per path per step is always exactly one.

Randomness comes from the Philox 4x64 counter-based generator keyed by
the seed. Normals are drawn step-major — one vector of length n_paths
per time step, in step order — so the stream seen by path i is the
fixed i-th column of that layout: ensembles are bit-for-bit
reproducible from (seed, n_paths, step count), independent of how path
updates are scheduled, and identical under any parallel execution that
consumes the same columns.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .coeff import CoefficientField, validate_bounds
from .errors import DomainError, ParameterError, SampleSizeError, StepSizeError

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "matched_sim_field",
    "simulate",
    "empirical_density",
    "DensityTable",
    "subgaussian_norm",
    "modulus_stat",
    "running_max_stat",
    "ks_distance",
    "cdf_from_density",
    "dump_ensemble",
    "read_ensemble_header",
]

_SCHEME = "reflected-euler"
_SUBSTEPS = 10
_FLOOR_MULT = 10.0
_MOMENT_ORDERS = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class SimConfig:
    field: CoefficientField
    x0: float
    t_start: float
    t_end: float
    dt: float
    n_paths: int
    seed: int
    scheme: str = _SCHEME
    record_stride: int = 1

    def __post_init__(self):
        if not isinstance(self.field, CoefficientField):
            raise ParameterError("SimConfig.field must be a CoefficientField")
        if not (self.x0 > 0.0 and math.isfinite(self.x0)):
            raise ParameterError("x0 must be positive and finite")
        if not (self.t_end > self.t_start >= 0.0):
            raise ParameterError("need t_end > t_start >= 0")
        if not (self.dt > 0.0):
            raise StepSizeError("dt must be positive")
        if self.dt > (self.t_end - self.t_start) / 10.0:
            raise StepSizeError("dt must not exceed a tenth of the horizon")
        if self.dt > self.x0 * self.x0 / 4.0:
            raise StepSizeError(
                "dt must satisfy dt <= x0^2/4 so the first step cannot "
                "overshoot the origin region in one drift increment"
            )
        if self.n_paths < 1:
            raise ParameterError("n_paths must be at least 1")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must fit in 64 bits")
        if self.scheme != _SCHEME:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.record_stride < 1:
            raise ParameterError("record_stride must be at least 1")


@dataclass(frozen=True)
class PathEnsemble:
    """Recorded trajectories: paths[i, k] is path i at times[k]."""

    times: np.ndarray
    paths: np.ndarray
    seed: int
    scheme: str
    dt: float
    field_name: str

    @property
    def n_paths(self):
        return self.paths.shape[0]

    def marginal(self, t):
        """Positions of all paths at the recorded time nearest to t."""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 0.5 * self.dt * 1.0001:
            raise DomainError(f"time {t} was not recorded (stride too coarse)")
        return self.paths[:, k]


def matched_sim_field(field, s, t):
    """Simulation coefficient whose process marginals match a density.

    The density machinery freezes its coefficient at the end-point slot
    and evolves in the backward time variable with half the drift used
    here, so the simulated process that reproduces its end-point
    marginal over [s, t] runs time reversed across the window and
    carries the halved drift convention: the returned field g satisfies
    (1 + 2·g(u, x))/x = (1 + 2·b(s + t − u, x))/(2x).
    """
    if not t > s:
        raise ParameterError("matched_sim_field requires t > s")

    def g(u, x, _b=field.eval, _st=s + t):
        return 0.5 * np.asarray(_b(_st - np.asarray(u, dtype=float), x)) - 0.25

    return CoefficientField(
        name=f"{field.name}-matched",
        eval=g,
        H=0.5 * field.H,
        alpha=field.alpha,
        beta=0.5 * field.beta - 0.25,
        beta_plus=0.5 * field.beta_plus - 0.25,
    )


def simulate(config):
    """Run the reflected Euler scheme for the given configuration."""
    fld = config.field
    probe_t = np.linspace(config.t_start, config.t_end, 7)
    probe_x = config.x0 * np.asarray([0.2, 0.5, 1.0, 2.0, 5.0])
    probe = [(tv, xv) for tv in probe_t for xv in probe_x]
    rep = validate_bounds(fld, probe)
    if not rep.ok:
        raise ParameterError(
            "coefficient leaves its declared window on the simulation "
            f"horizon: sampled range [{rep.worst_low:.6g}, {rep.worst_high:.6g}] "
            f"vs [{fld.beta:.6g}, {fld.beta_plus:.6g}]"
        )
    n_steps = int(round((config.t_end - config.t_start) / config.dt))
    if abs(config.t_start + n_steps * config.dt - config.t_end) > 1e-9 * max(
        1.0, config.t_end
    ):
        raise StepSizeError("the horizon must be an integer number of steps")
    dt = config.dt
    sqdt = math.sqrt(dt)
    floor = _FLOOR_MULT * sqdt
    sub_dt = dt / _SUBSTEPS

    rng = np.random.Generator(np.random.Philox(key=config.seed))
    X = np.full(config.n_paths, float(config.x0))

    stride = config.record_stride
    rec_idx = list(range(0, n_steps + 1, stride))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    rec_set = {k: j for j, k in enumerate(rec_idx)}
    out = np.empty((config.n_paths, len(rec_idx)))
    out[:, 0] = X

    for k in range(n_steps):
        t_k = config.t_start + k * dt
        noise = rng.standard_normal(config.n_paths)
        near = X < floor
        if np.any(near):
            Xn = X[near]
            for j in range(_SUBSTEPS):
                state = np.maximum(Xn, floor)
                g = np.asarray(fld.eval(t_k + j * sub_dt, state), dtype=float)
                Xn = Xn + (1.0 + 2.0 * g) / state * sub_dt
            X = X.copy()
            X[near] = Xn
            far = ~near
            if np.any(far):
                Xf = X[far]
                g = np.asarray(fld.eval(t_k, Xf), dtype=float)
                X[far] = Xf + (1.0 + 2.0 * g) / Xf * dt
        else:
            g = np.asarray(fld.eval(t_k, X), dtype=float)
            X = X + (1.0 + 2.0 * g) / X * dt
        X = np.abs(X + sqdt * noise)
        if (k + 1) in rec_set:
            out[:, rec_set[k + 1]] = X

    times = config.t_start + dt * np.asarray(rec_idx, dtype=float)
    return PathEnsemble(
        times=times,
        paths=out,
        seed=config.seed,
        scheme=config.scheme,
        dt=dt,
        field_name=config.field.name,
    )


@dataclass(frozen=True)
class DensityTable:
    edges: np.ndarray
    centers: np.ndarray
    density: np.ndarray
    std_error: np.ndarray


def empirical_density(ensemble, t, bins=60):
    """Histogram density of the marginal at time t with binomial errors."""
    samples = ensemble.marginal(t)
    n = samples.size
    counts, edges = np.histogram(samples, bins=bins)
    widths = np.diff(edges)
    p = counts / n
    density = p / widths
    se = np.sqrt(np.maximum(p * (1.0 - p), 0.0) / n) / widths
    centers = 0.5 * (edges[:-1] + edges[1:])
    return DensityTable(edges=edges, centers=centers, density=density, std_error=se)


def subgaussian_norm(samples):
    """sup over p in {1,2,4,8,16} of (E|X|^p)^{1/p} / √p.

    Finite for sample clouds with Gaussian-type tails; the moment ladder
    is capped at order 16 because higher empirical moments are noise at
    desk sample sizes. Requires at least 1000 samples.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 1000:
        raise SampleSizeError("subgaussian_norm needs at least 1000 samples")
    a = np.abs(samples)
    best = 0.0
    for p in _MOMENT_ORDERS:
        m = float(np.mean(a**p)) ** (1.0 / p)
        best = max(best, m / math.sqrt(p))
    return best


def _check_unit_window(times):
    if times.size < 3:
        raise DomainError("need at least 3 recorded times")
    if not (times[0] >= 0.0 and times[-1] <= 1.0 + 1e-12):
        raise DomainError("modulus statistic is defined on a grid within [0, 1]")


def modulus_stat(ensemble):
    """Per-path continuity-modulus statistic on a grid inside [0, 1].

    For each path, the maximum over all recorded pairs s < t of
    |X_t - X_s| / √(|t-s| · ln(2 + 1/|t-s|)). Returns one value per
    path.
    """
    times = ensemble.times
    _check_unit_window(times)
    paths = ensemble.paths
    n_times = times.size
    out = np.zeros(paths.shape[0])
    for lag in range(1, n_times):
        dtv = times[lag:] - times[:-lag]
        scale = np.sqrt(dtv * np.log(2.0 + 1.0 / dtv))
        ratio = np.abs(paths[:, lag:] - paths[:, :-lag]) / scale[None, :]
        np.maximum(out, ratio.max(axis=1), out=out)
    return out


def running_max_stat(ensemble):
    """Per-path running-maximum statistic max|X| / √(T ln T), T > e."""
    T = float(ensemble.times[-1])
    if T <= math.e:
        raise DomainError("running-max statistic requires a horizon T > e")
    denom = math.sqrt(T * math.log(T))
    return np.max(np.abs(ensemble.paths), axis=1) / denom


def cdf_from_density(density_fn, y_hi, n_grid=2000):
    """Numeric CDF of a density on (0, y_hi] by cumulative trapezoid.

    Returns (grid, cdf) with cdf[0] approximating the mass of (0, y_0].
    """
    ys = np.linspace(y_hi / n_grid, y_hi, n_grid)
    dens = np.asarray(density_fn(ys), dtype=float)
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(ys))]
    )
    cdf = cdf + dens[0] * ys[0]  # rectangle for the (0, y_0] sliver
    return ys, cdf


def ks_distance(samples, density_fn, y_hi=None):
    """Kolmogorov-Smirnov distance of samples against a density on (0, ∞)."""
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    n = samples.size
    if n < 10:
        raise SampleSizeError("ks_distance needs at least 10 samples")
    hi = float(samples[-1] * 1.1 + 1.0) if y_hi is None else float(y_hi)
    ys, cdf = cdf_from_density(density_fn, hi)
    F = np.interp(samples, ys, cdf, left=0.0, right=cdf[-1])
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    return float(max(d_plus, d_minus))


# ---------------------------------------------------------------------------
# Binary path dump: little-endian header (n_paths u64, n_times u64,
# dt f64) followed by the path matrix row-major as float64.


def dump_ensemble(ensemble, path):
    with open(path, "wb") as fh:
        fh.write(
            struct.pack(
                "<QQd", ensemble.paths.shape[0], ensemble.paths.shape[1], ensemble.dt
            )
        )
        fh.write(np.ascontiguousarray(ensemble.paths, dtype="<f8").tobytes())


def read_ensemble_header(path):
    """(n_paths, n_times, dt) of a dump, plus the payload as an array."""
    with open(path, "rb") as fh:
        n_paths, n_times, dt = struct.unpack("<QQd", fh.read(24))
        data = np.frombuffer(fh.read(n_paths * n_times * 8), dtype="<f8")
    return n_paths, n_times, dt, data.reshape(n_paths, n_times)
