"""Command-line entry point.

Subcommands
-----------
- ``specfun eval``   evaluate one special function at a point
- ``kernel eval``    closed-form transition density at one argument
- ``kernel table``   CSV table of the density over an end-point list
- ``fs build``       assemble series caches and save a solution artifact
- ``fs eval``        load an artifact and evaluate it (bit-reproducible)
- ``solve``          initial-value / forced problems on an eval grid
- ``simulate``       reflected Euler ensemble, summary CSV (+ raw dump)
- ``mc compare``     KS / per-bin z report of a simulation vs a density
- ``verify``         named residual batteries, JSON + CSV reports

Common flags: ``--config <path>`` (structured key-value file, see
``config.py``), ``--out <dir>`` (artifact directory, default ``.``),
``--seed <u64>`` (overrides the configured seed), ``--threads <n>``
(caps worker counts; all numerical kernels here run sequentially, so
any value reproduces the ``--threads 1`` results bit for bit), and
``--tol-profile <name>`` (``default`` | ``strict`` | ``quick``).

Exit codes
----------
- 0  success
- 2  configuration problem (bad flags, unparsable or invalid config)
- 3  missing input (config file or artifact not found)
- 4  invalid parameters or domain for the requested computation
- 5  series or quadrature failed to converge
- 6  verification battery reported a failure
- 7  unexpected internal error

All file outputs are written atomically (temp file + rename): an
interrupted run never leaves a partial file at the final path. CSV
uses RFC-4180-style quoting; JSON uses stable (sorted) key order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .artifact import atomic_write_bytes, load_solution, save_solution
from .cauchy import InitialData, SourceTerm, solve_homogeneous, solve_inhomogeneous
from .config import (
    TOL_PROFILES,
    evaluate_expression,
    parse_config,
    parse_expression,
)
from .errors import (
    ArtifactError,
    ConfigError,
    ConvergenceError,
    VBesselError,
)
from .kernels import bessel_kernel, reflected_bm_kernel
from .montecarlo import (
    SimConfig,
    dump_ensemble,
    empirical_density,
    ks_distance,
    simulate,
    subgaussian_norm,
)
from .parametrix import (
    QuadratureSpec,
    SeriesControl,
    SpaceRule,
    TimeRule,
    assemble_fs,
)
from .specfun import (
    bessel_i,
    bessel_i_deriv,
    bessel_i_scaled,
    g_alpha,
    gamma,
    log_gamma,
    mittag_leffler,
)
from .verify import run_battery

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_MISSING = 3
_EXIT_INVALID = 4
_EXIT_CONVERGENCE = 5
_EXIT_VERIFY_FAILED = 6
_EXIT_INTERNAL = 7


def _write_text(path, text):
    atomic_write_bytes(path, text.encode())


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _write_text(path, buf.getvalue())


def _write_json(path, payload):
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2, default=float) + "\n")


def _fmt(v):
    return format(float(v), ".17g")


def _load_config(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("this subcommand needs --config <file>")
        return None
    if not os.path.exists(args.config):
        raise ArtifactError(f"config file not found: {args.config}")
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        cfg.sections.setdefault("sim", {})["seed"] = args.seed
    if args.tol_profile is not None:
        cfg.sections.setdefault("tolerances", {})["profile"] = args.tol_profile
        if args.tol_profile not in TOL_PROFILES:
            raise ConfigError(
                f"unknown tolerance profile {args.tol_profile!r}; "
                f"known: {sorted(TOL_PROFILES)}"
            )
    return cfg


def _specs_from_config(cfg):
    """QuadratureSpec and SeriesControl from config + profile."""
    prof = TOL_PROFILES[cfg.resolved("tolerances").get("profile", "default")]
    q = cfg.resolved("quad")
    s = cfg.resolved("series")
    quad_tol = cfg.get("quad", "tol")
    term_tol = cfg.get("series", "term_tol")
    quad = QuadratureSpec(
        space_rule=SpaceRule(nodes=q["space_nodes"]),
        time_rule=TimeRule(nodes=q["time_nodes"]),
        tol=quad_tol if quad_tol is not None else prof["quad_tol"],
    )
    ctrl = SeriesControl(
        max_terms=s["max_terms"],
        term_tol=term_tol if term_tol is not None else prof["term_tol"],
    )
    return quad, ctrl


def _need_field(cfg):
    if cfg is None or cfg.field_obj is None:
        raise ConfigError("a [field] section is required for this subcommand")
    return cfg.field_obj


def _outdir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommand handlers


_SPECFUN = {
    "gamma": (("z",), lambda a: gamma(a["z"])),
    "log-gamma": (("z",), lambda a: log_gamma(a["z"])),
    "bessel-i": (("a", "z"), lambda a: bessel_i(a["a"], a["z"])),
    "bessel-i-scaled": (("a", "z"), lambda a: bessel_i_scaled(a["a"], a["z"])),
    "bessel-i-deriv": (("a", "z"), lambda a: bessel_i_deriv(a["a"], a["z"])),
    "mittag-leffler": (("ml_a", "ml_b", "z"), lambda a: mittag_leffler((a["ml_a"], a["ml_b"]), a["z"])),
    "g-alpha": (("alpha", "z"), lambda a: g_alpha(a["alpha"], a["z"])),
}


def _cmd_specfun_eval(args):
    if args.fn not in _SPECFUN:
        raise ConfigError(
            f"unknown function {args.fn!r}; known: {', '.join(sorted(_SPECFUN))}"
        )
    needed, fn = _SPECFUN[args.fn]
    vals = {}
    for name in needed:
        v = getattr(args, name)
        if v is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{args.fn} needs {flag}")
        vals[name] = v
    result = fn(vals)
    print(f"specfun {args.fn}: {_fmt(result)}")
    return _EXIT_OK


def _cmd_kernel_eval(args):
    v = bessel_kernel(args.a, args.t, args.x, args.s, args.y)
    print(f"kernel eval: a={args.a:g} (t,x,s,y)=({args.t:g},{args.x:g},{args.s:g},{args.y:g}) value={_fmt(v)}")
    return _EXIT_OK


def _cmd_kernel_table(args):
    cfg = _load_config(args)
    ev = cfg.resolved("eval")
    ys = ev.get("ys")
    if not ys:
        raise ConfigError("kernel table needs [eval] ys = y1, y2, ...")
    fld = _need_field(cfg)
    a_vals = np.asarray(fld.eval(ev["s"], np.asarray(ys, dtype=float)), dtype=float)
    rows = []
    for yv, av in zip(ys, np.atleast_1d(a_vals)):
        rows.append((_fmt(yv), _fmt(bessel_kernel(float(av), ev["t"], ev["x"], ev["s"], yv))))
    out = _outdir(args)
    path = os.path.join(out, "kernel_table.csv")
    _write_csv(path, ("y", "value"), rows)
    print(f"kernel table: {len(rows)} rows -> {path}")
    return _EXIT_OK


def _parse_sources(text):
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"bad [fs] sources entry {chunk!r}; expected 's, y'")
        out.append((float(parts[0]), float(parts[1])))
    if not out:
        raise ConfigError("[fs] sources lists no (s, y) pairs")
    return out


def _cmd_fs_build(args):
    cfg = _load_config(args)
    fld = _need_field(cfg)
    quad, ctrl = _specs_from_config(cfg)
    fssec = cfg.resolved("fs")
    if "sources" not in fssec:
        raise ConfigError("fs build needs [fs] sources = 's, y; s, y; ...'")
    sources = _parse_sources(fssec["sources"])
    horizon = fssec.get("horizon")
    fs = assemble_fs(fld, quad=quad, ctrl=ctrl)
    for (s, y) in sources:
        hz = horizon if horizon is not None else s + 1.0
        fs._cache_for(s, y, hz)
    out = _outdir(args)
    path = os.path.join(out, "fs_cache.npz")
    save_solution(fs, path, cfg.field_canonical)
    _write_json(
        os.path.join(out, "fs_build.json"),
        {
            "artifact": path,
            "caches": [{"s": s, "y": y} for (s, y) in sources],
            "terms_used": fs.terms_used,
            "tail_estimate": fs.tail_estimate,
        },
    )
    print(f"fs build: {len(sources)} cache(s) -> {path}")
    return _EXIT_OK


def _cmd_fs_eval(args):
    cfg = _load_config(args)
    if args.artifact is None:
        raise ConfigError("fs eval needs --artifact <path>")
    fs = load_solution(args.artifact)
    ev = cfg.resolved("eval")
    xs = ev.get("xs") or [ev["x"]]
    rows = []
    for xv in xs:
        val = fs.evaluate(ev["t"], xv, ev["s"], ev["y"])
        rows.append((_fmt(ev["t"]), _fmt(xv), _fmt(ev["s"]), _fmt(ev["y"]), _fmt(val)))
    out = _outdir(args)
    path = os.path.join(out, "fs_eval.csv")
    _write_csv(path, ("t", "x", "s", "y", "value"), rows)
    print(f"fs eval: {len(rows)} value(s) -> {path}")
    return _EXIT_OK


def _cmd_solve(args):
    cfg = _load_config(args)
    fld = _need_field(cfg)
    quad, ctrl = _specs_from_config(cfg)
    sol = cfg.resolved("solve")
    ev = cfg.resolved("eval")
    xs = ev.get("xs") or [ev["x"]]
    tree = parse_expression(sol["data"])

    def data_fn(y):
        return np.broadcast_to(
            np.asarray(evaluate_expression(tree, 0.0, y), dtype=float),
            np.shape(y),
        ).astype(float) if np.ndim(y) else float(evaluate_expression(tree, 0.0, y))

    fs = assemble_fs(fld, quad=quad, ctrl=ctrl)
    grid = [(ev["t"], xv) for xv in xs]
    if sol["mode"] == "homogeneous":
        u = solve_homogeneous(fs, InitialData(f=data_fn, Delta=sol["delta"]), sol["s"], grid)
    elif sol["mode"] == "inhomogeneous":
        u = solve_inhomogeneous(fs, SourceTerm(g=data_fn, Delta=sol["delta"]), sol["s"], grid)
    else:
        raise ConfigError(
            f"unknown [solve] mode {sol['mode']!r}; use homogeneous or inhomogeneous"
        )
    out = _outdir(args)
    path = os.path.join(out, "solution.csv")
    _write_csv(
        path,
        ("t", "x", "u"),
        [(_fmt(ev["t"]), _fmt(xv), _fmt(uv)) for xv, uv in zip(xs, np.atleast_1d(u))],
    )
    print(f"solve [{sol['mode']}]: {len(xs)} value(s) -> {path}")
    return _EXIT_OK


def _sim_config(cfg):
    fld = _need_field(cfg)
    sim = cfg.resolved("sim")
    return SimConfig(
        field=fld,
        x0=sim["x0"],
        t_start=sim["t_start"],
        t_end=sim["t_end"],
        dt=sim["dt"],
        n_paths=sim["n_paths"],
        seed=sim["seed"],
        record_stride=sim["record_stride"],
    )


def _cmd_simulate(args):
    cfg = _load_config(args)
    sc = _sim_config(cfg)
    ens = simulate(sc)
    out = _outdir(args)
    rows = []
    for j, tv in enumerate(ens.times):
        col = ens.paths[:, j]
        rows.append(
            (
                _fmt(tv),
                _fmt(np.mean(col)),
                _fmt(np.std(col)),
                _fmt(np.quantile(col, 0.05)),
                _fmt(np.quantile(col, 0.5)),
                _fmt(np.quantile(col, 0.95)),
            )
        )
    path = os.path.join(out, "ensemble_summary.csv")
    _write_csv(path, ("t", "mean", "std", "q05", "median", "q95"), rows)
    summary = {
        "n_paths": sc.n_paths,
        "n_recorded_times": len(ens.times),
        "dt": sc.dt,
        "seed": sc.seed,
        "scheme": ens.scheme,
        "final_subgaussian_norm": (
            subgaussian_norm(ens.paths[:, -1]) if sc.n_paths >= 1000 else None
        ),
    }
    _write_json(os.path.join(out, "sim_report.json"), summary)
    if cfg.resolved("sim").get("dump_paths"):
        dump = os.path.join(out, "paths.bin")
        dump_ensemble(ens, dump)
        print(f"simulate: raw dump -> {dump}")
    print(f"simulate: {sc.n_paths} path(s), {len(ens.times)} time(s) -> {path}")
    return _EXIT_OK


def _cmd_mc_compare(args):
    cfg = _load_config(args)
    sc = _sim_config(cfg)
    comp = cfg.resolved("compare")
    ens = simulate(sc)
    t_cmp = comp.get("t", sc.t_end)
    samples = ens.marginal(t_cmp)
    tau = t_cmp - sc.t_start
    ref = comp["reference"]
    if ref == "reflected-bm":
        density = lambda y: reflected_bm_kernel(tau + sc.t_start, sc.x0, sc.t_start, y)
    elif ref == "kernel":
        a = float(cfg.field_obj.eval(sc.t_start, sc.x0))
        density = lambda y: bessel_kernel(a, tau + sc.t_start, sc.x0, sc.t_start, y)
    elif ref == "artifact":
        if args.artifact is None:
            raise ConfigError("mc compare with reference=artifact needs --artifact")
        fs = load_solution(args.artifact)
        ys = np.linspace(1e-3, float(np.max(samples)) * 1.3 + 1.0, 160)
        dens = np.array([fs.evaluate(t_cmp, sc.x0, sc.t_start, yv) for yv in ys])
        density = lambda y: np.interp(y, ys, dens, left=float(dens[0]), right=0.0)
    else:
        raise ConfigError(
            f"unknown [compare] reference {ref!r}; use reflected-bm, kernel, or artifact"
        )
    y_hi = comp.get("y_hi") or float(np.max(samples)) * 1.5 + 1.0
    ks = ks_distance(samples, density, y_hi=y_hi)
    table = empirical_density(ens, t_cmp, bins=40)
    centers = table.centers
    widths = np.diff(table.edges)
    expected = np.asarray(density(centers), dtype=float)
    # Binomial z under the reference: compare observed bin counts with
    # expected counts, with the error bar taken from the reference mass.
    n = len(samples)
    p_exp = np.clip(expected * widths, 0.0, 1.0)
    k_obs = table.density * widths * n
    se_cnt = np.sqrt(np.maximum(n * p_exp * (1.0 - p_exp), 1.0))
    z = (k_obs - n * p_exp) / se_cnt
    report = {
        "reference": ref,
        "t": t_cmp,
        "n_paths": sc.n_paths,
        "ks_distance": float(ks),
        "zscore_max_abs": float(np.max(np.abs(z))),
        "zscore_frac_gt4": float(np.mean(np.abs(z) > 4.0)),
        "bin_width": float(widths[0]),
    }
    out = _outdir(args)
    _write_json(os.path.join(out, "mc_compare.json"), report)
    _write_csv(
        os.path.join(out, "mc_compare_bins.csv"),
        ("center", "empirical", "reference", "zscore"),
        [
            (_fmt(c), _fmt(d), _fmt(e), _fmt(zz))
            for c, d, e, zz in zip(centers, table.density, expected, z)
        ],
    )
    print(
        f"mc compare [{ref}]: KS={ks:.4f} max|z|={report['zscore_max_abs']:.2f} "
        f"-> {os.path.join(out, 'mc_compare.json')}"
    )
    return _EXIT_OK


def _verify_config_dict(cfg):
    if cfg is None:
        return {}
    conf = {}
    if cfg.field_canonical:
        conf["field"] = dict(cfg.field_canonical)
    if "quad" in cfg.sections:
        q = cfg.resolved("quad")
        conf["quad"] = {
            "space_rule": SpaceRule(nodes=q["space_nodes"]),
            "time_rule": TimeRule(nodes=q["time_nodes"]),
            "tol": q["tol"],
        }
    if "series" in cfg.sections:
        s = cfg.resolved("series")
        conf["series"] = {"max_terms": s["max_terms"], "term_tol": s["term_tol"]}
    return conf


def _cmd_verify(args):
    cfg = _load_config(args, required=False)
    names = args.battery or (cfg.resolved("verify").get("batteries", "all") if cfg else "all")
    if names != "all":
        names = [n.strip() for n in names.split(",") if n.strip()]
    reports = run_battery(names, _verify_config_dict(cfg))
    out = _outdir(args)
    payload = [
        {
            "check_name": r.check_name,
            "inputs_digest": r.inputs_digest,
            "residuals": r.residuals,
            "tolerances": r.tolerances,
            "passed": r.passed,
            "runtime_s": r.runtime_s,
        }
        for r in reports
    ]
    _write_json(os.path.join(out, "verify_report.json"), payload)
    for r in reports:
        _write_csv(
            os.path.join(out, f"residuals_{r.check_name}.csv"),
            ("residual", "value", "tolerance", "within"),
            [
                (k, _fmt(v), _fmt(r.tolerances[k]), str(abs(v) <= r.tolerances[k]).lower())
                for k, v in sorted(r.residuals.items())
            ],
        )
        status = "PASS" if r.passed else "FAIL"
        worst = max(r.residuals, key=lambda k: abs(r.residuals[k]) / max(r.tolerances[k], 1e-300))
        print(
            f"verify {r.check_name}: {status} "
            f"(worst {worst}={r.residuals[worst]:.3g} vs tol {r.tolerances[worst]:.3g}, "
            f"{r.runtime_s:.2f}s)"
        )
    print(json.dumps(payload, sort_keys=True, default=float))
    if not all(r.passed for r in reports):
        return _EXIT_VERIFY_FAILED
    return _EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_common(p):
    p.add_argument("--config", help="structured key-value config file")
    p.add_argument("--out", help="output directory (default: current)")
    p.add_argument("--seed", type=int, help="override the configured RNG seed")
    p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker-count cap; computation is sequential, so results are "
        "identical for any value",
    )
    p.add_argument("--tol-profile", choices=sorted(TOL_PROFILES), help="tolerance preset")
    p.add_argument("--artifact", help="existing solution artifact (.npz)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="vbessel",
        description="Transition densities, solvers, simulation, and checks "
        "for reflected one-dimensional diffusions with a position- and "
        "time-dependent coefficient.",
    )
    sub = ap.add_subparsers(dest="group", required=True)

    sp = sub.add_parser("specfun", help="special-function evaluation")
    spsub = sp.add_subparsers(dest="action", required=True)
    e = spsub.add_parser("eval", help="evaluate one function")
    e.add_argument("--fn", required=True, help=", ".join(sorted(_SPECFUN)))
    e.add_argument("--z", type=float)
    e.add_argument("--a", type=float)
    e.add_argument("--alpha", type=float)
    e.add_argument("--ml-a", dest="ml_a", type=float)
    e.add_argument("--ml-b", dest="ml_b", type=float)
    _add_common(e)
    e.set_defaults(handler=_cmd_specfun_eval)

    kp = sub.add_parser("kernel", help="closed-form density")
    ksub = kp.add_subparsers(dest="action", required=True)
    ke = ksub.add_parser("eval", help="single value")
    for flag, req in (("--a", True), ("--t", True), ("--x", True), ("--s", False), ("--y", True)):
        ke.add_argument(flag, type=float, required=req, default=0.0 if flag == "--s" else None)
    _add_common(ke)
    ke.set_defaults(handler=_cmd_kernel_eval)
    kt = ksub.add_parser("table", help="CSV over [eval] ys")
    _add_common(kt)
    kt.set_defaults(handler=_cmd_kernel_table)

    fp = sub.add_parser("fs", help="assembled solution artifacts")
    fsub = fp.add_subparsers(dest="action", required=True)
    fb = fsub.add_parser("build", help="build caches, save artifact")
    _add_common(fb)
    fb.set_defaults(handler=_cmd_fs_build)
    fe = fsub.add_parser("eval", help="evaluate a saved artifact")
    _add_common(fe)
    fe.set_defaults(handler=_cmd_fs_eval)

    so = sub.add_parser("solve", help="initial-value / forced problems")
    _add_common(so)
    so.set_defaults(handler=_cmd_solve)

    si = sub.add_parser("simulate", help="reflected Euler ensemble")
    _add_common(si)
    si.set_defaults(handler=_cmd_simulate)

    mc = sub.add_parser("mc", help="simulation-based comparisons")
    mcsub = mc.add_subparsers(dest="action", required=True)
    cm = mcsub.add_parser("compare", help="KS / z-score report vs a density")
    _add_common(cm)
    cm.set_defaults(handler=_cmd_mc_compare)

    ve = sub.add_parser("verify", help="residual batteries")
    ve.add_argument("--battery", help="comma-separated battery names, or 'all'")
    _add_common(ve)
    ve.set_defaults(handler=_cmd_verify)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except ArtifactError as exc:
        print(f"error (missing/unreadable input): {exc}", file=sys.stderr)
        return _EXIT_MISSING
    except ConvergenceError as exc:
        print(f"error (convergence): {exc}", file=sys.stderr)
        return _EXIT_CONVERGENCE
    except VBesselError as exc:
        print(f"error (invalid request): {exc}", file=sys.stderr)
        return _EXIT_INVALID
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
