"""Self-describing on-disk artifacts for assembled solutions.

A solution artifact is a single ``.npz`` holding a JSON header (schema
version, reconstructible coefficient description, quadrature and
series settings, cache directory) plus the numeric series grids of
every exported point cache. Loading refuses any schema version other
than the one written by this module, with a clear message. A load
followed by evaluation reproduces in-memory values bit for bit: the
stored grids are exact float64 snapshots and every downstream step is
deterministic.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .coeff import get_field
from .config import expression_field
from .errors import ArtifactError
from .parametrix import (
    FundamentalSolutionApprox,
    QuadratureSpec,
    SeriesControl,
    SpaceRule,
    TimeRule,
    assemble_fs,
)

__all__ = ["SCHEMA_VERSION", "save_solution", "load_solution", "atomic_write_bytes"]

SCHEMA_VERSION = 1


def atomic_write_bytes(path, payload):
    """Write bytes so the final path never holds a partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _field_to_spec(field_spec):
    if not isinstance(field_spec, dict) or not field_spec:
        raise ArtifactError(
            "save_solution needs a reconstructible field description "
            "(catalog name or expression data)"
        )
    if "name" not in field_spec and "expression" not in field_spec:
        raise ArtifactError("field description needs a 'name' or an 'expression'")
    return dict(field_spec)


def _field_from_spec(spec):
    if "name" in spec:
        params = {k: v for k, v in spec.items() if k != "name"}
        return get_field(spec["name"], **params)
    fld, _canon = expression_field(
        spec["expression"],
        H=spec["H"],
        alpha=spec.get("alpha", 1.0),
        beta=spec["beta"],
        beta_plus=spec["beta_plus"],
    )
    return fld


def save_solution(fs, path, field_spec):
    """Write the solution's point caches and settings to ``path``.

    ``field_spec`` must describe the coefficient reconstructibly: either
    ``{"name": ..., **params}`` for a catalog field or ``{"expression",
    "H", "alpha", "beta", "beta_plus"}`` for an expression field.
    """
    if not isinstance(fs, FundamentalSolutionApprox):
        raise ArtifactError("save_solution expects an assembled solution")
    spec = _field_to_spec(field_spec)
    caches = fs.export_caches()
    header = {
        "version": SCHEMA_VERSION,
        "field": spec,
        "quad": {
            "space_nodes": fs.quad.space_rule.nodes,
            "space_cutoff": fs.quad.space_rule.domain_cutoff_sigmas,
            "time_nodes": fs.quad.time_rule.nodes,
            "tol": fs.quad.tol,
        },
        "series": {
            "max_terms": fs.ctrl.max_terms,
            "term_tol": fs.ctrl.term_tol,
        },
        "caches": [
            {
                "s": entry["s"],
                "y": entry["y"],
                **{
                    k: entry["state"][k]
                    for k in (
                        "tau",
                        "horizon",
                        "xi",
                        "sigma0",
                        "is_zero",
                        "cal_fit",
                        "pbar",
                        "terms_used",
                        "tail_estimate",
                    )
                },
            }
            for entry in caches
        ],
    }
    arrays = {"header": np.asarray(json.dumps(header, sort_keys=True))}
    for i, entry in enumerate(caches):
        st = entry["state"]
        arrays[f"cache{i}_theta"] = st["theta"]
        arrays[f"cache{i}_zeta"] = st["zeta"]
        arrays[f"cache{i}_sigmas"] = st["sigmas"]
        arrays[f"cache{i}_values"] = st["values"]
    import io

    buf = io.BytesIO()
    np.savez(buf, **arrays)
    atomic_write_bytes(path, buf.getvalue())


def load_solution(path):
    """Rebuild an assembled solution from a saved artifact."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ArtifactError(f"artifact not found: {path}")
    try:
        data = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise ArtifactError(f"unreadable artifact {path}: {exc}") from exc
    with data:
        if "header" not in data:
            raise ArtifactError(f"artifact {path} has no header")
        header = json.loads(str(data["header"][()]))
        version = header.get("version")
        if version != SCHEMA_VERSION:
            raise ArtifactError(
                f"artifact schema version {version!r} is not supported; "
                f"this build reads version {SCHEMA_VERSION}"
            )
        fld = _field_from_spec(header["field"])
        q = header["quad"]
        quad = QuadratureSpec(
            space_rule=SpaceRule(
                nodes=q["space_nodes"], domain_cutoff_sigmas=q["space_cutoff"]
            ),
            time_rule=TimeRule(nodes=q["time_nodes"]),
            tol=q["tol"],
        )
        ctrl = SeriesControl(**header["series"])
        fs = assemble_fs(fld, quad=quad, ctrl=ctrl)
        for i, meta in enumerate(header["caches"]):
            state = {
                "tau": meta["tau"],
                "horizon": meta["horizon"],
                "xi": meta["xi"],
                "sigma0": meta["sigma0"],
                "is_zero": meta["is_zero"],
                "cal_fit": meta["cal_fit"],
                "pbar": meta["pbar"],
                "terms_used": meta["terms_used"],
                "tail_estimate": meta["tail_estimate"],
                "theta": data[f"cache{i}_theta"],
                "zeta": data[f"cache{i}_zeta"],
                "sigmas": data[f"cache{i}_sigmas"],
                "values": data[f"cache{i}_values"],
            }
            fs.install_cache(meta["s"], meta["y"], state)
    return fs
