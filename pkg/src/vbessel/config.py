"""Structured run configuration: strict parsing and canonical output.

The format is line-oriented: ``[section]`` headers, ``key = value``
pairs, ``#`` comments (full-line or trailing), blank lines ignored.
Values are scalars, comma-separated lists, or strings; unknown sections
and keys are errors, and every reported problem carries its line
number, key, and reason. ``parse_config -> serialize_config ->
parse_config`` is the identity on the canonical form.

Coefficient expressions use a deliberately small language — numbers,
the variables ``t`` and ``x``, constants ``pi`` and ``e``, the binary
operators ``+ - * /``, unary minus, parentheses, and the functions
``sin``, ``cos``, ``exp`` — enough for every catalog field while
remaining exhaustively testable. ``format_expression(parse_expression(
text))`` is canonical and parses back to the same tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from .coeff import CoefficientField, builtin_fields, get_field
from .errors import ConfigError

__all__ = [
    "RunConfig",
    "ConfigIssue",
    "parse_config",
    "serialize_config",
    "parse_expression",
    "format_expression",
    "evaluate_expression",
    "expression_field",
    "TOL_PROFILES",
]


# ---------------------------------------------------------------------------
# Expression mini-language


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[+\-*/()]))"
)

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ConfigError(f"unrecognized expression input at {rest[:12]!r}")
        if m.group("num") is not None:
            out.append(("num", float(m.group("num"))))
        elif m.group("name") is not None:
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
        pos = m.end()
    out.append(("end", None))
    return out


class _ExprParser:
    """Recursive descent over: sum -> term -> unary -> atom."""

    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ConfigError(f"expected {op!r} in expression, found {val!r}")

    def parse(self):
        node = self.sum()
        kind, val = self.peek()
        if kind != "end":
            raise ConfigError(f"trailing expression input at {val!r}")
        return node

    def sum(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.take()
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.take()
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.atom()

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if val in _FUNCS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return ("call", val, arg)
            if val in _CONSTS:
                return ("const", val)
            if val in ("t", "x"):
                return ("var", val)
            raise ConfigError(f"unknown name {val!r} in expression")
        if (kind, val) == ("op", "("):
            node = self.sum()
            self.expect_op(")")
            return node
        raise ConfigError(f"unexpected token {val!r} in expression")


def parse_expression(text):
    """Parse an expression string into its syntax tree."""
    if not text or not text.strip():
        raise ConfigError("empty expression")
    return _ExprParser(_tokenize(text)).parse()


def _format(node, parent_prec=0):
    kind = node[0]
    if kind == "num":
        v = node[1]
        out = repr(v)
        return out
    if kind == "const":
        return node[1]
    if kind == "var":
        return node[1]
    if kind == "call":
        return f"{node[1]}({_format(node[2], 0)})"
    if kind == "neg":
        inner = _format(node[1], 3)
        text = f"-{inner}"
        return f"({text})" if parent_prec >= 3 else text
    prec = 1 if kind in "+-" else 2
    left = _format(node[1], prec - 1)
    right = _format(node[2], prec)
    text = f"{left} {kind} {right}"
    return f"({text})" if parent_prec >= prec else text


def format_expression(node):
    """Canonical text for a parsed expression; reparses to the same tree."""
    return _format(node, 0)


def evaluate_expression(node, t, x):
    """Evaluate a parsed expression with numpy broadcasting over t, x."""
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "const":
        return _CONSTS[node[1]]
    if kind == "var":
        return np.asarray(t, dtype=float) if node[1] == "t" else np.asarray(
            x, dtype=float
        )
    if kind == "call":
        return _FUNCS[node[1]](evaluate_expression(node[2], t, x))
    if kind == "neg":
        return -evaluate_expression(node[1], t, x)
    a = evaluate_expression(node[1], t, x)
    b = evaluate_expression(node[2], t, x)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    return a / b


def expression_field(expression, H, alpha, beta, beta_plus, name="expr"):
    """Build a coefficient field from expression text and declared data."""
    tree = parse_expression(expression)
    canon = format_expression(tree)

    def ev(t, x, _tree=tree):
        return evaluate_expression(_tree, t, x)

    fld = CoefficientField(
        name=name, eval=ev, H=H, alpha=alpha, beta=beta, beta_plus=beta_plus
    )
    return fld, canon


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class ConfigIssue:
    line: int
    key: str
    reason: str

    def __str__(self):
        return f"line {self.line}, {self.key}: {self.reason}"


TOL_PROFILES = {
    "default": {"quad_tol": 5e-3, "term_tol": 1e-8},
    "strict": {"quad_tol": 1e-3, "term_tol": 1e-10},
    "quick": {"quad_tol": 1e-2, "term_tol": 1e-4},
}

# section -> key -> (type tag, default). Types: f float, i int, s str,
# fl float list, b bool.
_SCHEMA = {
    "field": {
        "name": ("s", None),
        "expression": ("s", None),
        "a": ("f", None),
        "H": ("f", None),
        "alpha": ("f", 1.0),
        "beta": ("f", None),
        "beta_plus": ("f", None),
    },
    "quad": {
        "space_nodes": ("i", 48),
        "time_nodes": ("i", 12),
        "tol": ("f", 5e-3),
    },
    "series": {
        "max_terms": ("i", 20),
        "term_tol": ("f", 1e-8),
    },
    "sim": {
        "x0": ("f", 1.0),
        "t_start": ("f", 0.0),
        "t_end": ("f", 1.0),
        "dt": ("f", 1e-3),
        "n_paths": ("i", 10000),
        "seed": ("i", 12345),
        "record_stride": ("i", 1),
        "dump_paths": ("b", False),
    },
    "eval": {
        "t": ("f", 1.0),
        "x": ("f", 1.0),
        "s": ("f", 0.0),
        "y": ("f", 1.0),
        "ys": ("fl", None),
        "xs": ("fl", None),
    },
    "fs": {
        "sources": ("s", None),
        "horizon": ("f", None),
    },
    "solve": {
        "mode": ("s", "homogeneous"),
        "data": ("s", "1"),
        "s": ("f", 0.0),
        "delta": ("f", 0.5),
    },
    "compare": {
        "reference": ("s", "reflected-bm"),
        "t": ("f", 1.0),
        "y_hi": ("f", None),
    },
    "tolerances": {
        "profile": ("s", "default"),
    },
    "verify": {
        "batteries": ("s", "all"),
    },
}

_SEED_MAX = 2**64


@dataclass
class RunConfig:
    """Validated configuration: per-section dictionaries plus the field."""

    sections: dict = dc_field(default_factory=dict)
    field_obj: CoefficientField = None
    field_canonical: dict = dc_field(default_factory=dict)

    def section(self, name):
        return self.sections.get(name, {})

    def get(self, section, key):
        return self.sections.get(section, {}).get(key)

    def resolved(self, name):
        """Section content overlaid on the documented defaults."""
        out = {
            key: default
            for key, (_kind, default) in _SCHEMA.get(name, {}).items()
            if default is not None
        }
        out.update(self.sections.get(name, {}))
        return out


def _parse_scalar(kind, raw, line, key, issues):
    try:
        if kind == "f":
            return float(raw)
        if kind == "i":
            if not re.fullmatch(r"[+-]?\d+", raw):
                raise ValueError("not an integer")
            return int(raw)
        if kind == "b":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError("not a boolean")
        if kind == "fl":
            return [float(tok.strip()) for tok in raw.split(",") if tok.strip()]
        return raw
    except ValueError as exc:
        issues.append(ConfigIssue(line, key, f"bad value {raw!r}: {exc}"))
        return None


def _strip_comment(line):
    out = []
    for ch in line:
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _build_field(fieldsec, issues):
    name = fieldsec.get("name")
    expr = fieldsec.get("expression")
    if name and expr:
        issues.append(
            ConfigIssue(0, "field.name", "give either name or expression, not both")
        )
        return None, {}
    if not name and not expr:
        issues.append(ConfigIssue(0, "field.name", "a field name or expression is required"))
        return None, {}
    try:
        if name:
            params = {}
            if name == "CONST" and fieldsec.get("a") is not None:
                params["a"] = fieldsec["a"]
            fld = get_field(name, **params)
            canon = {"name": name, **params}
            return fld, canon
        declared = {k: fieldsec.get(k) for k in ("H", "beta", "beta_plus")}
        missing = [k for k, v in declared.items() if v is None]
        if missing:
            issues.append(
                ConfigIssue(
                    0,
                    "field.expression",
                    f"expression fields must declare {', '.join(missing)}",
                )
            )
            return None, {}
        fld, canon_expr = expression_field(
            expr,
            H=fieldsec["H"],
            alpha=fieldsec.get("alpha", 1.0),
            beta=fieldsec["beta"],
            beta_plus=fieldsec["beta_plus"],
        )
        canon = {
            "expression": canon_expr,
            "H": fieldsec["H"],
            "alpha": fieldsec.get("alpha", 1.0),
            "beta": fieldsec["beta"],
            "beta_plus": fieldsec["beta_plus"],
        }
        return fld, canon
    except Exception as exc:
        issues.append(ConfigIssue(0, "field", str(exc)))
        return None, {}


def parse_config(text):
    """Parse and validate configuration text into a RunConfig.

    Raises ConfigError carrying a list of ConfigIssue(line, key, reason)
    when anything is wrong; the error message enumerates all of them.
    """
    issues = []
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SCHEMA:
                issues.append(
                    ConfigIssue(lineno, current, "unknown section")
                )
                current = None
            else:
                sections.setdefault(current, {})
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, line[:20], "expected key = value"))
            continue
        key, _, rawval = line.partition("=")
        key = key.strip()
        rawval = rawval.strip()
        if current is None:
            issues.append(ConfigIssue(lineno, key, "key outside any known section"))
            continue
        schema = _SCHEMA[current]
        if key not in schema:
            issues.append(
                ConfigIssue(lineno, f"{current}.{key}", "unknown key (strict mode)")
            )
            continue
        kind, _default = schema[key]
        val = _parse_scalar(kind, rawval, lineno, f"{current}.{key}", issues)
        if val is not None:
            sections[current][key] = val

    # Fill defaults for sections that appeared.
    for sec, content in sections.items():
        for key, (kind, default) in _SCHEMA[sec].items():
            if key not in content and default is not None:
                content[key] = default

    # Semantic validation.
    fld, canon = (None, {})
    if "field" in sections and not issues:
        fld, canon = _build_field(sections["field"], issues)
        if fld is not None and "expression" in canon:
            sections["field"]["expression"] = canon["expression"]
    if "quad" in sections and not issues:
        q = sections["quad"]
        if q["tol"] <= 0 or q["tol"] > 1e-2:
            issues.append(
                ConfigIssue(0, "quad.tol", "must lie in (0, 1e-2]")
            )
    if "sim" in sections and not issues:
        s = sections["sim"]
        if not 0 <= s["seed"] < _SEED_MAX:
            issues.append(ConfigIssue(0, "sim.seed", "seed must fit in 64 bits"))
        if s["dt"] <= 0:
            issues.append(ConfigIssue(0, "sim.dt", "dt must be positive"))
        if s["n_paths"] < 1:
            issues.append(ConfigIssue(0, "sim.n_paths", "need at least one path"))
    if "tolerances" in sections and not issues:
        prof = sections["tolerances"]["profile"]
        if prof not in TOL_PROFILES:
            issues.append(
                ConfigIssue(
                    0,
                    "tolerances.profile",
                    f"unknown profile {prof!r}; known: {sorted(TOL_PROFILES)}",
                )
            )
    if issues:
        msg = "; ".join(str(i) for i in issues)
        err = ConfigError(f"invalid configuration: {msg}")
        err.issues = issues
        raise err
    cfg = RunConfig(sections=sections, field_obj=fld, field_canonical=canon)
    return cfg


def _format_value(kind, value):
    if kind == "fl":
        return ", ".join(_format_value("f", v) for v in value)
    if kind == "f":
        return repr(float(value))
    if kind == "b":
        return "true" if value else "false"
    return str(value)


def serialize_config(cfg):
    """Canonical text for a RunConfig; parses back to the same content."""
    lines = []
    for sec in _SCHEMA:
        if sec not in cfg.sections:
            continue
        content = cfg.sections[sec]
        lines.append(f"[{sec}]")
        for key in _SCHEMA[sec]:
            if key in content:
                kind, _ = _SCHEMA[sec][key]
                lines.append(f"{key} = {_format_value(kind, content[key])}")
        lines.append("")
    return "\n".join(lines)


def field_catalog_names():
    """Names accepted for [field] name, for error messages and docs."""
    return sorted(builtin_fields())
