"""Run configuration: a line-based ``key = value`` format with ``[section]`` headers.

Keys before the first header belong to the top-level section.  ``#`` starts
a comment (whole line, or after whitespace).  Every key has a default;
``parse_config`` returns a ``RunConfig`` with all of them filled in.

Example::

    family = monge
    tolerance = 1e-7

    [grid]
    x = 0.5:1.5:11
    y = -0.4:0.4:11
    z = 0:1:11

    [monge]
    F = u
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .errors import ParseError, RangeError, UnknownKey
from .numcore import Grid3, StencilConfig

__all__ = ["RunConfig", "parse_config", "parse_grid", "SCHEMA", "FAMILIES"]

FAMILIES = ("monge", "ward", "firstterm", "secondstep", "recurrence", "custom")


def _enum(*allowed):
    def conv(v):
        if v not in allowed:
            raise RangeError(f"{v!r} not in {{{', '.join(allowed)}}}")
        return v

    return conv


def _float(lo=None, hi=None, positive=False):
    def conv(v):
        try:
            x = float(v)
        except ValueError:
            raise RangeError(f"{v!r} is not a number") from None
        if x != x or x in (float("inf"), float("-inf")):
            raise RangeError(f"{v!r} is not finite")
        if positive and not x > 0:
            raise RangeError(f"{v} must be > 0")
        if lo is not None and x < lo or hi is not None and x > hi:
            raise RangeError(f"{v} outside [{lo}, {hi}]")
        return x

    return conv


def _int(lo=None, hi=None, allowed=None):
    def conv(v):
        try:
            x = int(v)
        except ValueError:
            raise RangeError(f"{v!r} is not an integer") from None
        if allowed is not None and x not in allowed:
            raise RangeError(f"{x} not in {sorted(allowed)}")
        if lo is not None and x < lo or hi is not None and x > hi:
            raise RangeError(f"{x} outside [{lo}, {hi}]")
        return x

    return conv


def _floats(min_len=0):
    def conv(v):
        parts = [p for p in re.split(r"[,\s]+", v.strip()) if p]
        out = [_float()(p) for p in parts]
        if len(out) < min_len:
            raise RangeError(f"need at least {min_len} values, got {len(out)}")
        return tuple(out)

    return conv


def _axis(v):
    parts = v.split(":")
    if len(parts) != 3:
        raise RangeError(f"axis spec {v!r} must be lo:hi:count")
    lo, hi = _float()(parts[0]), _float()(parts[1])
    n = _int(lo=5)(parts[2])
    if not hi > lo:
        raise RangeError(f"axis spec {v!r} needs hi > lo")
    return (lo, hi, n)


def _bool(v):
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise RangeError(f"{v!r} is not a boolean")


def _str(v):
    return v


# section -> key -> (converter, default text)
SCHEMA: dict[str, dict[str, tuple[Callable, str]]] = {
    "": {
        "family": (_enum(*FAMILIES), "monge"),
        "tolerance": (_float(positive=True), "1e-6"),
        "linearization": (_bool, "false"),
    },
    "grid": {
        "x": (_axis, "0.5:1.5:11"),
        "y": (_axis, "-0.4:0.4:11"),
        "z": (_axis, "0:1:11"),
    },
    "stencil": {
        "h": (_float(positive=True), "1e-3"),
        "order": (_int(allowed={2, 4}), "4"),
        "richardson": (_int(lo=0, hi=3), "0"),
    },
    "output": {
        "path": (_str, ""),
        "format": (_enum("json", "csv"), "json"),
    },
    "monge": {
        "F": (_enum("u", "u^2", "exp(u)", "linear"), "u"),
        "c0": (_float(), "0"),
        "c1": (_float(), "1"),
        "variant": (_enum("A", "B"), "A"),
        "bracket_lo": (_float(), "1e-6"),
        "bracket_hi": (_float(), "1e3"),
    },
    "ward": {
        "A": (_float(), "1"),
        "B": (_float(), "0.5"),
        "u0": (_float(positive=True), "1"),
        "modes": (_str, "0:1:1:1; 0.5:0.05:1:0"),
        "sigma": (_enum("modal", "path"), "modal"),
        "u_min": (_float(positive=True), "0.2"),
        "u_max": (_float(positive=True), "5"),
    },
    "firstterm": {
        "s": (_enum("-1", "1", "+1"), "-1"),
        "reading": (_enum("printed", "rederived"), "printed"),
        "WL": (_str, ""),
    },
    "secondstep": {
        "measure": (_enum("characteristic", "box"), "characteristic"),
        "F": (_enum("characteristic", "printed", "rederived"), "characteristic"),
        "m": (_float(positive=True), "1"),
        "t_max": (_float(positive=True), "12"),
        "panels": (_int(lo=1), "12"),
        "nodes_per_panel": (_int(lo=2, hi=64), "16"),
        "k_range": (_floats(2), "0.5, 2"),
        "p_range": (_floats(2), "0.5, 2"),
        "box_nodes": (_int(lo=1, hi=64), "8"),
        "f": (_floats(0), ""),
        "a0": (_float(), "0.2"),
        "b0": (_float(), "0.3"),
        "c0": (_float(), "0.1"),
    },
    "custom": {
        "field": (_enum("linear_fraction", "liouville"), "linear_fraction"),
        "a0": (_float(), "0"),
        "a1": (_float(), "1"),
        "a3": (_float(), "1"),
        "a4": (_float(), "-1"),
        "a5": (_float(), "1"),
        "c": (_float(positive=True), "1"),
    },
    "recurrence": {
        "source": (_enum("custom", "monge", "firstterm", "ward", "secondstep"), "custom"),
        "n_top": (_int(lo=0, hi=8), "1"),
        "gauge": (_enum("zero", "gamma"), "zero"),
        "safety": (_float(positive=True), "4"),
    },
    "sweep": {
        "mode": (_enum("fd", "discrete"), "fd"),
        "steps": (_floats(0), "0.04, 0.02, 0.01"),
        "eps": (_floats(0), "0.1, 0.05, 0.025"),
        "expected": (_float(lo=0), "0"),
        "band": (_float(lo=0), "0"),
        "exact_floor": (_float(positive=True), "1e-9"),
    },
}


@dataclass
class RunConfig:
    family: str
    tolerance: float
    grid: Grid3
    stencil: StencilConfig
    output_path: str
    output_format: str
    sections: dict = field(default_factory=dict)
    linearization: bool = False

    def section(self, name: str) -> dict:
        return self.sections[name]


def parse_grid(text: str) -> Grid3:
    """``"x0:x1:nx,y0:y1:ny,z0:z1:nz"`` to a grid (counts >= 5)."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise RangeError(f"grid {text!r} needs three comma-separated axes")
    return Grid3.from_bounds([_axis(p) for p in parts])


_HEADER = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_KEYVAL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    m = re.search(r"\s#", line)
    return line[: m.start()] if m else line


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; unknown keys are errors."""
    raw: dict[str, dict[str, tuple[str, int]]] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        m = _HEADER.match(body)
        if m:
            section = m.group(1)
            if section not in SCHEMA or section == "":
                raise UnknownKey(f"line {lineno}: unknown section [{section}]")
            continue
        m = _KEYVAL.match(body)
        if not m:
            raise ParseError(f"expected 'key = value', got {body!r}", (lineno,))
        key, value = m.group(1), m.group(2).strip()
        if key not in SCHEMA[section]:
            where = f"[{section}]" if section else "top level"
            raise UnknownKey(f"line {lineno}: unknown key {key!r} in {where}")
        seen = raw.setdefault(section, {})
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", (seen[key][1], lineno))
        seen[key] = (value, lineno)

    sections: dict[str, dict] = {}
    for sec, keys in SCHEMA.items():
        vals = {}
        for key, (conv, default) in keys.items():
            text_value, lineno = raw.get(sec, {}).get(key, (default, 0))
            try:
                vals[key] = conv(text_value)
            except RangeError as exc:
                where = f"line {lineno}: " if lineno else ""
                raise RangeError(f"{where}{sec + '.' if sec else ''}{key}: {exc}") from None
        sections[sec] = vals

    stencil = sections["stencil"]
    top = sections[""]
    return RunConfig(
        family=top["family"],
        tolerance=top["tolerance"],
        grid=Grid3.from_bounds([sections["grid"][a] for a in "xyz"]),
        stencil=StencilConfig(stencil["h"], stencil["order"], stencil["richardson"]),
        output_path=sections["output"]["path"],
        output_format=sections["output"]["format"],
        sections=sections,
        linearization=top["linearization"],
    )
