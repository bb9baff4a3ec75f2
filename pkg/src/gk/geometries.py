"""Builtin geometries and the name grammar used by the CLI.

Names::

    point[:N]            P^N as the bundle O^{N+1} over a point (N defaults to 1)
    Pn                   same as point:n (the projective space itself), n <= 4
    Pn:a0;a1;...         base P^n with V = O(a0) + O(a1) + ..., a0 = 0
    P1xP1:a,b;c,d;...    toric base P1 x P1, each summand given by its two twists
    F0, F1, F2           Hirzebruch surfaces, i.e. P1:0;a
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path

from .bundle import BaseVariety, GeometryError
from .hypergeometric import point_base, projective_base
from .toric import product_fan, projective_fan, toric_base

__all__ = ["BUILTIN_NAMES", "builtin_base", "load_base", "shipped_bases"]

MAX_PROJECTIVE = 4

ALIASES = {
    "F0": "P1:0;0",
    "F1": "P1:0;1",
    "F2": "P1:0;2",
}

# what the library ships; used by tests and `gk validate --builtin`
BUILTIN_NAMES = [
    "point", "point:2", "point:3",
    "P1", "P2", "P3", "P4",
    "F0", "F1", "F2",
    "P2:0;1", "P2:0;1;1",
    "P1xP1:0,0;1,0", "P1xP1:0,0;0,1", "P1xP1:0,0;1,1",
]


def _twists(spec: str, k: int, name: str) -> list[tuple[int, ...]]:
    rows = []
    for part in spec.split(";"):
        try:
            row = tuple(int(x) for x in part.split(","))
        except ValueError:
            raise GeometryError(f"{name}: bad twist {part!r}") from None
        if len(row) != k:
            raise GeometryError(f"{name}: twist {part!r} needs {k} entries")
        rows.append(row)
    if len(rows) < 2:
        raise GeometryError(f"{name}: need at least two summands")
    if any(rows[0]):
        raise GeometryError(f"{name}: the first summand must be trivial")
    return rows


def builtin_base(name: str) -> BaseVariety:
    key = ALIASES.get(name, name)
    head, _, tail = key.partition(":")
    if head == "point":
        n = 1
        if tail:
            if not tail.isdigit():
                raise GeometryError(f"{name}: point takes a fiber dimension, e.g. point:2")
            n = int(tail)
        return point_base(n)
    m = re.fullmatch(r"P(\d+)", head)
    if m:
        n = int(m.group(1))
        if not 1 <= n <= MAX_PROJECTIVE:
            raise GeometryError(f"{name}: only P1..P{MAX_PROJECTIVE} are built in")
        if not tail:
            return point_base(n)
        twists = [row[0] for row in _twists(tail, 1, name)]
        base = projective_base(n, twists)
        base.name = key
        return base
    if head == "P1xP1":
        if not tail:
            raise GeometryError(f"{name}: P1xP1 needs twists, e.g. P1xP1:0,0;1,0")
        fan = product_fan(projective_fan(1), projective_fan(1))
        # rays (1,0), (-1,0), (0,1), (0,-1); nef basis = fibre classes of the two projections
        return toric_base(key, fan, [[1, 0, 0, 0], [0, 0, 1, 0]], _twists(tail, 2, name))
    raise GeometryError(f"unknown builtin geometry {name!r}")


def load_base(spec: str) -> BaseVariety:
    """A builtin name or a path to a geometry JSON file."""
    path = Path(spec)
    if spec.endswith(".json") or os.sep in spec or path.is_file():
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise GeometryError(f"geometry file {spec!r} not found") from None
        except json.JSONDecodeError as exc:
            raise GeometryError(f"{spec}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
        if not isinstance(data, dict):
            raise GeometryError(f"{spec}: expected a JSON object")
        return BaseVariety.from_json(data)
    return builtin_base(spec)


def shipped_bases() -> dict[str, BaseVariety]:
    return {name: builtin_base(name) for name in BUILTIN_NAMES}
