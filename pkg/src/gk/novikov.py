"""Curve classes of a split Mori cone and truncated Novikov series."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping, Sequence

from .algebra import AlgebraMismatch, HLaurent

__all__ = [
    "CurveClass",
    "Box",
    "GradingData",
    "NovikovSeries",
    "NovikovError",
    "nov_mul",
    "class_degree",
]


class NovikovError(ValueError):
    pass


_CLASS_RE = re.compile(r"^\(\s*(-?\d+)\s*;\s*([-\d,\s]*)\)$")


@dataclass(frozen=True)
class CurveClass:
    """``nu`` times the fiber line plus the base class with dual-basis coordinates ``d``."""

    nu: int
    d: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if self.nu < 0 or any(x < 0 for x in self.d):
            raise NovikovError(f"curve class has a negative coordinate: {self}")

    @property
    def k(self) -> int:
        return len(self.d)

    def is_zero(self) -> bool:
        return self.nu == 0 and not any(self.d)

    def key(self) -> tuple[int, ...]:
        return (self.nu,) + self.d

    def __le__(self, other: CurveClass) -> bool:
        # componentwise partial order
        return self.nu <= other.nu and all(a <= b for a, b in zip(self.d, other.d))

    def __add__(self, other: CurveClass) -> CurveClass:
        if self.k != other.k:
            raise NovikovError("curve classes of different rank")
        return CurveClass(self.nu + other.nu, tuple(a + b for a, b in zip(self.d, other.d)))

    def __sub__(self, other: CurveClass) -> CurveClass:
        if not other <= self:
            raise NovikovError(f"{other} is not <= {self}")
        return CurveClass(self.nu - other.nu, tuple(a - b for a, b in zip(self.d, other.d)))

    def base(self) -> CurveClass:
        return CurveClass(0, self.d)

    def __str__(self) -> str:
        return f"({self.nu}; {','.join(str(x) for x in self.d)})"

    @classmethod
    def parse(cls, text: str) -> CurveClass:
        m = _CLASS_RE.match(text.strip())
        if not m:
            raise NovikovError(f"cannot parse curve class {text!r}")
        ds = [x for x in m.group(2).replace(" ", "").split(",") if x != ""]
        return cls(int(m.group(1)), tuple(int(x) for x in ds))

    @classmethod
    def zero(cls, k: int) -> CurveClass:
        return cls(0, (0,) * k)


@dataclass(frozen=True)
class Box:
    """Truncation ``nu <= nu_max`` and ``d_j <= d_max[j]``."""

    nu_max: int
    d_max: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "d_max", tuple(int(x) for x in self.d_max))

    @property
    def k(self) -> int:
        return len(self.d_max)

    def __contains__(self, c: CurveClass) -> bool:
        return c.k == self.k and c.nu <= self.nu_max and all(a <= b for a, b in zip(c.d, self.d_max))

    def classes(self) -> Iterator[CurveClass]:
        ranges = [range(self.nu_max + 1)] + [range(m + 1) for m in self.d_max]
        for t in product(*ranges):
            yield CurveClass(t[0], t[1:])

    def size(self) -> int:
        out = self.nu_max + 1
        for m in self.d_max:
            out *= m + 1
        return out

    @classmethod
    def parse(cls, spec, k: int) -> Box:
        """``3`` or ``"3,2"`` or ``[3, 2, 2]``; a single base bound is broadcast over k."""
        if isinstance(spec, Box):
            return spec
        if isinstance(spec, int):
            vals = [spec]
        elif isinstance(spec, str):
            vals = [int(x) for x in spec.replace("(", "").replace(")", "").split(",") if x.strip()]
        else:
            vals = [int(x) for x in spec]
        if not vals or any(v < 0 for v in vals):
            raise NovikovError(f"bad truncation box {spec!r}")
        nu, rest = vals[0], vals[1:]
        if not rest:
            rest = [nu] * k
        elif len(rest) == 1 and k != 1:
            rest = rest * k
        if len(rest) != k:
            raise NovikovError(f"box {spec!r} does not match base Picard rank {k}")
        return cls(nu, tuple(rest))

    def __str__(self) -> str:
        return "(" + ",".join(str(x) for x in (self.nu_max,) + self.d_max) + ")"


@dataclass(frozen=True)
class GradingData:
    """Numerical data of the bundle: ``n`` and pairings with the dual basis."""

    n: int
    kx_pairings: tuple[int, ...]
    v_pairings: tuple[tuple[int, ...], ...]  # rows i = 0..n, columns j = 1..k

    def __post_init__(self):
        object.__setattr__(self, "kx_pairings", tuple(int(x) for x in self.kx_pairings))
        object.__setattr__(self, "v_pairings", tuple(tuple(int(x) for x in r) for r in self.v_pairings))
        if len(self.v_pairings) != self.n + 1:
            raise NovikovError("need one pairing row per line bundle L_0..L_n")
        if any(len(r) != self.k for r in self.v_pairings):
            raise NovikovError("pairing rows must have k entries")
        if any(self.v_pairings[0]):
            raise NovikovError("L_0 must be trivial")

    @property
    def k(self) -> int:
        return len(self.kx_pairings)

    def v(self, i: int, c: CurveClass) -> int:
        return sum(a * b for a, b in zip(self.v_pairings[i], c.d))

    def c1v(self, c: CurveClass) -> int:
        return sum(self.v(i, c) for i in range(self.n + 1))

    def kx(self, c: CurveClass) -> int:
        return sum(a * b for a, b in zip(self.kx_pairings, c.d))

    def base_degree(self, c: CurveClass) -> int:
        """``beta . (-K_X - c_1(V))``."""
        return -self.kx(c) - self.c1v(c)

    def compliance(self, box: Box) -> list[str]:
        """Numerical shadows of the nef/ample hypotheses on the retained classes."""
        problems = []
        for c in box.classes():
            if c.is_zero():
                continue
            for i in range(1, self.n + 1):
                if self.v(i, c) < 0:
                    problems.append(f"L_{i} . {c} = {self.v(i, c)} < 0 (not nef)")
            if any(c.d) and self.base_degree(c) <= 0:
                problems.append(f"(-K_X - c1(V)) . {c} = {self.base_degree(c)} <= 0 (not ample)")
        return problems


def class_degree(c: CurveClass, g: GradingData) -> int:
    """Degree of ``q1^nu q2^beta``: ``(n+1) nu + beta.(-K_X - c_1(V))``."""
    if c.k != g.k:
        raise NovikovError("curve class and grading data have different rank")
    return (g.n + 1) * c.nu + g.base_degree(c)


class NovikovSeries:
    """Finite map from curve classes in a box to hbar-Laurent coefficients."""

    def __init__(self, ring, box: Box, coeffs: Mapping[CurveClass, HLaurent] | None = None):
        self.ring = ring
        self.box = box
        clean: dict[CurveClass, HLaurent] = {}
        for c, v in (coeffs or {}).items():
            if c not in box:
                raise NovikovError(f"class {c} lies outside the truncation box {box}")
            if v.ring is not ring:
                raise AlgebraMismatch()
            if not v.is_zero():
                clean[c] = v
        self.coeffs = dict(sorted(clean.items(), key=lambda kv: kv[0].key()))

    @classmethod
    def one(cls, ring, box: Box) -> NovikovSeries:
        return cls(ring, box, {CurveClass.zero(box.k): HLaurent.one(ring)})

    def __getitem__(self, c: CurveClass) -> HLaurent:
        return self.coeffs.get(c, HLaurent(self.ring))

    def items(self):
        return self.coeffs.items()

    def _compatible(self, other: NovikovSeries) -> None:
        if self.box != other.box:
            raise NovikovError(f"truncation box mismatch: {self.box} vs {other.box}")
        if self.ring is not other.ring:
            raise AlgebraMismatch()

    def __add__(self, other: NovikovSeries) -> NovikovSeries:
        self._compatible(other)
        out = dict(self.coeffs)
        for c, v in other.coeffs.items():
            out[c] = out[c] + v if c in out else v
        return NovikovSeries(self.ring, self.box, out)

    def __neg__(self) -> NovikovSeries:
        return NovikovSeries(self.ring, self.box, {c: -v for c, v in self.coeffs.items()})

    def __sub__(self, other: NovikovSeries) -> NovikovSeries:
        return self + (-other)

    def __mul__(self, other: NovikovSeries) -> NovikovSeries:
        return nov_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, NovikovSeries):
            return NotImplemented
        return self.box == other.box and self.ring is other.ring and self.coeffs == other.coeffs

    def map_coefficients(self, f, ring=None) -> NovikovSeries:
        ring = self.ring if ring is None else ring
        return NovikovSeries(ring, self.box, {c: f(c, v) for c, v in self.coeffs.items()})

    def to_json(self) -> dict:
        return {str(c): v.to_json() for c, v in self.coeffs.items()}

    @classmethod
    def from_json(cls, ring, box: Box, data: Mapping) -> NovikovSeries:
        return cls(ring, box, {CurveClass.parse(k): HLaurent.from_json(ring, v) for k, v in data.items()})


def nov_mul(a: NovikovSeries, b: NovikovSeries) -> NovikovSeries:
    """Cauchy product, discarding classes that leave the box."""
    a._compatible(b)
    out: dict[CurveClass, HLaurent] = {}
    for ca, va in a.coeffs.items():
        for cb, vb in b.coeffs.items():
            c = ca + cb
            if c not in a.box:
                continue
            p = va * vb
            out[c] = out[c] + p if c in out else p
    return NovikovSeries(a.ring, a.box, out)
