"""Smooth complete fans, their cohomology rings, and the fan of P(V) over a toric base.

This is the second, independent route to the bundle series: the hypergeometric
coefficient of the lifted fan is computed in its own Stanley-Reisner ring and
then transported to ``H*P(V)`` through the divisor correspondence
``F_0 -> z``, ``F_i -> z - c1(L_i)``, ``B_j -> pi^* D_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import Mapping, Sequence

from .algebra import AlgElement, HLaurent, StructAlgebra, rref, solve_rational
from .bundle import BaseVariety, BundleSpace, GeometryError
from .novikov import Box, CurveClass
from .report import Report

__all__ = [
    "FanError",
    "FanData",
    "LiftedFan",
    "SRAlgebra",
    "sr_cohomology",
    "lift_fan",
    "toric_i_coefficient",
    "check_toric_agreement",
    "projective_fan",
    "product_fan",
    "hirzebruch_fan",
    "is_ample",
    "toric_base",
    "divisor_coefficients",
    "lift_for_bundle",
    "RingMap",
    "lifted_degrees",
]


class FanError(GeometryError):
    pass


def _det(m: list[list[int]]) -> Fraction:
    n = len(m)
    a = [[Fraction(x) for x in row] for row in m]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


@dataclass(frozen=True)
class FanData:
    rank: int
    rays: tuple[tuple[int, ...], ...]
    max_cones: tuple[frozenset[int], ...]
    complete: bool = True

    def __post_init__(self):
        object.__setattr__(self, "rays", tuple(tuple(int(x) for x in r) for r in self.rays))
        object.__setattr__(self, "max_cones", tuple(frozenset(int(i) for i in c) for c in self.max_cones))
        self.validate()

    def validate(self) -> None:
        m = self.rank
        if any(len(r) != m for r in self.rays):
            raise FanError("ray of wrong length")
        for cone in self.max_cones:
            if any(not 0 <= i < len(self.rays) for i in cone):
                raise FanError(f"cone {sorted(cone)} references a missing ray")
            if len(cone) == m:
                if abs(_det([list(self.rays[i]) for i in sorted(cone)])) != 1:
                    raise FanError(f"cone {sorted(cone)} is not smooth")
            elif self.complete:
                raise FanError(f"cone {sorted(cone)} is not full-dimensional in a complete fan")
        if self.complete and m > 0:
            facets: dict[frozenset[int], int] = {}
            for cone in self.max_cones:
                for f in combinations(sorted(cone), m - 1):
                    facets[frozenset(f)] = facets.get(frozenset(f), 0) + 1
            bad = [sorted(f) for f, cnt in facets.items() if cnt != 2]
            if bad:
                raise FanError(f"facet {bad[0]} is not shared by exactly two maximal cones")

    @property
    def faces(self) -> set[frozenset[int]]:
        out = set()
        for cone in self.max_cones:
            for k in range(len(cone) + 1):
                for f in combinations(sorted(cone), k):
                    out.add(frozenset(f))
        return out

    def to_json(self) -> dict:
        return {"rank": self.rank, "rays": [list(r) for r in self.rays],
                "max_cones": [sorted(c) for c in self.max_cones]}

    @classmethod
    def from_json(cls, data: Mapping) -> FanData:
        try:
            return cls(int(data["rank"]), data["rays"], data["max_cones"], bool(data.get("complete", True)))
        except KeyError as exc:
            raise FanError(f"fan: missing field {exc.args[0]!r}") from exc


def projective_fan(n: int) -> FanData:
    rays = [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]
    rays.append(tuple(-1 for _ in range(n)))
    cones = [frozenset(set(range(n + 1)) - {i}) for i in range(n + 1)]
    return FanData(n, rays, cones)


def product_fan(a: FanData, b: FanData) -> FanData:
    rays = [r + (0,) * b.rank for r in a.rays] + [(0,) * a.rank + r for r in b.rays]
    off = len(a.rays)
    cones = [ca | frozenset(i + off for i in cb) for ca in a.max_cones for cb in b.max_cones]
    return FanData(a.rank + b.rank, rays, cones)


def hirzebruch_fan(a: int) -> FanData:
    """F_a with rays (1,0), (0,1), (-1,a), (0,-1)."""
    return FanData(2, [(1, 0), (0, 1), (-1, a), (0, -1)],
                   [{0, 1}, {1, 2}, {2, 3}, {3, 0}])


def is_ample(fan: FanData, coeffs: Sequence[int], strict: bool = True) -> bool:
    """Piecewise-linear strict convexity test for ``sum a_rho D_rho`` (nef if not strict)."""
    m = fan.rank
    for cone in fan.max_cones:
        idx = sorted(cone)
        cols = [[Fraction(fan.rays[i][k]) for i in idx] for k in range(m)]
        sol = solve_rational(cols, [-Fraction(coeffs[i]) for i in idx])
        if sol is None:
            return False
        for rho, ray in enumerate(fan.rays):
            if rho in cone:
                continue
            val = sum(s * x for s, x in zip(sol, ray))
            if (val <= -coeffs[rho]) if strict else (val < -coeffs[rho]):
                return False
    return True


# ---------------------------------------------------------------------------
# Stanley-Reisner cohomology


class SRAlgebra(StructAlgebra):
    """StructAlgebra with a monomial basis in the ray divisors."""

    fan: FanData
    monomials: list[tuple[int, ...]]
    _normal: dict

    def ray_class(self, rho: int) -> AlgElement:
        e = [0] * len(self.fan.rays)
        e[rho] = 1
        return self.monomial_class(tuple(e))

    def ray_classes(self) -> list[AlgElement]:
        return [self.ray_class(r) for r in range(len(self.fan.rays))]

    def monomial_class(self, mono: tuple[int, ...]) -> AlgElement:
        return self.element(self._normal_form(mono))

    def _normal_form(self, mono: tuple[int, ...]) -> dict[int, Fraction]:
        return self._normal(mono)


def _monomial_label(mono: tuple[int, ...]) -> str:
    parts = []
    for i, e in enumerate(mono):
        if e == 1:
            parts.append(f"D{i}")
        elif e > 1:
            parts.append(f"D{i}^{e}")
    return "*".join(parts) or "1"


def sr_cohomology(f: FanData) -> SRAlgebra:
    """``Q[D_rho] / (Stanley-Reisner ideal + linear relations)`` on a monomial basis.

    Each graded piece is reduced exactly: columns are the degree-d monomials
    supported on faces, rows are (linear form) x (degree d-1 monomial). Pivot
    monomials are eliminated, the free ones form the basis; monomials in later
    rays are eliminated first so the basis prefers early rays.
    """
    if not f.complete:
        raise FanError("cohomology needs a complete fan")
    r = len(f.rays)
    m = f.rank
    faces = f.faces

    def on_face(mono) -> bool:
        return frozenset(i for i, e in enumerate(mono) if e) in faces

    def monos(d):
        out = []
        for combo in combinations_with_replacement(range(r), d):
            e = [0] * r
            for i in combo:
                e[i] += 1
            t = tuple(e)
            if on_face(t):
                out.append(t)
        return out

    reductions: dict[tuple[int, ...], tuple[str, object]] = {}
    basis: list[tuple[int, ...]] = []
    degrees: list[int] = []
    by_degree: dict[int, list[tuple[int, ...]]] = {}
    prev: list[tuple[int, ...]] = []
    for d in range(m + 1):
        cols = sorted(monos(d), key=lambda t: tuple(reversed(t)), reverse=True)
        col_index = {t: i for i, t in enumerate(cols)}
        rows = []
        if d > 0:
            for k in range(m):
                for mu in prev:
                    row = [Fraction(0)] * len(cols)
                    for rho in range(r):
                        c = f.rays[rho][k]
                        if not c:
                            continue
                        t = list(mu)
                        t[rho] += 1
                        t = tuple(t)
                        if t in col_index:
                            row[col_index[t]] += c
                    if any(row):
                        rows.append(row)
        red, piv = rref(rows, len(cols)) if rows else ([], [])
        pivset = set(piv)
        free = [cols[i] for i in range(len(cols)) if i not in pivset]
        start = len(basis)
        for t in free:
            basis.append(t)
            degrees.append(d)
        free_pos = {t: start + i for i, t in enumerate(free)}
        for row, p in zip(red, piv):
            expr = {}
            for i, v in enumerate(row):
                if v and i != p:
                    expr[free_pos[cols[i]]] = -v
            reductions[cols[p]] = ("expr", expr)
        for t in free:
            reductions[t] = ("expr", {free_pos[t]: Fraction(1)})
        by_degree[d] = free
        prev = monos(d)
    if len(basis) != len(f.max_cones):
        raise FanError(f"cohomology has dimension {len(basis)} but the fan has {len(f.max_cones)} maximal cones")

    def normal(mono: tuple[int, ...]) -> dict[int, Fraction]:
        if sum(mono) > m or not on_face(mono):
            return {}
        return dict(reductions[mono][1])

    table = {}
    for i, a in enumerate(basis):
        for j in range(i, len(basis)):
            prod = tuple(x + y for x, y in zip(a, basis[j]))
            nf = normal(prod)
            if nf:
                table[(i, j)] = nf
    alg = SRAlgebra([_monomial_label(t) for t in basis], degrees, table, one_index=0, name="H*(toric)")
    alg.fan = f
    alg.monomials = basis
    alg._normal = normal
    return alg


def divisor_coefficients(alg: SRAlgebra, x: AlgElement) -> list[int]:
    """Integral ``a_rho`` with ``x = sum a_rho D_rho``, supported off one maximal cone."""
    f = alg.fan
    cone = f.max_cones[0]
    others = [rho for rho in range(len(f.rays)) if rho not in cone]
    sol = solve_rational([alg.ray_class(rho).coords for rho in others], x.coords)
    if sol is None or any(s.denominator != 1 for s in sol):
        raise FanError(f"class {x!r} is not an integral divisor class")
    out = [0] * len(f.rays)
    for rho, s in zip(others, sol):
        out[rho] = int(s)
    return out


def toric_base(name: str, fan: FanData, nef_rays: Sequence[Sequence[int]], twists: Sequence[Sequence[int]]) -> BaseVariety:
    """Toric base with nef basis given as ray-divisor combinations and ``c1(L_i) = sum_j twists[i][j] p_j``."""
    from .hypergeometric import BaseJData

    alg = sr_cohomology(fan)
    rays = alg.ray_classes()

    def combo(coeffs):
        out = alg.zero()
        for a, x in zip(coeffs, rays):
            out = out + x.scale(a)
        return out

    nef = [combo(c) for c in nef_rays]
    canonical = combo([-1] * len(rays))
    bundles = []
    for t in twists:
        L = alg.zero()
        for a, p in zip(t, nef):
            L = L + p.scale(a)
        bundles.append(L)
    base = BaseVariety(name, alg, nef, canonical, bundles, fan=fan, ray_classes=rays)
    pairings = [[int(x) for x in base.nef_coords(r)] for r in rays]
    base.base_j = BaseJData.toric(alg, rays, pairings)
    return base


# ---------------------------------------------------------------------------
# the lifted fan


@dataclass
class LiftedFan:
    base: FanData
    n: int
    bundle_coeffs: list[list[int]]  # rows i = 0..n over base rays
    fan: FanData
    sign: int
    algebra: SRAlgebra = field(repr=False)

    @property
    def r(self) -> int:
        return len(self.base.rays)

    def b_index(self, j: int) -> int:
        return j

    def f_index(self, i: int) -> int:
        return self.r + i


def _build_lift(base: FanData, coeffs: list[list[int]], n: int, sign: int) -> FanData:
    m = base.rank
    rays = []
    for j, b in enumerate(base.rays):
        rays.append(tuple(b) + tuple(sign * coeffs[i][j] for i in range(1, n + 1)))
    r = len(rays)
    rays.append((0,) * m + (-1,) * n)
    for i in range(1, n + 1):
        rays.append((0,) * m + tuple(1 if k == i - 1 else 0 for k in range(n)))
    f_all = set(range(r, r + n + 1))
    cones = [sigma | frozenset(f_all - {r + i}) for sigma in base.max_cones for i in range(n + 1)]
    return FanData(m + n, rays, cones)


def lift_fan(base: FanData, bundle_coeffs: Sequence[Sequence[int]]) -> LiftedFan:
    """Fan of P(L_0 + ... + L_n) with ``c1(L_i) = sum_j bundle_coeffs[i][j] D_j``.

    The sign of the fiber coordinates of the lifted base rays is whichever one
    makes ``[F_i] = [F_0] - c1(L_i)`` hold in the divisor class group.
    """
    coeffs = [list(map(int, row)) for row in bundle_coeffs]
    n = len(coeffs) - 1
    if n < 0 or any(coeffs[0]):
        raise FanError("row 0 of the bundle coefficients (L_0) must vanish")
    if any(len(row) != len(base.rays) for row in coeffs):
        raise FanError("one coefficient per base ray is needed")
    errors = []
    for sign in (1, -1):
        f = _build_lift(base, coeffs, n, sign)
        alg = sr_cohomology(f)
        r = len(base.rays)
        f0 = alg.ray_class(r)
        bad = None
        for i in range(1, n + 1):
            want = f0
            for j in range(r):
                want = want - alg.ray_class(j).scale(coeffs[i][j])
            if alg.ray_class(r + i) != want:
                bad = f"[F_{i}] != [F_0] - c1(L_{i}) with sign {sign:+d}"
                break
        if bad is None:
            return LiftedFan(base, n, coeffs, f, sign, alg)
        errors.append(bad)
    raise FanError("; ".join(errors))


def toric_i_coefficient(alg: SRAlgebra, degrees: Sequence[int]) -> HLaurent:
    """``prod_rho factorial_ratio(D_rho, D_rho . beta)`` in the Stanley-Reisner ring."""
    from .hypergeometric import factorial_ratio

    f = alg.fan
    if len(degrees) != len(f.rays):
        raise FanError("one degree per ray is needed")
    for k in range(f.rank):
        if sum(ray[k] * d for ray, d in zip(f.rays, degrees)) != 0:
            raise FanError(f"degrees {list(degrees)} violate the linear relation for coordinate {k}")
    out = HLaurent.one(alg)
    for rho, d in enumerate(degrees):
        out = out * factorial_ratio(alg.ray_class(rho), d)
    return out


def lifted_degrees(lf: LiftedFan, base: BaseVariety, c: CurveClass) -> list[int]:
    g = base.grading
    ray_pair = [[int(x) for x in base.nef_coords(rc)] for rc in base.ray_classes]
    out = [sum(a * b for a, b in zip(pr, c.d)) for pr in ray_pair]
    out += [c.nu - g.v(i, c) for i in range(lf.n + 1)]
    return out


class RingMap:
    """Linear map SR(lifted fan) -> H*P(V) determined by the divisor correspondence."""

    def __init__(self, lf: LiftedFan, b: BundleSpace):
        base = b.base
        src = lf.algebra
        images = [b.pullback(x) for x in base.ray_classes] + [b.divisor(i) for i in range(lf.n + 1)]
        self.src, self.dst, self.images = src, b.algebra, images
        cols = []
        for mono in src.monomials:
            v = b.algebra.one()
            for rho, e in enumerate(mono):
                for _ in range(e):
                    v = v * images[rho]
            cols.append(v)
        self.cols = cols

    def __call__(self, x: AlgElement) -> AlgElement:
        out = self.dst.zero()
        for c, v in zip(x.coords, self.cols):
            if c:
                out = out + v.scale(c)
        return out

    def verify(self) -> list[str]:
        problems = []
        if self.src.dim != self.dst.dim:
            problems.append(f"dimension mismatch {self.src.dim} != {self.dst.dim}")
        for rho, img in enumerate(self.images):
            if self(self.src.ray_class(rho)) != img:
                problems.append(f"generator D{rho} not sent to its declared image")
        n = self.src.dim
        for i in range(n):
            ei = self.src.basis_element(i)
            for j in range(i, n):
                ej = self.src.basis_element(j)
                if self(ei * ej) != self.cols[i] * self.cols[j]:
                    problems.append(f"product of basis elements {self.src.labels[i]}, {self.src.labels[j]} not preserved")
        rows = [list(v.coords) for v in self.cols]
        if len(rref(rows, self.dst.dim)[1]) != self.dst.dim:
            problems.append("map is not bijective")
        return problems


def check_toric_agreement(b: BundleSpace, lf: LiftedFan, box: Box) -> Report:
    """Twisting-factor coefficients against lifted-fan coefficients, class by class."""
    from .hypergeometric import i_series

    rep = Report("toric", anchor="I_{P(V)} equals the toric I-function of the lifted fan (tau = 1)", box=str(box))
    base = b.base
    if base.ray_classes is None or base.fan is None:
        rep.fail({"reason": "base carries no fan"})
        return rep
    phi = RingMap(lf, b)
    problems = phi.verify()
    for p in problems:
        rep.fail({"reason": p})
    if problems:
        return rep
    if not is_ample(lf.fan, [1] * len(lf.fan.rays)):
        rep.note({"warning": "lifted fan is not Fano; the mirror map need not be trivial"})
    I = i_series(b, box)
    for c in box.classes():
        if not base.is_effective(c.d):
            continue
        degs = lifted_degrees(lf, base, c)
        toric = toric_i_coefficient(lf.algebra, degs).map_coefficients(phi, b.algebra)
        if toric != I[c]:
            rep.fail({"class": str(c), "degrees": degs})
    rep.data["classes_checked"] = box.size()
    rep.data["sign"] = lf.sign
    return rep


def lift_for_bundle(b: BundleSpace) -> LiftedFan:
    """Lifted fan for a bundle over a base that carries a fan and ray classes."""
    base = b.base
    if base.fan is None or base.ray_classes is None:
        raise FanError("base carries no fan")
    sr = sr_cohomology(base.fan)
    # express each c1(L_i) through the base ray classes via the SR ring
    to_sr = _base_to_sr(base, sr)
    coeffs = [divisor_coefficients(sr, to_sr(L)) for L in base.line_bundles]
    return lift_fan(base.fan, coeffs)


def _base_to_sr(base: BaseVariety, sr: SRAlgebra):
    """Degree-1 classes of the base written in the SR ring (through the ray classes)."""
    rays = base.ray_classes
    srrays = sr.ray_classes()
    # columns: base ray classes; pick an independent spanning subset
    deg1 = base.algebra.indices_of_degree(1)

    def convert(x: AlgElement) -> AlgElement:
        target = [x.coords[i] for i in deg1]
        cols = []
        chosen = []
        for rho, rc in enumerate(rays):
            trial = cols + [[rc.coords[i] for i in deg1]]
            if len(rref([list(c) for c in trial], len(deg1))[1]) == len(trial):
                cols = trial
                chosen.append(rho)
        sol = solve_rational(cols, target)
        if sol is None:
            raise FanError(f"class {x!r} is not in the span of the ray classes")
        out = sr.zero()
        for s, rho in zip(sol, chosen):
            out = out + srrays[rho].scale(s)
        return out

    return convert
