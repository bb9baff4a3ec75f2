"""Twisted hypergeometric series of a projective bundle and the checks run on it.

All series are stored with the exponential prefactor ``exp((tp + t z)/hbar)``
stripped: J and I carry the same prefactor, so every identity checked here
holds for the reduced series.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import AlgElement, HLaurent, hl_invert, truncated_polynomial_algebra
from .bundle import BaseVariety, BundleSpace, GeometryError, build_bundle
from .novikov import Box, CurveClass, GradingData, NovikovSeries, class_degree
from .report import Report

__all__ = [
    "BaseJData",
    "MissingBaseJ",
    "factorial_ratio",
    "rising_product",
    "twisting_factor",
    "i_series",
    "base_j_projective",
    "check_homogeneity",
    "check_asymptotics",
    "AsymptoticsEntry",
    "pure_fiber_identity",
    "pure_fiber_bundle",
    "extremal_no_fiber",
    "point_base",
    "projective_base",
]


class MissingBaseJ(KeyError):
    def __str__(self) -> str:
        return f"missing base J data for class {self.args[0]}"


_RATIO_CACHE: dict[tuple[object, int], HLaurent] = {}


def rising_product(x, lo: int, hi: int) -> HLaurent:
    """``prod_{m=lo}^{hi} (x + m hbar)`` (empty product is 1)."""
    out = HLaurent.one(x.ring)
    for m in range(lo, hi + 1):
        out = out * HLaurent.linear(x, m)
    return out


def factorial_ratio(x, s: int) -> HLaurent:
    """``prod_{m<=0} (x + m hbar) / prod_{m<=s} (x + m hbar)`` after cancellation.

    s > 0: inverse of ``prod_{m=1}^{s} (x + m hbar)``;
    s = 0: 1;
    s < 0: the leftover numerator ``prod_{m=s+1}^{0} (x + m hbar)``.
    """
    key = (x, s)
    hit = _RATIO_CACHE.get(key)
    if hit is not None:
        return hit
    if s > 0:
        out = hl_invert(rising_product(x, 1, s))
    elif s == 0:
        out = HLaurent.one(x.ring)
    else:
        out = rising_product(x, s + 1, 0)
    if len(_RATIO_CACHE) > 50000:
        _RATIO_CACHE.clear()
    _RATIO_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# base J-functions


class BaseJData:
    """Coefficients ``J_beta`` of the base, keyed by dual-basis coordinates.

    ``kind`` is one of ``point``, ``projective_space``, ``toric_fano``,
    ``explicit``. Closed forms are evaluated on demand and memoized.
    """

    def __init__(self, kind: str, algebra, k: int, compute=None, table=None, params=None):
        self.kind = kind
        self.algebra = algebra
        self.k = k
        self._compute = compute
        self._table: dict[tuple[int, ...], HLaurent] = dict(table or {})
        self.params = dict(params or {})
        zero = (0,) * k
        if kind == "explicit":
            self._table.setdefault(zero, HLaurent.one(algebra))

    def coefficient(self, d: Sequence[int]) -> HLaurent:
        d = tuple(int(x) for x in d)
        if len(d) != self.k:
            raise GeometryError(f"base class {d} has wrong rank (expected {self.k})")
        hit = self._table.get(d)
        if hit is not None:
            return hit
        if self._compute is None:
            raise MissingBaseJ(CurveClass(0, d))
        val = self._compute(d)
        self._table[d] = val
        return val

    def populate(self, box: Box) -> None:
        for c in box.classes():
            if c.nu == 0:
                self.coefficient(c.d)

    def check(self, grading: GradingData, box: Box) -> Report:
        """J_0 = 1 and ``J_beta`` supported in hbar-exponents <= -max(2, -K_X.beta)."""
        rep = Report("base-j", anchor="J_0 = 1 and J_beta = O(hbar^-max(2, -K_X.beta))", box=str(box))
        for c in box.classes():
            if c.nu:
                continue
            J = self.coefficient(c.d)
            if c.is_zero():
                if J != HLaurent.one(self.algebra):
                    rep.fail({"class": str(c), "reason": "J_0 != 1"})
                continue
            nb = max(2, -grading.kx(c))
            lead = J.leading_exponent()
            if lead is not None and lead > -nb:
                rep.fail({"class": str(c), "reason": f"hbar-exponent {lead} > -{nb}"})
        return rep

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        out.update(self.params)
        if self.kind == "explicit":
            out["coefficients"] = {
                str(CurveClass(0, d)): v.to_json() for d, v in sorted(self._table.items())
            }
        return out

    @classmethod
    def point(cls, algebra) -> BaseJData:
        return cls("point", algebra, 0, table={(): HLaurent.one(algebra)})

    @classmethod
    def projective(cls, algebra, hyperplane: AlgElement, n: int) -> BaseJData:
        def compute(d):
            return factorial_ratio(hyperplane, d[0]) ** (n + 1)

        return cls("projective_space", algebra, 1, compute=compute, params={"n": n})

    @classmethod
    def toric(cls, algebra, ray_classes: Sequence[AlgElement], ray_pairings: Sequence[Sequence[int]]) -> BaseJData:
        """``prod_rho`` of factorial ratios in the ray divisors, ``D_rho . beta`` from the pairings."""
        k = len(ray_pairings[0]) if ray_pairings else 0

        def compute(d):
            out = HLaurent.one(algebra)
            for x, pr in zip(ray_classes, ray_pairings):
                out = out * factorial_ratio(x, sum(a * b for a, b in zip(pr, d)))
            return out

        return cls("toric_fano", algebra, k, compute=compute)

    @classmethod
    def explicit(cls, algebra, k: int, table: Mapping[tuple[int, ...], HLaurent]) -> BaseJData:
        return cls("explicit", algebra, k, table=table)

    @classmethod
    def from_json(cls, base: BaseVariety, spec) -> BaseJData | None:
        alg = base.algebra
        if spec is None:
            if base.k == 0:
                return cls.point(alg)
            if base.fan is not None and base.ray_classes is not None:
                spec = {"kind": "toric_fano"}
            else:
                return None
        kind = spec.get("kind")
        if kind == "point":
            if base.k != 0:
                raise GeometryError("base_j kind 'point' needs an empty nef basis")
            return cls.point(alg)
        if kind == "projective_space":
            if base.k != 1:
                raise GeometryError("base_j kind 'projective_space' needs Picard rank 1")
            return cls.projective(alg, base.nef_basis[0], int(spec.get("n", alg.top_degree)))
        if kind == "toric_fano":
            if base.ray_classes is None:
                raise GeometryError("base_j kind 'toric_fano' needs ray_classes")
            pairings = [[int(x) for x in base.nef_coords(r)] for r in base.ray_classes]
            return cls.toric(alg, base.ray_classes, pairings)
        if kind == "explicit":
            table = {}
            for key, val in spec.get("coefficients", {}).items():
                c = CurveClass.parse(key)
                if c.nu:
                    raise GeometryError(f"explicit base J class {key} must have nu = 0")
                table[c.d] = HLaurent.from_json(alg, val)
            return cls.explicit(alg, base.k, table)
        raise GeometryError(f"unknown base_j kind {kind!r}")


def base_j_projective(n: int, box: Box | int | None = None) -> BaseJData:
    """``J_d = 1 / prod_{m=1}^{d} (H + m hbar)^{n+1}`` in ``Q[H]/(H^{n+1})``."""
    alg = truncated_polynomial_algebra(n, "H", name=f"H*P{n}")
    data = BaseJData.projective(alg, alg["H"], n)
    if box is not None:
        nu_max = box if isinstance(box, int) else box.nu_max
        for d in range(nu_max + 1):
            data.coefficient((d,))
    return data


def point_base(n: int) -> BaseVariety:
    """The point with ``V = O^{n+1}``, so that ``P(V) = P^n``."""
    from .algebra import StructAlgebra
    from .toric import FanData

    alg = StructAlgebra(["1"], [0], {(0, 0): {0: Fraction(1)}}, name="H*pt")
    base = BaseVariety("point", alg, [], alg.zero(), [alg.zero()] * (n + 1),
                       fan=FanData(0, [], [frozenset()]), ray_classes=[])
    base.base_j = BaseJData.point(alg)
    return base


def projective_base(n: int, twists: Sequence[int] = (0, 0)) -> BaseVariety:
    """``X = P^n`` with ``V = O(twists[0]) + ...``; twists[0] must be 0."""
    from .toric import projective_fan

    alg = truncated_polynomial_algebra(n, "H", name=f"H*P{n}")
    H = alg["H"]
    base = BaseVariety(
        f"P{n}",
        alg,
        [H],
        H.scale(-(n + 1)),
        [H.scale(a) for a in twists],
        fan=projective_fan(n),
        ray_classes=[H] * (n + 1),
    )
    base.base_j = BaseJData.projective(alg, H, n)
    return base


# ---------------------------------------------------------------------------
# the twisted series


def twisting_factor(b: BundleSpace, c: CurveClass) -> HLaurent:
    """``prod_{i=0}^{n}`` factorial_ratio(z - c1(L_i), nu - v_i)."""
    g = b.grading
    out = HLaurent.one(b.algebra)
    for i in range(b.n + 1):
        out = out * factorial_ratio(b.divisor(i), c.nu - g.v(i, c))
    return out


def i_series(b: BundleSpace, box: Box) -> NovikovSeries:
    """Coefficients ``T_{nu,beta} * pi^* J_beta`` over the box."""
    base = b.base
    if base.base_j is None:
        raise MissingBaseJ(CurveClass.zero(base.k))
    coeffs = {}
    for c in box.classes():
        if not base.is_effective(c.d):
            continue
        J = base.base_j.coefficient(c.d)
        coeffs[c] = twisting_factor(b, c) * b.pullback_hl(J)
    return NovikovSeries(b.algebra, box, coeffs)


# ---------------------------------------------------------------------------
# checks


def check_homogeneity(s: NovikovSeries, g: GradingData, shift: int = 0) -> Report:
    """Every ``hbar^a * (degree-w class)`` at class c must satisfy ``a + w = -deg(c) + shift``."""
    rep = Report("grading", anchor="I is homogeneous of degree zero (deg q1 = n+1, deg q2^beta = beta.(-K_X-c1(V)), deg hbar = 1)",
                 box=str(s.box))
    checked = 0
    for c, coeff in s.items():
        want = -class_degree(c, g) + shift
        for a, w, part in coeff.monomials():
            checked += 1
            if a + w != want:
                rep.fail({"class": str(c), "hbar_exponent": a, "class_degree": w,
                          "total": a + w, "expected": want})
    rep.data["monomials_checked"] = checked
    return rep


@dataclass(frozen=True)
class AsymptoticsEntry:
    curve_class: CurveClass
    l: int
    n_beta: int
    n_total: int
    observed: int | None
    case: str

    def to_json(self) -> dict:
        return {"class": str(self.curve_class), "l": self.l, "n_beta": self.n_beta,
                "n_total": self.n_total, "observed_leading_exponent": self.observed, "case": self.case}


def asymptotics_entry(c: CurveClass, g: GradingData, coeff: HLaurent | None) -> AsymptoticsEntry:
    l = sum(1 for i in range(g.n + 1) if c.nu - g.v(i, c) < 0)
    n_beta = 0 if not any(c.d) else max(2, -g.kx(c))
    n_total = l + (g.n + 1) * c.nu - g.c1v(c) + n_beta
    if c.nu > 0:
        case = "fiber"
    elif g.c1v(c) == 0:
        case = "flat"
    else:
        case = "twisted"
    obs = coeff.leading_exponent() if coeff is not None else None
    return AsymptoticsEntry(c, l, n_beta, n_total, obs, case)


def check_asymptotics(s: NovikovSeries, g: GradingData) -> tuple[list[AsymptoticsEntry], Report]:
    """I = 1 + o(1/hbar): coefficient at 0 is 1, every other coefficient is O(hbar^-2)."""
    rep = Report("asymptotics", anchor="I = 1 + o(1/hbar); leading order hbar^-n_{nu,beta}", box=str(s.box))
    zero = CurveClass.zero(s.box.k)
    if s[zero] != HLaurent.one(s.ring):
        rep.fail({"class": str(zero), "reason": "coefficient at the zero class is not 1"})
    ledger = []
    for c in s.box.classes():
        if c.is_zero():
            continue
        coeff = s.coeffs.get(c)
        e = asymptotics_entry(c, g, coeff)
        ledger.append(e)
        where = {"class": str(c)}
        if e.observed is not None:
            if e.observed > -2:
                rep.fail({**where, "reason": f"hbar-exponent {e.observed} > -2"})
            if e.observed > -e.n_total:
                rep.fail({**where, "reason": f"leading exponent {e.observed} above predicted -{e.n_total}"})
        # case analysis of the leading order
        if e.case == "fiber":
            strict = any(c.d)
            ok = e.n_total > (g.n + 1) * c.nu if strict else e.n_total >= (g.n + 1) * c.nu
            ok = ok and (g.n + 1) * c.nu >= 2
        elif e.case == "flat":
            ok = e.l == 0 and e.n_total == e.n_beta >= 2
        else:
            ok = e.l > 0 and e.n_total > g.base_degree(c) >= 1
        if not ok or e.n_total < 2:
            rep.fail({**where, "reason": f"case analysis ({e.case}) violated: n_total = {e.n_total}"})
    rep.data["ledger"] = [e.to_json() for e in ledger]
    return ledger, rep


def pure_fiber_identity(n: int, box: Box | int) -> Report:
    """Over a point the twisted series is the J-function of P^n (with H -> z)."""
    nu_max = box if isinstance(box, int) else box.nu_max
    b = build_bundle(point_base(n))
    I = i_series(b, Box(nu_max))
    J = base_j_projective(n, nu_max)
    Halg = J.algebra
    # H^t -> z^t
    def to_bundle(x):
        out = b.algebra.zero()
        for t in range(Halg.dim):
            out = out + (b.z ** t).scale(x.coords[t])
        return out

    rep = Report("pure-fiber", anchor="J_{P^n} = I_{P^n}", box=str(Box(nu_max)))
    for nu in range(nu_max + 1):
        lhs = I[CurveClass(nu)]
        rhs = J.coefficient((nu,)).map_coefficients(to_bundle, b.algebra)
        if lhs != rhs:
            rep.fail({"nu": nu})
    rep.data["n"] = n
    return rep


def pure_fiber_bundle(b: BundleSpace, box: Box, lambda_degree: int | None = None) -> Report:
    """beta = 0 part of I equals the equivariant P^n series with lambda_i -> c1(L_i), H -> z."""
    from .dmodule import equivariant_i

    K = b.algebra.top_degree if lambda_degree is None else lambda_degree
    s = equivariant_i(b.n, box.nu_max, lambda_degree=K)
    images = [b.pullback(L) for L in b.base.line_bundles]
    rep = Report("pure-fiber", anchor="beta = 0 part of I_{P(V)} = I^T_{P^n} at lambda_i = c1(L_i)", box=str(box))
    I = i_series(b, Box(box.nu_max, (0,) * b.base.k))
    for nu in range(box.nu_max + 1):
        c = CurveClass(nu, (0,) * b.base.k)
        got = s.coefficients[nu].map_coefficients(lambda e: e.substitute(b.z, images, b.algebra), b.algebra)
        if got != I[c]:
            rep.fail({"class": str(c)})
    return rep


def extremal_no_fiber(b: BundleSpace, beta: Sequence[int]) -> tuple[HLaurent, Report]:
    """``T_{0,beta}`` against ``prod_{i>=1} prod_{m=0}^{v_i-1} (z - c1(L_i) - m hbar)``."""
    c = CurveClass(0, tuple(beta))
    g = b.grading
    vs = [g.v(i, c) for i in range(1, b.n + 1)]
    if any(v < 0 for v in vs):
        raise GeometryError(f"no-fiber identity needs L_i . beta >= 0, got {vs} at {c}")
    T = twisting_factor(b, c)
    prod = HLaurent.one(b.algebra)
    for i, v in enumerate(vs, start=1):
        x = b.divisor(i)
        for m in range(v):
            prod = prod * HLaurent.linear(x, -m)
    rep = Report("no-fiber", anchor="T_{0,beta} = prod_i prod_{m=0}^{v_i - 1} (z - c1(L_i) - m hbar)", box=str(c))
    entry = {"class": str(c), "v": vs, "ample_on_class": all(v > 0 for v in vs)}
    # the printed upper bound -beta.c1(L_i) - 1 gives an empty product for v_i > 0
    entry["printed_bound_matches"] = (T == HLaurent.one(b.algebra))
    rep.note(entry)
    if T != prod:
        rep.fail(entry)
    return T, rep
