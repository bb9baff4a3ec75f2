"""Lefschetz factors and the collapse of the bundle series onto a section X_0.

Multiplying the bundle series by the Lefschetz factors of
``W = sum_{k>=1} O(1) (x) L_k^*`` cancels every twisting ratio except the one of
``L_0``; the relation ``z prod_k (z - c1(L_k)) = 0`` then turns
``1/prod_{m=1}^{d}(z + m hbar)`` into ``1/(d! hbar^d)`` on the section class,
which is ``exp(q1/hbar)`` absorbed by ``t_0 -> t_0 + q1``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Mapping, Sequence

from .algebra import HLaurent, NonInvertible, hl_invert
from .bundle import BundleSpace, build_bundle
from .hypergeometric import factorial_ratio, rising_product, twisting_factor
from .novikov import Box, CurveClass, NovikovSeries
from .report import Report

__all__ = [
    "LefschetzSpec",
    "lefschetz_factor",
    "RatioSymbol",
    "ratio_symbol",
    "check_collapse",
    "change_of_variables_check",
    "exp_series",
    "section_spec",
    "i_w_series",
    "collapse_negative_control",
    "inverse_ratio",
]


@dataclass
class LefschetzSpec:
    """Summand classes ``c1(W_i)`` and their pairings with curve classes."""

    classes: list
    pairings: Callable[[CurveClass], Sequence[int]]

    def __post_init__(self):
        if not self.classes:
            raise ValueError("a Lefschetz factor needs at least one summand")


def inverse_ratio(x, b: int) -> HLaurent:
    """``prod_{m<=b} (x + m hbar) / prod_{m<=0} (x + m hbar)``."""
    if b > 0:
        return rising_product(x, 1, b)
    if b == 0:
        return HLaurent.one(x.ring)
    # needs the inverse of the m = 0 factor x, which is nilpotent
    return hl_invert(rising_product(x, b + 1, 0))


def lefschetz_factor(spec: LefschetzSpec, c: CurveClass) -> HLaurent:
    bs = list(spec.pairings(c))
    if len(bs) != len(spec.classes):
        raise ValueError("one pairing per summand is needed")
    out = HLaurent.one(spec.classes[0].ring)
    for x, b in zip(spec.classes, bs):
        out = out * inverse_ratio(x, b)
    return out


def section_spec(b: BundleSpace) -> LefschetzSpec:
    """``W = sum_{k=1}^{n} O(1) (x) L_k^*``, whose section cuts out X_0."""
    g = b.grading
    return LefschetzSpec(
        classes=[b.divisor(k) for k in range(1, b.n + 1)],
        pairings=lambda c: [c.nu - g.v(k, c) for k in range(1, b.n + 1)],
    )


class RatioSymbol:
    """Formal product of linear factors ``(x_label + m hbar)^e`` with cancellation."""

    def __init__(self, counts: Mapping | None = None):
        self.counts = Counter({k: v for k, v in (counts or {}).items() if v})

    def __mul__(self, other: RatioSymbol) -> RatioSymbol:
        out = Counter(self.counts)
        for k, v in other.counts.items():
            out[k] += v
        return RatioSymbol({k: v for k, v in out.items() if v})

    def inverse(self) -> RatioSymbol:
        return RatioSymbol({k: -v for k, v in self.counts.items()})

    def __eq__(self, other):
        return isinstance(other, RatioSymbol) and dict(self.counts) == dict(other.counts)

    def evaluate(self, classes: Mapping) -> HLaurent:
        ring = next(iter(classes.values())).ring
        num = HLaurent.one(ring)
        den = HLaurent.one(ring)
        for (label, m), e in sorted(self.counts.items()):
            f = HLaurent.linear(classes[label], m)
            for _ in range(abs(e)):
                if e > 0:
                    num = num * f
                else:
                    den = den * f
        return num * hl_invert(den)

    def __repr__(self) -> str:
        return f"RatioSymbol({dict(sorted(self.counts.items()))})"


def ratio_symbol(label, s: int) -> RatioSymbol:
    """Formal ``factorial_ratio(x_label, s)``."""
    if s > 0:
        return RatioSymbol({(label, m): -1 for m in range(1, s + 1)})
    return RatioSymbol({(label, m): 1 for m in range(s + 1, 1)})


def _section_class(b: BundleSpace):
    E = b.algebra.one()
    for k in range(1, b.n + 1):
        E = E * b.divisor(k)
    return E


def check_collapse(b: BundleSpace, box: Box) -> Report:
    """Stage 1: Lefschetz factors cancel the twisting down to ``1/prod(z + m hbar)``.
    Stage 2: against ``prod_k (z - c1(L_k))`` that becomes ``1/(d! hbar^d)``."""
    rep = Report("qhsp-collapse", anchor="prod_k L_k * T_{d,beta} = 1/prod_{m=1}^d (z + m hbar); "
                                         "prod_k (z - c1(L_k)) / prod_{m=1}^d (z + m hbar) = prod_k (z - c1(L_k)) / (d! hbar^d)",
                 box=str(box))
    g = b.grading
    base = b.base
    E = HLaurent.const(_section_class(b))
    spec = section_spec(b)
    classes = {i: b.divisor(i) for i in range(b.n + 1)}
    ring_checked = 0
    for c in box.classes():
        if not base.is_effective(c.d):
            continue
        d = c.nu
        where = {"class": str(c)}
        # stage 1, formal
        sym = RatioSymbol()
        for i in range(b.n + 1):
            sym = sym * ratio_symbol(i, d - g.v(i, c))
        for k in range(1, b.n + 1):
            sym = sym * ratio_symbol(k, d - g.v(k, c)).inverse()
        if sym != ratio_symbol(0, d):
            rep.fail({**where, "stage": 1, "reason": "formal cancellation left extra factors"})
            continue
        # stage 1, in the ring wherever the Lefschetz factors are defined
        target = factorial_ratio(classes[0], d)
        if all(d - g.v(k, c) >= 0 for k in range(1, b.n + 1)):
            ring_checked += 1
            if lefschetz_factor(spec, c) * twisting_factor(b, c) != target:
                rep.fail({**where, "stage": 1, "reason": "ring evaluation disagrees"})
        elif sym.evaluate(classes) != target:
            rep.fail({**where, "stage": 1, "reason": "evaluated symbol disagrees"})
        # stage 2
        J = b.pullback_hl(base.base_j.coefficient(c.d))
        lhs = E * target * J
        rhs = (E * J).shift(-d).scale(Fraction(1, factorial(d)))
        if lhs != rhs:
            rep.fail({**where, "stage": 2, "reason": "collapse to 1/(d! hbar^d) fails"})
    rep.data["ring_checked_classes"] = ring_checked
    rep.data["relation"] = b.relation
    return rep


def exp_series(ring, box: Box) -> NovikovSeries:
    """``exp(q1/hbar)`` truncated to the box, built from powers of ``q1/hbar``."""
    X = NovikovSeries(ring, box, {CurveClass(1, (0,) * box.k): HLaurent.hbar(ring, -1)}) if box.nu_max >= 1 \
        else NovikovSeries(ring, box)
    out = NovikovSeries.one(ring, box)
    power = NovikovSeries.one(ring, box)
    for k in range(1, box.nu_max + 1):
        power = power * X
        out = out + power.map_coefficients(lambda c, v: v.scale(Fraction(1, factorial(k))))
    return out


def change_of_variables_check(b: BundleSpace, box: Box) -> Report:
    """The collapsed series equals ``prod_k (z - c1(L_k)) exp(q1/hbar) sum_beta q2^beta pi^* J_beta``."""
    rep = Report("qhsp-change-of-variables", anchor="t_0' = t_0 + q_1 turns I into the Gysin image of J_{X_0}",
                 box=str(box))
    base = b.base
    R = b.algebra
    ex = exp_series(R, box)
    for d in range(box.nu_max + 1):
        want = HLaurent.hbar(R, -d, Fraction(1, factorial(d)))
        if ex[CurveClass(d, (0,) * box.k)] != want:
            rep.fail({"d": d, "reason": "exp(q1/hbar) coefficient is not 1/(d! hbar^d)"})
    Ecl = HLaurent.const(_section_class(b))
    g = b.grading
    classes = {i: b.divisor(i) for i in range(b.n + 1)}
    collapsed = {}
    gysin = {}
    for c in box.classes():
        if not base.is_effective(c.d):
            continue
        J = b.pullback_hl(base.base_j.coefficient(c.d))
        sym = RatioSymbol()
        for i in range(b.n + 1):
            sym = sym * ratio_symbol(i, c.nu - g.v(i, c))
        for k in range(1, b.n + 1):
            sym = sym * ratio_symbol(k, c.nu - g.v(k, c)).inverse()
        collapsed[c] = Ecl * sym.evaluate(classes) * J
        if c.nu == 0:
            gysin[c] = Ecl * J
    lhs = NovikovSeries(R, box, collapsed)
    rhs = ex * NovikovSeries(R, box, gysin)
    for c in box.classes():
        if lhs[c] != rhs[c]:
            rep.fail({"class": str(c), "reason": "collapsed series differs from exp(q1/hbar) * Gysin image"})
    rep.data["relation"] = b.relation
    return rep


def i_w_series(ring, j_coefficient: Callable[[CurveClass], HLaurent], spec: LefschetzSpec, ctop, box: Box) -> NovikovSeries:
    """``c_top(W) * sum_beta q^beta L^W_beta J_beta`` (prefactor stripped)."""
    C = HLaurent.const(ctop)
    coeffs = {c: C * lefschetz_factor(spec, c) * j_coefficient(c) for c in box.classes()}
    return NovikovSeries(ring, box, coeffs)


def collapse_negative_control(b: BundleSpace, box: Box) -> Report:
    """Same collapse with the defining relation switched off; expected to fail."""
    free = build_bundle(b.base, relation=False)
    return check_collapse(free, box)
