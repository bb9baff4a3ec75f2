"""Equivariant quantum D-module of P^n.

Coefficients live in ``Q[lambda_0..lambda_n][H] / (prod_i (H - lambda_i))``
with generic (symbolic) lambdas. ``H - lambda_i`` is not nilpotent there, so
we work modulo ``(H, lambda)^(K+1)``: the quotient by a homogeneous ideal,
in which every positive-degree element is nilpotent and the usual
unit-plus-nilpotent inversion applies. Identities are exact in that quotient;
``K`` is the ``lambda_degree`` parameter. The lambda -> 0 limit factors
through it as soon as ``K >= n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .algebra import AlgebraMismatch, HLaurent, StructAlgebra, hl_invert, truncated_polynomial_algebra
from .hypergeometric import BaseJData
from .report import Report

__all__ = [
    "EquivariantRing",
    "EqElement",
    "DressedSeries",
    "equivariant_i",
    "apply_d",
    "check_annihilation",
    "nonequivariant_limit",
]

Key = tuple[int, tuple[int, ...]]


class EquivariantRing:
    def __init__(self, n: int, lambda_degree: int | None = None):
        self.n = n
        self.K = n + 3 if lambda_degree is None else int(lambda_degree)
        if self.K < 0:
            raise ValueError("lambda_degree must be nonnegative")
        self.nl = n + 1
        self._zero_lam = (0,) * self.nl
        self._reductions = self._build_reductions()

    @property
    def top_degree(self) -> int:
        return self.K

    def __repr__(self) -> str:
        return f"EquivariantRing(n={self.n}, K={self.K})"

    def _lam(self, i: int) -> tuple[int, ...]:
        return tuple(1 if j == i else 0 for j in range(self.nl))

    def _build_reductions(self) -> dict[int, dict[Key, Fraction]]:
        """``H^h`` for ``n < h <= 2n`` in the basis ``H^a lambda^alpha``, ``a <= n``."""
        n = self.n
        # H^{n+1} = -sum_{t=1}^{n+1} (-1)^t e_t(lambda) H^{n+1-t}
        top: dict[Key, Fraction] = {}
        for t in range(1, n + 2):
            sign = -1 if t % 2 == 0 else 1
            for sub in combinations(range(self.nl), t):
                lam = tuple(1 if j in sub else 0 for j in range(self.nl))
                if t + (n + 1 - t) <= self.K:
                    key = (n + 1 - t, lam)
                    top[key] = top.get(key, Fraction(0)) + sign
        red = {n + 1: {k: v for k, v in top.items() if v}}
        for h in range(n + 2, 2 * n + 1):
            out: dict[Key, Fraction] = {}
            for (a, lam), c in red[h - 1].items():
                if a + 1 <= n:
                    self._acc(out, (a + 1, lam), c)
                else:
                    for (b, lam2), c2 in red[n + 1].items():
                        nl = tuple(x + y for x, y in zip(lam, lam2))
                        if b + sum(nl) <= self.K:
                            self._acc(out, (b, nl), c * c2)
            red[h] = {k: v for k, v in out.items() if v}
        return red

    @staticmethod
    def _acc(d: dict, key, val) -> None:
        v = d.get(key, 0) + val
        if v:
            d[key] = v
        else:
            d.pop(key, None)

    def element(self, terms: dict[Key, Fraction]) -> EqElement:
        return EqElement(self, {k: Fraction(v) for k, v in terms.items() if v and k[0] + sum(k[1]) <= self.K})

    def zero(self) -> EqElement:
        return EqElement(self, {})

    def one(self) -> EqElement:
        return EqElement(self, {(0, self._zero_lam): Fraction(1)})

    def h(self) -> EqElement:
        if self.n == 0:
            return self.lam(0)
        return self.element({(1, self._zero_lam): 1})

    def lam(self, i: int) -> EqElement:
        return self.element({(0, self._lam(i)): 1})

    def lambdas(self) -> list[EqElement]:
        return [self.lam(i) for i in range(self.nl)]


class EqElement:
    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: EquivariantRing, terms: dict[Key, Fraction]):
        self.ring = ring
        self.terms = terms
        self._hash = None

    def _check(self, other) -> None:
        if not isinstance(other, EqElement) or other.ring is not self.ring:
            raise AlgebraMismatch()

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            EquivariantRing._acc(out, k, v)
        return EqElement(self.ring, out)

    def __neg__(self):
        return EqElement(self.ring, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> EqElement:
        c = Fraction(c)
        if not c:
            return self.ring.zero()
        return EqElement(self.ring, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        R = self.ring
        n, K = R.n, R.K
        out: dict[Key, Fraction] = {}
        acc = EquivariantRing._acc
        for (a, la), ca in self.terms.items():
            da = a + sum(la)
            for (b, lb), cb in other.terms.items():
                if da + b + sum(lb) > K:
                    continue
                lam = tuple(x + y for x, y in zip(la, lb))
                h = a + b
                c = ca * cb
                if h <= n:
                    acc(out, (h, lam), c)
                else:
                    for (h2, l2), c2 in R._reductions[h].items():
                        nl = tuple(x + y for x, y in zip(lam, l2))
                        if h2 + sum(nl) <= K:
                            acc(out, (h2, nl), c * c2)
        return EqElement(R, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> EqElement:
        out = self.ring.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, EqElement):
            return NotImplemented
        return self.ring is other.ring and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((id(self.ring), frozenset(self.terms.items())))
        return self._hash

    def is_zero(self) -> bool:
        return not self.terms

    def split_scalar(self) -> tuple[Fraction, EqElement]:
        key = (0, self.ring._zero_lam)
        c = self.terms.get(key, Fraction(0))
        rest = {k: v for k, v in self.terms.items() if k != key}
        return c, EqElement(self.ring, rest)

    def homogeneous_parts(self) -> dict[int, EqElement]:
        parts: dict[int, dict[Key, Fraction]] = {}
        for k, v in self.terms.items():
            parts.setdefault(k[0] + sum(k[1]), {})[k] = v
        return {d: EqElement(self.ring, t) for d, t in sorted(parts.items())}

    def substitute(self, hclass, lam_images: Sequence, target):
        """Ring map H -> hclass, lambda_i -> lam_images[i] into ``target``."""
        out = target.zero()
        for (a, lam), c in self.terms.items():
            term = hclass ** a
            for x, e in zip(lam_images, lam):
                for _ in range(e):
                    term = term * x
            out = out + term.scale(c)
        return out

    def at_zero(self, target: StructAlgebra):
        """lambda -> 0 into ``Q[H]/(H^{n+1})`` (needs K >= n to be exact)."""
        out = [Fraction(0)] * target.dim
        for (a, lam), c in self.terms.items():
            if not any(lam) and a < target.dim:
                out[a] += c
        return target.element(out)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (a, lam), c in sorted(self.terms.items()):
            mono = ([f"H^{a}"] if a else []) + [f"l{i}^{e}" for i, e in enumerate(lam) if e]
            parts.append(f"{c}" + ("*" + "*".join(mono) if mono else ""))
        return " + ".join(parts)


@dataclass
class DressedSeries:
    """``exp((t_0 + H ln q)/hbar) * sum_nu q^nu c_nu`` with the prefactor implicit."""

    ring: object
    hclass: object
    lambdas: list
    coefficients: list[HLaurent]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def from_base_j(cls, J: BaseJData, order: int) -> DressedSeries:
        alg = J.algebra
        n = alg.top_degree
        return cls(alg, alg["H"], [alg.zero()] * (n + 1), [J.coefficient((nu,)) for nu in range(order + 1)])


def equivariant_i(n: int, box: int, lambda_degree: int | None = None) -> DressedSeries:
    """``c_nu = 1 / prod_i prod_{m=1}^{nu} (H - lambda_i + m hbar)``."""
    R = EquivariantRing(n, lambda_degree)
    H = R.h()
    lams = R.lambdas()
    xs = [H - l for l in lams]
    coeffs = [HLaurent.one(R)]
    P = HLaurent.one(R)
    for nu in range(1, box + 1):
        for x in xs:
            P = P * HLaurent.linear(x, nu)
        coeffs.append(hl_invert(P))
    return DressedSeries(R, H, lams, coeffs)


def apply_d(s: DressedSeries, x: Fraction | int = 1) -> list[HLaurent]:
    """Residuals of ``prod_i (hbar q d/dq - lambda_i) - x q`` order by order.

    On ``q^nu`` times the prefactor, ``hbar q d/dq`` acts as ``H + nu hbar``,
    so the residual at ``q^nu`` is ``prod_i (H - lambda_i + nu hbar) c_nu - x c_{nu-1}``.
    """
    out = []
    for nu, c in enumerate(s.coefficients):
        op = HLaurent.one(s.ring)
        for lam in s.lambdas:
            op = op * HLaurent.linear(s.hclass - lam, nu)
        res = op * c
        if nu > 0:
            res = res - s.coefficients[nu - 1].scale(x)
        out.append(res)
    return out


def check_annihilation(n: int, box: int, lambda_degree: int | None = None, series: DressedSeries | None = None) -> Report:
    s = equivariant_i(n, box, lambda_degree) if series is None else series
    K = getattr(s.ring, "K", None)
    rep = Report("dmodule", anchor="prod_i (hbar q d/dq - lambda_i) - q annihilates I^T_{P^n}", box=f"({box})")
    for nu, r in enumerate(apply_d(s)):
        if not r.is_zero():
            rep.fail({"nu": nu, "reason": "nonzero residual"})
    if s.coefficients[0] != HLaurent.one(s.ring):
        rep.fail({"nu": 0, "reason": "c_0 != 1"})
    for nu, c in enumerate(s.coefficients[1:], start=1):
        lead = c.leading_exponent()
        if lead is not None and lead >= 0:
            rep.fail({"nu": nu, "reason": f"hbar-exponent {lead} >= 0 in c_nu"})
    rep.data.update({"n": n, "lambda_degree": K})
    return rep


def nonequivariant_limit(s: DressedSeries) -> BaseJData:
    """Set every lambda_i = 0; the result lives in ``Q[H]/(H^{n+1})``."""
    R = s.ring
    n = R.n
    if R.K < n:
        raise ValueError(f"lambda_degree {R.K} < n = {n}: the limit would lose classes")
    alg = truncated_polynomial_algebra(n, "H", name=f"H*P{n}")
    table = {(nu,): c.map_coefficients(lambda e: e.at_zero(alg), alg) for nu, c in enumerate(s.coefficients)}
    return BaseJData.explicit(alg, 1, table)
