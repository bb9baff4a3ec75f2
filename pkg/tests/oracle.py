"""Independent reference computations with sympy.

Nothing here touches the structure-constant machinery: rings are polynomial
quotients handled by Groebner normal forms, and inverses of ``x + m*hbar`` are
expanded as explicit geometric series in the nilpotent ``x``.
"""

from __future__ import annotations

from fractions import Fraction

import sympy as sp

hbar = sp.Symbol("hbar")


class QuotientRing:
    def __init__(self, gens, relations, top_degree):
        self.gens = list(gens)
        self.top = top_degree
        self.G = sp.groebner(relations, *self.gens, order="grevlex")

    def reduce(self, expr):
        poly = sp.Poly(sp.expand(expr), *self.gens)
        out = 0
        for mon, c in poly.terms():
            m = sp.Mul(*[g**e for g, e in zip(self.gens, mon)])
            _, r = self.G.reduce(m)
            out += c * r
        return sp.expand(out)

    def inv_linear(self, x, m):
        """``1/(x + m hbar)`` for nilpotent ``x``."""
        return sum((-x) ** k / (m * hbar) ** (k + 1) for k in range(self.top + 1))

    def factorial_ratio(self, x, s):
        out = sp.Integer(1)
        if s > 0:
            for m in range(1, s + 1):
                out *= self.inv_linear(x, m)
        else:
            for m in range(s + 1, 1):
                out *= x + m * hbar
        return out

    def to_terms(self, expr, labels):
        """``{hbar_exp: {label: Fraction}}`` with labels a dict monomial-expr -> label."""
        expr = self.reduce(expr)
        out: dict[int, dict[str, Fraction]] = {}
        for term in sp.Add.make_args(expr):
            if term == 0:
                continue
            coeff, rest = term.as_coeff_Mul()
            powers = rest.as_powers_dict()
            e = int(powers.get(hbar, 0))
            mono = sp.Mul(*[b**p for b, p in powers.items() if b != hbar])
            lab = labels[mono]
            slot = out.setdefault(e, {})
            slot[lab] = slot.get(lab, Fraction(0)) + Fraction(int(coeff.p), int(coeff.q))
        return {e: {k: v for k, v in d.items() if v} for e, d in out.items() if any(d.values())}


def hirzebruch(a):
    """``Q[H, z]/(H^2, z (z - a H))`` with the labels used by the library."""
    H, z = sp.symbols("H z")
    R = QuotientRing([z, H], [H**2, z * (z - a * H)], 2)
    labels = {sp.Integer(1): "1", H: "H", z: "z", H * z: "H*z"}
    return R, H, z, labels


def hirzebruch_i(a, nu, d):
    """I coefficient of P(O + O(a)) over P^1 at class (nu; d)."""
    R, H, z, labels = hirzebruch(a)
    expr = R.factorial_ratio(H, d) ** 2
    expr *= R.factorial_ratio(z, nu)
    expr *= R.factorial_ratio(z - a * H, nu - a * d)
    return R.to_terms(expr, labels)


def truncated_inverse(n, m):
    """``1/(H + m hbar)`` in ``Q[H]/(H^{n+1})``."""
    H = sp.Symbol("H")
    R = QuotientRing([H], [H ** (n + 1)], n)
    labels = {sp.Integer(1): "1", H: "H"}
    labels.update({H**t: f"H^{t}" for t in range(2, n + 1)})
    return R.to_terms(R.inv_linear(H, m), labels)


def projective_j(n, d):
    H = sp.Symbol("H")
    R = QuotientRing([H], [H ** (n + 1)], n)
    labels = {sp.Integer(1): "1", H: "H"}
    labels.update({H**t: f"H^{t}" for t in range(2, n + 1)})
    return R.to_terms(R.factorial_ratio(H, d) ** (n + 1), labels)
