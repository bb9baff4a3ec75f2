"""Exact coefficient arithmetic.

Three layers live here:

* rationals (``fractions.Fraction``) with a canonical string form,
* :class:`StructAlgebra`, a finite-dimensional graded commutative Q-algebra
  given by structure constants, and its elements :class:`AlgElement`,
* :class:`HLaurent`, finite Laurent polynomials in hbar whose coefficients lie
  in such an algebra (or in any ring exposing the same small protocol).

hbar carries degree 1, so ``hbar**s * a`` with ``a`` homogeneous of degree
``w`` has total degree ``s + w``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "AlgebraError",
    "AlgebraMismatch",
    "NonInvertible",
    "parse_rational",
    "format_rational",
    "StructAlgebra",
    "AlgElement",
    "AlgebraReport",
    "check_algebra",
    "HLaurent",
    "hl_invert",
    "solve_rational",
    "truncated_polynomial_algebra",
]


class AlgebraError(ValueError):
    pass


class AlgebraMismatch(AlgebraError):
    def __init__(self, msg: str = "algebra mismatch"):
        super().__init__(msg)


class NonInvertible(AlgebraError):
    def __init__(self, msg: str = "non-invertible element"):
        super().__init__(msg)


# ---------------------------------------------------------------------------
# rationals


def parse_rational(text) -> Fraction:
    if isinstance(text, bool):
        raise AlgebraError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise AlgebraError(f"rationals are serialized as strings, got {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise AlgebraError(f"not a rational: {text!r}") from exc


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# exact linear algebra (small dense systems)


def rref(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form. Returns (nonzero rows, pivot columns)."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def solve_rational(columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> list[Fraction] | None:
    """Solve ``sum_j x_j * columns[j] == target`` exactly; None if inconsistent."""
    k = len(columns)
    nrows = len(target)
    aug = [[Fraction(columns[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(nrows)]
    red, piv = rref(aug, k + 1)
    if k in piv:
        return None
    if len(piv) < k:
        raise AlgebraError("columns are linearly dependent")
    x = [Fraction(0)] * k
    for row, c in zip(red, piv):
        x[c] = row[k]
    return x


# ---------------------------------------------------------------------------
# structure-constant algebras


class StructAlgebra:
    """Graded commutative algebra with basis ``labels`` and a sparse product table.

    ``table`` maps an index pair ``(i, j)`` to a dict ``{k: coefficient}``;
    absent pairs multiply to zero. Passing only one of ``(i, j)``/``(j, i)`` is
    enough, the other is mirrored.
    """

    def __init__(
        self,
        labels: Sequence[str],
        degrees: Sequence[int],
        table: Mapping[tuple[int, int], Mapping[int, Fraction]],
        one_index: int = 0,
        name: str = "",
        validate: bool = True,
    ):
        if len(labels) != len(degrees):
            raise AlgebraError("labels and degrees differ in length")
        if len(set(labels)) != len(labels):
            raise AlgebraError("duplicate basis labels")
        self.labels = tuple(labels)
        self.degrees = tuple(int(d) for d in degrees)
        if any(d < 0 for d in self.degrees):
            raise AlgebraError("negative degree")
        self.one_index = one_index
        self.name = name
        self.dim = len(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.top_degree = max(self.degrees) if self.degrees else 0
        # ordered pairs; a pair given in one order only is mirrored
        tab: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), coords in table.items():
            clean = {k: Fraction(v) for k, v in coords.items() if v != 0}
            if clean:
                tab[(i, j)] = clean
        for (i, j) in list(tab):
            if (j, i) not in tab and (j, i) not in table:
                tab[(j, i)] = tab[(i, j)]
        self._table = tab
        self._zero = AlgElement(self, (Fraction(0),) * self.dim)
        if validate:
            report = check_algebra(self)
            if not report.ok:
                raise AlgebraError(report.failures[0])

    def __repr__(self) -> str:
        return f"StructAlgebra({self.name or '?'}, dim={self.dim})"

    def raw_product(self, i: int, j: int) -> dict[int, Fraction]:
        return self._table.get((i, j), {})

    # element constructors

    def zero(self) -> AlgElement:
        return self._zero

    def one(self) -> AlgElement:
        return self.basis_element(self.one_index)

    def basis_element(self, i) -> AlgElement:
        if isinstance(i, str):
            i = self.index[i]
        c = [Fraction(0)] * self.dim
        c[i] = Fraction(1)
        return AlgElement(self, tuple(c))

    def __getitem__(self, label: str) -> AlgElement:
        return self.basis_element(label)

    def element(self, coords) -> AlgElement:
        """Element from a dense vector or a ``{label_or_index: rational}`` map."""
        if isinstance(coords, Mapping):
            c = [Fraction(0)] * self.dim
            for k, v in coords.items():
                idx = self.index[k] if isinstance(k, str) else int(k)
                c[idx] += parse_rational(v) if isinstance(v, str) else Fraction(v)
            return AlgElement(self, tuple(c))
        if len(coords) != self.dim:
            raise AlgebraError("coordinate vector has wrong length")
        return AlgElement(self, tuple(Fraction(v) for v in coords))

    def indices_of_degree(self, d: int) -> list[int]:
        return [i for i, dd in enumerate(self.degrees) if dd == d]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "basis": [{"label": l, "degree": d} for l, d in zip(self.labels, self.degrees)],
            "mult": [
                {"i": self.labels[i], "j": self.labels[j],
                 "coords": {self.labels[k]: format_rational(v) for k, v in sorted(c.items())}}
                for (i, j), c in sorted(self._table.items()) if i <= j
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, validate: bool = True) -> StructAlgebra:
        labels = [b["label"] for b in data["basis"]]
        degrees = [int(b["degree"]) for b in data["basis"]]
        index = {l: i for i, l in enumerate(labels)}

        def idx(x):
            if isinstance(x, str):
                if x not in index:
                    raise AlgebraError(f"unknown basis label {x!r}")
                return index[x]
            return int(x)

        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for entry in data.get("mult", []):
            i, j = idx(entry["i"]), idx(entry["j"])
            table[(i, j)] = {idx(k): parse_rational(v) for k, v in entry["coords"].items()}
        one = labels.index(data["one"]) if "one" in data else degrees.index(0)
        return cls(labels, degrees, table, one_index=one, name=data.get("name", ""), validate=validate)


class AlgElement:
    __slots__ = ("algebra", "coords", "_hash")

    def __init__(self, algebra: StructAlgebra, coords: tuple[Fraction, ...]):
        self.algebra = algebra
        self.coords = coords
        self._hash = None

    @property
    def ring(self):
        return self.algebra

    def _check(self, other: AlgElement) -> None:
        if other.algebra is not self.algebra:
            raise AlgebraMismatch()

    def __add__(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        self._check(other)
        return AlgElement(self.algebra, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        self._check(other)
        return AlgElement(self.algebra, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return AlgElement(self.algebra, tuple(-a for a in self.coords))

    def scale(self, c) -> AlgElement:
        c = Fraction(c)
        return AlgElement(self.algebra, tuple(a * c for a in self.coords))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, AlgElement):
            return NotImplemented
        return alg_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> AlgElement:
        out = self.algebra.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        return self.algebra is other.algebra and self.coords == other.coords

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((id(self.algebra), self.coords))
        return self._hash

    def is_zero(self) -> bool:
        return not any(self.coords)

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coords) if c]

    def homogeneous_parts(self) -> dict[int, AlgElement]:
        parts: dict[int, list[Fraction]] = {}
        degs = self.algebra.degrees
        for i, c in enumerate(self.coords):
            if c:
                parts.setdefault(degs[i], [Fraction(0)] * self.algebra.dim)[i] = c
        return {d: AlgElement(self.algebra, tuple(v)) for d, v in sorted(parts.items())}

    def degrees_present(self) -> set[int]:
        degs = self.algebra.degrees
        return {degs[i] for i, c in enumerate(self.coords) if c}

    def split_scalar(self) -> tuple[Fraction, AlgElement]:
        """Split into ``c * one + rest`` with ``rest`` of strictly positive degree."""
        alg = self.algebra
        for i in alg.indices_of_degree(0):
            if i != alg.one_index and self.coords[i]:
                raise NonInvertible("degree-zero part is not a multiple of the unit")
        c = self.coords[alg.one_index]
        rest = list(self.coords)
        rest[alg.one_index] = Fraction(0)
        return c, AlgElement(alg, tuple(rest))

    def to_json(self) -> dict[str, str]:
        return {self.algebra.labels[i]: format_rational(c) for i, c in enumerate(self.coords) if c}

    def __repr__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i, c in enumerate(self.coords):
            if c:
                lab = self.algebra.labels[i]
                terms.append(format_rational(c) if i == self.algebra.one_index else f"{format_rational(c)}*{lab}")
        return " + ".join(terms)


def alg_mul(a: AlgElement, b: AlgElement) -> AlgElement:
    if a.algebra is not b.algebra:
        raise AlgebraMismatch()
    alg = a.algebra
    out = [Fraction(0)] * alg.dim
    sa = [(i, c) for i, c in enumerate(a.coords) if c]
    sb = [(j, c) for j, c in enumerate(b.coords) if c]
    for i, ca in sa:
        for j, cb in sb:
            prod = alg.raw_product(i, j)
            if prod:
                f = ca * cb
                for k, v in prod.items():
                    out[k] += f * v
    return AlgElement(alg, tuple(out))


# ---------------------------------------------------------------------------
# validation


class AlgebraReport:
    def __init__(self):
        self.failures: list[str] = []
        self.checks: dict[str, bool] = {}

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, check: str, msg: str) -> None:
        self.checks[check] = False
        self.failures.append(msg)

    def to_json(self) -> dict:
        return {"status": "pass" if self.ok else "fail", "checks": dict(sorted(self.checks.items())),
                "failures": list(self.failures)}


def check_algebra(alg: StructAlgebra, max_failures: int = 20) -> AlgebraReport:
    """Commutativity, unit law, grading additivity and associativity on all basis triples."""
    rep = AlgebraReport()
    for name in ("commutativity", "unit", "grading", "associativity"):
        rep.checks[name] = True
    n = alg.dim
    lab = alg.labels
    degs = alg.degrees
    for (i, j), coords in alg._table.items():
        if not (0 <= i < n and 0 <= j < n) or any(not 0 <= k < n for k in coords):
            rep.fail("grading", f"product table index out of range at ({i},{j})")
            return rep
    for (i, j), coords in alg._table.items():
        if i < j and alg.raw_product(j, i) != coords:
            rep.fail("commutativity", f"commutativity failed at ({lab[i]},{lab[j]})")
    commutative = rep.checks["commutativity"]
    one = alg.one_index
    if degs[one] != 0:
        rep.fail("unit", "unit element must have degree 0")
    for b in range(n):
        if alg.raw_product(one, b) != {b: 1} or alg.raw_product(b, one) != {b: 1}:
            rep.fail("unit", f"unit law failed at ({lab[one]},{lab[b]})")
    for (i, j), coords in alg._table.items():
        for k in coords:
            if degs[k] != degs[i] + degs[j]:
                rep.fail("grading", f"grading failed at ({lab[i]},{lab[j]}) -> {lab[k]}")
                break
    if len(rep.failures) >= max_failures:
        return rep

    def mul_vec(u: dict[int, Fraction], j: int) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for i, c in u.items():
            for k, v in alg.raw_product(i, j).items():
                out[k] = out.get(k, 0) + c * v
        return {k: v for k, v in out.items() if v}

    for i, j, k in product(range(n), repeat=3):
        if commutative and i > k:
            continue  # mirror of (k, j, i)
        left = mul_vec(dict(alg.raw_product(i, j)), k)
        right = {}
        for m, c in alg.raw_product(j, k).items():
            for t, v in alg.raw_product(i, m).items():
                right[t] = right.get(t, 0) + c * v
        right = {t: v for t, v in right.items() if v}
        if left != right:
            rep.fail("associativity", f"associativity failed at ({lab[i]},{lab[j]},{lab[k]})")
            if len(rep.failures) >= max_failures:
                return rep
    return rep



# ---------------------------------------------------------------------------
# hbar-Laurent polynomials


class HLaurent:
    """Finite sum ``sum_s hbar**s * a_s`` with coefficients in ``ring``.

    ``ring`` is a :class:`StructAlgebra` or any object with ``zero()``,
    ``one()`` and ``top_degree``; coefficients must support ``+ - *``,
    ``scale``, ``is_zero``, ``split_scalar`` and ``homogeneous_parts``.
    """

    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms: Mapping[int, object] | None = None):
        self.ring = ring
        clean = {}
        if terms:
            for s, a in terms.items():
                if a.ring is not ring:
                    raise AlgebraMismatch()
                if not a.is_zero():
                    clean[int(s)] = a
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def const(cls, elem, power: int = 0) -> HLaurent:
        return cls(elem.ring, {power: elem})

    @classmethod
    def one(cls, ring) -> HLaurent:
        return cls(ring, {0: ring.one()})

    @classmethod
    def hbar(cls, ring, power: int = 1, coeff=1) -> HLaurent:
        return cls(ring, {power: ring.one().scale(coeff)})

    @classmethod
    def linear(cls, x, m) -> HLaurent:
        """``x + m*hbar`` for a ring element ``x``."""
        ring = x.ring
        return cls(ring, {0: x}) + cls(ring, {1: ring.one().scale(m)})

    def _coerce(self, other) -> HLaurent:
        if isinstance(other, HLaurent):
            if other.ring is not self.ring:
                raise AlgebraMismatch()
            return other
        if isinstance(other, (int, Fraction)):
            return HLaurent(self.ring, {0: self.ring.one().scale(other)})
        if getattr(other, "ring", None) is self.ring:
            return HLaurent(self.ring, {0: other})
        raise AlgebraMismatch()

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for s, a in other.terms.items():
            out[s] = out[s] + a if s in out else a
        return HLaurent(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return HLaurent(self.ring, {s: -a for s, a in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> HLaurent:
        c = Fraction(c)
        if c == 0:
            return HLaurent(self.ring)
        return HLaurent(self.ring, {s: a.scale(c) for s, a in self.terms.items()})

    def shift(self, k: int) -> HLaurent:
        """Multiply by ``hbar**k``."""
        return HLaurent(self.ring, {s + k: a for s, a in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        out: dict[int, object] = {}
        for s, a in self.terms.items():
            for t, b in other.terms.items():
                p = a * b
                if p.is_zero():
                    continue
                out[s + t] = out[s + t] + p if s + t in out else p
        return HLaurent(self.ring, out)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int) -> HLaurent:
        if k < 0:
            return hl_invert(self) ** (-k)
        out = HLaurent.one(self.ring)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HLaurent(self.ring, {0: self.ring.one().scale(other)})
        if not isinstance(other, HLaurent):
            return NotImplemented
        return self.ring is other.ring and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def exponents(self) -> list[int]:
        return list(self.terms)

    def leading_exponent(self) -> int | None:
        """Largest hbar-exponent present (None for zero)."""
        return max(self.terms) if self.terms else None

    def coefficient(self, s: int):
        return self.terms.get(s, self.ring.zero())

    def monomials(self) -> Iterator[tuple[int, int, object]]:
        """Yield ``(hbar_exponent, class_degree, homogeneous coefficient)``."""
        for s, a in self.terms.items():
            for w, part in a.homogeneous_parts().items():
                yield s, w, part

    def map_coefficients(self, f, ring) -> HLaurent:
        return HLaurent(ring, {s: f(a) for s, a in self.terms.items()})

    def to_json(self) -> dict[str, dict[str, str]]:
        return {str(s): a.to_json() for s, a in self.terms.items()}

    @classmethod
    def from_json(cls, ring, data: Mapping[str, Mapping[str, str]]) -> HLaurent:
        return cls(ring, {int(s): ring.element(c) for s, c in data.items()})

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({a!r})*hbar^{s}" for s, a in self.terms.items())


def hl_invert(x: HLaurent) -> HLaurent:
    """Inverse of ``c*hbar**s + (nilpotent)`` by a terminating geometric series."""
    scalars = {}
    rest = {}
    for s, a in x.terms.items():
        c, r = a.split_scalar()
        if c:
            scalars[s] = c
        if not r.is_zero():
            rest[s] = r
    if len(scalars) != 1:
        raise NonInvertible()
    (s0, c0), = scalars.items()
    ring = x.ring
    inv_lead = HLaurent(ring, {-s0: ring.one().scale(1 / c0)})
    y = HLaurent(ring, rest) * inv_lead  # nilpotent: every coefficient has positive degree
    neg_y = -y
    out = HLaurent.one(ring)
    term = HLaurent.one(ring)
    for _ in range(ring.top_degree + 1):
        term = term * neg_y
        if term.is_zero():
            break
        out = out + term
    else:
        if not (term * neg_y).is_zero():
            raise NonInvertible("remainder is not nilpotent")
    return out * inv_lead


def sum_elements(items: Iterable, zero):
    out = zero
    for x in items:
        out = out + x
    return out


def truncated_polynomial_algebra(n: int, var: str = "H", name: str = "") -> StructAlgebra:
    """``Q[var]/(var**(n+1))`` with basis ``1, var, var^2, ...``."""
    labels = ["1"] + [var if t == 1 else f"{var}^{t}" for t in range(1, n + 1)]
    table = {(s, t): {s + t: Fraction(1)} for s in range(n + 1) for t in range(n + 1) if s + t <= n}
    return StructAlgebra(labels, list(range(n + 1)), table, name=name or f"Q[{var}]/({var}^{n + 1})")
