"""Base varieties, the projective bundle P(L_0 + ... + L_n), and its intersection bookkeeping."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import (
    AlgElement,
    AlgebraError,
    HLaurent,
    StructAlgebra,
    check_algebra,
    parse_rational,
    solve_rational,
)
from .novikov import CurveClass, GradingData

__all__ = [
    "GeometryError",
    "BaseVariety",
    "BundleSpace",
    "build_bundle",
    "canonical_class",
    "pair_class",
    "nef_coordinates",
]


class GeometryError(ValueError):
    pass


def nef_coordinates(nef_basis: Sequence[AlgElement], x: AlgElement) -> list[Fraction]:
    """Coordinates of a degree-1 class in the nef basis (= pairings with the dual curve basis)."""
    if not nef_basis:
        if not x.is_zero():
            raise GeometryError("nonzero degree-1 class on a base with empty nef basis")
        return []
    sol = solve_rational([p.coords for p in nef_basis], x.coords)
    if sol is None:
        raise GeometryError(f"class {x!r} is not in the span of the nef basis")
    return sol


def _as_int(x: Fraction, what: str) -> int:
    if x.denominator != 1:
        raise GeometryError(f"{what} is not integral: {x}")
    return int(x)


class BaseVariety:
    """Cohomology of the base X together with the line bundles L_0 (trivial), ..., L_n."""

    def __init__(
        self,
        name: str,
        algebra: StructAlgebra,
        nef_basis: Sequence[AlgElement],
        canonical_class: AlgElement,
        line_bundles: Sequence[AlgElement],
        base_j=None,
        fan=None,
        ray_classes: Sequence[AlgElement] | None = None,
        stated_pairings: Sequence[Sequence[int]] | None = None,
        noneffective: Sequence[Sequence[int]] = (),
    ):
        self.name = name
        self.algebra = algebra
        self.nef_basis = list(nef_basis)
        self.canonical = canonical_class
        self.line_bundles = list(line_bundles)
        self.base_j = base_j
        self.fan = fan
        self.ray_classes = list(ray_classes) if ray_classes is not None else None
        self.noneffective = {tuple(int(x) for x in d) for d in noneffective}
        self.validate(stated_pairings)
        self.grading = GradingData(
            n=self.n,
            kx_pairings=tuple(_as_int(x, "K_X pairing") for x in nef_coordinates(self.nef_basis, self.canonical)),
            v_pairings=tuple(
                tuple(_as_int(x, f"c1(L_{i}) pairing") for x in nef_coordinates(self.nef_basis, L))
                for i, L in enumerate(self.line_bundles)
            ),
        )

    @property
    def n(self) -> int:
        return len(self.line_bundles) - 1

    @property
    def k(self) -> int:
        return len(self.nef_basis)

    def validate(self, stated_pairings=None) -> None:
        rep = check_algebra(self.algebra)
        if not rep.ok:
            raise GeometryError(rep.failures[0])
        alg = self.algebra
        if not self.line_bundles:
            raise GeometryError("need at least the trivial summand L_0")
        for x in [*self.nef_basis, self.canonical, *self.line_bundles]:
            if x.algebra is not alg:
                raise GeometryError("class does not live in the base algebra")
            if not x.is_zero() and x.degrees_present() != {1}:
                raise GeometryError(f"class {x!r} is not of degree 1")
        if not self.line_bundles[0].is_zero():
            raise GeometryError("c1(L_0) must be zero")
        h2 = len(alg.indices_of_degree(1))
        if len(self.nef_basis) != h2:
            raise GeometryError(f"nef basis has {len(self.nef_basis)} classes but H^2 has dimension {h2}")
        if stated_pairings is not None:
            for i, (L, stated) in enumerate(zip(self.line_bundles, stated_pairings)):
                got = nef_coordinates(self.nef_basis, L)
                if [Fraction(s) for s in stated] != got:
                    raise GeometryError(
                        f"stated pairings {list(stated)} for L_{i} disagree with its class ({[str(g) for g in got]})"
                    )
        if self.ray_classes is not None and self.fan is not None:
            if len(self.ray_classes) != len(self.fan.rays):
                raise GeometryError("need one divisor class per ray")

    def is_effective(self, d: Sequence[int]) -> bool:
        return tuple(d) not in self.noneffective

    def nef_coords(self, x: AlgElement) -> list[Fraction]:
        return nef_coordinates(self.nef_basis, x)

    def c1v(self) -> AlgElement:
        out = self.algebra.zero()
        for L in self.line_bundles:
            out = out + L
        return out

    # JSON ------------------------------------------------------------------

    @classmethod
    def from_json(cls, data: Mapping) -> BaseVariety:
        from .hypergeometric import BaseJData
        from .toric import FanData

        try:
            alg = StructAlgebra.from_json(data, validate=False)
        except KeyError as exc:
            raise GeometryError(f"missing field {exc.args[0]!r}") from exc
        rep = check_algebra(alg)
        if not rep.ok:
            raise GeometryError(rep.failures[0])

        def elem(spec, where):
            if isinstance(spec, str):
                if spec not in alg.index:
                    raise GeometryError(f"{where}: unknown basis label {spec!r}")
                return alg[spec]
            if isinstance(spec, Mapping):
                try:
                    return alg.element(spec)
                except (KeyError, AlgebraError) as exc:
                    raise GeometryError(f"{where}: bad coordinates {spec!r}") from exc
            raise GeometryError(f"{where}: expected a label or a coordinate map")

        for key in ("nef", "canonical", "bundles"):
            if key not in data:
                raise GeometryError(f"missing field {key!r}")
        nef = [elem(x, f"nef[{i}]") for i, x in enumerate(data["nef"])]
        canonical = elem(data["canonical"], "canonical")
        bundles = [elem(b["coords"], f"bundles[{i}].coords") for i, b in enumerate(data["bundles"])]
        stated = None
        if all("pairings" in b for b in data["bundles"]):
            stated = [[int(x) for x in b["pairings"]] for b in data["bundles"]]
        fan = FanData.from_json(data["fan"]) if "fan" in data else None
        rays = [elem(x, f"ray_classes[{i}]") for i, x in enumerate(data["ray_classes"])] if "ray_classes" in data else None
        hint = data.get("effective_hint") or {}
        base = cls(
            data.get("name", ""),
            alg,
            nef,
            canonical,
            bundles,
            fan=fan,
            ray_classes=rays,
            stated_pairings=stated,
            noneffective=hint.get("noneffective", ()),
        )
        base.base_j = BaseJData.from_json(base, data.get("base_j"))
        return base

    def to_json(self) -> dict:
        alg = self.algebra.to_json()
        out = {
            "name": self.name,
            "basis": alg["basis"],
            "mult": alg["mult"],
            "nef": [p.to_json() for p in self.nef_basis],
            "canonical": self.canonical.to_json(),
            "bundles": [
                {"label": f"L{i}", "coords": L.to_json(), "pairings": list(self.grading.v_pairings[i])}
                for i, L in enumerate(self.line_bundles)
            ],
        }
        if self.fan is not None:
            out["fan"] = self.fan.to_json()
        if self.ray_classes is not None:
            out["ray_classes"] = [r.to_json() for r in self.ray_classes]
        if self.base_j is not None:
            out["base_j"] = self.base_j.to_json()
        if self.noneffective:
            out["effective_hint"] = {"noneffective": [list(d) for d in sorted(self.noneffective)]}
        return out


class BundleSpace:
    """H*(P(V)) as the free H*(X)-module on 1, z, ..., z^n."""

    def __init__(self, base: BaseVariety, algebra: StructAlgebra, relation: bool = True):
        self.base = base
        self.algebra = algebra
        self.relation = relation
        self.z = algebra["z"]
        self._pull_cache: dict[AlgElement, AlgElement] = {}

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def grading(self) -> GradingData:
        return self.base.grading

    def pullback(self, x: AlgElement) -> AlgElement:
        if x.algebra is not self.base.algebra:
            raise GeometryError("pullback of a class not on the base")
        # base basis element a sits at bundle index a (the z^0 block)
        coords = tuple(x.coords) + (Fraction(0),) * (self.algebra.dim - x.algebra.dim)
        return AlgElement(self.algebra, coords)

    def pullback_hl(self, x: HLaurent) -> HLaurent:
        return x.map_coefficients(self.pullback, self.algebra)

    def divisor(self, i: int) -> AlgElement:
        """``z - c1(L_i)``, the class of the i-th section complement."""
        return self.z - self.pullback(self.base.line_bundles[i])


def _z_label(base_label: str, t: int, one_label: str) -> str:
    zpart = "z" if t == 1 else f"z^{t}"
    if t == 0:
        return base_label
    if base_label == one_label:
        return zpart
    return f"{base_label}*{zpart}"


def build_bundle(base: BaseVariety, relation: bool = True) -> BundleSpace:
    """Structure constants of ``H*X[z] / (z * prod_{i>=1} (z - c1(L_i)))``.

    With ``relation=False`` the defining relation is replaced by a plain
    truncation ``z**T = 0`` past the top degree; only useful as a negative
    control.
    """
    base.validate()
    X = base.algebra
    n = base.n
    dX = X.dim
    if relation:
        tmax = n
    else:
        tmax = n + X.top_degree + 1
    # signed elementary symmetric functions of c1(L_1..L_n):
    # z^{n+1} = sum_{t=1}^{n} (-1)^{t+1} e_t z^{n+1-t}
    e = [X.one()] + [X.zero()] * n
    for L in base.line_bundles[1:]:
        for t in range(n, 0, -1):
            e[t] = e[t] + e[t - 1] * L
    one_label = X.labels[X.one_index]
    labels, degrees = [], []
    for t in range(tmax + 1):
        for a in range(dX):
            labels.append(_z_label(X.labels[a], t, one_label))
            degrees.append(X.degrees[a] + t)

    def reduce(powers: list[AlgElement]) -> list[AlgElement]:
        powers = list(powers)
        for p in range(len(powers) - 1, tmax, -1):
            c = powers[p]
            if c.is_zero():
                continue
            powers[p] = X.zero()
            if not relation:
                continue
            for t in range(1, n + 1):
                term = c * e[t]
                powers[p - t] = powers[p - t] + (term if t % 2 == 1 else -term)
        return powers[: tmax + 1]

    table: dict[tuple[int, int], dict[int, Fraction]] = {}
    for s in range(tmax + 1):
        for t in range(s, tmax + 1):
            for a in range(dX):
                for b in range(dX):
                    i, j = s * dX + a, t * dX + b
                    if i > j:
                        continue
                    prod = X.basis_element(a) * X.basis_element(b)
                    if prod.is_zero():
                        continue
                    powers = [X.zero()] * (s + t + 1)
                    powers[s + t] = prod
                    red = reduce(powers)
                    coords = {}
                    for u, cu in enumerate(red):
                        for c_idx, v in enumerate(cu.coords):
                            if v:
                                coords[u * dX + c_idx] = v
                    if coords:
                        table[(i, j)] = coords
    name = f"H*P({base.name})" if relation else f"H*({base.name})[z]/(z^{tmax + 1})"
    alg = StructAlgebra(labels, degrees, table, one_index=X.one_index, name=name)
    bundle = BundleSpace(base, alg, relation=relation)
    if relation:
        rel = bundle.z
        for i in range(1, n + 1):
            rel = rel * bundle.divisor(i)
        if not rel.is_zero():
            raise GeometryError("defining relation does not vanish in the constructed ring")
    return bundle


def canonical_class(b: BundleSpace) -> AlgElement:
    """``pi^* K_X + pi^* c1(V) - (n+1) z``."""
    return b.pullback(b.base.canonical) + b.pullback(b.base.c1v()) - b.z.scale(b.n + 1)


def pair_class(b: BundleSpace, divisor: AlgElement, c: CurveClass) -> Fraction:
    """Intersection number of a divisor with ``nu [line] + s_0_* beta``.

    z pairs to nu (z restricts to the hyperplane class on a fiber and vanishes
    on the zero section), pi^* p_j pairs to d_j.
    """
    alg = b.algebra
    if divisor.algebra is not alg:
        raise GeometryError("divisor is not a class on the bundle")
    if divisor.is_zero():
        return Fraction(0)
    if divisor.degrees_present() != {1}:
        raise GeometryError("pairing needs a degree-1 class")
    X = b.base.algebra
    dX = X.dim
    z_coeff = divisor.coords[dX + X.one_index]
    base_part = AlgElement(X, divisor.coords[:dX])
    coords = b.base.nef_coords(base_part)
    if c.k != len(coords):
        raise GeometryError("curve class rank does not match the base")
    return z_coeff * c.nu + sum(x * d for x, d in zip(coords, c.d))
