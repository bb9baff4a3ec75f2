import pytest

from gk.bundle import GeometryError
from gk.geometries import BUILTIN_NAMES, builtin_base, load_base, shipped_bases


def test_every_builtin_builds():
    bases = shipped_bases()
    assert set(bases) == set(BUILTIN_NAMES)
    assert all(b.base_j is not None and b.fan is not None for b in bases.values())


@pytest.mark.parametrize(
    "name,n,k,pairings",
    [
        ("point", 1, 0, ((), ())),
        ("P3", 3, 0, ((),) * 4),
        ("F2", 1, 1, ((0,), (2,))),
        ("P1:0;1", 1, 1, ((0,), (1,))),
        ("P2:0;1;1", 2, 1, ((0,), (1,), (1,))),
        ("P1xP1:0,0;1,1", 1, 2, ((0, 0), (1, 1))),
    ],
)
def test_name_grammar(name, n, k, pairings):
    base = builtin_base(name)
    assert (base.n, base.k) == (n, k)
    assert base.grading.v_pairings == pairings


def test_canonical_pairings():
    assert builtin_base("P2:0;1").grading.kx_pairings == (-3,)
    assert builtin_base("P1xP1:0,0;1,0").grading.kx_pairings == (-2, -2)


@pytest.mark.parametrize("name", ["P5", "P0", "Q3", "P1:1;0", "P1:0", "P1:0;x", "P1xP1", "P1xP1:0,0;1", "point:x"])
def test_bad_names(name):
    with pytest.raises(GeometryError):
        builtin_base(name)


def test_missing_file():
    with pytest.raises(GeometryError, match="not found"):
        load_base("nowhere/geometry.json")
