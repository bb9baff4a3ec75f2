from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from gk.algebra import AlgebraMismatch, HLaurent, truncated_polynomial_algebra
from gk.novikov import Box, CurveClass, GradingData, NovikovError, NovikovSeries, class_degree, nov_mul

A = truncated_polynomial_algebra(2)


def test_curve_class_text_round_trip():
    c = CurveClass(2, (1, 0, 3))
    assert str(c) == "(2; 1,0,3)"
    assert CurveClass.parse(str(c)) == c
    assert CurveClass.parse("(4; )") == CurveClass(4, ())
    with pytest.raises(NovikovError):
        CurveClass.parse("2;1")


def test_curve_class_order_and_difference():
    a, b = CurveClass(1, (2,)), CurveClass(3, (2,))
    assert a <= b and not b <= a
    assert b - a == CurveClass(2, (0,))
    with pytest.raises(NovikovError):
        a - b
    assert CurveClass.zero(2).is_zero()


@pytest.mark.parametrize(
    "spec,k,expected",
    [
        (3, 1, Box(3, (3,))),
        ("3,3", 1, Box(3, (3,))),
        ("(3,2)", 2, Box(3, (2, 2))),
        ([2, 1, 0], 2, Box(2, (1, 0))),
        (4, 0, Box(4, ())),
    ],
)
def test_box_parse(spec, k, expected):
    assert Box.parse(spec, k) == expected


@pytest.mark.parametrize("spec", ["", [-1], [1, 2, 3]])
def test_box_parse_rejects(spec):
    with pytest.raises(NovikovError):
        Box.parse(spec, 1)


def test_box_classes():
    box = Box(1, (2,))
    assert box.size() == 6 == len(list(box.classes()))
    assert CurveClass(1, (2,)) in box and CurveClass(2, (0,)) not in box


def test_class_degree_examples():
    fiber = GradingData(1, (), ((), ()))
    assert class_degree(CurveClass(1, ()), fiber) == 2
    # F1: K_X . line = -2, V = O + O(1)
    f1 = GradingData(1, (-2,), ((0,), (1,)))
    assert class_degree(CurveClass(0, (1,)), f1) == 1
    assert class_degree(CurveClass(1, (1,)), f1) == 3


def test_grading_data_rejects_nontrivial_l0():
    with pytest.raises(NovikovError):
        GradingData(1, (-2,), ((1,), (1,)))


def brute_force_product(a: dict, b: dict, box: Box) -> dict:
    """Plain double loop over pairs of classes, products kept only inside the box."""
    out = {}
    for (ca, va), (cb, vb) in product(a.items(), b.items()):
        key = (ca[0] + cb[0],) + tuple(x + y for x, y in zip(ca[1:], cb[1:]))
        if key[0] > box.nu_max or any(x > m for x, m in zip(key[1:], box.d_max)):
            continue
        out[key] = out[key] + va * vb if key in out else va * vb
    return {k: v for k, v in out.items() if not v.is_zero()}


small = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def laurent(draw):
    terms = {}
    for s in draw(st.lists(st.integers(-3, 1), max_size=2, unique=True)):
        terms[s] = A.element([draw(small) for _ in range(A.dim)])
    return HLaurent(A, terms)


@st.composite
def sparse_series(draw, box):
    classes = list(box.classes())
    picked = draw(st.lists(st.sampled_from(classes), max_size=4, unique=True))
    return {c.key(): draw(laurent()) for c in picked}


@settings(max_examples=60)
@given(st.data())
def test_nov_mul_matches_brute_force(data):
    box = Box(2, (2,))
    a, b = data.draw(sparse_series(box)), data.draw(sparse_series(box))
    sa = NovikovSeries(A, box, {CurveClass(k[0], k[1:]): v for k, v in a.items()})
    sb = NovikovSeries(A, box, {CurveClass(k[0], k[1:]): v for k, v in b.items()})
    got = {c.key(): v for c, v in nov_mul(sa, sb).items()}
    assert got == brute_force_product(a, b, box)


@settings(max_examples=30)
@given(st.data())
def test_nov_mul_ring_laws(data):
    box = Box(1, (1,))

    def draw():
        return NovikovSeries(A, box, {CurveClass(k[0], k[1:]): v for k, v in data.draw(sparse_series(box)).items()})

    x, y, w = draw(), draw(), draw()
    assert x * y == y * x
    assert (x * y) * w == x * (y * w)
    assert x * NovikovSeries.one(A, box) == x
    assert x * (y + w) == x * y + x * w


def test_series_checks_box_and_ring():
    box = Box(1, (1,))
    with pytest.raises(NovikovError):
        NovikovSeries(A, box, {CurveClass(2, (0,)): HLaurent.one(A)})
    with pytest.raises(NovikovError):
        NovikovSeries.one(A, box) * NovikovSeries.one(A, Box(2, (1,)))
    B = truncated_polynomial_algebra(1)
    with pytest.raises(AlgebraMismatch):
        NovikovSeries(A, box, {CurveClass(0, (0,)): HLaurent.one(B)})


def test_series_json_and_zero_pruning():
    box = Box(1, (1,))
    s = NovikovSeries(A, box, {CurveClass(1, (0,)): HLaurent.hbar(A, -1, Fraction(1, 3)),
                               CurveClass(0, (1,)): HLaurent(A)})
    assert list(s.coeffs) == [CurveClass(1, (0,))]
    assert NovikovSeries.from_json(A, box, s.to_json()) == s
    assert s[CurveClass(0, (1,))].is_zero()
