from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from gk.algebra import HLaurent, NonInvertible
from gk.bundle import build_bundle
from gk.geometries import builtin_base
from gk.hypergeometric import base_j_projective, check_homogeneity, factorial_ratio
from gk.novikov import Box, CurveClass, GradingData
from gk.qhsp import (
    LefschetzSpec,
    RatioSymbol,
    change_of_variables_check,
    check_collapse,
    collapse_negative_control,
    exp_series,
    i_w_series,
    inverse_ratio,
    lefschetz_factor,
    ratio_symbol,
)


def bundle(name):
    return build_bundle(builtin_base(name))


def test_exponential_coefficients():
    b = bundle("F1")
    ex = exp_series(b.algebra, Box(5, (0,)))
    for d in range(6):
        assert ex[CurveClass(d, (0,))] == HLaurent.hbar(b.algebra, -d, Fraction(1, factorial(d)))
    assert ex[CurveClass(3, (0,))] == HLaurent.hbar(b.algebra, -3, Fraction(1, 6))


def test_section_collapse_value():
    # (z - p) / ((z + hbar)(z + 2 hbar)) = (z - p) / (2 hbar^2) on F1
    b = bundle("F1")
    E = HLaurent.const(b.divisor(1))
    got = E * factorial_ratio(b.z, 2)
    assert got == HLaurent(b.algebra, {-2: (b.z - b.algebra["H"]).scale(Fraction(1, 2))})


@pytest.mark.parametrize("name", ["F1", "F0", "P2:0;1", "P2:0;1;1", "point", "P1xP1:0,0;1,1"])
def test_collapse_and_change_of_variables(name):
    b = bundle(name)
    box = Box(3, (3,) * b.base.k) if b.base.k < 2 else Box(2, (2,) * b.base.k)
    rep = check_collapse(b, box)
    assert rep.ok, rep.failures[:3]
    assert change_of_variables_check(b, box).ok


@pytest.mark.parametrize("name", ["F1", "P2:0;1", "point:2"])
def test_negative_control_fails(name):
    b = bundle(name)
    rep = collapse_negative_control(b, Box(3, (1,) * b.base.k))
    assert not rep.ok
    assert all(f["stage"] == 2 for f in rep.failures)


@settings(max_examples=50)
@given(st.lists(st.integers(-4, 4), min_size=2, max_size=4), st.integers(0, 4))
def test_stage_one_telescopes_for_any_pairings(vs, d):
    sym = RatioSymbol()
    for i, v in enumerate([0] + vs):
        sym = sym * ratio_symbol(i, d - v)
    for k, v in enumerate(vs, start=1):
        sym = sym * ratio_symbol(k, d - v).inverse()
    assert sym == ratio_symbol(0, d)


@pytest.mark.parametrize("b", [0, 1, 2, 3])
def test_reciprocal_orientation(b):
    x = bundle("F1").divisor(1)
    assert inverse_ratio(x, b) * factorial_ratio(x, b) == 1


def test_inverse_ratio_of_negative_pairing_is_not_defined():
    x = bundle("F1").divisor(1)
    with pytest.raises(NonInvertible):
        inverse_ratio(x, -1)


def test_symbol_evaluation_matches_ring():
    b = bundle("F1")
    classes = {0: b.divisor(0), 1: b.divisor(1)}
    sym = ratio_symbol(0, 2) * ratio_symbol(1, -1)
    assert sym.evaluate(classes) == factorial_ratio(b.z, 2) * factorial_ratio(b.divisor(1), -1)


def test_hyperplane_series_is_homogeneous():
    # W = O(1) on P^2: c_top(W) sum_d q^d prod_{m=1}^d (H + m hbar) J_d
    J = base_j_projective(2)
    A = J.algebra
    H = A["H"]
    spec = LefschetzSpec([H], lambda c: [c.d[0]])
    s = i_w_series(A, lambda c: J.coefficient(c.d), spec, H, Box(0, (4,)))
    # deg q^d = (3 - 1) d once the first Chern class of W is subtracted; c_top adds 1
    g = GradingData(0, (-2,), ((0,),))
    rep = check_homogeneity(s, g, shift=1)
    assert rep.ok, rep.failures
    assert lefschetz_factor(spec, CurveClass(0, (2,))) == HLaurent.linear(H, 1) * HLaurent.linear(H, 2)
