import math

import pytest
from hypothesis import given, settings, strategies as st

from herrlab.errors import CompositionUndefined, EmptyWindow, NonInvertibleTail, NotUnit, ParseError
from herrlab.local_ring import eisenstein_params, make_ring, qp_params
from herrlab.lubin_tate import default_frobenius
from herrlab.series import (BivarTrunc, LaurentTrunc, parse_series, phi_decompose, recompose, s_compose, s_invert,
                            s_mul, window_quotient)

CTX = make_ring(qp_params(3), 2)
RCTX = make_ring(eisenstein_params(3, (-3, 0, 1)), 2)


def laurent(ctx, lo_min=-5, hi=12):
    terms = st.dictionaries(st.integers(lo_min, hi - 1), st.integers(0, ctx.mod - 1), max_size=8)
    return terms.map(lambda t: LaurentTrunc.from_dict(ctx, t, hi))


@settings(max_examples=50, derandomize=True, deadline=None)
@given(laurent(CTX), laurent(CTX), laurent(CTX))
def test_multiplication_is_associative_and_commutative(f, g, h):
    assert s_mul(f, g) == s_mul(g, f)
    lhs, rhs = s_mul(s_mul(f, g), h), s_mul(f, s_mul(g, h))
    upto = min(lhs.hi, rhs.hi)
    assert lhs.agrees(rhs, upto)


@settings(max_examples=40, derandomize=True, deadline=None)
@given(laurent(CTX, lo_min=0, hi=10))
def test_inverse_of_a_unit_tail(f):
    u = f + LaurentTrunc.monomial(CTX, -2, 1)
    inv = s_invert(u, hi=10)
    prod = s_mul(u, inv)
    assert prod.agrees(LaurentTrunc.constant(CTX, 1), min(prod.hi, 10))


def test_non_invertible_series():
    with pytest.raises(NotUnit):
        s_invert(LaurentTrunc.from_ints(CTX, [3, 6], 0, 10))


def test_precision_tracking():
    f = LaurentTrunc.from_ints(CTX, [1, 2, 3], 0, 5)
    g = LaurentTrunc.from_ints(CTX, [0, 1], -2, 3)
    assert s_mul(f, g).hi == min(5 - 2, 3 + 0)
    assert (f + g).hi == 3


def test_compose_with_x_plus_x2():
    g = LaurentTrunc.from_ints(CTX, [1, 1], 1)            # X + X^2
    f = LaurentTrunc.from_ints(CTX, [0, 0, 1], 0)         # X^2
    assert s_compose(f, g) == LaurentTrunc.from_ints(CTX, [1, 2, 1], 2)
    with pytest.raises(CompositionUndefined):
        s_compose(f, LaurentTrunc.constant(CTX, 1))
    # a Laurent tail needs the substituted series to be invertible
    with pytest.raises(NonInvertibleTail):
        s_compose(LaurentTrunc.monomial(CTX, -1), LaurentTrunc.from_ints(CTX, [3], 1), hi=5)


@pytest.mark.parametrize("ctx,kind", [(CTX, "standard"), (CTX, "cyclotomic"), (RCTX, "standard")])
@settings(max_examples=15, derandomize=True, deadline=None)
@given(data=st.data())
def test_phi_decompose_round_trip(ctx, kind, data):
    frob = default_frobenius(ctx, kind)
    f = data.draw(laurent(ctx, lo_min=-10, hi=30))
    gs, cert = phi_decompose(f, frob)
    assert len(gs) == ctx.q
    assert recompose(gs, frob, cert).agrees(f, min(cert, 30))


def test_phi_decompose_of_x_to_the_q():
    # standard phi = 3X + X^3, so X^3 = phi(X) - 3 * X
    frob = default_frobenius(CTX, "standard")
    gs, cert = phi_decompose(LaurentTrunc.monomial(CTX, 3), frob)
    assert cert == math.inf
    assert gs[0] == LaurentTrunc.monomial(CTX, 1)
    assert gs[1] == LaurentTrunc.constant(CTX, -3)
    assert gs[2].is_zero()


def test_window_quotient():
    f = LaurentTrunc.from_ints(CTX, [1, 1, 1, 1], -2, 10)
    q = window_quotient(f, 1)
    assert q.hi == 1 and q.coef(0) == CTX.one() and q.coef(-2) == CTX.one()
    with pytest.raises(EmptyWindow):
        window_quotient(f, 11)


def test_bivariate_group_law_shape():
    F = BivarTrunc.from_terms(CTX, 5, {(1, 0): 1, (0, 1): 1, (1, 1): 1})
    assert F.swap() == F
    x = BivarTrunc.from_univariate(LaurentTrunc.monomial(CTX, 1), 5, "X")
    assert x.coef(1, 0) == CTX.one() and x.coef(0, 1) == CTX.zero()


def test_parse_series_literal():
    f = parse_series("[(1, 3), (3, 1), (-1, [2])]", CTX)
    assert f == LaurentTrunc.from_dict(CTX, {1: 3, 3: 1, -1: 2})
    g = parse_series("[(0, [1, 2])]", RCTX, hi=4)
    assert g.hi == 4 and g.coef(0).coords == (1, 2)


@pytest.mark.parametrize("text,col", [("(1, 3)", 1), ("[(1, 3) (2, 1)]", 9), ("[(1, x)]", 2), ("[(0, [1])]", 6)])
def test_parse_series_errors_carry_a_column(text, col):
    ctx = RCTX if "[1]" in text else CTX
    with pytest.raises(ParseError) as err:
        parse_series(text, ctx, line=7)
    assert err.value.line == 7
    assert err.value.column == col


def test_exact_series_has_infinite_precision():
    assert LaurentTrunc.monomial(CTX, 2).hi == math.inf
    assert LaurentTrunc.zero(CTX, 4).valuation == 4
