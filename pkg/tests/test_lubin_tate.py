import math

import pytest

from herrlab.errors import NotAFrobeniusSeries, NotUnit
from herrlab.local_ring import eisenstein_params, make_ring, qp_params, teichmuller
from herrlab.lubin_tate import default_frobenius, frobenius_from_literal, gamma_action, lt_endomorphism, lt_group_law
from herrlab.series import BivarTrunc, LaurentTrunc, s_compose, s_mul

CTX3 = make_ring(qp_params(3), 3)
RCTX = make_ring(eisenstein_params(3, (-3, 0, 1)), 2)


def binomial_series(ctx, a, D):
    return LaurentTrunc.from_ints(ctx, [0] + [math.comb(a, k) for k in range(1, D)], 0, D)


@pytest.mark.parametrize("a", [2, 4, 5, 10])
def test_cyclotomic_endomorphism_is_binomial(a):
    frob = default_frobenius(CTX3, "cyclotomic")
    assert lt_endomorphism(a, frob, 20).series == binomial_series(CTX3, a, 20)


def test_cyclotomic_group_law_is_multiplicative():
    frob = default_frobenius(CTX3, "cyclotomic")
    F = lt_group_law(frob, 10)
    assert F == BivarTrunc.from_terms(CTX3, 10, {(1, 0): 1, (0, 1): 1, (1, 1): 1})


@pytest.mark.parametrize("ctx", [CTX3, RCTX], ids=["Q3", "Q3sqrt3"])
def test_endomorphism_basics(ctx):
    frob = default_frobenius(ctx, "standard")
    D = 15
    assert lt_endomorphism(1, frob, D).series == LaurentTrunc.monomial(ctx, 1, hi=D)
    e2, e5, e10 = (lt_endomorphism(a, frob, D) for a in (2, 5, 10))
    assert e2(e5.series, hi=D).truncate(D) == e10.series.truncate(D)
    # linear coefficient of [a] is a
    assert e5.series.coef(1) == ctx.from_int(5)


def test_pi_endomorphism_is_frobenius_in_ramified_case():
    frob = default_frobenius(RCTX, "standard")
    pi_endo = lt_endomorphism(lambda c: c.pi, frob, 12)
    assert pi_endo.series == frob.series.truncate(12)


def test_group_law_is_commutative_with_unit_and_endomorphisms():
    frob = default_frobenius(RCTX, "standard")
    D = 8
    F = lt_group_law(frob, D)
    assert F.swap() == F
    assert F.coef(1, 0) == RCTX.one() and F.coef(0, 1) == RCTX.one() and F.coef(0, 0) == RCTX.zero()
    for i in range(2, D):
        assert F.coef(i, 0) == RCTX.zero()
    e = lt_endomorphism(4, frob, D)
    lhs = F.substitute_into(e.series)
    rhs = F.compose(BivarTrunc.from_univariate(e.series, D, "X"), BivarTrunc.from_univariate(e.series, D, "Y"))
    assert lhs == rhs


def test_teichmuller_endomorphism_has_finite_order():
    ctx = make_ring(qp_params(5), 2)
    frob = default_frobenius(ctx, "standard")

    def w(c):
        return teichmuller(2, c)      # exact lift at every guard level

    e = lt_endomorphism(w, frob, 12)
    acc = LaurentTrunc.monomial(ctx, 1)
    for _ in range(4):
        acc = s_compose(acc, e.series, hi=12)
    assert acc.truncate(12) == LaurentTrunc.monomial(ctx, 1, hi=12)


def test_gamma_action_on_laurent_tail():
    frob = default_frobenius(CTX3, "cyclotomic")
    f = LaurentTrunc.monomial(CTX3, -1, hi=6)
    g = gamma_action(f, 4, frob)
    # 1 / ((1+X)^4 - 1) times (1+X)^4 - 1 is 1
    back = s_compose(LaurentTrunc.monomial(CTX3, 1), lt_endomorphism(4, frob, 12).series, hi=6)
    prod = s_mul(g, back)
    assert prod.agrees(LaurentTrunc.constant(CTX3, 1), min(prod.hi, 6))
    with pytest.raises(NotUnit):
        gamma_action(f, 3, frob)


def test_bad_frobenius_series_are_rejected():
    with pytest.raises(NotAFrobeniusSeries):
        default_frobenius(CTX3, "custom", series=LaurentTrunc.from_ints(CTX3, [0, 1, 0, 1]))
    with pytest.raises(NotAFrobeniusSeries):
        default_frobenius(CTX3, "custom", series=LaurentTrunc.from_ints(CTX3, [0, 3, 0, 2]))
    with pytest.raises(NotAFrobeniusSeries):
        default_frobenius(RCTX, "cyclotomic")
    ok = default_frobenius(CTX3, "custom", series=LaurentTrunc.from_ints(CTX3, [0, 3, 9, 1]))
    assert ok.series.coef(2) == CTX3.from_int(9)


def test_frobenius_literal_lifts_exactly():
    frob = frobenius_from_literal("[(1, [0, 1]), (3, 1)]", RCTX)
    assert frob.series == default_frobenius(RCTX, "standard").series
    assert frob.at_level(4).series == default_frobenius(RCTX.at_level(4), "standard").series
    with pytest.raises(NotAFrobeniusSeries):
        frobenius_from_literal("[(0, 1), (1, [0, 1]), (3, 1)]", RCTX)
