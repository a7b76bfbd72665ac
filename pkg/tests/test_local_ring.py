import pytest
from hypothesis import given, settings, strategies as st

from herrlab.errors import CtxMismatch, InvalidPolynomial, NotDivisible, NotUnit, ValidationError
from herrlab.local_ring import (FieldParams, eisenstein_params, make_ring, pi_divide, pi_valuation, qp_params,
                                ring_inv, teichmuller, unramified_params)

RAMIFIED = eisenstein_params(3, (-3, 0, 1))
UNRAMIFIED = unramified_params(3, (2, 2, 1))   # t^2 + 2t + 2, irreducible mod 3

CTXS = [make_ring(qp_params(3), 2), make_ring(qp_params(5), 3), make_ring(RAMIFIED, 3), make_ring(UNRAMIFIED, 2)]


def elems(ctx):
    return st.lists(st.integers(0, 10 ** 6), min_size=ctx.rank, max_size=ctx.rank).map(ctx.elem)


@pytest.mark.parametrize("ctx", CTXS, ids=lambda c: f"e{c.e}f{c.f}m{c.m}")
def test_cardinality_is_q_to_the_m(ctx):
    assert ctx.cardinality == ctx.q ** ctx.m
    assert len(list(ctx.elements())) == ctx.cardinality


@pytest.mark.parametrize("ctx", CTXS, ids=lambda c: f"e{c.e}f{c.f}m{c.m}")
@settings(max_examples=40, derandomize=True, deadline=None)
@given(data=st.data())
def test_ring_axioms(ctx, data):
    a, b, c = (data.draw(elems(ctx)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == ctx.zero()
    assert a * ctx.one() == a


@pytest.mark.parametrize("ctx", CTXS, ids=lambda c: f"e{c.e}f{c.f}m{c.m}")
def test_inverse_and_valuation(ctx):
    units = [x for x in ctx.elements() if x.is_unit()]
    assert len(units) == ctx.cardinality - ctx.cardinality // ctx.q
    for u in units[:30]:
        assert u * ring_inv(u) == ctx.one()
    assert pi_valuation(ctx.pi) == 1
    assert pi_valuation(ctx.zero()) == ctx.m
    with pytest.raises(NotUnit):
        ring_inv(ctx.pi)


def test_pi_power_is_zero_at_level_m():
    ctx = make_ring(RAMIFIED, 3)
    assert ctx.pi ** 3 == ctx.zero()
    assert not (ctx.pi ** 2).is_zero()
    # pi^2 = 3 in Z_3[sqrt 3]
    assert ctx.pi ** 2 == ctx.from_int(3)


def test_pi_divide_lands_one_level_down():
    ctx = make_ring(qp_params(3), 3)
    b = pi_divide(ctx.from_int(6), 1)
    assert b.ctx.m == 2 and b == b.ctx.from_int(2)
    with pytest.raises(NotDivisible):
        pi_divide(ctx.from_int(2), 1)
    r = make_ring(RAMIFIED, 3)
    x = pi_divide(r.pi ** 2, 1)
    assert x == x.ctx.pi


def test_teichmuller_roots_of_unity():
    ctx = make_ring(qp_params(5), 4)
    for c in range(1, 5):
        w = teichmuller(c, ctx)
        assert w ** 4 == ctx.one()
        assert (w - ctx.from_int(c)).coords[0] % 5 == 0
    assert teichmuller(-1, make_ring(qp_params(3), 3)) == -make_ring(qp_params(3), 3).one()


def test_validation():
    with pytest.raises(ValidationError):
        make_ring(qp_params(2), 1)
    with pytest.raises(ValidationError):
        make_ring(FieldParams(9, 1, 1, (0, 1), (9,)), 1)
    with pytest.raises(InvalidPolynomial):
        make_ring(FieldParams(3, 1, 2, (-3, 0, 2), (0, 1)), 1)
    with pytest.raises(ValidationError):
        make_ring(qp_params(3), 0)


def test_mixing_contexts_is_an_error():
    a = make_ring(qp_params(3), 2).one()
    b = make_ring(qp_params(3), 3).one()
    with pytest.raises(CtxMismatch):
        a + b
