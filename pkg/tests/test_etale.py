import numpy as np
import pytest

from herrlab.errors import CommutationFailure, NotEtale, TorsionNotCoprime, ValidationError, WindowTooNarrow
from herrlab.etale import (Generator, PhiGammaModule, Window, apply_gamma, apply_phi, apply_psi, chi_lt_twist,
                           default_generators, delta_project, finite_quotient, gamma_matrix, rank_one_module,
                           trivial_module)
from herrlab.homology import linalg
from herrlab.local_ring import eisenstein_params, make_ring, qp_params
from herrlab.lubin_tate import default_frobenius
from herrlab.series import LaurentTrunc

CTX = make_ring(qp_params(3), 2)
FROB = default_frobenius(CTX, "cyclotomic")


def const(c, ctx=CTX):
    return LaurentTrunc.constant(ctx, c)


def test_default_generators():
    gammas, deltas = default_generators(CTX)
    assert gammas == [4] and deltas == [(-1, 2)]
    g5, d5 = default_generators(make_ring(qp_params(5), 2))
    assert g5 == [6] and d5[0][1] == 4
    with pytest.raises(ValidationError):
        default_generators(make_ring(eisenstein_params(3, (-3, 0, 1)), 1))


def test_trivial_and_twisted_modules_pass_their_checks():
    mod = trivial_module(CTX, FROB)
    assert mod.check()
    tw = chi_lt_twist(mod, 16)
    assert tw.twist_tag == "chiLT"
    assert tw.check(10)


def test_cyclotomic_twist_is_multiplication_by_the_character():
    # cyclotomic base: pi^-1 phi'(X) = (1+X)^2 and [4]'(X) = 4 (1+X)^3
    tw = chi_lt_twist(trivial_module(CTX, FROB), 16)
    c_phi = tw.Phi[0][0]
    assert c_phi.truncate(3) == LaurentTrunc.from_ints(CTX, [1, 2, 1], 0, 3)
    c_gamma = tw.gammas[0].matrix[0][0]
    assert c_gamma.truncate(4) == LaurentTrunc.from_ints(CTX, [4, 12, 12, 4], 0, 4)


def test_invalid_modules_are_rejected():
    with pytest.raises(NotEtale):
        rank_one_module(CTX, FROB, const(3), [const(1)])
    with pytest.raises(CommutationFailure):
        rank_one_module(CTX, FROB, LaurentTrunc.from_ints(CTX, [1, 1]), [const(1)])
    with pytest.raises(TorsionNotCoprime):
        PhiGammaModule(CTX, FROB, [[const(1)]], [Generator(4, [[const(1)]])], [Generator(-1, [[const(1)]], 3)])


def test_rank_one_unramified_twist():
    # Phi = -1 with gamma acting trivially on the basis vector: an unramified quadratic character
    mod = rank_one_module(CTX, FROB, const(-1), [const(1)])
    v = [LaurentTrunc.monomial(CTX, 1, hi=8)]
    assert apply_phi(mod, v, 8)[0] == -FROB.series.truncate(8)


def test_psi_left_inverse_of_phi_up_to_q_over_pi():
    mod = trivial_module(CTX, FROB)
    v = [LaurentTrunc.from_ints(CTX, [1, 2, 0, 1], -1, 20)]
    back = apply_psi(mod, apply_phi(mod, v, 20), 5)
    # q / pi = 1 for Q_p
    assert back[0].agrees(v[0], 5)


def test_gamma_action_on_vectors():
    mod = trivial_module(CTX, FROB)
    v = [LaurentTrunc.monomial(CTX, 1, hi=6)]
    img = apply_gamma(mod, 0, v, 6)[0]
    assert img == LaurentTrunc.from_ints(CTX, [0, 4, 6, 4, 1], 0, 6)


def test_window_embedding():
    small, big = Window(CTX, 1, -1, 3), Window(CTX, 1, -2, 5)
    up, down = big.embed(small), small.embed(big)
    assert np.array_equal(down @ up, np.eye(small.size, dtype=np.int64))
    f = LaurentTrunc.from_ints(CTX, [1, 2, 3], -1, 6)
    assert list(small.vectorize([f])) == [1, 2, 3, 0]
    with pytest.raises(WindowTooNarrow):
        big.vectorize([LaurentTrunc.monomial(CTX, 0, hi=2)])
    with pytest.raises(WindowTooNarrow):
        Window(CTX, 1, 2, 2)


@pytest.mark.parametrize("kind", ["phi", "psi"])
def test_finite_quotient_commutes_with_gamma_and_delta(kind):
    mod = trivial_module(CTX, FROB)
    fq = finite_quotient(mod, 2, 2, kind)
    assert fq.f.shape == (fq.tgt.size, fq.src.size)
    # the check inside finite_quotient already enforces this; repeat it explicitly
    for a, b in zip(fq.gamma_src, fq.gamma_tgt):
        assert np.array_equal(linalg.matmul(b, fq.f, CTX.mod), linalg.matmul(fq.f, a, CTX.mod))
    assert np.array_equal(linalg.matmul(fq.e_src, fq.e_src, CTX.mod), fq.e_src)


def test_delta_projection_kills_odd_part():
    mod = trivial_module(CTX, FROB)
    win = Window(CTX, 1, 0, 4)
    E = delta_project(mod, win)
    D = gamma_matrix(mod, mod.deltas[0], win)
    assert np.array_equal(linalg.matmul(D, E, CTX.mod), E)
    # the constant 1 is Delta-invariant
    one = win.vectorize([LaurentTrunc.constant(CTX, 1, hi=4)])
    assert np.array_equal(linalg.matmul(E, one.reshape(-1, 1), CTX.mod).reshape(-1), one)
