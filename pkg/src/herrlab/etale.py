"""Etale (phi, Gamma)-modules over A_L/pi^m presented by matrices.

A module of rank d is A^d with phi_M(x) = Phi . phi(x), a Z_p^r-part of Gamma
generated by gamma_i(x) = G_i . [u_i](x) and a prime-to-p torsion part Delta
generated by delta_j(x) = D_j . [w_j](x).  Finite window quotients turn the
operators into matrices over Z/p^M.
"""

from dataclasses import dataclass
import math
import threading

import numpy as np

from .errors import (CommutationFailure, InsufficientGuard, NotDivisible, NotEtale, PrecisionLoss, TorsionNotCoprime,
                     ValidationError, WindowTooNarrow)
from .homology import linalg
from .local_ring import RingElem, pi_divide, teichmuller
from .lubin_tate import lt_endomorphism
from .series import LaurentTrunc, phi_decompose, s_compose, s_invert, s_mul


@dataclass
class Generator:
    """A group element acting through the LT endomorphism [u] and a matrix.

    ``u`` is an int or a callable ctx -> RingElem giving exact lifts;
    ``order`` is set for torsion elements.
    """
    u: object
    matrix: list
    order: int = None

    def unit(self, ctx):
        return ctx.from_int(self.u) if isinstance(self.u, int) else self.u(ctx)


def _ident(ctx, d):
    return [[LaurentTrunc.constant(ctx, 1 if i == j else 0) for j in range(d)] for i in range(d)]


def mat_mul(A, B, hi=None):
    ctx = A[0][0].ctx
    out = []
    for i in range(len(A)):
        row = []
        for j in range(len(B[0])):
            acc = LaurentTrunc.zero(ctx)
            for k in range(len(B)):
                acc = acc + s_mul(A[i][k], B[k][j], hi=hi)
            row.append(acc)
        out.append(row)
    return out


def mat_vec(A, v, hi=None):
    return [row[0] for row in mat_mul(A, [[x] for x in v], hi)]


def mat_det(A, hi=None):
    d = len(A)
    if d == 1:
        return A[0][0]
    acc = LaurentTrunc.zero(A[0][0].ctx)
    for j in range(d):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        term = s_mul(A[0][j], mat_det(minor, hi), hi=hi)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def mat_inverse(A, hi):
    """Inverse over the truncated Laurent ring by Gauss-Jordan with pivots
    nonzero mod pi (these are units there)."""
    d = len(A)
    ctx = A[0][0].ctx
    M = [list(A[i]) + [LaurentTrunc.constant(ctx, 1 if i == j else 0) for j in range(d)] for i in range(d)]
    for c in range(d):
        piv = next((r for r in range(c, d) if M[r][c].unit_exponent() is not None), None)
        if piv is None:
            raise NotEtale("matrix is not invertible mod pi")
        M[c], M[piv] = M[piv], M[c]
        inv = s_invert(M[c][c], hi=hi)
        M[c] = [s_mul(inv, x, hi=hi) for x in M[c]]
        for r in range(d):
            if r != c and not M[r][c].is_zero():
                fac = M[r][c]
                M[r] = [M[r][k] - s_mul(fac, M[c][k], hi=hi) for k in range(2 * d)]
    return [row[d:] for row in M]


def derivative(f):
    """Formal derivative; the window shrinks by one."""
    ctx = f.ctx
    if f.is_zero():
        return LaurentTrunc.zero(ctx, f.hi - 1)
    ks = np.arange(f.lo, f.lo + len(f.c), dtype=np.int64).reshape(-1, 1) % ctx.mod
    if ctx.scalar:
        c = f.c * ks
    else:
        c = np.array([ctx.from_int(int(k)).coords for k in ks[:, 0]], dtype=np.int64)
        c = np.array([ctx.mul_vec(a, b) for a, b in zip(c, f.c)], dtype=np.int64).reshape(-1, ctx.rank)
    return LaurentTrunc(ctx, f.lo - 1, c, f.hi - 1)


class PhiGammaModule:
    """Rank-d etale (phi, Gamma)-module over A_L/pi^m given by matrices."""

    def __init__(self, ctx, frob, Phi, gammas, deltas=(), twist_tag="trivial", check=True, check_hi=12):
        self.ctx, self.frob = ctx, frob
        self.Phi = [list(row) for row in Phi]
        self.rank = len(self.Phi)
        self.gammas = list(gammas)
        self.deltas = list(deltas)
        self.twist_tag = twist_tag
        self.precision = min([x.hi for row in self.Phi for x in row]
                             + [x.hi for g in self.gammas + self.deltas for row in g.matrix for x in row])
        for dl in self.deltas:
            if dl.order is None or dl.order % ctx.p == 0:
                raise TorsionNotCoprime(f"torsion order {dl.order} is not prime to p")
        if check:
            self.check(check_hi)

    def check(self, hi=12):
        """Etale condition and the commutation relations on a window below X^hi."""
        hi = min(hi, self.precision - 2) if self.precision != math.inf else hi
        if mat_det(self.Phi, hi=hi + 4).unit_exponent() is None:
            raise NotEtale("det(Phi) is not a unit")
        gens = self.gammas + self.deltas
        for g in gens:
            lhs = mat_mul(g.matrix, [[gamma_substitute(x, g.u, self.frob, hi) for x in row] for row in self.Phi], hi)
            rhs = mat_mul(self.Phi, [[phi_sub(x, self.frob, hi) for x in row] for row in g.matrix], hi)
            _require_equal(lhs, rhs, hi, "Phi and a Gamma generator do not commute")
        for a in range(len(gens)):
            for b in range(a + 1, len(gens)):
                ga, gb = gens[a], gens[b]
                lhs = mat_mul(ga.matrix, [[gamma_substitute(x, ga.u, self.frob, hi) for x in row] for row in gb.matrix], hi)
                rhs = mat_mul(gb.matrix, [[gamma_substitute(x, gb.u, self.frob, hi) for x in row] for row in ga.matrix], hi)
                _require_equal(lhs, rhs, hi, "Gamma generators do not commute")
        for dl in self.deltas:
            acc = _ident(self.ctx, self.rank)
            for _ in range(dl.order):
                acc = mat_mul(dl.matrix, [[gamma_substitute(x, dl.u, self.frob, hi) for x in row] for row in acc], hi)
            _require_equal(acc, _ident(self.ctx, self.rank), hi, "torsion generator has the wrong order")
        return True


def _require_equal(A, B, hi, msg):
    for ra, rb in zip(A, B):
        for x, y in zip(ra, rb):
            upto = min(x.hi, y.hi, hi)
            if not x.agrees(y, upto):
                raise CommutationFailure(msg)


def phi_sub(f, frob, hi=None):
    if f.is_exact and f.lo >= 0:
        return s_compose(f, frob.series, hi=hi)
    return s_compose(f, frob.series, hi=hi if hi is not None else f.hi)


def gamma_substitute(f, u, frob, hi):
    """f([u](X)) below X^hi."""
    extra = max(0, -f.lo) if not f.is_zero() else 0
    D = int(hi) + extra + 4
    endo = lt_endomorphism(u, frob, D)
    return s_compose(f, endo.series, hi=hi)


def default_generators(ctx):
    """u = 1 + p for Z_p and a Teichmueller generator of mu_{p-1} for Q_p."""
    if ctx.params.degree != 1:
        raise ValidationError("generators of Gamma must be given explicitly when L != Q_p")
    p = ctx.p
    gammas = [1 + p]
    g = next(c for c in range(2, p + 1) if all(pow(c, (p - 1) // r, p) != 1 for r in _prime_factors(p - 1)))
    if p == 3:
        w = -1
    else:
        def w(c, g=g):
            return teichmuller(g, c)
    return gammas, [(w, p - 1)]


def _prime_factors(n):
    out, d = [], 2
    while d * d <= n:
        while n % d == 0:
            if d not in out:
                out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def trivial_module(ctx, frob, gammas=None, deltas=None):
    """A_L/pi^m itself: Phi = 1, every generator acts by substitution only."""
    if gammas is None or deltas is None:
        g0, d0 = default_generators(ctx)
        gammas = g0 if gammas is None else gammas
        deltas = d0 if deltas is None else deltas
    one = _ident(ctx, 1)
    return PhiGammaModule(ctx, frob, one, [Generator(u, one) for u in gammas],
                          [Generator(w, one, o) for w, o in deltas], twist_tag="trivial")


def rank_one_module(ctx, frob, c_phi, c_gammas, gammas=None, deltas=None, c_deltas=None, twist_tag="rank-one"):
    """Rank-one module with Phi = (c_phi) and G_i = (c_i); relations are verified."""
    if gammas is None or deltas is None:
        g0, d0 = default_generators(ctx)
        gammas = g0 if gammas is None else gammas
        deltas = d0 if deltas is None else deltas
    c_deltas = c_deltas or [LaurentTrunc.constant(ctx, 1)] * len(deltas)
    for c in [c_phi] + list(c_gammas) + list(c_deltas):
        if c.unit_exponent() is None:
            raise NotEtale("rank-one factors must be unit series")
    return PhiGammaModule(ctx, frob, [[c_phi]], [Generator(u, [[c]]) for u, c in zip(gammas, c_gammas)],
                          [Generator(w, [[c]], o) for (w, o), c in zip(deltas, c_deltas)], twist_tag=twist_tag)


def _pi_inverse_derivative(frob, hi):
    """pi^{-1} phi'(X): differentiate one pi-level higher, then divide by pi."""
    ctx = frob.ctx
    up = frob.at_level(ctx.m + 1)
    dphi = derivative(up.series)
    rows = []
    for k in range(dphi.lo, dphi.top + 1):
        try:
            b = pi_divide(dphi.coef(k), 1)
        except (NotDivisible, InsufficientGuard) as exc:
            raise PrecisionLoss("phi'(X) is not divisible by pi") from exc
        rows.append(b.ctx.convert(b, ctx).coords)
    out = LaurentTrunc(ctx, dphi.lo, rows, dphi.hi)
    return out.truncate(hi) if hi is not None else out


def chi_lt_twist(mod, hi):
    """Tensor with the differentials module: Phi gets pi^{-1} phi'(X), each
    generator [u] gets [u]'(X).  ``hi`` is the precision of the new factors."""
    ctx, frob = mod.ctx, mod.frob
    c_phi = _pi_inverse_derivative(frob, None)

    def factor(u):
        endo = lt_endomorphism(u, frob, hi + 1)
        return derivative(endo.series)

    Phi = [[s_mul(x, c_phi) for x in row] for row in mod.Phi]
    gammas = [Generator(g.u, [[s_mul(x, factor(g.u)) for x in row] for row in g.matrix]) for g in mod.gammas]
    deltas = [Generator(g.u, [[s_mul(x, factor(g.u)) for x in row] for row in g.matrix], g.order) for g in mod.deltas]
    tag = "chiLT" if mod.twist_tag == "trivial" else f"{mod.twist_tag}+chiLT"
    return PhiGammaModule(ctx, frob, Phi, gammas, deltas, twist_tag=tag, check_hi=min(12, hi - 2))


# -- operators on vectors of series --------------------------------------------

def apply_phi(mod, v, hi=None):
    return mat_vec(mod.Phi, [phi_sub(x, mod.frob, hi) for x in v], hi)


def apply_gamma(mod, index, v, hi):
    g = mod.gammas[index]
    return mat_vec(g.matrix, [gamma_substitute(x, g.u, mod.frob, hi) for x in v], hi)


def apply_delta(mod, index, v, hi):
    g = mod.deltas[index]
    return mat_vec(g.matrix, [gamma_substitute(x, g.u, mod.frob, hi) for x in v], hi)


class PsiTable:
    """psi on monomials: psi(X^i) for i < q from the trace, then by decomposition."""

    def __init__(self, frob):
        self.frob = frob
        self.ctx = frob.ctx
        self._base = self._basis()
        self._cache = {}

    def _basis(self):
        ctx, q = self.ctx, self.ctx.q
        up = self.frob.at_level(ctx.m + 1)
        uctx = up.ctx
        comps = {}
        for k in range(2 * q - 1):
            gs, _ = phi_decompose(LaurentTrunc.monomial(uctx, k), up)
            comps[k] = gs
        out = []
        for i in range(q):
            tr = LaurentTrunc.zero(uctx)
            for j in range(q):
                tr = tr + comps[i + j][j]
            rows = []
            for k in range(tr.lo, tr.top + 1):
                try:
                    b = pi_divide(tr.coef(k), 1)
                except Exception as exc:
                    raise PrecisionLoss("trace is not divisible by pi") from exc
                rows.append(b.ctx.convert(b, ctx).coords)
            out.append(LaurentTrunc(ctx, tr.lo, rows) if rows else LaurentTrunc.zero(ctx))
        return out

    def psi_basis(self, i):
        return self._base[i]

    def of_series(self, f, hi):
        """psi(f) below X^hi; f must be known far enough (checked)."""
        gs, _ = phi_decompose(f, self.frob)
        acc = LaurentTrunc.zero(self.ctx)
        for i, g in enumerate(gs):
            acc = acc + s_mul(g, self._base[i])
        if acc.hi < hi:
            raise WindowTooNarrow(f"psi is only known below X^{acc.hi}, needed X^{hi}")
        return acc.truncate(hi)

    def monomial(self, k, hi):
        """psi(X^k) below X^hi."""
        key = (k, hi)
        if key not in self._cache:
            q, m = self.ctx.q, self.ctx.m
            if k >= 0:
                f = LaurentTrunc.monomial(self.ctx, k)
            else:
                f = LaurentTrunc.monomial(self.ctx, k, hi=q * (hi + m + 2) + q)
            self._cache[key] = self.of_series(f, hi) if k < 0 else self.of_series(f, math.inf).truncate(hi)
        return self._cache[key]


_PSI_TABLES = {}
_PSI_LOCK = threading.Lock()


def psi_table(frob):
    key = frob.key()
    with _PSI_LOCK:
        if key not in _PSI_TABLES:
            _PSI_TABLES[key] = PsiTable(frob)
        return _PSI_TABLES[key]


def psi_series(f, frob, hi):
    return psi_table(frob).of_series(f, hi)


def apply_psi(mod, v, hi):
    """psi_M(x) = sum_i psi(u_i) e_i for u = Phi^{-1} x."""
    q, m = mod.ctx.q, mod.ctx.m
    work = q * (hi + m + 2) + q
    inv = mat_inverse(mod.Phi, work + 8)
    u = mat_vec(inv, [x.truncate(work) if x.hi > work else x for x in v], work)
    tab = psi_table(mod.frob)
    return [tab.of_series(x.truncate(work), hi) for x in u]


# -- finite window quotients --------------------------------------------------

class Window:
    """Coordinates of M = (R_m)^d in degrees lo..hi-1: index ((j*L)+(k-lo))*r+s."""

    def __init__(self, ctx, d, lo, hi):
        if hi <= lo:
            raise WindowTooNarrow(f"empty window [{lo}, {hi})")
        self.ctx, self.d, self.lo, self.hi = ctx, d, lo, hi
        self.L = hi - lo
        self.size = d * self.L * ctx.rank
        self.orders = list(ctx.orders) * (d * self.L)

    def index(self, j, k, s=0):
        return ((j * self.L) + (k - self.lo)) * self.ctx.rank + s

    def vectorize(self, v, strict_lo=True):
        """Coordinates of a vector of series reduced mod X^hi; raises if the
        series is not known that far or reaches below lo."""
        out = np.zeros(self.size, dtype=np.int64)
        for j, f in enumerate(v):
            if f.hi < self.hi:
                raise WindowTooNarrow(f"series known below X^{f.hi}, window needs X^{self.hi}")
            if not f.is_zero() and f.lo < self.lo and strict_lo:
                top = min(f.top, self.hi - 1)
                if f.dense(f.lo, min(self.lo, top + 1)).any():
                    raise WindowTooNarrow(f"image reaches X^{f.lo} below the window start {self.lo}")
            block = f.dense(self.lo, self.hi).reshape(-1)
            out[j * self.L * self.ctx.rank:(j + 1) * self.L * self.ctx.rank] = block
        return out

    def lowest(self, v):
        return min((f.lo for f in v if not f.is_zero()), default=self.lo)

    def embed(self, other):
        """Matrix of the inclusion/projection from window ``other`` into this one
        (coordinates outside this window are dropped)."""
        T = np.zeros((self.size, other.size), dtype=np.int64)
        r = self.ctx.rank
        for j in range(self.d):
            for k in range(max(self.lo, other.lo), min(self.hi, other.hi)):
                for s in range(r):
                    T[self.index(j, k, s), other.index(j, k, s)] = 1
        return T

    def basis_elements(self):
        """(j, k, s) triples in coordinate order."""
        for j in range(self.d):
            for k in range(self.lo, self.hi):
                for s in range(self.ctx.rank):
                    yield j, k, s

    def label(self):
        return [self.lo, self.hi]


def _ring_basis(ctx):
    return [RingElem(ctx, [1 if t == s else 0 for t in range(ctx.rank)]) for s in range(ctx.rank)]


def _operator_matrix(src, tgt, image_of_monomial):
    """Matrix of an R-linear operator given its values on X^k e_j."""
    ctx = src.ctx
    basis = _ring_basis(ctx)
    cols = np.zeros((tgt.size, src.size), dtype=np.int64)
    for j in range(src.d):
        for k in range(src.lo, src.hi):
            img = image_of_monomial(j, k)
            for s, b in enumerate(basis):
                vec = img if ctx.scalar else [x.scale(b) for x in img]
                cols[:, src.index(j, k, s)] = tgt.vectorize(vec)
    return cols


def _powers(g, lo, hi, cut):
    """g^k below X^cut for lo <= k < hi (g with X-valuation 1 or a unit multiple
    of a power of X with unit coefficient present)."""
    ctx = g.ctx
    out = {}
    pw = LaurentTrunc.constant(ctx, 1)
    for k in range(0, max(hi, 1)):
        if k >= lo:
            out[k] = pw.truncate(cut)
        pw = s_mul(pw, g, hi=cut)
    if lo < 0:
        d = g.unit_exponent()
        span = d + (ctx.m - 1) * (d - g.valuation)
        work = cut + (-lo) * span + 2
        ginv = s_invert(g, hi=work)
        pw = LaurentTrunc.constant(ctx, 1)
        for k in range(1, -lo + 1):
            pw = s_mul(pw, ginv, hi=work)
            out[-k] = pw.truncate(cut)
    for k, v in out.items():
        if v.hi < cut:
            raise WindowTooNarrow(f"power {k} known only below X^{v.hi}, need X^{cut}")
    return out


@dataclass
class FiniteQuotient:
    """The cone map (phi-1 or psi-1) between two windows with the Gamma data.

    ``gamma_src[i]``, ``gamma_tgt[i]`` are the matrices of gamma_i on the two
    windows, ``e_src``, ``e_tgt`` the Delta-idempotents, ``f`` the matrix of
    (T - 1): src -> tgt.
    """
    kind: str
    N: int
    n: int
    src: Window
    tgt: Window
    f: np.ndarray
    gamma_src: list
    gamma_tgt: list
    e_src: np.ndarray
    e_tgt: np.ndarray


def gamma_matrix(mod, gen, win):
    """Matrix of a generator on a window (it preserves X^lo A^+ and X^hi A^+)."""
    cut = win.hi
    D = cut + max(0, -win.lo) + 6
    endo = lt_endomorphism(gen.u, mod.frob, D)
    pw = _powers(endo.series, win.lo, win.hi, cut)

    def image(j, k):
        return [s_mul(gen.matrix[i][j], pw[k], hi=cut) for i in range(mod.rank)]

    return _operator_matrix(win, win, image)


def delta_idempotent(mod, win):
    """e = prod_j |<delta_j>|^{-1} sum_k delta_j^k as a matrix on the window."""
    ctx = mod.ctx
    mod_ = ctx.mod
    E = np.eye(win.size, dtype=np.int64)
    for dl in mod.deltas:
        if dl.order % ctx.p == 0:
            raise TorsionNotCoprime(f"order {dl.order} is divisible by p")
        Dm = gamma_matrix(mod, dl, win)
        acc = np.zeros_like(E)
        pw = np.eye(win.size, dtype=np.int64)
        for _ in range(dl.order):
            acc = (acc + pw) % mod_
            pw = linalg.matmul(Dm, pw, mod_)
        inv = pow(dl.order, -1, mod_)
        E = linalg.matmul((acc * inv) % mod_, E, mod_)
    return E


def delta_project(mod, win):
    """Idempotent matrix of the Delta-projection on a window, verified e^2 = e."""
    E = delta_idempotent(mod, win)
    mod_ = mod.ctx.mod
    if not np.array_equal(linalg.matmul(E, E, mod_), E % mod_):
        raise PrecisionLoss("Delta projector is not idempotent on this window")
    return E


def phi_target_low(mod, N, n):
    """Lowest exponent reached by phi_M on the window [-N, n)."""
    cut = n
    pw = _powers(mod.frob.series, -N, -N + 1, cut)[-N]
    lows = [s_mul(mod.Phi[i][j], pw, hi=cut) for i in range(mod.rank) for j in range(mod.rank)]
    return min((x.lo for x in lows if not x.is_zero()), default=-N)


def finite_quotient(mod, N, n, kind="phi", s=None):
    """Window quotient of the cone map at tail depth N and X-cutoff n.

    phi: source [-N, n), target [-N', n) with N' covering phi(X^-N).
    psi: source [-N, s), target [-N', n) where s is large enough that
    psi(X^s A^+) lies in X^n A^+ (checked on a band of monomials).
    """
    ctx = mod.ctx
    if N < 0 or n < 1:
        raise WindowTooNarrow("need N >= 0 and n >= 1")
    if kind == "phi":
        src = Window(ctx, mod.rank, -N, n)
        lo_t = min(-N, phi_target_low(mod, N, n))
        tgt = Window(ctx, mod.rank, lo_t, n)
        pw = _powers(mod.frob.series, -N, n, n)

        def image(j, k):
            return [s_mul(mod.Phi[i][j], pw[k], hi=n) for i in range(mod.rank)]

        T = _operator_matrix(src, tgt, image)
    elif kind == "psi":
        q, m = ctx.q, ctx.m
        s = s if s is not None else q * (n + m + 1)
        src = Window(ctx, mod.rank, -N, s)
        inv = mat_inverse(mod.Phi, s + N + 8)
        tab = psi_table(mod.frob)

        def image(j, k):
            out = []
            for i in range(mod.rank):
                u = s_mul(inv[i][j], LaurentTrunc.monomial(ctx, k), hi=s)
                acc = LaurentTrunc.zero(ctx)
                for e, c in u.coeffs.items():
                    acc = acc + tab.monomial(e, n).scale(c)
                out.append(acc.truncate(n))
            return out

        imgs = {(j, k): image(j, k) for j in range(mod.rank) for k in range(-N, s)}
        lo_t = min([-N] + [x.lo for v in imgs.values() for x in v if not x.is_zero()])
        tgt = Window(ctx, mod.rank, lo_t, n)
        # psi(X^k) for k >= s must vanish below X^n
        for k in range(s, s + q * (m + 1)):
            if tab.monomial(k, n).dense(lo_t, n).any():
                raise WindowTooNarrow(f"psi(X^{k}) does not vanish mod X^{n}; raise the source cutoff")
        T = _operator_matrix(src, tgt, lambda j, k: imgs[(j, k)])
    else:
        raise ValueError(f"unknown cone map {kind!r}")
    f = (T - tgt.embed(src)) % ctx.mod
    gs = [gamma_matrix(mod, g, src) for g in mod.gammas]
    gt = [gamma_matrix(mod, g, tgt) for g in mod.gammas]
    es, et = delta_project(mod, src), delta_project(mod, tgt)
    fq = FiniteQuotient(kind, N, n, src, tgt, f, gs, gt, es, et)
    _check_quotient(fq, ctx.mod)
    return fq


def _check_quotient(fq, mod_):
    """The cone map commutes with Gamma and with the Delta-projection."""
    for a, b in zip(fq.gamma_src, fq.gamma_tgt):
        if not np.array_equal(linalg.matmul(b, fq.f, mod_), linalg.matmul(fq.f, a, mod_)):
            raise CommutationFailure("cone map does not commute with a Gamma generator on the window")
    if not np.array_equal(linalg.matmul(fq.e_tgt, fq.f, mod_), linalg.matmul(fq.f, fq.e_src, mod_)):
        raise CommutationFailure("cone map does not commute with the Delta-projection on the window")
