"""Frobenius power series, Lubin-Tate endomorphisms [a]_phi and group laws.

[a]_phi and F_phi are solved degree by degree.  The degree-k coefficient
identity has the shape c_k (pi^k - pi) = known, so every step divides by pi;
the computation runs at a higher pi-level (guard levels) and is certified by
agreement between two guard settings.
"""

from dataclasses import dataclass, field
import math
import threading

import numpy as np

from .errors import NotAFrobeniusSeries, NotDivisible, NotUnit, ParseError, PrecisionLoss
from .local_ring import RingElem, make_ring, pi_divide, ring_inv
from .homology.linalg import matmul
from .series import BivarTrunc, LaurentTrunc, parse_series_terms, s_compose, s_mul

MAX_GUARD = 12


@dataclass(frozen=True, eq=False)
class FrobData:
    series: LaurentTrunc
    ctx: object
    kind: str = "custom"
    # integer-coefficient presentation, used to rebuild the series at guard levels
    int_coeffs: tuple = field(default=None)

    @property
    def q(self):
        return self.ctx.q

    def at_level(self, m):
        """The same Frobenius series over O_L/pi^m (only for integer-coefficient data)."""
        ctx = self.ctx.at_level(m)
        if self.int_coeffs is None:
            if m > self.ctx.m:
                raise PrecisionLoss("custom Frobenius series cannot be lifted to a higher level")
            rows = [ctx.convert(RingElem(self.ctx, r), ctx).coords for r in self.series.c]
            s = LaurentTrunc(ctx, self.series.lo, rows, self.series.hi)
            return FrobData(s, ctx, self.kind, None)
        return _from_power_coeffs(ctx, self.int_coeffs, self.kind, self.series.hi)

    def key(self):
        return (self.kind, self.ctx, self.series.lo, self.series.hi, self.series.c.tobytes())


def _from_power_coeffs(ctx, coeffs, kind, hi=math.inf):
    """coeffs: tuple over exponents 0.. of power-basis coordinate tuples."""
    rows = [ctx.from_power(c).coords for c in coeffs]
    return FrobData(LaurentTrunc(ctx, 0, rows, hi), ctx, kind, tuple(coeffs))


def validate_frobenius(series, ctx):
    """Check phi = pi X mod deg 2 and phi = X^q mod pi."""
    if series.is_zero() or series.lo < 1:
        raise NotAFrobeniusSeries("series must have zero constant term")
    if series.coef(1) != ctx.pi:
        raise NotAFrobeniusSeries("linear coefficient must be pi")
    if series.hi != math.inf and series.hi <= ctx.q:
        raise NotAFrobeniusSeries("series window must include degree q")
    for k in range(series.lo, series.top + 1):
        c = series.coef(k) - 1 if k == ctx.q else series.coef(k)
        if not c.is_zero() and c.is_unit():
            which = "X^q must be 1" if k == ctx.q else f"X^{k} must vanish"
            raise NotAFrobeniusSeries(f"coefficient of {which} mod pi")
    if series.top < ctx.q:
        raise NotAFrobeniusSeries("coefficient of X^q must be 1 mod pi")


def default_frobenius(ctx, kind="standard", D=None, series=None):
    """standard: pi X + X^q; cyclotomic: (1+X)^p - 1 (needs L = Q_p, pi = p);
    custom: the given series, validated."""
    n = ctx.params.degree
    zero = (0,) * n
    if kind == "standard":
        coeffs = [zero] * (ctx.q + 1)
        coeffs[1] = tuple(ctx.params.pi_coords)
        coeffs[ctx.q] = (1,) + (0,) * (n - 1)
        frob = _from_power_coeffs(ctx, tuple(coeffs), kind)
    elif kind == "cyclotomic":
        if ctx.e != 1 or ctx.f != 1 or tuple(ctx.params.pi_coords) != (ctx.p,):
            raise NotAFrobeniusSeries("the cyclotomic series needs L = Q_p with pi = p")
        coeffs = tuple((math.comb(ctx.p, k),) for k in range(ctx.p + 1))
        coeffs = ((0,),) + coeffs[1:]
        frob = _from_power_coeffs(ctx, coeffs, kind)
    elif kind == "custom":
        if series is None:
            raise NotAFrobeniusSeries("custom kind needs a series")
        frob = FrobData(series, ctx, "custom", None)
    else:
        raise NotAFrobeniusSeries(f"unknown Frobenius kind {kind!r}")
    validate_frobenius(frob.series, ctx)
    return frob


def frobenius_from_literal(text, ctx, line=None, col_offset=0):
    """A custom Frobenius from an exact literal ``[(exp, coeff), ...]``.

    Coefficients are integers or power-basis coordinate lists, so the series
    lifts to every guard level.
    """
    terms = parse_series_terms(text, line, col_offset)
    n = ctx.params.degree
    if not terms or min(terms) < 0:
        raise NotAFrobeniusSeries("series must be a power series with zero constant term")
    coeffs = [(0,) * n] * (max(terms) + 1)
    for k, (val, col) in terms.items():
        if isinstance(val, list):
            if len(val) != n:
                raise ParseError(f"power-basis coordinates need {n} entries", line, col)
            coeffs[k] = tuple(val)
        else:
            coeffs[k] = (val,) + (0,) * (n - 1)
    frob = _from_power_coeffs(ctx, tuple(coeffs), "custom")
    validate_frobenius(frob.series, ctx)
    return frob


def _power_table(series, D, ctx):
    """A[i] = coefficients of series^i truncated below X^D, i < D (shape (D, D, r))."""
    A = np.zeros((D, D, ctx.rank), dtype=np.int64)
    pw = LaurentTrunc.constant(ctx, 1)
    for i in range(D):
        A[i] = pw.dense(0, D)
        if pw.valuation >= D:
            break
        pw = s_mul(pw, series, hi=D)
    return A


def _apply_table(c, A, ctx):
    """sum_j c_j A[j] for coefficient rows c (shape (J, r)) and A of shape (J, X, r)."""
    if ctx.scalar:
        return matmul(c[:, 0].reshape(1, -1), A[:, :, 0], ctx.mod).reshape(-1, 1) % ctx.order_mods
    J, X, r = A.shape
    left = A.transpose(1, 0, 2).reshape(X, J * r)
    right = np.concatenate([ctx.mult_matrix(c[j]).T for j in range(J)], axis=0)
    return matmul(left, right, ctx.mod) % ctx.order_mods


def _series_at(frob, level):
    return frob.at_level(level).series


def _solve_endo(a_lift, frob, D, level):
    """[a]_phi mod X^D at pi-level ``level``; returns coefficient rows (D, r)."""
    ctx = make_ring(frob.ctx.params, level, frob.ctx.guard)
    phi = _series_at(frob, level)
    A = _power_table(phi, D, ctx)
    c = np.zeros((D, ctx.rank), dtype=np.int64)
    c[1] = a_lift(ctx).coords
    pi = ctx.pi
    for k in range(2, D):
        P = LaurentTrunc(ctx, 0, c[:k], k + 1)
        left = _apply_table(c[:k], A[:k, :k + 1], ctx)[k]
        right = ctx.zero()
        pw = P
        for j in range(2, min(k, phi.top) + 1):
            pw = s_mul(pw, P, hi=k + 1)
            cj = phi.coef(j)
            if not cj.is_zero():
                right = right + cj * pw.coef(k)
        known = right - RingElem(ctx, left)
        try:
            ck = pi_divide(known, 1)
        except NotDivisible as exc:
            raise PrecisionLoss(f"[a]_phi: degree-{k} defect not divisible by pi") from exc
        ck = ck.ctx.convert(ck, ctx)
        c[k] = (ck * ring_inv(pi ** (k - 1) - 1)).coords
    return c


def _lifter(a):
    """Map level -> lift of the multiplier a at that level."""
    if isinstance(a, int):
        return lambda ctx: ctx.from_int(a)
    if callable(a):
        return a
    src = a
    return lambda ctx: src.ctx.convert(src, ctx)


class LTEndo:
    """[a]_phi modulo (pi^m, X^D)."""

    def __init__(self, a, series, D):
        self.a, self.series, self.D = a, series, D

    def __call__(self, f, hi=None):
        return s_compose(f, self.series, hi=hi)


_MEMO = {}
_MEMO_LOCK = threading.Lock()


def lt_endomorphism(a, frob, D, guard=None):
    """[a]_phi mod (pi^m, X^D).

    ``a`` is an int, a RingElem (lifted by representative when a higher level
    is needed), or a callable level-ctx -> RingElem giving exact lifts (for
    Teichmueller units).  The result is certified by recomputing with one more
    guard level.
    """
    ctx = frob.ctx
    if D < 2:
        raise ValueError("degree cutoff must be >= 2")
    a_lift = _lifter(a)
    a_m = a_lift(ctx)
    key = (frob.key(), a_m.coords, D, repr(a) if isinstance(a, int) else id(a) if callable(a) else a_m.coords)
    with _MEMO_LOCK:
        hit = _MEMO.get(key)
    if hit is not None:
        return hit
    m = ctx.m
    if isinstance(a, int) and a == 1:
        rows = LaurentTrunc.monomial(ctx, 1).dense(0, D)
    else:
        g = guard if guard is not None else int(math.ceil(math.log(max(D, 2), ctx.q))) + 2
        prev = None
        rows = None
        while g <= MAX_GUARD:
            cur = _reduce_rows(_solve_endo(a_lift, frob, D, m + g), frob, m + g, ctx)
            if prev is not None and np.array_equal(cur, prev):
                rows = cur
                break
            prev = cur
            g += 1
        if rows is None:
            raise PrecisionLoss("[a]_phi did not certify within the maximal guard")
    endo = LTEndo(a_m, LaurentTrunc(ctx, 0, rows, D), D)
    _check_commutes(endo.series, frob, D)
    with _MEMO_LOCK:
        _MEMO.setdefault(key, endo)
    return endo


def _reduce_rows(rows, frob, level, ctx):
    hi_ctx = make_ring(frob.ctx.params, level, frob.ctx.guard)
    return np.array([hi_ctx.convert(RingElem(hi_ctx, r), ctx).coords for r in rows],
                    dtype=np.int64).reshape(-1, ctx.rank)


def _check_commutes(series, frob, D):
    if series.is_zero():
        return
    lhs = s_compose(series, frob.series, hi=D)
    rhs = s_compose(frob.series, series, hi=D)
    upto = min(lhs.hi, rhs.hi, D)
    if not lhs.agrees(rhs, upto):
        raise PrecisionLoss("[a]_phi fails to commute with phi within the cutoff")


def lt_group_law(frob, D, guard=None):
    """The Lubin-Tate formal group law F_phi modulo (pi^m, total degree D)."""
    ctx = frob.ctx
    m = ctx.m
    g = guard if guard is not None else int(math.ceil(math.log(max(D, 2), ctx.q))) + 2
    prev = None
    while g <= MAX_GUARD:
        cur = _solve_group_law(frob, D, m + g)
        lvl = make_ring(ctx.params, m + g, ctx.guard)
        red = np.zeros((D, D, ctx.rank), dtype=np.int64)
        for i in range(D):
            for j in range(D - i):
                red[i, j] = lvl.convert(RingElem(lvl, cur.c[i, j]), ctx).coords
        if prev is not None and np.array_equal(red, prev):
            return BivarTrunc(ctx, D, red)
        prev = red
        g += 1
    raise PrecisionLoss("group law did not certify within the maximal guard")


def _solve_group_law(frob, D, level):
    ctx = make_ring(frob.ctx.params, level, frob.ctx.guard)
    phi = _series_at(frob, level)
    A = _power_table(phi, D, ctx)                  # A[i, x]: coefficient of X^x in phi^i
    F = BivarTrunc.from_terms(ctx, D, {(1, 0): 1, (0, 1): 1})
    pi = ctx.pi
    for k in range(2, D):
        # F(phi X, phi Y) = A^T F A
        if ctx.scalar:
            At = A[:, :, 0]
            left = matmul(matmul(At.T, F.c[:, :, 0], ctx.mod), At, ctx.mod)[:, :, None]
        else:
            obj = np.einsum("ixa,ijb,abd->xjd", A.astype(object), F.c.astype(object), ctx.T.astype(object))
            left = np.einsum("xjd,jyc,dce->xye", obj % ctx.mod, A.astype(object), ctx.T.astype(object))
            left = (left % ctx.mod).astype(np.int64)
        right = BivarTrunc(ctx, D)
        pw = F
        for j in range(2, min(k, phi.top) + 1):
            pw = pw * F
            cj = phi.coef(j)
            if not cj.is_zero():
                right = right + pw * BivarTrunc.from_terms(ctx, D, {(0, 0): cj})
        unit_inv = ring_inv(pi ** (k - 1) - 1)
        for i in range(k + 1):
            jj = k - i
            known = RingElem(ctx, right.c[i, jj]) - RingElem(ctx, left[i, jj])
            try:
                val = pi_divide(known, 1)
            except NotDivisible as exc:
                raise PrecisionLoss(f"group law: degree-{k} defect not divisible by pi") from exc
            val = val.ctx.convert(val, ctx)
            F.c[i, jj] = (val * unit_inv).coords
    return F


def gamma_action(f, u, frob, D=None):
    """f([u]_phi(X)) for a unit u (int, RingElem, or exact-lift callable)."""
    ctx = f.ctx
    u_m = _lifter(u)(ctx)
    if not u_m.is_unit():
        raise NotUnit(f"{u_m} is not a unit")
    if D is None:
        D = max(int(f.hi) if f.hi != math.inf else f.top + 1, 2) + 1
        if f.lo < 0:
            D += -f.lo * (ctx.m + 1)
    endo = lt_endomorphism(u, frob, D)
    cap = None if f.hi == math.inf and f.lo >= 0 else min(f.hi, D)
    out = s_compose(f, endo.series, hi=cap)
    return out
