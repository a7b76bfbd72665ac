"""Truncated Laurent series over R_m = O_L/pi^m.

A LaurentTrunc stands for an element of R_m((X)) known modulo X^hi R_m[[X]].
Coefficients are stored densely as an (L, rank) array of ring coordinates
starting at exponent ``lo``; leading and trailing zero rows are stripped, so
``lo`` is the true X-valuation of a nonzero series.  ``hi`` is ``math.inf``
for exact (polynomial) data.
"""

import math
import re

import numpy as np

from .errors import (CompositionUndefined, CtxMismatch, EmptyWindow, NonInvertibleTail, NotUnit,
                     ParseError, WindowTooNarrow)
from .local_ring import RingElem, ring_inv


def _conv(a, b, ctx):
    """Convolution of coefficient arrays (La, r) and (Lb, r) with ring multiplication."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((0, ctx.rank), dtype=np.int64)
    mod = ctx.mod
    if ctx.scalar:
        # split factors into 2^12 halves if plain products could overflow
        if mod * mod * min(len(a), len(b)) < 2 ** 62:
            out = np.convolve(a[:, 0], b[:, 0]) % mod
        else:
            lo_b, hi_b = b[:, 0] % 4096, b[:, 0] // 4096
            out = (np.convolve(a[:, 0], lo_b) % mod
                   + (np.convolve(a[:, 0], hi_b) % mod) * 4096) % mod
        return (out % ctx.order_mods[0]).reshape(-1, 1)
    r = ctx.rank
    out = np.zeros((len(a) + len(b) - 1, r), dtype=np.int64)
    for s in range(r):
        for t in range(r):
            if not ctx.T[s, t].any():
                continue
            c = np.convolve(a[:, s], b[:, t]) % mod
            out = (out + np.outer(c, ctx.T[s, t])) % mod
    return out % ctx.order_mods


class LaurentTrunc:
    """sum_{lo <= i < hi} c_i X^i + O(X^hi) over a RingCtx."""

    __slots__ = ("ctx", "lo", "c", "hi")

    def __init__(self, ctx, lo, coeffs, hi=math.inf):
        self.ctx = ctx
        c = np.asarray(coeffs, dtype=np.int64).reshape(-1, ctx.rank) % ctx.order_mods
        if hi != math.inf:
            hi = int(hi)
            c = c[:max(0, hi - lo)]
        nz = np.flatnonzero(c.any(axis=1))
        if len(nz) == 0:
            self.lo = hi if hi != math.inf else 0
            self.c = np.zeros((0, ctx.rank), dtype=np.int64)
        else:
            self.lo = lo + int(nz[0])
            self.c = c[nz[0]:nz[-1] + 1]
        self.hi = hi

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ctx, hi=math.inf):
        return cls(ctx, 0, [], hi)

    @classmethod
    def monomial(cls, ctx, k, coeff=1, hi=math.inf):
        if isinstance(coeff, int):
            coeff = ctx.from_int(coeff)
        return cls(ctx, k, [coeff.coords], hi)

    @classmethod
    def constant(cls, ctx, coeff, hi=math.inf):
        return cls.monomial(ctx, 0, coeff, hi)

    @classmethod
    def from_ints(cls, ctx, ints, lo=0, hi=math.inf):
        """Integer coefficients c_lo, c_lo+1, ... (embedded via Z -> R_m)."""
        rows = [ctx.from_int(int(v)).coords for v in ints]
        return cls(ctx, lo, rows if rows else np.zeros((0, ctx.rank)), hi)

    @classmethod
    def from_dict(cls, ctx, terms, hi=math.inf):
        """From {exponent: RingElem | int | coordinate sequence}."""
        if not terms:
            return cls.zero(ctx, hi)
        lo, top = min(terms), max(terms)
        c = np.zeros((top - lo + 1, ctx.rank), dtype=np.int64)
        for k, v in terms.items():
            if isinstance(v, int):
                v = ctx.from_int(v)
            c[k - lo] = v.coords if isinstance(v, RingElem) else v
        return cls(ctx, lo, c, hi)

    # -- access -------------------------------------------------------------
    def is_zero(self):
        return len(self.c) == 0

    @property
    def valuation(self):
        """Lowest nonzero exponent; for a zero series the lower edge of the unknown part."""
        return self.lo if len(self.c) else self.hi

    @property
    def top(self):
        return self.lo + len(self.c) - 1

    @property
    def is_exact(self):
        return self.hi == math.inf

    def coef(self, k):
        i = k - self.lo
        if 0 <= i < len(self.c):
            return RingElem(self.ctx, self.c[i])
        return self.ctx.zero()

    @property
    def coeffs(self):
        """Nonzero coefficients as {exponent: RingElem}."""
        return {self.lo + i: RingElem(self.ctx, row) for i, row in enumerate(self.c) if row.any()}

    def dense(self, lo, hi):
        """Coefficient rows for exponents lo..hi-1 (zeros outside the support)."""
        out = np.zeros((max(0, hi - lo), self.ctx.rank), dtype=np.int64)
        a, b = max(lo, self.lo), min(hi, self.lo + len(self.c))
        if a < b:
            out[a - lo:b - lo] = self.c[a - self.lo:b - self.lo]
        return out

    def truncate(self, hi):
        if hi >= self.hi:
            return self
        return LaurentTrunc(self.ctx, self.lo, self.c, hi)

    def agrees(self, other, upto):
        """Equality of coefficients below ``upto``."""
        lo = min(self.lo, other.lo)
        return np.array_equal(self.dense(lo, upto), other.dense(lo, upto))

    def unit_exponent(self):
        """Lowest exponent whose coefficient is a unit, or None."""
        mask = self.ctx.is_unit_rows(self.c)
        idx = np.flatnonzero(mask)
        return self.lo + int(idx[0]) if len(idx) else None

    # -- arithmetic ---------------------------------------------------------
    def _other(self, other):
        if isinstance(other, (int, RingElem)):
            return LaurentTrunc.constant(self.ctx, other)
        if other.ctx != self.ctx:
            raise CtxMismatch(f"{self.ctx} vs {other.ctx}")
        return other

    def __add__(self, other):
        return s_add(self, self._other(other))

    __radd__ = __add__

    def __neg__(self):
        return LaurentTrunc(self.ctx, self.lo, -self.c, self.hi)

    def __sub__(self, other):
        return s_add(self, -self._other(other))

    def __rsub__(self, other):
        return s_add(-self, self._other(other))

    def __mul__(self, other):
        if isinstance(other, (int, RingElem)):
            return self.scale(other)
        return s_mul(self, self._other(other))

    __rmul__ = __mul__

    def scale(self, a):
        if isinstance(a, int):
            a = self.ctx.from_int(a)
        if self.ctx.scalar:
            c = self.c * a.coords[0]
        else:
            c = np.einsum("ks,t,stu->ku", self.c, np.asarray(a.coords, dtype=np.int64), self.ctx.T)
        return LaurentTrunc(self.ctx, self.lo, c, self.hi)

    def shift(self, k):
        """Multiply by X^k."""
        return LaurentTrunc(self.ctx, self.lo + k, self.c, self.hi + k)

    def __eq__(self, other):
        if not isinstance(other, LaurentTrunc):
            return NotImplemented
        return (self.ctx == other.ctx and self.hi == other.hi and self.lo == other.lo
                and np.array_equal(self.c, other.c))

    def __hash__(self):
        return hash((self.lo, self.hi, self.c.tobytes()))

    def __repr__(self):
        terms = []
        for k, v in self.coeffs.items():
            cf = str(v.coords[0]) if self.ctx.scalar else str(v.coords)
            terms.append(f"{cf}*X^{k}")
        body = " + ".join(terms) if terms else "0"
        return body if self.is_exact else f"{body} + O(X^{self.hi})"


def s_add(f, g):
    if f.ctx != g.ctx:
        raise CtxMismatch(f"{f.ctx} vs {g.ctx}")
    hi = min(f.hi, g.hi)
    if f.is_zero():
        return g.truncate(hi)
    if g.is_zero():
        return f.truncate(hi)
    lo = min(f.lo, g.lo)
    top = max(f.top, g.top) + 1
    if hi != math.inf:
        top = min(top, hi)
    if top <= lo:
        return LaurentTrunc.zero(f.ctx, hi)
    return LaurentTrunc(f.ctx, lo, f.dense(lo, top) + g.dense(lo, top), hi)


def s_mul(f, g, hi=None):
    """Product; the result is known below min(hi_f + v(g), hi_g + v(f))."""
    if f.ctx != g.ctx:
        raise CtxMismatch(f"{f.ctx} vs {g.ctx}")
    h = min(f.hi + g.valuation, g.hi + f.valuation)
    if hi is not None:
        h = min(h, hi)
    if f.is_zero() or g.is_zero():
        return LaurentTrunc.zero(f.ctx, h)
    a, b = f.c, g.c
    lo = f.lo + g.lo
    if h != math.inf:
        # only exponents below h are needed
        a = a[:max(0, h - lo)]
        b = b[:max(0, h - lo)]
    return LaurentTrunc(f.ctx, lo, _conv(a, b, f.ctx), h)


def _power_series_inverse(a, K):
    """Inverse of a power series with a(0) = 1, modulo X^K (Newton iteration)."""
    ctx = a.ctx
    h = LaurentTrunc.constant(ctx, 1, hi=1)
    prec = 1
    two = LaurentTrunc.constant(ctx, 2)
    while prec < K:
        prec = min(2 * prec, K)
        ah = s_mul(a.truncate(prec), LaurentTrunc(ctx, h.lo, h.c, prec), hi=prec)
        h = s_mul(LaurentTrunc(ctx, h.lo, h.c, prec), two - ah, hi=prec)
    return h


def s_invert(f, hi=None):
    """Inverse of a Laurent series with at least one unit coefficient.

    Writing f = c X^d (1 + g) with c X^d the lowest unit term, the part of g
    below X^0 has coefficients in pi R and is nilpotent, the rest is X-adically
    small.  ``hi`` bounds the returned window (needed when f is exact).
    """
    ctx = f.ctx
    d = f.unit_exponent()
    if d is None:
        raise NotUnit("no coefficient of the series is a unit")
    c_inv = ring_inv(f.coef(d))
    if f.is_exact and hi is None:
        if f.lo == f.top == d:
            return LaurentTrunc.monomial(ctx, -d, c_inv)
        raise WindowTooNarrow("inverse of a non-monomial needs a target window")
    g = f.scale(c_inv).shift(-d)             # 1 + g
    neg = LaurentTrunc(ctx, g.lo, g.dense(g.lo, 0), math.inf) if g.lo < 0 else LaurentTrunc.zero(ctx)
    pos = g - neg                            # 1 + g_+
    t = -neg.lo if not neg.is_zero() else 0
    nil = ctx.m                              # (pi)^m = 0 bounds the nilpotent part
    target = hi + d if hi is not None else f.hi - d
    if f.hi != math.inf:
        # precision of 1/f is at most hi_f + 2 v(1/f)
        target = min(target, f.hi - d)
    K = target + nil * t + 1
    h = _power_series_inverse(pos.truncate(K), K)
    if neg.is_zero():
        res = h
    else:
        w = s_mul(h, neg, hi=K)
        s = LaurentTrunc.constant(ctx, 1, hi=K)
        term = LaurentTrunc.constant(ctx, 1)
        for _ in range(nil * ctx.e + 1):
            term = -s_mul(term, w, hi=K)
            if term.is_zero():
                break
            s = s + term
        res = s_mul(h, s, hi=K)
    out = res.scale(c_inv).shift(-d)
    if f.hi != math.inf:
        v_inv = -d if out.is_zero() else out.valuation
        out = out.truncate(f.hi + 2 * v_inv)
    if hi is not None:
        out = out.truncate(hi)
    if out.hi != math.inf and out.hi <= out.lo and not out.is_zero():
        raise EmptyWindow("inverse has an empty certified window")
    return out


def power_valuation_bound(g, h):
    """Lower bound for the X-valuation of g^h in R_m[[X]] (g with v(g) >= 1)."""
    if h <= 0:
        return 0 if h == 0 else -math.inf
    d = g.unit_exponent()
    j = g.valuation
    if d is None:
        return math.inf if h >= g.ctx.m else h * j
    k = min(h, g.ctx.m - 1)
    return k * j + (h - k) * d


def s_compose(f, g, hi=None):
    """f(g) for g in X R_m[[X]].

    Negative exponents of f need 1/g, which exists in the Laurent ring as soon
    as some coefficient of g is a unit.  ``hi`` caps the working window.
    """
    ctx = f.ctx
    if g.ctx != ctx:
        raise CtxMismatch(f"{f.ctx} vs {g.ctx}")
    if g.is_zero() or g.lo < 1:
        raise CompositionUndefined("substituted series must have X-valuation >= 1")
    if f.hi != math.inf and f.hi <= 0:
        raise EmptyWindow("series window is empty")
    err = power_valuation_bound(g, f.hi) if f.hi != math.inf else math.inf
    cap = min(err, hi) if hi is not None else err
    if f.lo < 0 and cap == math.inf:
        raise WindowTooNarrow("composition of a Laurent tail needs a target window")
    # positive part via accumulated powers, capped at cap
    top = f.top if not f.is_zero() else -1
    pos_lo = max(f.lo, 0)
    acc = LaurentTrunc.zero(ctx, cap)
    if top >= pos_lo:
        pw = LaurentTrunc.constant(ctx, 1)
        for k in range(0, top + 1):
            if k >= pos_lo:
                ck = f.coef(k)
                if not ck.is_zero():
                    acc = acc + pw.truncate(cap).scale(ck)
            if power_valuation_bound(g, k + 1) >= cap:
                break
            pw = s_mul(pw, g, hi=cap if cap != math.inf else None)
    if f.lo < 0:
        if g.unit_exponent() is None:
            raise NonInvertibleTail("substituted series is not invertible mod pi")
        # g^{-k} = (1/g)^k; 1/g has valuation -d, so raise the working cap
        d = g.unit_exponent()
        kmax = -f.lo
        work = cap + kmax * (d + (ctx.m - 1) * (d - g.valuation)) + 1
        ginv = s_invert(g, hi=work)
        pw = LaurentTrunc.constant(ctx, 1)
        for k in range(1, kmax + 1):
            pw = s_mul(pw, ginv, hi=work)
            ck = f.coef(-k)
            if not ck.is_zero():
                acc = acc + pw.truncate(cap).scale(ck)
        if acc.hi < cap:
            raise WindowTooNarrow("internal inverse window too small for the requested cap")
    return acc


def phi_substitute(f, frob, hi=None):
    """f(phi(X)) for the Frobenius series of ``frob``."""
    return s_compose(f, frob.series, hi=hi)


def phi_decompose(f, frob, hi=None):
    """Coefficients g_0..g_{q-1} with f = sum_i phi(g_i) X^i on a certified window.

    Mod pi the g_i are read off exponent classes mod q, since phi(X) = X^q
    there; the defect left by that guess lies in pi R, and re-extracting it
    gains one pi-level per pass.  Returns (gs, certified_hi).
    """
    ctx = f.ctx
    q = ctx.q
    target = f.hi if hi is None else min(f.hi, hi)
    if target == math.inf and f.lo < 0:
        raise WindowTooNarrow("decomposing a Laurent tail needs a finite window")
    gs = [LaurentTrunc.zero(ctx) for _ in range(q)]
    defect = f if target == math.inf else f.truncate(target)
    for _ in range(ctx.m + 1):
        if defect.is_zero():
            break
        dhi = defect.hi
        for i in range(q):
            lo_i = -((i - defect.lo) // q)
            top = defect.top
            ks = range(lo_i, (top - i) // q + 1)
            rows = np.array([defect.dense(q * k + i, q * k + i + 1)[0] for k in ks],
                            dtype=np.int64).reshape(-1, ctx.rank)
            ghi = math.inf if dhi == math.inf else -((-(dhi - i)) // q)
            piece = LaurentTrunc(ctx, lo_i, rows, ghi)
            gs[i] = gs[i] + piece
        defect = f - recompose(gs, frob, target)
    if not defect.is_zero():
        raise WindowTooNarrow("phi-decomposition did not converge on the window")
    cert = recompose(gs, frob, target).hi
    if cert != math.inf and cert <= f.lo:
        raise WindowTooNarrow("certified window of the decomposition is empty")
    return gs, cert


def recompose(gs, frob, hi=None):
    """sum_i phi(g_i) X^i."""
    ctx = frob.ctx
    cap = hi if hi is not None and hi != math.inf else None
    acc = LaurentTrunc.zero(ctx)
    for i, g in enumerate(gs):
        if g.is_zero() and g.is_exact:
            continue
        if g.is_zero():
            gh = power_valuation_bound(frob.series, g.hi) + i
            acc = acc + LaurentTrunc.zero(ctx, gh)
            continue
        acc = acc + s_compose(g, frob.series, hi=None if cap is None else cap - i).shift(i)
    return acc


def window_quotient(f, n):
    """Image of f in A/X^n A^+ (drop exponents >= n)."""
    if n > f.hi:
        raise EmptyWindow(f"cutoff {n} exceeds the known window {f.hi}")
    if f.is_zero() or f.top < n:
        return LaurentTrunc(f.ctx, f.lo, f.c, n) if f.hi != n else f
    return LaurentTrunc(f.ctx, f.lo, f.c, n)


class BivarTrunc:
    """Power series in X, Y over R_m modulo total degree D, as a (D, D, rank) array."""

    def __init__(self, ctx, D, coeffs=None):
        self.ctx, self.D = ctx, D
        c = np.zeros((D, D, ctx.rank), dtype=np.int64) if coeffs is None else np.array(coeffs, dtype=np.int64)
        i, j = np.indices((D, D))
        c[i + j >= D] = 0
        self.c = c % ctx.order_mods

    @classmethod
    def from_terms(cls, ctx, D, terms):
        b = cls(ctx, D)
        for (i, j), v in terms.items():
            if i + j < D:
                if isinstance(v, int):
                    v = ctx.from_int(v)
                b.c[i, j] = v.coords
        b.c %= ctx.order_mods
        return b

    def coef(self, i, j):
        return RingElem(self.ctx, self.c[i, j])

    def __add__(self, other):
        return BivarTrunc(self.ctx, self.D, self.c + other.c)

    def __sub__(self, other):
        return BivarTrunc(self.ctx, self.D, self.c - other.c)

    def __mul__(self, other):
        D, ctx = self.D, self.ctx
        out = np.zeros((D, D, ctx.rank), dtype=np.int64)
        nz = np.argwhere(self.c.any(axis=2))
        for i, j in nz:
            a = RingElem(ctx, self.c[i, j])
            sub = other.c[:D - i, :D - j]
            if ctx.scalar:
                prod = sub * a.coords[0]
            else:
                prod = np.einsum("xys,t,tsu->xyu", sub, np.asarray(a.coords), ctx.T)
            out[i:, j:] = (out[i:, j:] + prod) % ctx.mod
        return BivarTrunc(ctx, D, out)

    def __eq__(self, other):
        return self.D == other.D and np.array_equal(self.c, other.c)

    def swap(self):
        return BivarTrunc(self.ctx, self.D, self.c.transpose(1, 0, 2))

    def is_zero(self):
        return not self.c.any()

    @classmethod
    def from_univariate(cls, f, D, var="X"):
        b = cls(f.ctx, D)
        for k in range(max(f.lo, 0), min(D, f.top + 1)):
            if var == "X":
                b.c[k, 0] = f.c[k - f.lo]
            else:
                b.c[0, k] = f.c[k - f.lo]
        return b

    def substitute_into(self, f):
        """f(self) for a power series f with f(0) = 0, modulo total degree D."""
        acc = BivarTrunc(self.ctx, self.D)
        pw = BivarTrunc.from_terms(self.ctx, self.D, {(0, 0): 1})
        for k in range(0, min(f.top, self.D - 1) + 1 if not f.is_zero() else 0):
            if k >= f.lo:
                ck = f.coef(k)
                if not ck.is_zero():
                    acc = acc + pw * BivarTrunc.from_terms(self.ctx, self.D, {(0, 0): ck})
            pw = pw * self
        return acc

    def compose(self, g, h):
        """self(g, h) for bivariate g, h without constant terms."""
        D, ctx = self.D, self.ctx
        acc = BivarTrunc(ctx, D)
        gp = [BivarTrunc.from_terms(ctx, D, {(0, 0): 1})]
        hp = [BivarTrunc.from_terms(ctx, D, {(0, 0): 1})]
        for _ in range(D - 1):
            gp.append(gp[-1] * g)
            hp.append(hp[-1] * h)
        for i, j in np.argwhere(self.c.any(axis=2)):
            a = BivarTrunc.from_terms(ctx, D, {(0, 0): RingElem(ctx, self.c[i, j])})
            acc = acc + a * gp[i] * hp[j]
        return acc


_TERM = re.compile(r"\s*\(\s*(-?\d+)\s*,\s*(\[[^\]]*\]|-?\d+)\s*\)\s*")


def parse_series_terms(text, line=None, col_offset=0):
    """Parse a literal ``[(exp, coeff), ...]`` into {exp: (coeff, column)}.

    coeff is an int or a list of ints; repeated exponents are rejected.
    """
    s = text.strip()
    base = col_offset + (len(text) - len(text.lstrip())) + 1
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError("series literal must be a bracketed list of (exponent, coefficient) pairs",
                         line, base)
    body = s[1:-1]
    terms = {}
    pos = 0
    while pos < len(body):
        mt = _TERM.match(body, pos)
        if not mt:
            where = base + 1 + pos + len(body[pos:]) - len(body[pos:].lstrip())
            raise ParseError(f"malformed series term near {body[pos:pos + 12].strip()!r}", line, where)
        k = int(mt.group(1))
        raw = mt.group(2)
        col = base + 1 + mt.start(2)
        if raw.startswith("["):
            try:
                val = [int(x) for x in raw[1:-1].split(",") if x.strip()]
            except ValueError:
                raise ParseError("non-integer coordinate", line, col) from None
        else:
            val = int(raw)
        if k in terms:
            raise ParseError(f"exponent {k} appears twice", line, base + 1 + mt.start(1))
        terms[k] = (val, col)
        pos = mt.end()
        if pos < len(body):
            if body[pos] != ",":
                raise ParseError("expected ',' between series terms", line, base + 1 + pos)
            pos += 1
    return terms


def parse_series(text, ctx, hi=math.inf, line=None, col_offset=0):
    """Parse a literal ``[(exp, coeff), ...]``; coeff is an integer or a
    coordinate list ``[c_0, ..., c_{r-1}]`` in the ring basis."""
    terms = {}
    for k, (val, col) in parse_series_terms(text, line, col_offset).items():
        if isinstance(val, list):
            if len(val) != ctx.rank:
                raise ParseError(f"coordinate vector must have {ctx.rank} entries", line, col)
            terms[k] = RingElem(ctx, val)
        else:
            terms[k] = ctx.from_int(val)
    return LaurentTrunc.from_dict(ctx, terms, hi)
