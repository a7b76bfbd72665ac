"""Finite local rings O_L / pi^m presented over Z/p^M.

O_L is given as Z_p[t]/(P(t)) for a monic integral P of degree e*f, together
with the power-basis coordinates of a prime element pi.  The quotient
O_L/pi^m is a finite Z/p^M-module, M = ceil(m/e); its adapted basis comes from
the Smith normal form of multiplication by pi^m, so an element is a vector of
coordinates where coordinate u lives in Z/p^{a_u}.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

from .errors import (CtxMismatch, InsufficientGuard, InvalidPolynomial, NotDivisible, NotUnit,
                     PrecisionOverflow, ValidationError)
from .homology import linalg

# p^M must satisfy p^(2M) * 2^16 < 2^62 so that series convolutions fit in int64
MAX_MODULUS = 2 ** 23


def _is_prime(n):
    return n > 1 and all(n % d for d in range(2, int(n ** 0.5) + 1))


@dataclass(frozen=True)
class FieldParams:
    p: int
    f: int
    e: int
    defining_poly: tuple
    pi_coords: tuple

    @property
    def q(self):
        return self.p ** self.f

    @property
    def degree(self):
        return self.e * self.f

    def validate(self):
        if not _is_prime(self.p) or self.p == 2:
            raise ValidationError(f"p must be an odd prime, got {self.p}")
        if self.f < 1 or self.e < 1:
            raise ValidationError("residue degree and ramification index must be >= 1")
        poly = tuple(int(c) for c in self.defining_poly)
        if len(poly) != self.degree + 1 or poly[-1] != 1:
            raise InvalidPolynomial(f"defining polynomial must be monic of degree e*f = {self.degree}")
        if len(self.pi_coords) != self.degree:
            raise InvalidPolynomial("pi_coords must have e*f entries")


def qp_params(p):
    """Q_p itself: O = Z_p, pi = p."""
    return FieldParams(p, 1, 1, (0, 1), (p,))


def eisenstein_params(p, poly):
    """Totally ramified O_L = Z_p[pi]/(E(pi)) for an Eisenstein E (low to high)."""
    poly = tuple(int(c) for c in poly)
    e = len(poly) - 1
    pi = tuple(1 if i == 1 else 0 for i in range(e)) if e > 1 else (-poly[0],)
    return FieldParams(p, 1, e, poly, pi)


def unramified_params(p, poly):
    """Unramified O_L = Z_p[t]/(P(t)) for a monic P irreducible mod p; pi = p."""
    poly = tuple(int(c) for c in poly)
    f = len(poly) - 1
    pi = tuple(p if i == 0 else 0 for i in range(f))
    return FieldParams(p, f, 1, poly, pi)


def _poly_mulmod(a, b, P, mod):
    """Multiply power-basis vectors a, b modulo the monic P and mod."""
    n = len(P) - 1
    prod = np.convolve(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
    prod = [int(c) for c in prod]
    for k in range(len(prod) - 1, n - 1, -1):
        c = prod[k]
        if c:
            for i in range(n + 1):
                prod[k - n + i] -= c * P[i]
    out = [c % mod for c in prod[:n]]
    return out + [0] * (n - len(out))


class RingCtx:
    """The ring O_L/pi^m with its fixed additive basis and multiplication table."""

    def __init__(self, params, m, guard=2):
        params.validate()
        if m < 1:
            raise ValidationError("precision level m must be >= 1")
        self.params = params
        self.p, self.f, self.e, self.q = params.p, params.f, params.e, params.q
        self.m = m
        self.guard = guard
        self.M = -(-m // params.e)
        self.mod = self.p ** self.M
        if self.mod > MAX_MODULUS:
            raise PrecisionOverflow(f"p^M = {self.mod} exceeds the configured cap {MAX_MODULUS}")
        n = params.degree
        P = [int(c) for c in params.defining_poly]
        self._P = P
        mod = self.mod
        pi = [int(c) % mod for c in params.pi_coords]
        # multiplication by pi on the power basis, then by pi^m
        mult_pi = np.zeros((n, n), dtype=np.int64)
        for j in range(n):
            ej = [1 if i == j else 0 for i in range(n)]
            mult_pi[:, j] = _poly_mulmod(pi, ej, P, mod)
        pim = np.eye(n, dtype=np.int64)
        for _ in range(m):
            pim = linalg.matmul(mult_pi, pim, mod)
        s = linalg.SNF(pim, self.p, self.M)
        vals = list(s.vals) + [self.M] * (n - len(s.vals))
        keep = [i for i in range(n) if vals[i] > 0]
        if sum(vals[i] for i in keep) != params.f * m:
            raise InvalidPolynomial(
                f"|O/pi^{m}| = p^{sum(vals[i] for i in keep)}, expected q^m = p^{params.f * m}")
        self.rank = len(keep)
        self.orders = tuple(int(vals[i]) for i in keep)
        self.order_mods = np.array([self.p ** a for a in self.orders], dtype=np.int64)
        self._U = s.U[keep, :]                # power coords -> adapted coords
        self._Uinv = s.Uinv[:, keep]          # adapted basis vectors in power coords
        r = self.rank
        T = np.zeros((r, r, r), dtype=np.int64)
        for a in range(r):
            for b in range(a, r):
                prod = _poly_mulmod(self._Uinv[:, a], self._Uinv[:, b], P, mod)
                T[a, b] = T[b, a] = self._from_power_vec(prod)
        self.T = T
        self.scalar = (r == 1 and T[0, 0, 0] % self.order_mods[0] == 1 % self.order_mods[0]
                       and self.from_int(1).coords == (1,))
        self._check_residue_field()
        self._pi_cache = {}
        # coordinates -> residue-field coordinates (mod pi), for unit tests on arrays
        k = self if m == 1 else make_ring(params, 1, guard)
        self.residue_matrix = linalg.matmul(k._U, self._Uinv, self.mod) % self.p

    # -- construction -------------------------------------------------------
    def _from_power_vec(self, x):
        x = np.asarray(x, dtype=np.int64).reshape(-1, 1) % self.mod
        y = linalg.matmul(self._U, x, self.mod)[:, 0]
        return y % self.order_mods

    def elem(self, coords):
        return RingElem(self, coords)

    def from_power(self, coords):
        return RingElem(self, self._from_power_vec(coords))

    def from_int(self, k):
        n = self.params.degree
        return self.from_power([k % self.mod] + [0] * (n - 1))

    def zero(self):
        return RingElem(self, [0] * self.rank)

    def one(self):
        return self.from_int(1)

    @property
    def pi(self):
        return self.from_power(self.params.pi_coords)

    def pi_power(self, k):
        if k not in self._pi_cache:
            x = self.one()
            for _ in range(k):
                x = x * self.pi
            self._pi_cache[k] = x
        return self._pi_cache[k]

    @property
    def cardinality(self):
        return self.p ** sum(self.orders)

    def to_power(self, a):
        """Power-basis representative of an element (integers mod p^M)."""
        y = np.asarray(a.coords if isinstance(a, RingElem) else a, dtype=np.int64).reshape(-1, 1)
        return linalg.matmul(self._Uinv, y, self.mod)[:, 0]

    def __eq__(self, other):
        return isinstance(other, RingCtx) and (self.params, self.m) == (other.params, other.m)

    def __hash__(self):
        return hash((self.params, self.m))

    def __repr__(self):
        return f"RingCtx(p={self.p}, f={self.f}, e={self.e}, m={self.m})"

    def at_level(self, m):
        return make_ring(self.params, m, self.guard)

    def convert(self, a, ctx):
        """Reduce (or lift by representative) an element into another level."""
        if ctx.params != self.params:
            raise CtxMismatch("different fields")
        return ctx.from_power(self.to_power(a))

    # -- vectorised arithmetic on coordinate arrays --------------------------
    def reduce(self, arr):
        return np.asarray(arr, dtype=np.int64) % self.order_mods

    def mul_vec(self, x, y):
        if self.scalar:
            return (np.asarray(x, dtype=np.int64) * np.asarray(y, dtype=np.int64)) % self.order_mods
        out = np.einsum("s,t,stu->u", np.asarray(x, dtype=np.int64) % self.mod,
                        np.asarray(y, dtype=np.int64) % self.mod, self.T)
        return out % self.order_mods

    def mult_matrix(self, x):
        """Matrix of y -> x*y on adapted coordinates."""
        x = np.asarray(x.coords if isinstance(x, RingElem) else x, dtype=np.int64)
        return np.einsum("s,stu->ut", x, self.T) % self.mod

    def is_unit_rows(self, arr):
        """Boolean mask of rows (coefficient vectors) that are units."""
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, self.rank)
        if self.scalar and self.e == 1:
            return arr[:, 0] % self.p != 0
        res = (arr % self.mod) @ self.residue_matrix.T % self.p
        return res.any(axis=1)

    def relations(self):
        return np.diag(self.order_mods).astype(np.int64) % self.mod

    def solve_mult(self, x, b):
        """Some y with x*y = b, or None."""
        A = linalg.hstack(self.mult_matrix(x), self.relations(), rows=self.rank)
        sol = linalg.solve(A, np.asarray(b, dtype=np.int64), self.p, self.M)
        if sol is None:
            return None
        return sol[:self.rank] % self.order_mods

    def elements(self):
        """All elements (only sensible for small rings)."""
        for coords in itertools.product(*[range(int(o)) for o in self.order_mods]):
            yield RingElem(self, coords)

    def _check_residue_field(self):
        # O/pi must be a field of size q: x -> x^p - x has an F_p-line as kernel
        if self.m == 1:
            k = self
        else:
            k = make_ring(self.params, 1, self.guard)
        if k.rank != self.f or any(o != 1 for o in k.orders):
            raise InvalidPolynomial("O/pi is not an F_p-vector space of dimension f")
        F = np.zeros((k.rank, k.rank), dtype=np.int64)
        for j in range(k.rank):
            ej = k.elem([1 if i == j else 0 for i in range(k.rank)])
            F[:, j] = np.array((ej ** self.p - ej).coords)
        ker = linalg.kernel(F, self.p, 1)
        if linalg.log_order(ker, self.p, 1) != 1:
            raise InvalidPolynomial("O/pi is not a field (pi is not a prime element)")


@lru_cache(maxsize=None)
def make_ring(params, m, guard=2):
    """The context for O_L/pi^m; memoised, contexts are immutable."""
    return RingCtx(params, m, guard)


class RingElem:
    __slots__ = ("ctx", "coords")

    def __init__(self, ctx, coords):
        self.ctx = ctx
        c = np.asarray(coords, dtype=np.int64).reshape(-1) % ctx.order_mods
        self.coords = tuple(int(v) for v in c)

    def _check(self, other):
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if not isinstance(other, RingElem):
            return NotImplemented
        if other.ctx is not self.ctx and other.ctx != self.ctx:
            raise CtxMismatch(f"{self.ctx} vs {other.ctx}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return RingElem(self.ctx, np.add(self.coords, other.coords))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return RingElem(self.ctx, np.subtract(self.coords, other.coords))

    def __rsub__(self, other):
        return self._check(other) - self

    def __neg__(self):
        return RingElem(self.ctx, np.negative(self.coords))

    def __mul__(self, other):
        other = self._check(other)
        return RingElem(self.ctx, self.ctx.mul_vec(self.coords, other.coords))

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            return ring_inv(self) ** (-k)
        result, base = self.ctx.one(), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ctx.from_int(other)
        return isinstance(other, RingElem) and self.ctx == other.ctx and self.coords == other.coords

    def __hash__(self):
        return hash((self.ctx, self.coords))

    def is_zero(self):
        return not any(self.coords)

    def is_unit(self):
        return pi_valuation(self) == 0

    def __repr__(self):
        if self.ctx.scalar:
            return f"{self.coords[0]} mod {self.ctx.mod}"
        return f"RingElem{self.coords}"


def ring_arith(a, b, op):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def pi_valuation(a):
    """Largest k <= m with a in pi^k R; m for zero."""
    ctx = a.ctx
    if a.is_zero():
        return ctx.m
    if ctx.scalar and ctx.e == 1:
        x = a.coords[0]
        v = 0
        while x % ctx.p == 0:
            x //= ctx.p
            v += 1
        return min(v, ctx.m)
    k = 0
    while k < ctx.m and ctx.solve_mult(ctx.pi_power(k + 1), a.coords) is not None:
        k += 1
    return k


def ring_inv(a):
    ctx = a.ctx
    if pi_valuation(a) != 0:
        raise NotUnit(f"{a} is not a unit")
    if ctx.scalar:
        return RingElem(ctx, [pow(a.coords[0], -1, int(ctx.order_mods[0]))])
    y = ctx.solve_mult(a, ctx.one().coords)
    return RingElem(ctx, y)


def pi_divide(a, k):
    """b with pi^k * b = a; b is only defined mod pi^(m-k), so it is returned
    in the level-(m-k) context."""
    ctx = a.ctx
    if k == 0:
        return a
    if k >= ctx.m:
        raise InsufficientGuard(f"cannot divide by pi^{k} at precision level {ctx.m}")
    if pi_valuation(a) < k:
        raise NotDivisible(f"{a} is not divisible by pi^{k}")
    if ctx.scalar and ctx.params.degree == 1 and ctx.params.pi_coords == (ctx.p,):
        # Z/p^m with pi = p: plain integer division
        return RingElem(ctx.at_level(ctx.m - k), [a.coords[0] // ctx.p ** k])
    y = ctx.solve_mult(ctx.pi_power(k), a.coords)
    return ctx.convert(RingElem(ctx, y), ctx.at_level(ctx.m - k))


def teichmuller(c, ctx):
    """The (q-1)-th root of unity (or 0) congruent to c mod pi.

    ``c`` may be an int, a RingElem of any level of the same field, or
    power-basis coordinates of a residue class.
    """
    if isinstance(c, RingElem):
        u = c.ctx.convert(c, ctx)
    elif isinstance(c, int):
        u = ctx.from_int(c)
    else:
        u = ctx.from_power(c)
    for _ in range(ctx.m * ctx.e + 1):
        u = u ** ctx.q
    if u ** ctx.q != u:
        raise PrecisionOverflow("Teichmueller iteration did not converge")
    return u
