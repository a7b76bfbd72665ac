"""Complexes of finite abelian p-groups.

Each term is a direct sum of cyclic groups Z/p^{a_u}, stored as a list of
exponents; differentials are integer matrices over Z/p^M (M >= every a_u).
A coordinate of order p^a carries the relation p^a e_u = 0, which is added
to boundaries and kernels wherever it matters.
"""

from itertools import combinations
import json

import numpy as np

from ..errors import NonCommuting, NotAChainMap, NotAComplex
from . import linalg
from .subquotient import SubQuotient


class FiniteAbGroup:
    """A finite abelian p-group given by its elementary divisors p^{a_1} >= p^{a_2} >= ..."""

    def __init__(self, p, exponents):
        self.p = p
        self.exponents = tuple(sorted((int(a) for a in exponents if a > 0), reverse=True))

    @property
    def divisors(self):
        return tuple(self.p ** a for a in self.exponents)

    @property
    def log_order(self):
        return sum(self.exponents)

    @property
    def order(self):
        return self.p ** self.log_order

    @property
    def rank(self):
        """Number of cyclic factors (the F_p-dimension when every factor is Z/p)."""
        return len(self.exponents)

    def is_zero(self):
        return not self.exponents

    def __eq__(self, other):
        return isinstance(other, FiniteAbGroup) and (self.p, self.exponents) == (other.p, other.exponents)

    def __hash__(self):
        return hash((self.p, self.exponents))

    def __repr__(self):
        if not self.exponents:
            return "0"
        return " + ".join(f"Z/{self.p}^{a}" for a in self.exponents)

    def to_json(self):
        return {"divisors": list(self.divisors), "exponents": list(self.exponents)}


def relations(orders, M, p):
    """Columns p^{a_u} e_u for coordinates of order below p^M."""
    orders = list(orders)
    cols = [u for u, a in enumerate(orders) if a < M]
    R = np.zeros((len(orders), len(cols)), dtype=np.int64)
    for j, u in enumerate(cols):
        R[u, j] = p ** orders[u]
    return R


class FiniteComplex:
    """C^start -> C^{start+1} -> ... with ``orders[i]`` the exponents of C^{start+i}."""

    def __init__(self, p, M, orders, diffs, start=0, check=True):
        self.p, self.M, self.start = p, M, start
        self.mod = linalg.check_modulus(p, M)
        self.orders = [list(map(int, o)) for o in orders]
        self.diffs = [np.asarray(d, dtype=np.int64).reshape(len(self.orders[i + 1]), len(self.orders[i])) % self.mod
                      for i, d in enumerate(diffs)]
        if len(self.diffs) != len(self.orders) - 1:
            raise NotAComplex("need one differential between consecutive terms")
        if check:
            self.check()

    @property
    def degrees(self):
        return range(self.start, self.start + len(self.orders))

    def rel(self, i):
        return relations(self.orders[i], self.M, self.p)

    def _in_relations(self, A, i):
        """Whether every column of A lies in the relations of term i."""
        mods = np.array([self.p ** a for a in self.orders[i]], dtype=np.int64).reshape(-1, 1)
        return not (A % mods).any() if A.size else True

    def check(self):
        for i, d in enumerate(self.diffs):
            scaled = d * np.array([self.p ** a for a in self.orders[i]], dtype=np.int64) % self.mod
            if not self._in_relations(scaled, i + 1):
                raise NotAComplex(f"differential {self.start + i} is not well defined on the cyclic factors")
        for i in range(len(self.diffs) - 1):
            dd = linalg.matmul(self.diffs[i + 1], self.diffs[i], self.mod)
            if not self._in_relations(dd, i + 2):
                raise NotAComplex(f"d^{self.start + i + 1} o d^{self.start + i} != 0")

    def cycles(self, i):
        """Generators of ker(d^i) inside term i (as columns)."""
        n = len(self.orders[i])
        if i == len(self.orders) - 1:
            return np.eye(n, dtype=np.int64)
        d = self.diffs[i]
        R = self.rel(i + 1)
        K = linalg.kernel(linalg.hstack(d, R, rows=d.shape[0]), self.p, self.M)
        return K[:n, :]

    def boundaries(self, i):
        """Generators of im(d^{i-1}) plus the relations of term i."""
        n = len(self.orders[i])
        parts = [self.rel(i)]
        if i > 0:
            parts.insert(0, self.diffs[i - 1])
        return linalg.hstack(*parts, rows=n)

    def subquotient(self, i, idem=None):
        """H at list position i as a SubQuotient; ``idem`` projects Z and B first."""
        Z, B = self.cycles(i), self.boundaries(i)
        if idem is not None:
            E = np.asarray(idem, dtype=np.int64)
            Z = linalg.matmul(E, Z, self.mod)
            B = linalg.hstack(linalg.matmul(E, B, self.mod), self.rel(i), rows=len(self.orders[i]))
        return SubQuotient(self.p, self.M, Z, B)

    def cohomology(self, idems=None):
        out = []
        for i in range(len(self.orders)):
            sq = self.subquotient(i, None if idems is None else idems[i])
            out.append(FiniteAbGroup(self.p, sq.exponents))
        return out

    # -- serialization -------------------------------------------------------
    def to_json(self):
        return {"p": self.p, "M": self.M, "start": self.start, "orders": self.orders,
                "diffs": [d.tolist() for d in self.diffs]}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        orders = doc["orders"]
        diffs = [np.array(d, dtype=np.int64).reshape(len(orders[i + 1]), len(orders[i]))
                 for i, d in enumerate(doc["diffs"])]
        return cls(doc["p"], doc["M"], orders, diffs, doc.get("start", 0))


def cohomology(C, idems=None):
    """Per-degree cohomology groups of C (optionally of its image under idempotents)."""
    return C.cohomology(idems)


def koszul(ops, orders, p, M):
    """Koszul complex of commuting endomorphisms t_1..t_r of a module with the given orders.

    K^i is a sum over i-subsets S of {0..r-1}; the component x_S goes to
    sum over j not in S of (-1)^{#(l in S, l < j)} t_j x_S at S + {j}.
    """
    mod = linalg.check_modulus(p, M)
    ops = [np.asarray(t, dtype=np.int64) % mod for t in ops]
    n, r = len(orders), len(ops)
    mods = np.array([p ** a for a in orders], dtype=np.int64).reshape(-1, 1)
    for a in range(r):
        for b in range(a + 1, r):
            comm = (linalg.matmul(ops[a], ops[b], mod) - linalg.matmul(ops[b], ops[a], mod)) % mod
            if (comm % mods).any():
                raise NonCommuting(f"operators {a} and {b} do not commute")
    subsets = [list(combinations(range(r), i)) for i in range(r + 1)]
    terms = [list(orders) * len(s) for s in subsets]
    diffs = []
    for i in range(r):
        src, tgt = subsets[i], subsets[i + 1]
        idx = {S: k for k, S in enumerate(tgt)}
        d = np.zeros((n * len(tgt), n * len(src)), dtype=np.int64)
        for a, S in enumerate(src):
            for j in range(r):
                if j in S:
                    continue
                sign = -1 if sum(1 for l in S if l < j) % 2 else 1
                T = tuple(sorted(S + (j,)))
                b = idx[T]
                d[b * n:(b + 1) * n, a * n:(a + 1) * n] = (sign * ops[j]) % mod
        diffs.append(d)
    return FiniteComplex(p, M, terms, diffs)


def koszul_map(f, r):
    """The chain map induced by a module map f on Koszul complexes in r operators."""
    f = np.asarray(f, dtype=np.int64)
    out = []
    for i in range(r + 1):
        k = len(list(combinations(range(r), i)))
        out.append(np.kron(np.eye(k, dtype=np.int64), f))
    return out


def _check_chain_map(C, D, fmaps):
    if C.start != D.start or len(C.orders) != len(D.orders) or len(fmaps) != len(C.orders):
        raise NotAChainMap("chain map needs complexes on the same degree range")
    mod = C.mod
    for i in range(len(C.orders) - 1):
        lhs = linalg.matmul(D.diffs[i], fmaps[i], mod)
        rhs = linalg.matmul(fmaps[i + 1], C.diffs[i], mod)
        if not D._in_relations((lhs - rhs) % mod, i + 1):
            raise NotAChainMap(f"square at degree {C.start + i} does not commute")


def total_cone(C, D, fmaps, check=True):
    """Tot of the two-column double complex C -> D along f.

    Tot^n = C^n + D^{n-1} with d(c, x) = (d_C c, f c - d_D x).
    """
    if check:
        _check_chain_map(C, D, fmaps)
    p, M, mod = C.p, C.M, C.mod
    k = len(C.orders)
    orders = []
    for n in range(k + 1):
        o = list(C.orders[n]) if n < k else []
        o += list(D.orders[n - 1]) if n >= 1 else []
        orders.append(o)
    diffs = []
    for n in range(k):
        nc = len(C.orders[n])
        nx = len(D.orders[n - 1]) if n >= 1 else 0
        mc = len(C.orders[n + 1]) if n + 1 < k else 0
        mx = len(D.orders[n])
        d = np.zeros((mc + mx, nc + nx), dtype=np.int64)
        if n + 1 < k:
            d[:mc, :nc] = C.diffs[n]
        d[mc:, :nc] = fmaps[n]
        if n >= 1:
            d[mc:, nc:] = (-D.diffs[n - 1]) % mod
        diffs.append(d)
    return FiniteComplex(p, M, orders, diffs, start=C.start, check=check)


def is_quasi_iso(C, D, fmaps):
    """(True iff the cone is acyclic, divisors of the cone cohomology per degree)."""
    H = total_cone(C, D, fmaps).cohomology()
    return all(h.is_zero() for h in H), [h.exponents for h in H]


def pontrjagin_dual(C):
    """Hom(-, Q_p/Z_p) of C: same orders, transposed differentials, negated grading."""
    p, M = C.p, C.M
    k = len(C.orders)
    orders = [C.orders[k - 1 - i] for i in range(k)]
    diffs = []
    for i in range(k - 1):
        # dual of d: C^a -> C^b, with a = k-2-i, b = k-1-i
        a = k - 2 - i
        d = C.diffs[a]
        oa, ob = C.orders[a], C.orders[a + 1]
        dual = np.zeros((len(oa), len(ob)), dtype=object)
        for r in range(len(ob)):
            for c in range(len(oa)):
                shift = oa[c] - ob[r]
                v = int(d[r, c])
                dual[c, r] = v * p ** shift if shift >= 0 else v // p ** (-shift)
        diffs.append(np.array(dual % C.mod, dtype=np.int64))
    return FiniteComplex(p, M, orders, diffs, start=-(C.start + k - 1))
