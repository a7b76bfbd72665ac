"""Exact linear algebra over Z/p^M.

Matrices are numpy int64 arrays holding reduced representatives in
[0, p^M).  Everything here is deterministic: pivots are chosen by minimal
p-adic valuation, ties broken by (row, column) order.
"""

import numpy as np

_INT_LIMIT = 2 ** 62


def check_modulus(p, M, inner=1):
    """Guard against int64 overflow in products summed over ``inner`` terms."""
    mod = p ** M
    if mod * mod * max(inner, 1) >= _INT_LIMIT:
        raise OverflowError(f"p^M = {mod} too large for int64 arithmetic")
    return mod


def valuations(A, p, M):
    """Elementwise p-adic valuation, capped at M (so 0 has valuation M)."""
    A = np.asarray(A, dtype=np.int64)
    v = np.full(A.shape, M, dtype=np.int64)
    pk = 1
    for k in range(M):
        mask = (A % (pk * p) != 0) & (v == M)
        v[mask] = k
        pk *= p
    return v


def matmul(A, B, mod):
    """Product mod ``mod``; splits the inner dimension to stay inside int64."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    chunk = max(1, _INT_LIMIT // (mod * mod))
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for s in range(0, A.shape[1], chunk):
        out = (out + A[:, s:s + chunk] @ B[s:s + chunk, :]) % mod
    return out


class SNF:
    """Smith normal form ``U @ A @ V == D`` over Z/p^M.

    ``vals`` lists the valuations of the diagonal entries (length
    min(rows, cols)); a zero diagonal entry has valuation M.  ``Uinv`` is kept
    because the image of A is spanned by the columns of ``Uinv @ D``.
    """

    def __init__(self, A, p, M, want_u=True, want_v=True):
        self.p, self.M = p, M
        mod = check_modulus(p, M)
        A = np.array(A, dtype=np.int64) % mod
        rows, cols = A.shape
        U = np.eye(rows, dtype=np.int64) if want_u else None
        Uinv = np.eye(rows, dtype=np.int64) if want_u else None
        V = np.eye(cols, dtype=np.int64) if want_v else None
        vals = []
        val = valuations(A, p, M)
        for t in range(min(rows, cols)):
            sub = val[t:, t:]
            vmin = int(sub.min()) if sub.size else M
            if vmin >= M:
                vals.extend([M] * (min(rows, cols) - t))
                break
            r, c = np.argwhere(sub == vmin)[0]
            r += t
            c += t
            if r != t:
                A[[t, r]] = A[[r, t]]
                val[[t, r]] = val[[r, t]]
                if want_u:
                    U[[t, r]] = U[[r, t]]
                    Uinv[:, [t, r]] = Uinv[:, [r, t]]
            if c != t:
                A[:, [t, c]] = A[:, [c, t]]
                val[:, [t, c]] = val[:, [c, t]]
                if want_v:
                    V[:, [t, c]] = V[:, [c, t]]
            pv = p ** vmin
            unit = int(A[t, t]) // pv
            uinv = pow(unit, -1, mod)
            A[t] = (A[t] * uinv) % mod
            if want_u:
                U[t] = (U[t] * uinv) % mod
                Uinv[:, t] = (Uinv[:, t] * unit) % mod
            # every entry in the pivot row/column is divisible by p^vmin
            colq = A[t + 1:, t] // pv
            if colq.any():
                A[t + 1:] = (A[t + 1:] - np.outer(colq, A[t])) % mod
                if want_u:
                    U[t + 1:] = (U[t + 1:] - np.outer(colq, U[t])) % mod
                    Uinv[:, t] = (Uinv[:, t] + matmul(Uinv[:, t + 1:], colq[:, None], mod)[:, 0]) % mod
            rowq = A[t, t + 1:] // pv
            if rowq.any():
                A[:, t + 1:] = (A[:, t + 1:] - np.outer(A[:, t], rowq)) % mod
                if want_v:
                    V[:, t + 1:] = (V[:, t + 1:] - np.outer(V[:, t], rowq)) % mod
            val[t + 1:, t + 1:] = valuations(A[t + 1:, t + 1:], p, M)
            val[t, :] = M
            val[:, t] = M
            vals.append(vmin)
        self.D = A
        self.U, self.Uinv, self.V = U, Uinv, V
        self.vals = vals
        self.shape = (rows, cols)

    @property
    def rank_divisors(self):
        return [v for v in self.vals if v < self.M]


def snf(A, p, M):
    """Return ``(U, D, V)`` with ``U @ A @ V == D`` over Z/p^M."""
    s = SNF(A, p, M)
    return s.U, s.D, s.V


def kernel(A, p, M):
    """Generators (as columns) of the kernel of A: (Z/p^M)^cols -> (Z/p^M)^rows."""
    A = np.asarray(A, dtype=np.int64)
    rows, cols = A.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if rows == 0:
        return np.eye(cols, dtype=np.int64)
    s = SNF(A, p, M, want_u=False)
    mod = p ** M
    gens = []
    for i in range(cols):
        v = s.vals[i] if i < len(s.vals) else M
        if v == 0:
            continue
        gens.append((s.V[:, i] * p ** (M - v)) % mod)
    if not gens:
        return np.zeros((cols, 0), dtype=np.int64)
    return np.array(gens, dtype=np.int64).T


def span(G, p, M):
    """A reduced generating set for the column span of G."""
    G = np.asarray(G, dtype=np.int64)
    rows = G.shape[0]
    if G.size == 0:
        return np.zeros((rows, 0), dtype=np.int64)
    s = SNF(G, p, M, want_v=False)
    mod = p ** M
    gens = [(s.Uinv[:, i] * p ** v) % mod for i, v in enumerate(s.vals) if v < M]
    if not gens:
        return np.zeros((rows, 0), dtype=np.int64)
    return np.array(gens, dtype=np.int64).T


def log_order(G, p, M):
    """log_p of the cardinality of the submodule spanned by the columns of G."""
    G = np.asarray(G, dtype=np.int64)
    if G.size == 0:
        return 0
    s = SNF(G, p, M, want_u=False, want_v=False)
    return sum(M - v for v in s.vals)


def quotient_divisors(ngens, S, p, M):
    """Exponents a_i with (Z/p^M)^ngens / span(S) = sum Z/p^{a_i}, a_i > 0."""
    if ngens == 0:
        return []
    S = np.asarray(S, dtype=np.int64).reshape(ngens, -1)
    if S.shape[1] == 0:
        return [M] * ngens
    s = SNF(S, p, M, want_u=False, want_v=False)
    vals = list(s.vals) + [M] * (ngens - len(s.vals))
    return sorted((v for v in vals if v > 0), reverse=True)


def hstack(*mats, rows=None):
    mats = [np.asarray(m, dtype=np.int64) for m in mats]
    if rows is None:
        rows = mats[0].shape[0]
    mats = [m.reshape(rows, -1) for m in mats]
    return np.concatenate(mats, axis=1) if mats else np.zeros((rows, 0), dtype=np.int64)


def solve(A, b, p, M):
    """Some x with A @ x == b over Z/p^M, or None if b is not in the image."""
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    mod = p ** M
    s = SNF(A, p, M)
    c = matmul(s.U, b[:, None], mod)[:, 0]
    y = np.zeros(A.shape[1], dtype=np.int64)
    for i in range(len(c)):
        v = s.vals[i] if i < len(s.vals) else M
        if v >= M:
            if c[i] % mod:
                return None
            continue
        pv = p ** v
        if c[i] % pv:
            return None
        if i < A.shape[1]:
            y[i] = (c[i] // pv) % mod
    return matmul(s.V, y[:, None], mod)[:, 0]
