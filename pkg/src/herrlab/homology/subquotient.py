"""Subquotients Z/B of (Z/p^M)^k, the value type for cohomology and images."""

import numpy as np

from . import linalg


class SubQuotient:
    """The group Z/B for submodules B <= Z of the ambient (Z/p^M)^k.

    Both are given by generator columns.  B is always enlarged to contain the
    ambient relations, so coordinates of bounded order are handled uniformly.
    """

    def __init__(self, p, M, Z, B):
        self.p, self.M = p, M
        self.Z = linalg.span(Z, p, M)
        self.B = linalg.span(B, p, M)
        self.dim = self.Z.shape[0]
        self._exponents = None

    @property
    def exponents(self):
        """Elementary divisor exponents, descending (Z/p^a for each a)."""
        if self._exponents is None:
            p, M = self.p, self.M
            g = self.Z.shape[1]
            if g == 0:
                self._exponents = []
            else:
                # coordinates c with Z c in B
                K = linalg.kernel(linalg.hstack(self.Z, self.B, rows=self.dim), p, M)
                S = K[:g, :]
                self._exponents = linalg.quotient_divisors(g, S, p, M)
        return self._exponents

    @property
    def log_order(self):
        return sum(self.exponents)

    def is_zero(self):
        return not self.exponents

    def image(self, T, target):
        """Image of self under the ambient matrix T, inside ``target``'s quotient.

        T must carry Z into target.Z and B into target.B; this is checked.
        """
        mod = self.p ** self.M
        TZ = linalg.matmul(T, self.Z, mod)
        TB = linalg.matmul(T, self.B, mod)
        if not contains(target.Z, TZ, self.p, self.M):
            raise ValueError("map does not send cycles into cycles")
        if not contains(target.B, TB, self.p, self.M):
            raise ValueError("map does not send boundaries into boundaries")
        return SubQuotient(self.p, self.M, linalg.hstack(TZ, target.B, rows=target.dim), target.B)

    def equal_as_subgroups(self, other):
        return (contains(self.Z, other.Z, self.p, self.M) and contains(other.Z, self.Z, self.p, self.M)
                and contains(self.B, other.B, self.p, self.M) and contains(other.B, self.B, self.p, self.M))


def contains(G, H, p, M):
    """Whether span(H) is contained in span(G)."""
    H = np.asarray(H, dtype=np.int64)
    if H.size == 0:
        return True
    G = np.asarray(G, dtype=np.int64)
    if G.size == 0:
        return not (H % p ** M).any()
    both = linalg.hstack(G, H, rows=G.shape[0])
    return linalg.log_order(both, p, M) == linalg.log_order(G, p, M)
