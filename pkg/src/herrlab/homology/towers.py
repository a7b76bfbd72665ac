"""Inverse and direct systems of finite groups and Mittag-Leffler detection."""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .complexes import FiniteAbGroup
from .subquotient import SubQuotient


class TowerOfGroups:
    """Groups G_0, G_1, ... (SubQuotients) with transition matrices.

    ``direction='inverse'``: maps[k] sends the ambient of G_{k+1} to that of
    G_k.  ``direction='direct'``: maps[k] sends G_k's ambient to G_{k+1}'s.
    ``labels`` name the levels (e.g. the truncation parameters).
    """

    def __init__(self, groups, maps, direction="inverse", labels=None):
        if len(maps) != max(0, len(groups) - 1):
            raise ValueError("need one transition per consecutive pair")
        if direction not in ("inverse", "direct"):
            raise ValueError(f"unknown direction {direction!r}")
        self.groups, self.maps, self.direction = list(groups), list(maps), direction
        self.labels = list(labels) if labels is not None else list(range(len(groups)))

    def __len__(self):
        return len(self.groups)

    def transition(self, src, tgt):
        """Composite ambient matrix from level src to level tgt."""
        g = self.groups
        mod = g[0].p ** g[0].M
        if self.direction == "inverse":
            assert src >= tgt
            T = np.eye(g[src].dim, dtype=np.int64)
            for k in range(src - 1, tgt - 1, -1):
                T = linalg.matmul(self.maps[k], T, mod)
        else:
            assert src <= tgt
            T = np.eye(g[src].dim, dtype=np.int64)
            for k in range(src, tgt):
                T = linalg.matmul(self.maps[k], T, mod)
        return T

    def image(self, src, tgt):
        return self.groups[src].image(self.transition(src, tgt), self.groups[tgt])


@dataclass
class Stabilized:
    value: FiniteAbGroup
    level: object
    traces: dict = field(default_factory=dict)
    kind: str = "Stabilized"


@dataclass
class MLZero:
    level: object
    traces: dict = field(default_factory=dict)
    kind: str = "MLZero"

    @property
    def value(self):
        return None


@dataclass
class NotStabilizedResult:
    traces: dict = field(default_factory=dict)
    kind: str = "NotStabilized"

    @property
    def value(self):
        return None


def ml_stabilize(T, w=3):
    """Classify a tower by its stable images.

    Inverse systems: S_n is the image of G_{n'} in G_n once it is the same for
    w consecutive source levels n'.  Direct systems: S_N is the image of G_N
    in G_{N'} once its order is the same for w consecutive targets N'.  The
    tower is Stabilized when w consecutive levels have stable S with equal
    divisors, MLZero when the stable images vanish from some level on.  A
    stable S needs w later levels, so a verdict needs at least 2w levels.
    """
    k = len(T)
    traces = {"labels": [str(x) for x in T.labels], "group_exponents": [list(g.exponents) for g in T.groups],
              "image_exponents": []}
    if k < 2 * w:
        traces["reason"] = f"tower has {k} levels, window {w} needs {2 * w}"
        return NotStabilizedResult(traces)
    stable = []
    for lvl in range(k):
        others = range(lvl + 1, k)
        if T.direction == "inverse":
            imgs = [T.image(s, lvl) for s in others]
        else:
            imgs = [T.image(lvl, t) for t in others]
        divs = [tuple(im.exponents) for im in imgs]
        traces["image_exponents"].append([list(d) for d in divs])
        val = None
        if len(imgs) >= w:
            tail = divs[-w:]
            if T.direction == "inverse":
                # images shrink as the source level grows; stable once the last ones agree
                last = imgs[-w:]
                if all(last[0].equal_as_subgroups(x) for x in last[1:]):
                    val = tuple(last[0].exponents)
            elif len(set(tail)) == 1:
                val = tail[0]
        stable.append(val)
    traces["stable_exponents"] = [list(v) if v is not None else None for v in stable]
    p = T.groups[0].p
    # zero transitions from some level on
    for lvl in range(k - w + 1):
        window = stable[lvl:lvl + w]
        if all(v == () for v in window):
            zero_maps = all(T.image(j + 1, j).is_zero() if T.direction == "inverse" else T.image(j, j + 1).is_zero()
                            for j in range(lvl, min(k - 1, lvl + w)))
            if zero_maps:
                return MLZero(T.labels[lvl], traces)
    for lvl in range(k - w + 1):
        window = stable[lvl:lvl + w]
        if window[0] is not None and all(v == window[0] for v in window):
            return Stabilized(FiniteAbGroup(p, window[0]), T.labels[lvl], traces)
    return NotStabilizedResult(traces)


def constant_tower(p, M, divisors_exps, length, direction="inverse"):
    """A tower of copies of one group with identity transitions (test scaffolding)."""
    n = len(divisors_exps)
    R = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(divisors_exps):
        R[i, i] = p ** a if a < M else 0
    G = SubQuotient(p, M, np.eye(n, dtype=np.int64), R)
    return TowerOfGroups([G] * length, [np.eye(n, dtype=np.int64)] * (length - 1), direction)
