"""The preorder x <= y iff A(y - x) >= 0, its cone facets, and monotone sets."""
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .errors import DimensionMismatch, NotComparable, ValidationError


@dataclass(frozen=True)
class OrderSpec:
    """Integer matrix A with no zero rows. Rational rows are scaled to integers."""
    A: tuple

    def __post_init__(self):
        rows = []
        for row in self.A:
            fr = [Fraction(v) for v in row]
            scale = lcm(*(f.denominator for f in fr)) if fr else 1
            rows.append(tuple(int(f * scale) for f in fr))
        if not rows or not rows[0]:
            raise ValidationError("order matrix must have at least one row and column")
        if len({len(r) for r in rows}) != 1:
            raise ValidationError("order matrix rows differ in length")
        if any(all(v == 0 for v in r) for r in rows):
            raise ValidationError("order matrix has a zero row")
        object.__setattr__(self, "A", tuple(rows))

    @property
    def matrix(self):
        return np.asarray(self.A, dtype=np.int64)

    @property
    def m(self):
        return len(self.A)

    @property
    def d(self):
        return len(self.A[0])

    @classmethod
    def of(cls, A):
        return A if isinstance(A, OrderSpec) else cls(tuple(tuple(r) for r in np.asarray(A).tolist()))


def _diff(order, x, y):
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[-1] != order.d or y.shape[-1] != order.d:
        raise DimensionMismatch(f"states must have length {order.d}")
    return (y - x) @ order.matrix.T


def preceq(order, x, y):
    return bool(np.all(_diff(order, x, y) >= 0))


def boundary_indices(order, x, y):
    """Rows i where y sits on the facet i of the translated cone at x."""
    z = _diff(order, x, y)
    if np.any(z < 0):
        raise NotComparable("x is not below y")
    return {int(i) for i in np.flatnonzero(z == 0)}


def check_av_entries(order, ns):
    """Products A v_j (one row per net vector) and whether all entries are in {-1,0,1}."""
    V = ns.V
    if V.shape[1] != order.d:
        raise DimensionMismatch("net vectors and order matrix disagree in dimension")
    AV = V @ order.matrix.T
    return AV, bool(np.all(np.abs(AV) <= 1))


def images(order, states):
    """A x for every row of ``states``; comparisons reduce to these images."""
    return np.asarray(states, dtype=np.int64) @ order.matrix.T


def upper_set_mask(order, states, x):
    """Mask of states y with x <= y."""
    AX = images(order, states)
    return np.all(AX >= np.asarray(x) @ order.matrix.T, axis=1)


def _subset_mask(states, gamma):
    states = np.asarray(states, dtype=np.int64)
    gamma = np.asarray(gamma, dtype=np.int64).reshape(-1, states.shape[1])
    gset = {tuple(g) for g in gamma.tolist()}
    return np.fromiter((tuple(s) in gset for s in states.tolist()), bool, len(states))


def verify_increasing(order, space, gamma):
    """Exhaustive check that gamma is closed upward in space.

    Returns (ok, witness) with witness (x in gamma, y not in gamma, x <= y).
    ``gamma`` is a list of states or a boolean mask over ``space``.
    """
    return _verify(order, space, gamma, up=True)


def verify_decreasing(order, space, gamma):
    return _verify(order, space, gamma, up=False)


def _verify(order, space, gamma, up):
    space = np.asarray(space, dtype=np.int64)
    mask = np.asarray(gamma) if np.asarray(gamma).dtype == bool else _subset_mask(space, gamma)
    AX = images(order, space)
    for i in np.flatnonzero(mask):
        rel = AX >= AX[i] if up else AX <= AX[i]
        bad = np.all(rel, axis=1) & ~mask
        if bad.any():
            j = int(np.argmax(bad))
            return False, (tuple(space[i].tolist()), tuple(space[j].tolist()))
    return True, None


def maximal_elements(order, space):
    """States x such that x <= y implies x = y."""
    return _extremal(order, space, up=True)


def minimal_elements(order, space):
    return _extremal(order, space, up=False)


def _extremal(order, space, up):
    space = np.asarray(space, dtype=np.int64)
    AX = images(order, space)
    keep = []
    for i in range(len(space)):
        rel = np.all(AX >= AX[i] if up else AX <= AX[i], axis=1)
        rel[i] = False
        others = space[rel]
        if not np.any(np.any(others != space[i], axis=1)):
            keep.append(i)
    return space[keep]
