"""Zonotope set algebra.

A zonotope is the set {c + G @ xi : xi in [-1, 1]^m} for a center c and a
generator matrix G with m columns.  Zonotopes are closed under affine maps
and Minkowski sums, their axis-aligned interval hull is a row-wise 1-norm,
and their order (generator count) can be capped by an over-approximating
reduction.  All types here are immutable values and all operations are pure
functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "Box",
    "Zonotope",
    "affine_map",
    "minkowski_sum",
    "interval_hull",
    "reduce",
    "contains_point",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower, upper] with elementwise bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or upper.ndim != 1 or lower.shape != upper.shape:
            raise ValueError(
                f"box bounds must be vectors of equal length, got {lower.shape} and {upper.shape}"
            )
        if np.any(lower > upper):
            raise ValueError("box is empty: lower exceeds upper in at least one component")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def translate(self, shift) -> "Box":
        shift = np.asarray(shift, dtype=float)
        return Box(self.lower + shift, self.upper + shift)


@dataclass(frozen=True)
class Zonotope:
    """Zonotope <center, generators> = {center + generators @ xi : xi in [-1,1]^m}.

    center has shape (n,), generators has shape (n, m); m = 0 is the
    singleton {center}.  The set is symmetric about its center.
    """

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        generators = np.asarray(self.generators, dtype=float)
        if generators.size == 0:
            generators = generators.reshape(center.shape[0], -1)
        if center.ndim != 1:
            raise ValueError(f"center must be a vector, got shape {center.shape}")
        if generators.ndim != 2 or generators.shape[0] != center.shape[0]:
            raise ValueError(
                f"generator matrix shape {generators.shape} does not match center "
                f"dimension {center.shape[0]}"
            )
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "generators", generators)

    @classmethod
    def singleton(cls, center) -> "Zonotope":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(center, np.zeros((center.shape[0], 0)))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def order(self) -> int:
        return self.generators.shape[1]

    def point_at(self, xi) -> np.ndarray:
        """Point center + generators @ xi for a concrete coefficient vector."""
        return self.center + self.generators @ np.asarray(xi, dtype=float)


def affine_map(matrix, zonotope: Zonotope, offset=None) -> Zonotope:
    """Image L*Z + z of a zonotope under an affine map.

    Returns <L @ center + z, L @ generators>.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != zonotope.dim:
        raise ValueError(
            f"map with {matrix.shape[1]} columns cannot act on a zonotope of dimension {zonotope.dim}"
        )
    center = matrix @ zonotope.center
    if offset is not None:
        center = center + np.asarray(offset, dtype=float)
    return Zonotope(center, matrix @ zonotope.generators)


def minkowski_sum(first: Zonotope, second: Zonotope) -> Zonotope:
    """Minkowski sum: centers add, generator matrices concatenate."""
    if first.dim != second.dim:
        raise ValueError(f"dimension mismatch in Minkowski sum: {first.dim} vs {second.dim}")
    return Zonotope(
        first.center + second.center,
        np.hstack([first.generators, second.generators]),
    )


def interval_hull(zonotope: Zonotope) -> Box:
    """Tightest axis-aligned box: center +- row-wise 1-norm of the generators."""
    radius = np.sum(np.abs(zonotope.generators), axis=1)
    return Box(zonotope.center - radius, zonotope.center + radius)


def reduce(zonotope: Zonotope, q: int) -> Zonotope:
    """Cap the generator count at q while containing the input set.

    The q - n largest-norm generators are kept; the remainder is replaced by
    an enclosing axis-aligned box (a diagonal generator block of row-wise
    absolute sums).  Ties in the norm ordering break by original column
    index.  Zero generators are dropped before sorting since they carry no
    set mass.  Requires q > n; with at most q generators the input is
    returned unchanged.
    """
    n, m = zonotope.generators.shape
    if q <= n:
        raise ValueError(f"reduction order q={q} must exceed the set dimension n={n}")
    if m <= q:
        return zonotope
    gens = zonotope.generators[:, np.any(zonotope.generators != 0.0, axis=0)]
    if gens.shape[1] <= q:
        return Zonotope(zonotope.center, gens)
    norms = np.linalg.norm(gens, axis=0)
    order = np.argsort(-norms, kind="stable")
    ranked = gens[:, order]
    kept = ranked[:, : q - n]
    boxed = np.diag(np.sum(np.abs(ranked[:, q - n :]), axis=1))
    return Zonotope(zonotope.center, np.hstack([kept, boxed]))


def contains_point(zonotope: Zonotope, x, tol: float = 1e-9) -> bool:
    """Membership test: does some xi in [-1,1]^m reach x?

    Solved as an exact linear feasibility problem, minimizing the peak
    equality residual t subject to |generators @ xi - (x - center)| <= t and
    the box bounds on xi.  Membership holds when the optimum satisfies
    t <= tol.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != zonotope.dim:
        raise ValueError(f"point dimension {x.shape[0]} != zonotope dimension {zonotope.dim}")
    deviation = x - zonotope.center
    gens = zonotope.generators
    n, m = gens.shape
    if m == 0:
        return bool(np.max(np.abs(deviation), initial=0.0) <= tol)
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    ones = np.ones((n, 1))
    a_ub = np.block([[gens, -ones], [-gens, -ones]])
    b_ub = np.concatenate([deviation, -deviation])
    result = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(-1.0, 1.0)] * m + [(0.0, None)],
        method="highs",
    )
    return bool(result.success and result.fun <= tol)
