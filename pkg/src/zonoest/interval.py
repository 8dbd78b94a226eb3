"""Interval scalar and matrix arithmetic.

Enough machinery to evaluate interval Jacobians over boxes: closed scalar
arithmetic, tight sine/cosine range enclosures, interval-matrix times real-
matrix products, and the zonotope enclosure of an interval-generator set.
Plain double arithmetic, no directed rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .zonotope import Box, Zonotope

__all__ = [
    "Interval",
    "IntervalMatrix",
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_neg",
    "iv_sin",
    "iv_cos",
    "ivmat_mul_real",
    "zonotope_inclusion",
    "jacobian_range",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Interval:
    """Closed scalar interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"invalid interval: lo={self.lo} > hi={self.hi}")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other):
        return iv_add(self, other)

    def __sub__(self, other):
        return iv_sub(self, other)

    def __mul__(self, other):
        return iv_mul(self, other)

    def __neg__(self):
        return iv_neg(self)


def iv_add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def iv_sub(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo - b.hi, a.hi - b.lo)


def iv_mul(a: Interval, b: Interval) -> Interval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(products), max(products))


def iv_neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def _hits_critical(lo: float, hi: float, offset: float) -> bool:
    # is offset + 2*pi*k inside [lo, hi] for some integer k?
    k = math.ceil((lo - offset) / _TWO_PI)
    return offset + _TWO_PI * k <= hi


def iv_sin(a: Interval) -> Interval:
    """Tight range of sin over [lo, hi]."""
    if a.width >= _TWO_PI:
        return Interval(-1.0, 1.0)
    values_lo, values_hi = math.sin(a.lo), math.sin(a.hi)
    lo, hi = min(values_lo, values_hi), max(values_lo, values_hi)
    if _hits_critical(a.lo, a.hi, 0.5 * math.pi):
        hi = 1.0
    if _hits_critical(a.lo, a.hi, -0.5 * math.pi):
        lo = -1.0
    return Interval(lo, hi)


def iv_cos(a: Interval) -> Interval:
    """Tight range of cos over [lo, hi]."""
    if a.width >= _TWO_PI:
        return Interval(-1.0, 1.0)
    values_lo, values_hi = math.cos(a.lo), math.cos(a.hi)
    lo, hi = min(values_lo, values_hi), max(values_lo, values_hi)
    if _hits_critical(a.lo, a.hi, 0.0):
        hi = 1.0
    if _hits_critical(a.lo, a.hi, math.pi):
        lo = -1.0
    return Interval(lo, hi)


@dataclass(frozen=True)
class IntervalMatrix:
    """Elementwise matrix interval [lower, upper]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_2d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_2d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        if np.any(lower > upper):
            raise ValueError("invalid interval matrix: lower exceeds upper somewhere")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def point(cls, matrix) -> "IntervalMatrix":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(matrix, matrix)

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def entry(self, i: int, j: int) -> Interval:
        return Interval(self.lower[i, j], self.upper[i, j])

    def contains(self, matrix, tol: float = 0.0) -> bool:
        matrix = np.asarray(matrix, dtype=float)
        return bool(np.all(matrix >= self.lower - tol) and np.all(matrix <= self.upper + tol))


def ivmat_mul_real(a: IntervalMatrix, b) -> IntervalMatrix:
    """Product of an interval matrix with a real matrix.

    Each entry is the interval sum over t of [a_lo(i,t), a_hi(i,t)] * b(t,j);
    splitting b into its positive and negative parts makes the bound exact.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} times {b.shape}")
    b_pos = np.maximum(b, 0.0)
    b_neg = np.minimum(b, 0.0)
    lower = a.lower @ b_pos + a.upper @ b_neg
    upper = a.upper @ b_pos + a.lower @ b_neg
    return IntervalMatrix(lower, upper)


def zonotope_inclusion(center, matrix: IntervalMatrix) -> Zonotope:
    """Zonotope containing {c + M @ xi : M in [matrix], xi in [-1,1]^m}.

    The generator block is [mid(M), diag(s)] where s(i) is the row-wise
    1-norm of the interval radius, so the result has order m + n.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.shape[0] != matrix.shape[0]:
        raise ValueError(
            f"center dimension {center.shape[0]} != interval matrix rows {matrix.shape[0]}"
        )
    spread = np.sum(np.abs(matrix.radius), axis=1)
    return Zonotope(center, np.hstack([matrix.mid, np.diag(spread)]))


def jacobian_range(
    jacobian_evaluator: Callable[[Box], IntervalMatrix], region: Box
) -> IntervalMatrix:
    """Interval enclosure of a state-map Jacobian over a box.

    Delegates to the model's registered evaluator and propagates failures
    with the offending region attached.
    """
    try:
        enclosure = jacobian_evaluator(region)
    except Exception as exc:
        raise RuntimeError(
            f"interval Jacobian evaluation failed over box "
            f"[{region.lower}, {region.upper}]: {exc}"
        ) from exc
    if not isinstance(enclosure, IntervalMatrix):
        raise TypeError(
            f"Jacobian evaluator must return an IntervalMatrix, got {type(enclosure).__name__}"
        )
    return enclosure
