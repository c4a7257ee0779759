"""Sampling-allocation policies under the average capacity constraint.

Capacity of a policy is the expected number of sampled nodes,
``sum_{l=1..d} q[d-l] * b**l`` with ``q`` reverse-indexed (``q[0]`` is the
deepest level ``d``, ``q[d-1]`` the first level below the root).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


class InfeasibleError(ValueError):
    """A capacity budget cannot be met with per-level probabilities in [0, 1]."""


@dataclass(frozen=True)
class Policy:
    b: int
    d: int
    q: tuple[float, ...]

    def __post_init__(self):
        if len(self.q) != self.d:
            raise ValueError(f"q has {len(self.q)} levels, expected d = {self.d}")
        for i, qi in enumerate(self.q):
            if not 0.0 <= qi <= 1.0:
                raise ValueError(f"q[{i}] must lie in [0, 1], got {qi!r}")

    @property
    def capacity(self) -> float:
        return capacity_of(self.b, self.q)

    def padded(self, d: int) -> "Policy":
        """Same policy seen in a deeper tree: unsampled levels added at the bottom."""
        if d < self.d:
            raise ValueError(f"cannot pad a depth-{self.d} policy down to depth {d}")
        return Policy(self.b, d, (0.0,) * (d - self.d) + self.q)


@dataclass(frozen=True)
class CapacityBudget:
    C: float
    C_r: float
    d_prime: int


def level_weights(b: int, d: int) -> np.ndarray:
    """Node counts per level in reverse order: ``(b**d, ..., b**2, b)``."""
    weights = np.empty(d)
    for l in range(1, d + 1):
        try:
            weights[d - l] = float(b ** l)
        except OverflowError:
            raise OverflowError(f"b**l is not representable for b={b} at level l={l}") from None
    return weights


def capacity_of(b: int, q: Sequence[float]) -> float:
    d = len(q)
    weights = level_weights(b, d)
    total = math.fsum(float(qi) * w for qi, w in zip(q, weights))
    if math.isinf(total):
        raise OverflowError(f"capacity overflows for b={b}, d={d}")
    return total


def homogeneous_policy(b: int, C: float) -> tuple[Policy, CapacityBudget]:
    """Sample every node down to level d'-1 and level d' with probability C_r / b**d'."""
    if b < 1 or int(b) != b:
        raise ValueError(f"branching factor must be a positive integer, got {b!r}")
    if not C > 0:
        raise InfeasibleError(f"capacity must be positive, got {C!r}")
    b = int(b)
    remaining = Fraction(C)
    if b == 1:
        level = max(1, math.ceil(remaining))
        remaining -= level - 1
        return Policy(1, level, (float(remaining),) + (1.0,) * (level - 1)), \
            CapacityBudget(float(C), float(remaining), level)
    level = 1
    # boundary C_r == b**d' stays at the shallower level with q = 1
    while remaining > b ** level:
        remaining -= b ** level
        level += 1
    q1 = float(remaining / b ** level)
    q = (q1,) + (1.0,) * (level - 1)
    return Policy(b, level, q), CapacityBudget(float(C), float(remaining), level)


def heterogeneous_depth(b: int, C: float) -> int:
    """Depth budget 2*floor(log_b C) + 3 for free per-level probabilities."""
    if b < 2:
        raise ValueError("heterogeneous depth needs b >= 2 (log base b is degenerate at b = 1)")
    if C < 1:
        raise ValueError(f"capacity must be >= 1, got {C!r}")
    # integer floor(log_b C); float log division misrounds exact powers (log(1000)/log(10) < 3)
    k = 0
    while b ** (k + 1) <= C:
        k += 1
    return 2 * k + 3


def random_policy(b: int, d: int, C: float) -> Policy:
    """Same sampling probability for every node of the depth-``d`` tree."""
    nodes = math.fsum(level_weights(b, d))
    if not 0 < C <= nodes:
        raise InfeasibleError(
            f"capacity {C} cannot be spread uniformly over {nodes:g} nodes (b={b}, d={d})")
    return Policy(b, d, (C / nodes,) * d)
