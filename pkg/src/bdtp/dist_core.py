"""Diffusion-maximization recursion for the optimal-path reward distribution.

A tree of depth d is built bottom-up. Starting from a point mass at zero
(an empty tree), each step adds one level on top of the current root:

* diffusion:    Q_s = R_s + J_{s-1}, where the new node is sampled with
  probability q_s and then yields R+ (prob p) or R- (prob 1-p), else 0;
* maximization: J_s = max of b independent copies of Q_s, computed as
  F(k)**b - F(k-1)**b on the cumulative distribution.

Probability vectors ``q`` are therefore reverse-indexed: ``q[0]`` belongs
to the deepest level and is consumed first.

Distributions live on a dense integer lattice; index ``k`` stands for the
accumulated reward ``k * model.unit``. Mass arrays are float64 by default,
or ``Fraction`` object arrays in exact mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from bdtp.reward_model import RewardModel

#: depth above which every level's distribution is renormalized to sum one
RENORMALIZE_DEPTH = 50


class Kind(str, enum.Enum):
    STATE = "J"
    ACTION = "Q"


@dataclass(frozen=True, eq=False)
class ValuePmf:
    """Distribution of J_d (STATE) or Q_d (ACTION) on the model's lattice."""

    model: RewardModel
    depth: int
    kind: Kind
    min_index: int
    mass: np.ndarray

    def __post_init__(self):
        self.mass.flags.writeable = False

    @property
    def max_index(self) -> int:
        return self.min_index + len(self.mass) - 1

    @property
    def exact(self) -> bool:
        return self.mass.dtype == object

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.min_index, self.max_index + 1)

    def prob(self, index: int):
        """Probability of lattice index ``index`` (zero outside the support)."""
        i = index - self.min_index
        if 0 <= i < len(self.mass):
            return self.mass[i]
        return Fraction(0) if self.exact else 0.0

    def prob_of_value(self, value):
        k = Fraction(value) / self.model.unit
        if k.denominator != 1:
            return Fraction(0) if self.exact else 0.0
        return self.prob(int(k))

    def total(self):
        if self.exact:
            return sum(self.mass, Fraction(0))
        return math.fsum(self.mass)

    def support(self) -> list[int]:
        return [int(k) for k, m in zip(self.indices, self.mass) if m != 0]

    def mean(self):
        """Expected accumulated reward, in reward units."""
        if self.exact:
            s = sum((int(k) * m for k, m in zip(self.indices, self.mass)), Fraction(0))
            return s * self.model.unit
        return float(np.dot(np.arange(self.min_index, self.min_index + len(self.mass), dtype=float),
                            self.mass)) * float(self.model.unit)


def _check_prob(name: str, q) -> None:
    if not (0 <= q <= 1):
        raise ValueError(f"{name} must lie in [0, 1], got {q!r}")


def _check_branching(b) -> None:
    if isinstance(b, bool) or int(b) != b or b < 1:
        raise ValueError(f"branching factor must be a positive integer, got {b!r}")


def point_mass(model: RewardModel, exact: bool = False) -> ValuePmf:
    """J_0: the empty tree, accumulated reward 0 with certainty."""
    mass = np.array([Fraction(1)], dtype=object) if exact else np.ones(1)
    return ValuePmf(model, 0, Kind.STATE, 0, mass)


def _int_power(x: np.ndarray, b: int) -> np.ndarray:
    # exponentiation by squaring; fixed multiplication order
    result = None
    base = x
    while True:
        if b & 1:
            result = base if result is None else result * base
        b >>= 1
        if not b:
            return result
        base = base * base


def diffusion_step(j_pmf: ValuePmf, q_level) -> ValuePmf:
    """Add one node on top of J_{d-1}: returns the distribution of Q_d."""
    _check_prob("q_level", q_level)
    model = j_pmf.model
    if q_level == 0:
        return ValuePmf(model, j_pmf.depth + 1, Kind.ACTION, j_pmf.min_index, j_pmf.mass.copy())
    up, down = model.up, model.down
    if j_pmf.exact:
        q = Fraction(q_level)
        p_up, p_down, p_stay = q * model.p_plus, q * model.p_minus, 1 - q
        out = np.array([Fraction(0)] * (len(j_pmf.mass) + up - down), dtype=object)
    else:
        q = float(q_level)
        p_plus, p_minus = model.float_probs
        p_up, p_down, p_stay = q * p_plus, q * p_minus, 1.0 - q
        out = np.zeros(len(j_pmf.mass) + up - down)
    m = len(j_pmf.mass)
    # out[i] is lattice index min_index + down + i
    out[0:m] += p_down * j_pmf.mass
    if p_stay:
        out[-down:-down + m] += p_stay * j_pmf.mass
    out[up - down:up - down + m] += p_up * j_pmf.mass
    return ValuePmf(model, j_pmf.depth + 1, Kind.ACTION, j_pmf.min_index + down, out)


def maximization_step(q_pmf: ValuePmf, b: int, renormalize: bool = False) -> ValuePmf:
    """Distribution of the maximum of ``b`` independent copies of Q_d."""
    _check_branching(b)
    # left-to-right running sum from the most negative state
    if b == 1:
        return ValuePmf(q_pmf.model, q_pmf.depth, Kind.STATE, q_pmf.min_index, q_pmf.mass.copy())
    cdf = np.add.accumulate(q_pmf.mass)
    if not q_pmf.exact:
        # pin the top of the CDF to one so rounding drift cannot compound across levels
        cdf /= cdf[-1]
    powered = _int_power(cdf, int(b))
    mass = np.empty_like(powered)
    mass[0] = powered[0]
    np.subtract(powered[1:], powered[:-1], out=mass[1:])
    if renormalize and not q_pmf.exact:
        mass /= mass.sum()
    return ValuePmf(q_pmf.model, q_pmf.depth, Kind.STATE, q_pmf.min_index, mass)


def propagate(j_pmf: ValuePmf, b: int, q_levels: Sequence, renormalize: bool = False) -> ValuePmf:
    """Stack one level per entry of ``q_levels`` (deepest first) on top of ``j_pmf``."""
    for q in q_levels:
        j_pmf = maximization_step(diffusion_step(j_pmf, q), b, renormalize)
    return j_pmf


def depth_one_pmf(model: RewardModel, b: int, q1=1, exact: bool = False) -> ValuePmf:
    _check_branching(b)
    _check_prob("q1", q1)
    return propagate(point_mass(model, exact), b, [q1])


def _check_q_vector(q) -> list:
    q = list(q)
    for i, qi in enumerate(q):
        try:
            ok = 0 <= qi <= 1
        except TypeError:
            ok = False
        if not ok or (isinstance(qi, float) and math.isnan(qi)):
            raise ValueError(f"q[{i}] must lie in [0, 1], got {qi!r}")
    return q


def selective_pmf(model: RewardModel, b: int, q, exact: bool = False,
                  renormalize_depth: int = RENORMALIZE_DEPTH) -> ValuePmf:
    """Distribution of J_d for per-level sampling probabilities ``q`` (deepest first)."""
    _check_branching(b)
    q = _check_q_vector(q)
    if not q:
        raise ValueError("q must have at least one level")
    return propagate(point_mass(model, exact), b, q, renormalize=len(q) > renormalize_depth)


def tree_value_selective(model: RewardModel, b: int, d: int, q, exact: bool = False,
                         renormalize_depth: int = RENORMALIZE_DEPTH):
    """Expected optimal-path reward V_{d,b,q} under per-level sampling ``q``."""
    q = list(q)
    if len(q) != d:
        raise ValueError(f"q has {len(q)} levels, expected d = {d}")
    return selective_pmf(model, b, q, exact, renormalize_depth).mean()


def exhaustive_pmf(model: RewardModel, b: int, d: int, exact: bool = False) -> ValuePmf:
    _check_branching(b)
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise ValueError(f"depth must be a positive integer, got {d!r}")
    one = Fraction(1) if exact else 1.0
    return selective_pmf(model, b, [one] * int(d), exact)


def tree_value_exhaustive(model: RewardModel, b: int, d: int, exact: bool = False):
    """Expected optimal-path reward V_{d,b} when every node is sampled."""
    return exhaustive_pmf(model, b, d, exact).mean()


def full_reward_probability(p, b: int, d: int):
    """P(J_d = d): probability that some root-to-leaf path is all positive."""
    _check_prob("p", p)
    _check_branching(b)
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    prob = 1 - (1 - p) ** b
    for _ in range(int(d) - 1):
        prob = 1 - (1 - p * prob) ** b
    return prob


def asymptotic_full_reward_prob(p: float, b: int, tol: float = 1e-12) -> float:
    """Large-depth limit of P(J_d = d): the largest root of 1 - P = (1 - pP)**b."""
    _check_prob("p", p)
    _check_branching(b)
    if p * b <= 1:
        return 0.0
    lo, hi = 0.0, 1.0
    # g(P) = 1 - (1 - pP)**b - P is positive below the root and non-positive above
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if 1.0 - (1.0 - p * mid) ** b - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def distinct_state_count(n: int, s: int) -> int:
    """Number of distinct values i - n*j with i, j >= 0 and i + j <= s."""
    if n < 1 or s < 0:
        raise ValueError(f"need n >= 1 and s >= 0, got n={n}, s={s}")
    if s < n:
        return (s + 1) * (s + 2) // 2
    return (n + 1) * s - n * (n - 1) // 2 + 1
