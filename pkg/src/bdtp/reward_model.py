"""Binary reward distributions obeying the zero-average constraint.

Two rational families admit an exact lattice for accumulated rewards:

* ``PLUS_HEAVY``:  p = n/(n+1), rewards {+1, -n},   lattice unit 1
* ``MINUS_HEAVY``: p = 1/(n+1), rewards {+1, -1/n}, lattice unit 1/n

Any other p is only served by the Monte-Carlo oracle through
:class:`BinaryReward`.
"""

from __future__ import annotations

import enum
from functools import cached_property
from dataclasses import dataclass
from fractions import Fraction


class Family(str, enum.Enum):
    PLUS_HEAVY = "plus"
    MINUS_HEAVY = "minus"


@dataclass(frozen=True)
class RewardModel:
    """Exact reward model of one rational family.

    ``up`` and ``down`` are the lattice index shifts produced by a positive
    and a negative reward; an unsampled node shifts by 0.
    """

    family: Family
    n: int
    p_plus: Fraction
    r_plus: Fraction
    r_minus: Fraction
    unit: Fraction

    @cached_property
    def up(self) -> int:
        return int(self.r_plus / self.unit)

    @cached_property
    def down(self) -> int:
        return int(self.r_minus / self.unit)

    @cached_property
    def p_minus(self) -> Fraction:
        return 1 - self.p_plus

    @cached_property
    def float_probs(self) -> tuple[float, float]:
        """(p_plus, p_minus) as floats, for the floating-point recursion."""
        return float(self.p_plus), float(self.p_minus)

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.n}"


def make_reward_model(family: Family | str, n: int) -> RewardModel:
    family = Family(family)
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    # both families collapse to p = 1/2, rewards {+1, -1} at n = 1
    if n == 1:
        family = Family.PLUS_HEAVY
    if family is Family.PLUS_HEAVY:
        p_plus = Fraction(n, n + 1)
        r_minus = Fraction(-n)
        unit = Fraction(1)
    else:
        p_plus = Fraction(1, n + 1)
        r_minus = Fraction(-1, n)
        unit = Fraction(1, n)
    return RewardModel(family, n, p_plus, Fraction(1), r_minus, unit)


def zero_average_negative_reward(p: float) -> float:
    """Return R- = -p/(1-p), the negative reward balancing R+ = 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    return -p / (1.0 - p)


@dataclass(frozen=True)
class BinaryReward:
    """Reward descriptor for arbitrary p, used by the Monte-Carlo oracle."""

    p: float
    r_minus: float | None = None

    def __post_init__(self):
        r_minus = zero_average_negative_reward(self.p)
        if self.r_minus is None:
            object.__setattr__(self, "r_minus", r_minus)

    @property
    def r_plus(self) -> float:
        return 1.0

    @classmethod
    def from_model(cls, model: RewardModel) -> "BinaryReward":
        # keep the family's exact R- instead of re-deriving it from a rounded p
        return cls(float(model.p_plus), float(model.r_minus))
