import math

import pytest
from hypothesis import given, settings, strategies as st

from bdtp import (
    InfeasibleError,
    Policy,
    capacity_of,
    heterogeneous_depth,
    homogeneous_policy,
    random_policy,
)
from bdtp.policy import level_weights


def test_capacity_examples():
    assert capacity_of(2, [1, 1, 0.5]) == 13  # 8 + 4 + 2*0.5
    assert capacity_of(2, [0.5, 1, 1]) == 10
    assert capacity_of(5, [1]) == 5
    assert capacity_of(3, [1]) == 3
    assert capacity_of(1, [1] * 5) == 5


def test_level_weights_are_reversed():
    assert list(level_weights(3, 3)) == [27.0, 9.0, 3.0]


def test_level_weights_overflow_names_level():
    with pytest.raises(OverflowError, match="level"):
        level_weights(10 ** 200, 2)


@pytest.mark.parametrize("b, C, d_prime, q", [
    (2, 10, 3, (0.5, 1.0, 1.0)),
    (3, 3, 1, (1.0,)),
    (2, 2, 1, (1.0,)),
    (2, 6, 2, (1.0, 1.0)),
    (10, 1000, 3, (0.89, 1.0, 1.0)),
    (50, 10, 1, (0.2,)),
    (1, 3.5, 4, (0.5, 1.0, 1.0, 1.0)),
])
def test_homogeneous_examples(b, C, d_prime, q):
    policy, budget = homogeneous_policy(b, C)
    assert budget.d_prime == d_prime == policy.d
    assert policy.q == pytest.approx(q, abs=1e-15)
    assert budget.C == C


def test_homogeneous_remainder():
    _, budget = homogeneous_policy(2, 10)
    assert budget.C_r == 4.0


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 50), st.floats(1.0, 1e6))
def test_homogeneous_capacity_is_met(b, C):
    policy, _ = homogeneous_policy(b, C)
    assert abs(policy.capacity - C) <= 1e-9 * max(1.0, C)
    assert all(0.0 < x <= 1.0 for x in policy.q[:1]) and all(x == 1.0 for x in policy.q[1:])


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1e6))
def test_depth_shrinks_with_breadth(C):
    depths = [homogeneous_policy(b, C)[0].d for b in range(2, 51)]
    assert all(a >= b for a, b in zip(depths, depths[1:]))


@pytest.mark.parametrize("C", [0, -1.0])
def test_homogeneous_rejects_nonpositive(C):
    with pytest.raises(InfeasibleError):
        homogeneous_policy(2, C)


def test_homogeneous_rejects_bad_b():
    with pytest.raises(ValueError):
        homogeneous_policy(0, 10)
    with pytest.raises(ValueError):
        homogeneous_policy(2.5, 10)


@pytest.mark.parametrize("b, C, d", [(2, 100, 15), (10, 1000, 9), (3, 10, 7), (2, 10, 9),
                                     (10, 999.999, 7), (7, 1, 3)])
def test_heterogeneous_depth(b, C, d):
    assert heterogeneous_depth(b, C) == d


def test_heterogeneous_depth_rejects():
    with pytest.raises(ValueError):
        heterogeneous_depth(1, 10)
    with pytest.raises(ValueError):
        heterogeneous_depth(2, 0.5)


@pytest.mark.parametrize("b, d, C, q", [(2, 2, 3, 0.5), (2, 3, 14, 1.0), (3, 2, 6, 0.5),
                                        (2, 3, 7, 0.5)])
def test_random_policy_spreads_uniformly(b, d, C, q):
    policy = random_policy(b, d, C)
    assert policy.q == (q,) * d
    assert policy.capacity == pytest.approx(C, abs=1e-9)


def test_random_and_homogeneous_share_capacity():
    hom, _ = homogeneous_policy(3, 20)
    rnd = random_policy(3, hom.d, 20)
    assert rnd.capacity == pytest.approx(hom.capacity, abs=1e-9)


def test_random_policy_infeasible():
    with pytest.raises(InfeasibleError):
        random_policy(2, 2, 6.5)


def test_policy_validation_and_padding():
    with pytest.raises(ValueError):
        Policy(2, 2, (0.5,))
    with pytest.raises(ValueError):
        Policy(2, 1, (1.5,))
    p = Policy(2, 2, (0.5, 1.0))
    assert p.padded(4).q == (0.0, 0.0, 0.5, 1.0)
    assert p.padded(4).capacity == p.capacity == 4.0
    with pytest.raises(ValueError):
        p.padded(1)


def test_capacity_overflow():
    with pytest.raises(OverflowError):
        capacity_of(10, [1.0] * 400)
    assert math.isfinite(capacity_of(10, [1.0] * 300))
