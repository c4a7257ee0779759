"""Optimal breadth-depth allocations.

Homogeneous policies have a single free parameter, the branching factor b,
and are optimized by scanning b. Heterogeneous policies additionally free
every per-level sampling probability; for each b these are found by
projected gradient ascent on the capacity hyperplane
``sum_l q[d-l] * b**l = C`` intersected with the box ``[0, 1]**d``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from bdtp.dist_core import (
    RENORMALIZE_DEPTH,
    ValuePmf,
    diffusion_step,
    maximization_step,
    point_mass,
    tree_value_selective,
)
from bdtp.policy import (
    InfeasibleError,
    Policy,
    capacity_of,
    heterogeneous_depth,
    homogeneous_policy,
    level_weights,
)
from bdtp.reward_model import RewardModel

log = logging.getLogger(__name__)

CAPACITY_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Clipping and re-projection could not reach a feasible point."""


@dataclass(frozen=True)
class GradientConfig:
    fd_step: float = 1e-7
    learning_rate: float = 1e-3
    max_iterations: int = 1_000_000
    value_tolerance: float = 1e-9
    renormalize_depth_threshold: int = RENORMALIZE_DEPTH
    clip_max_rounds: int = 100

    def __post_init__(self):
        for name in ("fd_step", "learning_rate", "max_iterations", "value_tolerance",
                     "renormalize_depth_threshold", "clip_max_rounds"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class OptimizationResult:
    b_star: int
    q_star: tuple[float, ...]
    value: float
    iterations_used: int
    converged: bool
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def d(self) -> int:
        return len(self.q_star)

    @property
    def policy(self) -> Policy:
        return Policy(self.b_star, len(self.q_star), self.q_star)


def project_gradient(g: Sequence[float], weights: Sequence[float]) -> np.ndarray:
    """Remove from ``g`` its component along ``weights`` (the constraint normal)."""
    g = np.asarray(g, dtype=float)
    w = np.asarray(weights, dtype=float)
    if g.shape != w.shape:
        raise ValueError(f"gradient has shape {g.shape}, weights {w.shape}")
    ww = float(np.dot(w, w))
    if ww == 0.0:
        raise ValueError("weight vector must be nonzero")
    return g - (float(np.dot(w, g)) / ww) * w


def clip_and_reproject(q: Sequence[float], b: int, C: float,
                       max_rounds: int = 100, tol: float = CAPACITY_TOL) -> np.ndarray:
    """Alternate box clipping and hyperplane projection until ``q`` is feasible.

    A coordinate clipped in any round stays frozen for the rest of the call;
    only the remaining free coordinates absorb the capacity gap.
    """
    q = np.array(q, dtype=float)
    w = level_weights(b, len(q))
    frozen = np.zeros(len(q), dtype=bool)
    for _ in range(max_rounds):
        out = (q < 0.0) | (q > 1.0)
        if out.any():
            q[out] = np.where(q[out] > 1.0, 1.0, 0.0)
            frozen |= out
        gap = C - float(np.dot(w, q))
        if abs(gap) <= tol:
            return q
        free = ~frozen
        if not free.any():
            raise ConvergenceError(
                f"every level is pinned to a box bound and capacity is off by {gap:.3g} "
                f"(b={b}, C={C})")
        wf = w[free]
        q[free] += (gap / float(np.dot(wf, wf))) * wf
    raise ConvergenceError(f"no feasible q after {max_rounds} clip/projection rounds (b={b}, C={C})")


class _Evaluator:
    """Value of a fixed (model, b, d) tree with prefix reuse for coordinate probes."""

    def __init__(self, model: RewardModel, b: int, d: int, renormalize: bool):
        self.model = model
        self.b = b
        self.d = d
        self.renormalize = renormalize

    def _step(self, j: ValuePmf, q: float) -> ValuePmf:
        return maximization_step(diffusion_step(j, q), self.b, self.renormalize)

    def forward(self, q: Sequence[float]) -> tuple[float, list[ValuePmf]]:
        states = [point_mass(self.model)]
        for qk in q:
            states.append(self._step(states[-1], float(qk)))
        return states[-1].mean(), states

    def gradient(self, q: np.ndarray, states: list[ValuePmf], value: float,
                 step: float) -> np.ndarray:
        g = np.empty(self.d)
        for k in range(self.d):
            # backward difference when a forward probe would leave the box
            delta = -step if q[k] + step > 1.0 else step
            j = self._step(states[k], float(q[k]) + delta)
            for qk in q[k + 1:]:
                j = self._step(j, float(qk))
            g[k] = (j.mean() - value) / delta
        return g


def optimize_q(model: RewardModel, b: int, d: int, C: float,
               config: GradientConfig = GradientConfig(),
               q0: Sequence[float] | None = None,
               record_history: bool = False) -> OptimizationResult:
    """Projected gradient ascent on V_{d,b,q} at fixed capacity ``C``."""
    if q0 is None:
        q0 = homogeneous_policy(b, C)[0].padded(d).q
    q = np.array(q0, dtype=float)
    if len(q) != d:
        raise ValueError(f"q0 has {len(q)} levels, expected d = {d}")
    if (q < 0).any() or (q > 1).any():
        raise InfeasibleError("q0 violates the box constraint [0, 1]")
    cap = capacity_of(b, q)
    if abs(cap - C) > CAPACITY_TOL:
        raise InfeasibleError(f"q0 has capacity {cap!r}, expected {C!r}")

    weights = level_weights(b, d)
    evaluator = _Evaluator(model, b, d, d > config.renormalize_depth_threshold)
    value, states = evaluator.forward(q)
    history = [value]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        grad = project_gradient(evaluator.gradient(q, states, value, config.fd_step), weights)
        candidate = clip_and_reproject(q + config.learning_rate * grad, b, C,
                                       config.clip_max_rounds)
        new_value, new_states = evaluator.forward(candidate)
        improvement = new_value - value
        if improvement > 0.0:
            q, value, states = candidate, new_value, new_states
            if record_history:
                history.append(value)
        if improvement < config.value_tolerance:
            converged = True
            break
    if not converged:
        log.warning("optimize_q hit the iteration cap (%d) at b=%d, d=%d, C=%g",
                    config.max_iterations, b, d, C)
    return OptimizationResult(b, tuple(float(x) for x in q), float(value), iterations,
                              converged, tuple(history) if record_history else ())


def homogeneous_value(model: RewardModel, b: int, C: float) -> tuple[float, Policy]:
    policy, _ = homogeneous_policy(b, C)
    if b == 1:
        # a single path offers no choice: zero-average rewards give value 0
        return 0.0, policy
    return float(tree_value_selective(model, b, policy.d, policy.q)), policy


def _argmax(results: Iterable[OptimizationResult]) -> OptimizationResult:
    best = None
    for res in results:
        # strict comparison: the smallest b wins ties
        if best is None or res.value > best.value:
            best = res
    return best


def homogeneous_scan(model: RewardModel, C: float, b_values: Iterable[int]) -> list[OptimizationResult]:
    out = []
    for b in b_values:
        value, policy = homogeneous_value(model, b, C)
        out.append(OptimizationResult(b, policy.q, value, 0, True))
    return out


def optimize_homogeneous(model: RewardModel, C: float, b_max: int) -> OptimizationResult:
    """Best branching factor in 1..b_max for the homogeneous policy at capacity C."""
    if b_max < 2:
        raise ValueError(f"b_max must be >= 2, got {b_max}")
    return _argmax(homogeneous_scan(model, C, range(1, b_max + 1)))


def heterogeneous_scan(model: RewardModel, C: float, b_values: Iterable[int],
                       config: GradientConfig = GradientConfig(),
                       workers: int = 1) -> list[OptimizationResult]:
    def run(b: int) -> OptimizationResult:
        if b == 1:
            policy, _ = homogeneous_policy(1, C)
            return OptimizationResult(1, policy.q, 0.0, 0, True)
        return optimize_q(model, b, heterogeneous_depth(b, C), C, config)

    b_values = list(b_values)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, b_values))
    return [run(b) for b in b_values]


def optimize_heterogeneous(model: RewardModel, C: float, b_max: int,
                           config: GradientConfig = GradientConfig(),
                           workers: int = 1) -> OptimizationResult:
    """Best (b, q) with free per-level probabilities, b in 1..b_max."""
    if b_max < 2:
        raise ValueError(f"b_max must be >= 2, got {b_max}")
    return _argmax(heterogeneous_scan(model, C, range(1, b_max + 1), config, workers))
