"""Seeded Monte-Carlo ground truth by explicit backwards induction.

Each realization materializes every node of a (b, d) tree, decides which
nodes are sampled, draws rewards for the sampled ones and solves the
exploitation phase exactly with ``V(s) = max_children (R(s') + V(s'))``.

Runs are grouped into fixed-size blocks; block ``i`` draws from its own
Philox stream keyed by ``(seed, i)``. The block layout does not depend on
the worker count, so results are bit-identical for any degree of
parallelism.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from bdtp.policy import InfeasibleError, level_weights
from bdtp.reward_model import BinaryReward, RewardModel

MAX_NODES = 10 ** 8
BLOCK_RUNS = 1024
# per-block working set cap (leaf slots held at once)
_CHUNK_ELEMENTS = 1 << 21


class AllocationMode(str, enum.Enum):
    AVERAGE_BERNOULLI = "average"
    HARD_EXACT = "hard"


@dataclass(frozen=True)
class McConfig:
    runs: int = 100_000
    seed: int = 0
    allocation_mode: AllocationMode = AllocationMode.AVERAGE_BERNOULLI
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "allocation_mode", AllocationMode(self.allocation_mode))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    runs: int


def backward_induction_value(rewards: Sequence[Sequence[float]]) -> float:
    """Root value of one realized tree.

    ``rewards[l]`` holds the ``b**(l+1)`` rewards of level ``l+1`` in
    breadth-first order, so the children of node ``i`` on one level are
    ``i*b .. i*b+b-1`` on the next.
    """
    levels = [np.asarray(r, dtype=float) for r in rewards]
    if not levels:
        raise ValueError("reward table has no levels")
    b = len(levels[0])
    if b < 1:
        raise ValueError("first level is empty")
    for l, r in enumerate(levels, start=1):
        if r.shape != (b ** l,):
            raise ValueError(f"level {l} has shape {r.shape}, expected ({b ** l},)")
    value = np.zeros(len(levels[-1]))
    for r in reversed(levels):
        value = (r + value).reshape(-1, b).max(axis=1)
    return float(value[0])


def hard_level_counts(b: int, q: Sequence[float]) -> list[int]:
    """Per-level sample counts (reverse-indexed like ``q``) for exactly-C allocation.

    Each level gets ``q_level * b**l`` rounded down; the leftover samples go to
    the levels with the largest fractional remainders (ties: shallower first).
    """
    weights = level_weights(b, len(q))
    target = float(np.dot(weights, np.asarray(q, dtype=float)))
    total = round(target)
    if abs(target - total) > 1e-9:
        raise InfeasibleError(f"hard allocation needs an integer capacity, policy implies C = {target!r}")
    exact = [float(qi) * w for qi, w in zip(q, weights)]
    counts = [int(math.floor(x + 1e-9)) for x in exact]
    leftover = total - sum(counts)
    order = sorted(range(len(q)), key=lambda k: (-(exact[k] - counts[k]), -k))
    for k in order[:leftover]:
        counts[k] += 1
    return counts


def draw_level_rewards(rng: np.random.Generator, reward: BinaryReward, q: float,
                       shape) -> np.ndarray:
    """Rewards of one level under independent Bernoulli(q) sampling."""
    u = rng.random(shape)
    out = np.where(u < q * reward.p, reward.r_plus, reward.r_minus)
    out[u >= q] = 0.0
    return out


def _hard_level_rewards(rng: np.random.Generator, reward: BinaryReward, count: int,
                        shape) -> np.ndarray:
    runs, width = shape
    out = np.zeros(shape)
    if count == 0:
        return out
    keys = rng.random(shape)
    chosen = np.argpartition(keys, count - 1, axis=1)[:, :count] if count < width \
        else np.broadcast_to(np.arange(width), (runs, width))
    signs = rng.random((runs, count)) < reward.p
    rows = np.arange(runs)[:, None]
    out[rows, chosen] = np.where(signs, reward.r_plus, reward.r_minus)
    return out


def _block_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(reward: BinaryReward, b: int, q: Sequence[float], counts, runs: int,
                    rng: np.random.Generator) -> np.ndarray:
    d = len(q)
    leaves = b ** d
    chunk = max(1, min(runs, _CHUNK_ELEMENTS // leaves))
    values = np.empty(runs)
    for start in range(0, runs, chunk):
        n = min(chunk, runs - start)
        value = np.zeros((n, leaves))
        # q[0] is the deepest level d; walk up to level 1
        for k in range(d):
            width = b ** (d - k)
            if counts is None:
                r = draw_level_rewards(rng, reward, float(q[k]), (n, width))
            else:
                r = _hard_level_rewards(rng, reward, counts[k], (n, width))
            value = (r + value).reshape(n, width // b, b).max(axis=2)
        values[start:start + n] = value[:, 0]
    return values


def mc_value(p: float | RewardModel, b: int, d: int, q: Sequence[float] | None = None,
             config: McConfig = McConfig()) -> McEstimate:
    """Mean optimal-path reward and its standard error over ``config.runs`` trees.

    ``q`` is reverse-indexed (``q[0]`` is the deepest level); ``None`` samples
    every node.
    """
    reward = BinaryReward.from_model(p) if isinstance(p, RewardModel) else BinaryReward(float(p))
    if b < 1 or d < 1:
        raise ValueError(f"need b >= 1 and d >= 1, got b={b}, d={d}")
    q = [1.0] * d if q is None else [float(x) for x in q]
    if len(q) != d:
        raise ValueError(f"q has {len(q)} levels, expected d = {d}")
    if any(not 0.0 <= x <= 1.0 for x in q):
        raise ValueError("every q component must lie in [0, 1]")
    nodes = sum(b ** l for l in range(1, d + 1))
    if nodes > MAX_NODES:
        raise ValueError(f"tree has {nodes} nodes, above the Monte-Carlo limit of {MAX_NODES}")
    counts = None
    if config.allocation_mode is AllocationMode.HARD_EXACT:
        counts = hard_level_counts(b, q)

    runs = config.runs
    blocks = [(i, min(BLOCK_RUNS, runs - i * BLOCK_RUNS)) for i in range(math.ceil(runs / BLOCK_RUNS))]

    def run_block(block):
        index, size = block
        return _simulate_block(reward, b, q, counts, size, _block_stream(config.seed, index))

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(run_block, blocks))
    else:
        parts = [run_block(blk) for blk in blocks]
    values = np.concatenate(parts)
    # fsum is correctly rounded, hence independent of summation order
    mean = math.fsum(values) / runs
    if runs > 1:
        var = math.fsum((values - mean) ** 2) / (runs - 1)
        stderr = math.sqrt(var / runs)
    else:
        stderr = 0.0
    return McEstimate(mean, stderr, runs)
