"""Breadth-depth allocation of finite sampling capacity over large decision trees.

Exact values come from a diffusion-maximization recursion over the
distribution of the optimal-path reward; a seeded Monte-Carlo backwards
induction oracle serves arbitrary reward probabilities and cross-checks.
"""

from bdtp.reward_model import (
    BinaryReward,
    Family,
    RewardModel,
    make_reward_model,
    zero_average_negative_reward,
)
from bdtp.dist_core import (
    Kind,
    ValuePmf,
    asymptotic_full_reward_prob,
    depth_one_pmf,
    diffusion_step,
    distinct_state_count,
    full_reward_probability,
    maximization_step,
    point_mass,
    propagate,
    tree_value_exhaustive,
    tree_value_selective,
)
from bdtp.policy import (
    CapacityBudget,
    InfeasibleError,
    Policy,
    capacity_of,
    heterogeneous_depth,
    homogeneous_policy,
    random_policy,
)
from bdtp.optimize import (
    ConvergenceError,
    GradientConfig,
    OptimizationResult,
    clip_and_reproject,
    optimize_heterogeneous,
    optimize_homogeneous,
    optimize_q,
    project_gradient,
)
from bdtp.oracle_mc import (
    AllocationMode,
    McConfig,
    McEstimate,
    backward_induction_value,
    mc_value,
)

__version__ = "0.1.0"
