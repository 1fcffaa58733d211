"""Simulation laboratory for straggler-resilient personalized federated
learning with a shared linear representation.

Core layers: matrix kernels (:mod:`srpfl.linalg`), synthetic data
(:mod:`srpfl.synthesis`), the alternating update round
(:mod:`srpfl.fedrep`), timing models and the doubling schedule
(:mod:`srpfl.straggler`), run orchestration and verification
(:mod:`srpfl.engine`), and the command-line surface (:mod:`srpfl.cli`).
"""

from .engine import (
    ALGO_FEDREP_FULL,
    ALGO_SRPFL,
    RunConfig,
    RunTrace,
    analytic_speedup_bound,
    crossing_time,
    measure_contraction_rate,
    measure_singular_extremes,
    run,
    run_sweep,
    speedup_report,
    verify_contraction,
)
from .fedrep import (
    LearningState,
    fedrep_round,
    head_update,
    method_of_moments_init,
    rep_gradient_step,
    server_aggregate,
)
from .linalg import is_orthonormal, principal_angle_dist, rank_k_eig, spectral_norm, thin_qr
from .straggler import (
    SpeedModel,
    StagePlan,
    build_stage_plan,
    draw_round_times,
    expected_order_stat,
    final_stage_rounds,
    optimal_doubling_point,
    participant_ladder,
    round_time,
    rounds_per_stage,
    select_fastest,
    target_accuracy,
)
from .synthesis import Batch, GroundTruthModel, gen_ground_truth, sample_batch

__version__ = "0.1.0"

__all__ = [
    "ALGO_FEDREP_FULL",
    "ALGO_SRPFL",
    "Batch",
    "GroundTruthModel",
    "LearningState",
    "RunConfig",
    "RunTrace",
    "SpeedModel",
    "StagePlan",
    "analytic_speedup_bound",
    "build_stage_plan",
    "crossing_time",
    "draw_round_times",
    "expected_order_stat",
    "fedrep_round",
    "final_stage_rounds",
    "gen_ground_truth",
    "head_update",
    "is_orthonormal",
    "measure_contraction_rate",
    "measure_singular_extremes",
    "method_of_moments_init",
    "optimal_doubling_point",
    "participant_ladder",
    "principal_angle_dist",
    "rank_k_eig",
    "rep_gradient_step",
    "round_time",
    "rounds_per_stage",
    "run",
    "run_sweep",
    "sample_batch",
    "select_fastest",
    "server_aggregate",
    "speedup_report",
    "spectral_norm",
    "target_accuracy",
    "thin_qr",
    "verify_contraction",
]
