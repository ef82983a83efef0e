"""Reward-shaped reinforcement learning for time-series anomaly detection.

A detector is trained as a sequential decision problem: at every timestep an
agent flags the current window or lets it pass. Rewards combine a confusion
matrix payoff, a reconstruction-error bonus whose weight is steered toward a
target return, and a potential-based shaping term from a severity scorer
(heuristic or language-model backed). Labels arrive through margin-based
queries answered by an oracle or a human annotation service, then spread to
similar windows by kernel label propagation.
"""

from .active import (
    GroundTruthOracle,
    LabelRecord,
    LabelStore,
    PropagatedLabel,
    Query,
    StoreLabelView,
    anomaly_scores,
    apply_oracle,
    kernel_weight,
    margin,
    median_pairwise_sigma,
    propagate,
    propagate_into_store,
    select_queries,
)
from .agent import (
    AgentConfig,
    DqnTrainer,
    EpisodeReport,
    EpsilonSchedule,
    FullLabelView,
    QNet,
    ReplayBuffer,
    RewardBreakdown,
    Transition,
    batch_q_values,
    greedy_actions,
    q_values,
    run_episode,
    select_action,
    sync_target,
    td_update,
)
from .config import RunConfig, load_config, save_config
from .data import (
    NormStats,
    Series,
    all_windows,
    dataset_stats,
    decided_indices,
    fit_norm_stats,
    load_csv_univariate,
    load_matrix_multivariate,
    normalize,
    split_series,
    synth_spike_series,
    window_at,
    write_series_csv,
    write_series_matrix,
)
from .env import (
    REWARD_FN,
    REWARD_FP,
    REWARD_TN,
    REWARD_TP,
    SeriesEnv,
    StepOutcome,
    WindowState,
    make_states,
    reward_r1,
)
from .errors import TsadError
from .metrics import (
    REFERENCE_BASELINES,
    ConfusionCounts,
    EvalResult,
    SeriesEval,
    confusion,
    emit_report,
    evaluate,
    f1_from_pr,
    point_adjust,
    prf1,
)
from .pipeline import TrainResult, eval_run, train_run
from .potential import (
    ConstantPotential,
    HeuristicPotential,
    LlmClientConfig,
    LlmPotential,
    PotentialCache,
    PromptSpec,
    SeverityScore,
    heuristic_potential,
    parse_severity,
    render_prompt,
    shaped_reward,
)
from .service import AnnotationServer, AnnotationState, start_server
from .vae import (
    LambdaController,
    VaeModel,
    elbo_loss,
    recon_error,
    recon_errors,
    total_reward,
    train_vae,
    update_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "AnnotationServer",
    "AnnotationState",
    "ConfusionCounts",
    "ConstantPotential",
    "DqnTrainer",
    "EpisodeReport",
    "EpsilonSchedule",
    "EvalResult",
    "FullLabelView",
    "GroundTruthOracle",
    "HeuristicPotential",
    "LabelRecord",
    "LabelStore",
    "LambdaController",
    "LlmClientConfig",
    "LlmPotential",
    "NormStats",
    "PotentialCache",
    "PromptSpec",
    "PropagatedLabel",
    "QNet",
    "Query",
    "REFERENCE_BASELINES",
    "REWARD_FN",
    "REWARD_FP",
    "REWARD_TN",
    "REWARD_TP",
    "ReplayBuffer",
    "RewardBreakdown",
    "RunConfig",
    "Series",
    "SeriesEnv",
    "SeriesEval",
    "SeverityScore",
    "StepOutcome",
    "StoreLabelView",
    "TrainResult",
    "Transition",
    "TsadError",
    "VaeModel",
    "WindowState",
    "all_windows",
    "anomaly_scores",
    "apply_oracle",
    "batch_q_values",
    "confusion",
    "dataset_stats",
    "decided_indices",
    "elbo_loss",
    "emit_report",
    "eval_run",
    "evaluate",
    "f1_from_pr",
    "fit_norm_stats",
    "greedy_actions",
    "heuristic_potential",
    "kernel_weight",
    "load_config",
    "load_csv_univariate",
    "load_matrix_multivariate",
    "margin",
    "make_states",
    "median_pairwise_sigma",
    "normalize",
    "parse_severity",
    "point_adjust",
    "prf1",
    "propagate",
    "propagate_into_store",
    "q_values",
    "recon_error",
    "recon_errors",
    "render_prompt",
    "reward_r1",
    "run_episode",
    "save_config",
    "select_action",
    "select_queries",
    "shaped_reward",
    "split_series",
    "start_server",
    "sync_target",
    "synth_spike_series",
    "td_update",
    "total_reward",
    "train_run",
    "train_vae",
    "update_lambda",
    "window_at",
    "write_series_csv",
    "write_series_matrix",
]
