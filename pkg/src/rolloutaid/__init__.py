"""Defect-pattern mining and roll-out ranking for vehicle fleets."""

from .core import (
    DefectState,
    Observation,
    Ratio,
    Status,
    TransactionLog,
    canonicalize_state,
    format_state,
    jaccard,
    parse_state,
)
from .datagen import GenConfig, GroundTruth, PlantedItemset, generate
from .errors import ModelFormatError, RolloutAidError, ValidationError
from .evaluate import (
    CostTable,
    EvalConfig,
    PolicyComparison,
    StateCostIndex,
    build_state_cost_index,
    compare_policies,
    counterfactual_cost,
    load_cost_table,
    observed_rollout_cost,
    state_repair_cost,
)
from .mining import (
    ItemsetRatioModel,
    MinerConfig,
    build_ratio_model,
    mine_frequent_itemsets,
    support,
    train,
)
from .persistence import load_model, save_model
from .preprocess import (
    LabeledDataset,
    LabeledTransition,
    PreprocessConfig,
    TransitionLabel,
    compute_bad_states,
    label_transitions,
    load_transactions,
    preprocess,
)
from .scoring import (
    FleetSnapshot,
    Ranking,
    ScoreResult,
    rank_fleet,
    score_state,
    select_top_n,
    snapshot_from_log,
)

__all__ = [
    "CostTable",
    "DefectState",
    "EvalConfig",
    "FleetSnapshot",
    "GenConfig",
    "GroundTruth",
    "ItemsetRatioModel",
    "LabeledDataset",
    "LabeledTransition",
    "MinerConfig",
    "ModelFormatError",
    "Observation",
    "PlantedItemset",
    "PolicyComparison",
    "PreprocessConfig",
    "Ranking",
    "Ratio",
    "RolloutAidError",
    "ScoreResult",
    "StateCostIndex",
    "Status",
    "TransactionLog",
    "TransitionLabel",
    "ValidationError",
    "build_ratio_model",
    "build_state_cost_index",
    "canonicalize_state",
    "compare_policies",
    "compute_bad_states",
    "counterfactual_cost",
    "format_state",
    "generate",
    "jaccard",
    "label_transitions",
    "load_cost_table",
    "load_model",
    "load_transactions",
    "mine_frequent_itemsets",
    "observed_rollout_cost",
    "parse_state",
    "preprocess",
    "rank_fleet",
    "save_model",
    "score_state",
    "select_top_n",
    "snapshot_from_log",
    "state_repair_cost",
    "support",
    "train",
]
__version__ = "0.1.0"
