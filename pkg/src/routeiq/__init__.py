"""Learned performance/cost routing across model configurations.

The engine fits an interpretable response model (per-query difficulty and
discrimination, per-configuration ability) to a binary outcome matrix, prices
each configuration from observed token usage, and routes queries by
scalarizing predicted performance against normalized cost. New
configurations are onboarded by adaptively probing the most informative
queries rather than re-evaluating everything.
"""

__version__ = "0.1.0"

from .core import (
    ModelConfiguration,
    Query,
    ResponseCell,
    ResponseMatrix,
    RoutingDecision,
    Scalarization,
    TradeoffProfile,
    build_pool,
    config_id,
    load_matrix,
    parse_config_id,
    save_matrix,
    validate_matrix,
)
from .costing import CostTable, compute_costs, load_prices, normalize_costs, save_prices
from .embed import (
    EmbeddingStore,
    HashFeaturizer,
    RemoteEmbeddingService,
    load_embedding_store,
    save_embedding_store,
)
from .irt import (
    IrtParameters,
    TrainingConfig,
    ability_ordering,
    bce_loss,
    bce_loss_and_gradients,
    item_params,
    item_params_batch,
    load_params,
    predict_correct,
    predict_grid,
    save_params,
    sigmoid,
    train,
)
from .adaptive import (
    AdaptiveSession,
    default_budget,
    estimate_ability,
    estimate_ability_from_items,
    fisher_information,
    run_session,
    select_next,
)
from .metrics import (
    CurvePoint,
    TradeoffCurve,
    cpt,
    evaluation_report,
    hypervolume,
    non_dominated,
    realize_curve,
    reference_point,
)
from .scalarize import (
    chebyshev_score,
    default_weight_grid,
    linear_score,
    pools_from_predictions,
    route,
    sweep,
)
from .snapshot import (
    EngineSnapshot,
    load_latest_snapshot,
    load_snapshot,
    make_snapshot,
    publish_to_dir,
    route_embedding,
    save_snapshot,
)
from .synth import (
    SyntheticWorld,
    generate_world,
    oracle_route,
    oracle_router_baseline,
    sample_matrix,
    world_manifest,
)
from .ingest import build_matrix, holdout_by_tag, load_raw_log, split_queries

__all__ = [
    "AdaptiveSession",
    "CostTable",
    "CurvePoint",
    "EmbeddingStore",
    "EngineSnapshot",
    "HashFeaturizer",
    "IrtParameters",
    "ModelConfiguration",
    "Query",
    "RemoteEmbeddingService",
    "ResponseCell",
    "ResponseMatrix",
    "RoutingDecision",
    "Scalarization",
    "SyntheticWorld",
    "TradeoffCurve",
    "TradeoffProfile",
    "TrainingConfig",
    "ability_ordering",
    "bce_loss",
    "bce_loss_and_gradients",
    "build_matrix",
    "build_pool",
    "chebyshev_score",
    "compute_costs",
    "config_id",
    "cpt",
    "default_budget",
    "default_weight_grid",
    "estimate_ability",
    "estimate_ability_from_items",
    "evaluation_report",
    "fisher_information",
    "generate_world",
    "holdout_by_tag",
    "hypervolume",
    "item_params",
    "item_params_batch",
    "linear_score",
    "load_embedding_store",
    "load_latest_snapshot",
    "load_matrix",
    "load_params",
    "load_prices",
    "load_raw_log",
    "load_snapshot",
    "make_snapshot",
    "non_dominated",
    "normalize_costs",
    "oracle_route",
    "oracle_router_baseline",
    "parse_config_id",
    "pools_from_predictions",
    "predict_correct",
    "predict_grid",
    "publish_to_dir",
    "realize_curve",
    "reference_point",
    "route",
    "route_embedding",
    "run_session",
    "sample_matrix",
    "save_embedding_store",
    "save_matrix",
    "save_params",
    "save_prices",
    "save_snapshot",
    "select_next",
    "sigmoid",
    "split_queries",
    "sweep",
    "train",
    "validate_matrix",
    "world_manifest",
]
