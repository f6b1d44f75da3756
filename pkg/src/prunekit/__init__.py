"""Post-training weight pruning toolkit.

Prunes linear layers without retraining: calibration statistics feed
per-weight importance scores (magnitude, activation-norm, centered-norm,
second-moment, and inverse-Gram criteria), scores rank into unstructured or
n:m structured masks, and a closed-form bias update absorbs the mean output
shift of the removed weights. A brute-force enumerator verifies the
criteria's single-prune optimality claims on small instances.
"""

from .compensate import bias_delta_norm, bias_update
from .container import (
    TensorContainer,
    WeightLayer,
    load_container,
    save_container,
)
from .criteria import (
    CRITERION_TAGS,
    Criterion,
    GramAccumulator,
    compute_scores,
    score_magnitude,
    score_sparsegpt,
    score_stade,
    score_stade_star,
    score_wanda,
    select_criterion,
)
from .harness import (
    ComparisonTable,
    ToyMlpConfig,
    forward_toy,
    gen_toy_mlp,
    run_comparison,
)
from .masks import (
    SparsitySpec,
    apply_mask,
    build_mask,
    mask_violation,
    validate_mask,
)
from .oracle import (
    CheckResult,
    brute_force_single_prune,
    check_criterion_optimality,
    random_instance,
)
from .pruner import (
    LayerReport,
    PruneReport,
    classify_centered,
    prune_container,
    prune_layer,
    reconstruction_mse,
)
from .stats import (
    ColumnStats,
    stats_centered_l2,
    stats_from_container,
    stats_init,
    stats_l2,
    stats_merge,
    stats_to_container,
    stats_update,
)

__version__ = "0.1.0"

__all__ = [
    "CRITERION_TAGS",
    "CheckResult",
    "ColumnStats",
    "ComparisonTable",
    "Criterion",
    "GramAccumulator",
    "LayerReport",
    "PruneReport",
    "SparsitySpec",
    "TensorContainer",
    "ToyMlpConfig",
    "WeightLayer",
    "apply_mask",
    "bias_delta_norm",
    "bias_update",
    "brute_force_single_prune",
    "build_mask",
    "check_criterion_optimality",
    "classify_centered",
    "compute_scores",
    "forward_toy",
    "gen_toy_mlp",
    "load_container",
    "mask_violation",
    "prune_container",
    "prune_layer",
    "random_instance",
    "reconstruction_mse",
    "run_comparison",
    "save_container",
    "score_magnitude",
    "score_sparsegpt",
    "score_stade",
    "score_stade_star",
    "score_wanda",
    "select_criterion",
    "stats_centered_l2",
    "stats_from_container",
    "stats_init",
    "stats_l2",
    "stats_merge",
    "stats_to_container",
    "stats_update",
    "validate_mask",
]
