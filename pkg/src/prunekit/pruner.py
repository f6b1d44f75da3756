"""Layer-wise pruning of a whole container.

Each weight layer is pruned independently: calibration rows are split into a
statistics part and a held-out tail, the criterion is resolved against the
layer's centered flag (stade-w protocol), scores are ranked into a mask, the
bias is compensated, and the held-out rows score the reconstruction error.
Calibration activations arrive precomputed in a companion container as
"<layer>.calib" tensors, so the engine never needs to execute a model.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .compensate import bias_delta_norm, bias_update
from .container import TensorContainer, WeightLayer
from .criteria import (
    Criterion,
    GramAccumulator,
    compute_scores,
    select_criterion,
)
from .errors import (
    DimensionMismatch,
    InsufficientSamples,
    MissingCalibration,
    ShapeMismatch,
)
from .masks import SparsitySpec, apply_mask, build_mask, mask_violation
from .parallel import parallel_map
from .stats import ColumnStats, stats_init, stats_update

# Criteria whose definition includes the closed-form bias update.
_BIAS_DEFAULT_ON = frozenset({"stade"})

CENTERED_RATIO_THRESHOLD = 0.1


@dataclass
class LayerReport:
    layer: str
    criterion: str
    sparsity: str
    achieved_sparsity: float
    bias_delta_norm: float
    reconstruction_mse: float
    centered: bool
    max_abs_mean: float
    bias_added: bool
    warnings: list[str] = field(default_factory=list)


@dataclass
class PruneReport:
    layers: list[LayerReport]

    def to_dict(self) -> dict:
        return {"layers": [asdict(rec) for rec in self.layers]}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def classify_centered(stats: ColumnStats,
                      threshold: float = CENTERED_RATIO_THRESHOLD) -> bool:
    """Empirical centering check: every |mean_j| small relative to std_j."""
    if stats.n < 2:
        raise InsufficientSamples("centering check needs at least two rows")
    ratio = np.abs(stats.mean) / (np.sqrt(stats.variance()) + 1e-12)
    return bool(ratio.max() <= threshold)


def reconstruction_mse(original: WeightLayer, pruned: WeightLayer,
                       rows: np.ndarray) -> float:
    """Mean squared output difference between the two layers over ``rows``."""
    rows = np.asarray(rows, dtype=np.float64)
    if original.weights.shape != pruned.weights.shape:
        raise ShapeMismatch("layer shapes differ")
    if rows.ndim != 2 or rows.shape[1] != original.m:
        raise ShapeMismatch(f"rows must be 2-D with width {original.m}, "
                            f"got shape {rows.shape}")
    y0 = rows @ original.weights
    if original.bias is not None:
        y0 = y0 + original.bias
    y1 = rows @ pruned.weights
    if pruned.bias is not None:
        y1 = y1 + pruned.bias
    return float(np.mean((y0 - y1) ** 2))


def default_bias_update(resolved_tag: str) -> bool:
    return resolved_tag in _BIAS_DEFAULT_ON


def prune_layer(
    name: str,
    layer: WeightLayer,
    calib_rows: np.ndarray,
    criterion: Criterion,
    spec: SparsitySpec,
    bias_update_enabled: bool | None = None,
    holdout_fraction: float = 0.2,
) -> tuple[WeightLayer, np.ndarray, LayerReport]:
    """Run the stats -> score -> mask -> compensate pipeline on one layer."""
    calib_rows = np.asarray(calib_rows, dtype=np.float64)
    if calib_rows.ndim != 2 or calib_rows.shape[1] != layer.m:
        raise DimensionMismatch(
            f"layer {name!r}: calibration width {calib_rows.shape} does not "
            f"match input dimension {layer.m}")

    n_rows = calib_rows.shape[0]
    n_holdout = int(math.floor(holdout_fraction * n_rows))
    train = calib_rows[: n_rows - n_holdout]
    holdout = calib_rows[n_rows - n_holdout :]
    if holdout.shape[0] == 0:
        holdout = train

    stats = stats_update(stats_init(layer.m), train)
    resolved = select_criterion(criterion, layer)
    if bias_update_enabled is None:
        bias_update_enabled = default_bias_update(resolved)

    gram = None
    if resolved == "sparsegpt-score":
        gram = GramAccumulator(layer.m)
        gram.update(train)
    scores = compute_scores(resolved, layer.weights, stats=stats, gram=gram,
                            damping=criterion.damping if criterion.damping is not None
                            else "auto")

    mask = build_mask(scores, spec)
    violation = mask_violation(mask, spec)
    if violation is not None:
        raise AssertionError(f"layer {name!r}: built an invalid mask: {violation}")

    compensated = bias_update(layer, mask, stats, enabled=bias_update_enabled)
    pruned = WeightLayer(weights=apply_mask(layer, mask).weights,
                         bias=compensated.bias, centered=layer.centered)

    warnings = []
    try:
        # Widen the ratio threshold by the sampling noise of the split's
        # empirical means (~1/sqrt(n), max over M features) so exactly
        # centered layers are not flagged spuriously.
        noise = (2.5 + math.sqrt(2.0 * math.log(max(layer.m, 2)))) / math.sqrt(
            max(stats.n, 2))
        empirically_centered = classify_centered(
            stats, max(CENTERED_RATIO_THRESHOLD, noise))
        if empirically_centered != layer.centered:
            warnings.append(
                f"empirical centering check ({empirically_centered}) disagrees "
                f"with manifest flag ({layer.centered}); manifest wins")
    except InsufficientSamples:
        warnings.append("too few rows for the empirical centering check")

    report = LayerReport(
        layer=name,
        criterion=resolved,
        sparsity=str(spec),
        achieved_sparsity=float(mask.mean()) if mask.size else 0.0,
        bias_delta_norm=bias_delta_norm(layer, pruned),
        reconstruction_mse=reconstruction_mse(layer, pruned, holdout),
        centered=layer.centered,
        max_abs_mean=float(np.abs(stats.mean).max()) if stats.m else 0.0,
        bias_added=layer.bias is None and pruned.bias is not None,
        warnings=warnings,
    )
    return pruned, mask, report


def prune_container(
    model: TensorContainer,
    calib: TensorContainer,
    criterion: Criterion,
    spec: SparsitySpec,
    bias_update_enabled: bool | None = None,
    holdout_fraction: float = 0.2,
    threads: int = 1,
) -> tuple[TensorContainer, PruneReport]:
    """Prune every weight layer of ``model``; returns the pruned container
    (layers, biases, and "<layer>.mask" tensors) plus a per-layer report.

    ``bias_update_enabled`` None picks the per-criterion default: on for
    stade (and for stade-w on layers where it resolves to stade), off for
    magnitude, wanda, stade-star and sparsegpt-score.
    """
    if not 0.0 <= holdout_fraction <= 0.5:
        raise ValueError(f"holdout_fraction must lie in [0, 0.5], "
                         f"got {holdout_fraction}")
    layer_names = model.layer_names()
    for name in layer_names:
        if f"{name}.calib" not in calib:
            raise MissingCalibration(f"no calibration rows for layer {name!r}")

    def run(name: str):
        return prune_layer(name, model.get_layer(name), calib.get(f"{name}.calib"),
                           criterion, spec, bias_update_enabled, holdout_fraction)

    results = dict(zip(layer_names, parallel_map(run, layer_names, threads)))

    out = TensorContainer()
    for entry in model.entries():
        if entry.is_layer:
            pruned, mask, _ = results[entry.name]
            out.add_layer(entry.name, pruned)
            out.add_mask(entry.name, mask)
        elif not (entry.name.endswith(".bias")
                  and entry.name[: -len(".bias")] in results):
            out.add(entry.name, entry.array, dtype=entry.dtype)
    return out, PruneReport([results[name][2] for name in layer_names])
