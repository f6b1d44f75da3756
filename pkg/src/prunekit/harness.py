"""Synthetic two-layer MLP generator and criterion comparison runner.

The generator emits a model container plus the matching calibration
container with activations captured at each layer input, the same artifact
pair a user would export from a real network. The first layer's input can
be exactly mean-centered per feature (a mean-subtracting normalization),
scaled without centering, or left raw; the second layer always sees
rectified activations, whose positive mean makes it the uncentered case.

Feature offsets span (-3, 3) and feature scales are log-uniform over
(0.1, 10), so raw inputs are both uncentered and scale-heterogeneous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .container import TensorContainer, WeightLayer
from .criteria import Criterion
from .masks import SparsitySpec
from .parallel import parallel_map
from .pruner import prune_container

NORM_KINDS = ("layernorm-like", "rmsnorm-like", "none")
LAYER_NAMES = ("fc1", "fc2")


@dataclass(frozen=True)
class ToyMlpConfig:
    dims: tuple[int, int, int] = (16, 32, 8)
    norm: str = "none"
    samples: int = 256

    def __post_init__(self) -> None:
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive sizes, got {self.dims}")
        if self.norm not in NORM_KINDS:
            raise ValueError(f"norm must be one of {NORM_KINDS}, got {self.norm!r}")
        if self.samples < 4:
            raise ValueError(f"samples must be >= 4, got {self.samples}")


def _f32(x: np.ndarray) -> np.ndarray:
    # Round through the container's storage precision so in-memory use and
    # a save/load round trip see identical values.
    return np.asarray(x, dtype=np.float32).astype(np.float64)


def gen_toy_mlp(seed: int, dims=(16, 32, 8), norm: str = "none",
                samples: int = 256) -> tuple[TensorContainer, TensorContainer]:
    """Build a two-linear-layer toy model and its captured calibration data.

    Returns ``(model, calib)`` containers; calib holds "fc1.calib" and
    "fc2.calib". With norm "layernorm-like" the first layer's input is
    exactly column-centered and flagged centered; "rmsnorm-like" divides by
    the per-feature root mean square without centering; "none" keeps the raw
    offset input. The rectified second-layer input is never centered.
    """
    cfg = ToyMlpConfig(tuple(dims), norm, samples)
    d_in, d_hidden, d_out = cfg.dims
    rng = np.random.default_rng(seed)

    mu = rng.uniform(-3.0, 3.0, size=d_in)
    scale = 10.0 ** rng.uniform(-1.0, 1.0, size=d_in)
    x0 = mu + scale * rng.standard_normal((cfg.samples, d_in))
    if norm == "layernorm-like":
        x1 = x0 - x0.mean(axis=0)
        fc1_centered = True
    elif norm == "rmsnorm-like":
        x1 = x0 / np.sqrt(np.mean(x0**2, axis=0))
        fc1_centered = False
    else:
        x1 = x0
        fc1_centered = False
    x1 = _f32(x1)

    w1 = _f32(rng.uniform(-1.0, 1.0, size=(d_in, d_hidden)))
    b1 = _f32(rng.uniform(-1.0, 1.0, size=d_hidden))
    hidden = _f32(np.maximum(x1 @ w1 + b1, 0.0))
    w2 = _f32(rng.uniform(-1.0, 1.0, size=(d_hidden, d_out)))
    b2 = _f32(rng.uniform(-1.0, 1.0, size=d_out))

    model = TensorContainer()
    model.add_layer("fc1", WeightLayer(w1, b1, centered=fc1_centered))
    model.add_layer("fc2", WeightLayer(w2, b2, centered=False))

    calib = TensorContainer()
    calib.add("fc1.calib", x1)
    calib.add("fc2.calib", hidden)
    return model, calib


def forward_toy(model: TensorContainer, rows: np.ndarray) -> np.ndarray:
    """Dense forward pass of a generated toy model on raw first-layer input."""
    fc1 = model.get_layer("fc1")
    fc2 = model.get_layer("fc2")
    hidden = np.maximum(rows @ fc1.weights + (fc1.bias if fc1.bias is not None else 0.0),
                        0.0)
    return hidden @ fc2.weights + (fc2.bias if fc2.bias is not None else 0.0)


@dataclass
class ComparisonTable:
    """Per-seed held-out reconstruction errors for each criterion and layer."""

    criteria: list[str]
    layers: list[str]
    seeds: list[int]
    sparsity: str
    norm: str
    layer_mse: dict[str, dict[str, list[float]]]
    e2e_mse: dict[str, list[float]]
    resolved: dict[str, list[str]] = field(default_factory=dict)

    def mean_layer_mse(self, criterion: str, layer: str) -> float:
        return float(np.mean(self.layer_mse[criterion][layer]))

    def mean_e2e_mse(self, criterion: str) -> float:
        return float(np.mean(self.e2e_mse[criterion]))

    def win_fraction(self, better: str, worse: str, layer: str) -> float:
        """Fraction of seeds where ``better`` has MSE <= ``worse`` on a layer."""
        a = np.asarray(self.layer_mse[better][layer])
        b = np.asarray(self.layer_mse[worse][layer])
        return float(np.mean(a <= b))

    def to_dict(self) -> dict:
        return {
            "criteria": self.criteria,
            "layers": self.layers,
            "seeds": self.seeds,
            "sparsity": self.sparsity,
            "norm": self.norm,
            "layer_mse": self.layer_mse,
            "e2e_mse": self.e2e_mse,
            "resolved": self.resolved,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_text(self) -> str:
        """Aligned table of mean held-out MSE per criterion."""
        cols = [*self.layers, "end-to-end"]
        header = ["criterion", *cols]
        rows = [header]
        for tag in self.criteria:
            cells = [f"{self.mean_layer_mse(tag, layer):.4e}" for layer in self.layers]
            cells.append(f"{self.mean_e2e_mse(tag):.4e}")
            rows.append([tag, *cells])
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in rows]
        return "\n".join(lines)


def _as_criterion(c: str | Criterion) -> Criterion:
    if isinstance(c, Criterion):
        return c
    if c == "sparsegpt-score":
        return Criterion(c, damping="auto")
    return Criterion(c)


def run_comparison(
    criteria: list[str | Criterion],
    spec: SparsitySpec,
    seeds: int,
    config: ToyMlpConfig = ToyMlpConfig(),
    base_seed: int = 0,
    holdout_fraction: float = 0.2,
    bias_update_enabled: bool | None = None,
    threads: int = 1,
) -> ComparisonTable:
    """Prune freshly generated toy models with every criterion over several seeds.

    Each criterion uses its default bias-update behavior unless overridden.
    Every requested (criterion, layer, seed) cell is filled; identical seeds
    give identical tables.
    """
    crits = [_as_criterion(c) for c in criteria]
    if len(crits) < 2:
        raise ValueError("comparison needs at least two criteria")
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    seed_values = [base_seed + i for i in range(seeds)]

    def run_seed(seed: int):
        model, calib = gen_toy_mlp(seed, config.dims, config.norm, config.samples)
        rows = calib.get("fc1.calib")
        n_holdout = max(1, int(np.floor(holdout_fraction * rows.shape[0])))
        holdout = rows[-n_holdout:]
        dense_out = forward_toy(model, holdout)
        per_criterion = {}
        for crit in crits:
            pruned, report = prune_container(
                model, calib, crit, spec,
                bias_update_enabled=bias_update_enabled,
                holdout_fraction=holdout_fraction)
            e2e = float(np.mean((dense_out - forward_toy(pruned, holdout)) ** 2))
            per_criterion[crit.tag] = (
                {rec.layer: rec.reconstruction_mse for rec in report.layers},
                e2e,
                [rec.criterion for rec in report.layers],
            )
        return per_criterion

    seed_results = parallel_map(run_seed, seed_values, threads)

    layers = list(LAYER_NAMES)
    table = ComparisonTable(
        criteria=[c.tag for c in crits],
        layers=layers,
        seeds=seed_values,
        sparsity=str(spec),
        norm=config.norm,
        layer_mse={c.tag: {layer: [] for layer in layers} for c in crits},
        e2e_mse={c.tag: [] for c in crits},
        resolved={c.tag: [] for c in crits},
    )
    for result in seed_results:
        for tag, (by_layer, e2e, resolved) in result.items():
            for layer in layers:
                table.layer_mse[tag][layer].append(by_layer[layer])
            table.e2e_mse[tag].append(e2e)
            if not table.resolved[tag]:
                table.resolved[tag] = resolved
    return table
