"""Per-weight importance scores.

Every scorer takes a weight matrix with input features along rows (shape
M x H) and returns a same-shaped float64 matrix of non-negative scores;
within a comparison group the lowest-scoring weights are pruned first.

Available criteria:

    magnitude        |W|
    wanda            ||x_j||_2 * |W|            (raw activation norm)
    stade            ||x_j - mean_j||_2 * |W|   (centered activation norm)
    stade-star       sqrt(mean(x_j^2)) * |W|    (second moment; no bias update)
    stade-w          wanda on centered layers, stade otherwise
    sparsegpt-score  W^2 / diag((G + damping*I)^-1)

The stade-star score is the square root of the per-feature second moment
mean(x^2) = var*(n-1)/n + mean^2, the plug-in estimate of E[x^2]; this
makes the score an exact monotone transform of the empirical no-bias-update
reconstruction error, so its argmin matches exhaustive enumeration on the
same sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .container import WeightLayer
from .errors import (
    DimensionMismatch,
    EmptyStats,
    InsufficientSamples,
    NonFiniteInput,
    SingularGram,
)
from .stats import ColumnStats, stats_centered_l2, stats_l2

CRITERION_TAGS = ("magnitude", "wanda", "stade", "stade-star", "stade-w",
                  "sparsegpt-score")


@dataclass(frozen=True)
class Criterion:
    """A pruning criterion selection; ``damping`` applies to sparsegpt-score only.

    ``damping`` is a non-negative float or the string "auto", which resolves
    to 0.01 * mean(diag(G)) at scoring time.
    """

    tag: str
    damping: float | str | None = None

    def __post_init__(self) -> None:
        if self.tag not in CRITERION_TAGS:
            raise ValueError(f"unknown criterion {self.tag!r}; "
                             f"expected one of {CRITERION_TAGS}")
        if self.tag == "sparsegpt-score":
            if self.damping is None:
                raise ValueError("sparsegpt-score requires damping (float or 'auto')")
            if isinstance(self.damping, str):
                if self.damping != "auto":
                    raise ValueError(f"damping must be a float or 'auto', "
                                     f"got {self.damping!r}")
            elif self.damping < 0:
                raise ValueError(f"damping must be >= 0, got {self.damping}")
        elif self.damping is not None:
            raise ValueError(f"criterion {self.tag!r} takes no damping")


class GramAccumulator:
    """Running sum over calibration rows of the outer product x^T x."""

    def __init__(self, m: int):
        self.gram = np.zeros((m, m), dtype=np.float64)
        self.n = 0

    @property
    def m(self) -> int:
        return self.gram.shape[0]

    def update(self, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.m:
            raise DimensionMismatch(
                f"rows must be 2-D with width {self.m}, got shape {rows.shape}")
        if rows.size and not np.isfinite(rows).all():
            raise NonFiniteInput("calibration rows contain NaN/Inf")
        g = self.gram + rows.T @ rows
        # BLAS need not return an exactly symmetric product; re-symmetrize.
        self.gram = (g + g.T) / 2.0
        self.n += rows.shape[0]


def _check_weights(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise DimensionMismatch(f"weights must be 2-D, got {weights.ndim}-D")
    if not np.isfinite(weights).all():
        raise NonFiniteInput("weights contain NaN/Inf")
    return weights


def _check_stats(stats: ColumnStats, m: int, min_rows: int) -> None:
    if stats.m != m:
        raise DimensionMismatch(f"stats width {stats.m} != weight rows {m}")
    if stats.n == 0:
        raise EmptyStats("no calibration rows accumulated")
    if stats.n < min_rows:
        raise InsufficientSamples(
            f"criterion needs >= {min_rows} calibration rows, got {stats.n}")


def score_magnitude(weights: np.ndarray) -> np.ndarray:
    """|W|."""
    return np.abs(_check_weights(weights))


def score_wanda(weights: np.ndarray, stats: ColumnStats) -> np.ndarray:
    """Raw activation norm times |W|."""
    weights = _check_weights(weights)
    _check_stats(stats, weights.shape[0], 1)
    return stats_l2(stats)[:, None] * np.abs(weights)


def score_stade(weights: np.ndarray, stats: ColumnStats) -> np.ndarray:
    """Centered activation norm times |W|.

    Needs at least two rows; with one the centered norm is identically zero
    and every ranking would be arbitrary.
    """
    weights = _check_weights(weights)
    _check_stats(stats, weights.shape[0], 2)
    return stats_centered_l2(stats)[:, None] * np.abs(weights)


def score_stade_star(weights: np.ndarray, stats: ColumnStats) -> np.ndarray:
    """Root second moment times |W|, for pruning without a bias update."""
    weights = _check_weights(weights)
    _check_stats(stats, weights.shape[0], 2)
    n = stats.n
    second_moment = stats.variance() * ((n - 1) / n) + stats.mean**2
    return np.sqrt(second_moment)[:, None] * np.abs(weights)


def score_sparsegpt(weights: np.ndarray, gram: GramAccumulator,
                    damping: float = 0.0, auto_damping: bool = True) -> np.ndarray:
    """W^2 over the diagonal of the damped inverse Gram.

    The diagonal comes from a Cholesky factorization of G + damping*I; when
    ``damping`` is 0 and ``auto_damping`` is set, damping defaults to
    0.01 * mean(diag(G)). The raw ratio is kept (no square root): only the
    ranking matters.
    """
    weights = _check_weights(weights)
    m = weights.shape[0]
    if gram.m != m:
        raise DimensionMismatch(f"gram width {gram.m} != weight rows {m}")
    lam = float(damping)
    if lam == 0.0 and auto_damping:
        lam = 0.01 * float(np.mean(np.diag(gram.gram)))
    damped = gram.gram + lam * np.eye(m)
    try:
        factor = scipy.linalg.cho_factor(damped, lower=True, check_finite=False)
        inverse = scipy.linalg.cho_solve(factor, np.eye(m), check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(f"damped Gram is not positive definite "
                           f"(damping={lam:g}): {exc}") from exc
    diag = np.diag(inverse)
    if not (np.isfinite(diag).all() and (diag > 0).all()):
        raise SingularGram(f"inverse diagonal is not strictly positive "
                           f"(damping={lam:g})")
    return weights**2 / diag[:, None]


def select_criterion(criterion: Criterion, layer: WeightLayer) -> str:
    """Resolve stade-w against the layer's centered flag; other tags pass through."""
    if criterion.tag == "stade-w":
        return "wanda" if layer.centered else "stade"
    return criterion.tag


def compute_scores(tag: str, weights: np.ndarray,
                   stats: ColumnStats | None = None,
                   gram: GramAccumulator | None = None,
                   damping: float | str = "auto") -> np.ndarray:
    """Dispatch to the scorer for a resolved criterion tag."""
    if tag == "magnitude":
        return score_magnitude(weights)
    if tag == "wanda":
        return score_wanda(weights, stats)
    if tag == "stade":
        return score_stade(weights, stats)
    if tag == "stade-star":
        return score_stade_star(weights, stats)
    if tag == "sparsegpt-score":
        if damping == "auto":
            return score_sparsegpt(weights, gram, 0.0, auto_damping=True)
        return score_sparsegpt(weights, gram, float(damping), auto_damping=False)
    raise ValueError(f"cannot score unresolved criterion {tag!r}")
