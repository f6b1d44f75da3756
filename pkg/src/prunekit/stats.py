"""Per-input-feature streaming statistics over calibration batches.

Keeps count, mean, sample variance (divisor n-1) and raw sum of squares per
feature, updated one batch at a time in float64. The variance update is the
batched incremental form

    V_new = ((n-1)*V + n*mu^2 - n_new*mu_new^2 + sum(batch^2)) / (n_new - 1)

which avoids carrying a single ever-growing sum-of-squares accumulator for
the centered moment; the raw sum of squares is still tracked separately
because the activation-norm score needs ||X[:,j]||_2. For any partition of
a stream into batches the result matches a two-pass computation over the
concatenated rows to ~1e-9 relative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import TensorContainer
from .errors import (
    DimensionMismatch,
    EmptyStats,
    InvalidDimension,
    NonFiniteInput,
)


@dataclass
class ColumnStats:
    """Running per-feature statistics over n calibration rows.

    ``var`` holds the raw sample-variance accumulator, which may dip a hair
    below zero from roundoff; read it through :meth:`variance`, which clamps.
    """

    n: int
    mean: np.ndarray
    var: np.ndarray
    sumsq: np.ndarray

    @property
    def m(self) -> int:
        return self.mean.shape[0]

    def variance(self) -> np.ndarray:
        return np.maximum(self.var, 0.0)


def stats_init(m: int) -> ColumnStats:
    """Fresh accumulator for m input features."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidDimension(f"feature dimension must be a positive integer, got {m!r}")
    zeros = np.zeros(int(m), dtype=np.float64)
    return ColumnStats(n=0, mean=zeros.copy(), var=zeros.copy(), sumsq=zeros.copy())


def _check_batch(rows: np.ndarray, m: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionMismatch(f"batch must be 2-D (rows x features), got {rows.ndim}-D")
    if rows.shape[1] != m:
        raise DimensionMismatch(f"batch width {rows.shape[1]} != accumulator width {m}")
    if rows.size and not np.isfinite(rows).all():
        raise NonFiniteInput("batch contains NaN/Inf")
    return rows


def stats_update(stats: ColumnStats, rows: np.ndarray) -> ColumnStats:
    """Fold a batch of calibration rows into the accumulator.

    Returns a new ColumnStats; the input is not mutated. An empty batch is
    an identity.
    """
    rows = _check_batch(rows, stats.m)
    b = rows.shape[0]
    if b == 0:
        return ColumnStats(stats.n, stats.mean.copy(), stats.var.copy(),
                           stats.sumsq.copy())
    n, n_new = stats.n, stats.n + b
    batch_sumsq = (rows * rows).sum(axis=0)
    mean_new = (stats.mean * n) / n_new + rows.sum(axis=0) / n_new
    if n_new <= 1:
        var_new = np.zeros_like(stats.var)
    else:
        # (n-1)*var + n*mean^2 equals the raw sum of squares seen so far,
        # also valid for n in {0, 1} where var is 0 by definition.
        var_new = ((n - 1) * stats.var + n * stats.mean**2
                   - n_new * mean_new**2 + batch_sumsq) / (n_new - 1)
    return ColumnStats(n=n_new, mean=mean_new, var=var_new,
                       sumsq=stats.sumsq + batch_sumsq)


def stats_merge(a: ColumnStats, b: ColumnStats) -> ColumnStats:
    """Combine two accumulators built on disjoint shards of one stream."""
    if a.m != b.m:
        raise DimensionMismatch(f"accumulator widths differ: {a.m} != {b.m}")
    n_new = a.n + b.n
    if n_new == 0:
        return stats_init(a.m)
    mean_new = (a.mean * a.n + b.mean * b.n) / n_new
    if n_new <= 1:
        var_new = np.zeros(a.m, dtype=np.float64)
    else:
        raw_a = (a.n - 1) * a.var + a.n * a.mean**2 if a.n else 0.0
        raw_b = (b.n - 1) * b.var + b.n * b.mean**2 if b.n else 0.0
        var_new = (raw_a + raw_b - n_new * mean_new**2) / (n_new - 1)
    return ColumnStats(n=n_new, mean=mean_new, var=np.asarray(var_new),
                       sumsq=a.sumsq + b.sumsq)


def stats_l2(stats: ColumnStats) -> np.ndarray:
    """Per-feature raw activation norm sqrt(sum_i x_ij^2)."""
    return np.sqrt(stats.sumsq)


def stats_centered_l2(stats: ColumnStats) -> np.ndarray:
    """Per-feature centered norm ||x_j - mean_j||_2 = sqrt((n-1) * var_j)."""
    if stats.n == 0:
        raise EmptyStats("no calibration rows accumulated")
    return np.sqrt((stats.n - 1) * stats.variance())


# -- container serialization -------------------------------------------

_STAT_FIELDS = ("mean", "var", "sumsq", "n")


def stats_to_container(container: TensorContainer, layer_name: str,
                       stats: ColumnStats) -> None:
    """Store an accumulator as "<layer>.stats.mean" etc. plus a scalar n."""
    container.add(f"{layer_name}.stats.mean", stats.mean)
    container.add(f"{layer_name}.stats.var", stats.var)
    container.add(f"{layer_name}.stats.sumsq", stats.sumsq)
    container.add(f"{layer_name}.stats.n", np.array([float(stats.n)]))


def stats_from_container(container: TensorContainer, layer_name: str) -> ColumnStats:
    mean = container.get(f"{layer_name}.stats.mean")
    var = container.get(f"{layer_name}.stats.var")
    sumsq = container.get(f"{layer_name}.stats.sumsq")
    n = int(container.get(f"{layer_name}.stats.n")[0])
    if not (mean.shape == var.shape == sumsq.shape):
        raise DimensionMismatch(
            f"stats vectors for {layer_name!r} have inconsistent shapes")
    return ColumnStats(n=n, mean=mean.copy(), var=var.copy(), sumsq=sumsq.copy())
