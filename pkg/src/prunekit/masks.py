"""Prune-mask construction from score matrices.

The comparison group is one output column: within each column the lowest-k
scores are pruned (k = floor(p*M) for unstructured sparsity) or, for an n:m
structured pattern, the lowest n within every consecutive group of m entries
along the input axis. Ties break toward the lower input index, so masks
depend only on the score ranking and are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .container import WeightLayer
from .errors import (
    IndivisibleGroup,
    InvalidRatio,
    NonFiniteInput,
    ShapeMismatch,
)


@dataclass(frozen=True)
class SparsitySpec:
    """Target sparsity: an unstructured ratio or an n:m structured pattern."""

    ratio: float | None = None
    n: int | None = None
    m: int | None = None

    def __post_init__(self) -> None:
        structured = self.n is not None or self.m is not None
        if structured == (self.ratio is not None):
            raise InvalidRatio("specify either a ratio or an n:m pattern, not both")
        if structured:
            if (not isinstance(self.n, int) or not isinstance(self.m, int)
                    or not 0 < self.n < self.m):
                raise InvalidRatio(f"structured pattern needs integers 0 < n < m, "
                                   f"got {self.n}:{self.m}")
        else:
            if not (isinstance(self.ratio, (int, float))
                    and math.isfinite(self.ratio) and 0.0 <= self.ratio <= 1.0):
                raise InvalidRatio(f"ratio must lie in [0, 1], got {self.ratio!r}")

    @property
    def is_structured(self) -> bool:
        return self.n is not None

    @classmethod
    def unstructured(cls, ratio: float) -> "SparsitySpec":
        return cls(ratio=float(ratio))

    @classmethod
    def structured(cls, n: int, m: int) -> "SparsitySpec":
        return cls(n=n, m=m)

    @classmethod
    def parse(cls, text: str) -> "SparsitySpec":
        """Parse "0.5" as a ratio or "2:4" as a structured pattern."""
        text = text.strip()
        if ":" in text:
            left, _, right = text.partition(":")
            try:
                return cls.structured(int(left), int(right))
            except ValueError as exc:
                raise InvalidRatio(f"bad structured pattern {text!r}") from exc
        try:
            return cls.unstructured(float(text))
        except ValueError as exc:
            raise InvalidRatio(f"bad sparsity ratio {text!r}") from exc

    def __str__(self) -> str:
        if self.is_structured:
            return f"{self.n}:{self.m}"
        return f"{self.ratio:g}"


def _check_scores(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ShapeMismatch(f"scores must be 2-D, got {scores.ndim}-D")
    if not np.isfinite(scores).all():
        raise NonFiniteInput("scores contain NaN/Inf")
    return scores


def build_mask(scores: np.ndarray, spec: SparsitySpec) -> np.ndarray:
    """Boolean mask, True = pruned, lowest scores pruned per comparison group."""
    scores = _check_scores(scores)
    m_in, _ = scores.shape
    mask = np.zeros(scores.shape, dtype=bool)
    if spec.is_structured:
        if m_in % spec.m != 0:
            raise IndivisibleGroup(f"input dimension {m_in} not divisible by "
                                   f"group size {spec.m}")
        grouped = scores.reshape(m_in // spec.m, spec.m, -1)
        order = np.argsort(grouped, axis=1, kind="stable")
        view = mask.reshape(grouped.shape)
        np.put_along_axis(view, order[:, : spec.n, :], True, axis=1)
    else:
        k = int(math.floor(spec.ratio * m_in))
        if k:
            order = np.argsort(scores, axis=0, kind="stable")
            np.put_along_axis(mask, order[:k, :], True, axis=0)
    return mask


def mask_violation(mask: np.ndarray, spec: SparsitySpec) -> str | None:
    """Describe the first group violating the spec, or None if the mask is valid."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        return f"mask must be 2-D, got {mask.ndim}-D"
    m_in, _ = mask.shape
    if spec.is_structured:
        if m_in % spec.m != 0:
            return f"input dimension {m_in} not divisible by group size {spec.m}"
        counts = mask.reshape(m_in // spec.m, spec.m, -1).sum(axis=1)
        bad = np.argwhere(counts != spec.n)
        if bad.size:
            g, col = bad[0]
            return (f"group {g} of column {col}: {counts[g, col]} pruned, "
                    f"expected {spec.n}")
    else:
        expected = int(math.floor(spec.ratio * m_in))
        counts = mask.sum(axis=0)
        bad = np.flatnonzero(counts != expected)
        if bad.size:
            col = bad[0]
            return f"column {col}: {counts[col]} pruned, expected {expected}"
    return None


def validate_mask(mask: np.ndarray, spec: SparsitySpec) -> bool:
    """True iff every comparison group holds exactly the specified prune count."""
    return mask_violation(mask, spec) is None


def apply_mask(layer: WeightLayer, mask: np.ndarray) -> WeightLayer:
    """Zero the pruned entries; surviving entries pass through bit-identically."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != layer.weights.shape:
        raise ShapeMismatch(f"mask shape {mask.shape} != weights shape "
                            f"{layer.weights.shape}")
    return WeightLayer(weights=np.where(mask, 0.0, layer.weights),
                       bias=layer.bias, centered=layer.centered)
