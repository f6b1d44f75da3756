"""Deterministic helper for optional worker-pool fan-out."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(value: int | str | None) -> int:
    """Map a --threads value (int, "auto", or None) to a worker count >= 1."""
    if value is None:
        return 1
    if isinstance(value, str):
        if value == "auto":
            return os.cpu_count() or 1
        value = int(value)
    return max(1, int(value))


def parallel_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T],
                 threads: int = 1) -> list[R]:
    """Map fn over items, preserving order; results are thread-count invariant."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
