"""Deterministic in-process partitioned map/reduce substrate.

Partition tasks must be pure functions of their partition; all merge steps
run in ascending partition index regardless of thread scheduling, so every
pipeline built on top produces identical output for any thread count.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence


class EngineTaskError(RuntimeError):
    """A partition task failed; carries the originating partition index."""

    def __init__(self, partition_index: int, cause: BaseException):
        super().__init__(f"partition task {partition_index} failed: {cause}")
        self.partition_index = partition_index
        self.cause = cause


@dataclass(frozen=True)
class Broadcast:
    """Read-only snapshot handed to every partition task."""

    value: Any


_MISSING = object()


class Engine:
    """Runs partition tasks, optionally on a thread pool.

    The thread count changes wall-clock time only, never results: task
    outputs are collected in submission (partition) order.
    """

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ValueError("threads must be >= 1")
        self.threads = threads
        self.timings: list[tuple[str, float]] = []

    def broadcast(self, value: Any) -> Broadcast:
        return Broadcast(value)

    def map_partitions(self, parts: Sequence[Any], fn: Callable[[Any], Any]) -> list:
        """Apply fn to every partition; results come back in index order."""

        def call(index: int, part: Any):
            try:
                return fn(part)
            except Exception as exc:
                raise EngineTaskError(index, exc) from exc

        if self.threads == 1 or len(parts) <= 1:
            return [call(i, p) for i, p in enumerate(parts)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(call, i, p) for i, p in enumerate(parts)]
            return [f.result() for f in futures]

    def reduce_indexed(self, partials: Iterable[Any], combine: Callable[[Any, Any], Any],
                       initial: Any = _MISSING) -> Any:
        """Left fold in ascending partition index.

        The fold order is fixed, so even floating-point combines are
        byte-stable across runs and thread counts.
        """
        it = iter(partials)
        if initial is _MISSING:
            try:
                acc = next(it)
            except StopIteration:
                raise ValueError("reduce_indexed over no partials requires an identity element")
        else:
            acc = initial
        for part in it:
            acc = combine(acc, part)
        return acc

    @contextmanager
    def timed(self, label: str):
        """Record wall-clock seconds for one plan phase."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings.append((label, time.perf_counter() - start))


def exact_sum(values: Iterable[float]) -> float:
    """Correctly rounded sum of floats.

    Cross-example real accumulations go through this after gathering the
    per-example values back in dataset order, which makes the rounded
    result independent of how the data was partitioned.
    """
    return math.fsum(values)
