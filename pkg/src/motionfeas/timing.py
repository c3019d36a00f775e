"""Reward-latency measurement and pipelined scoring.

Standalone latency: one warm-up pass over a fixed batch, then several timed
passes; report the steady-state mean per item. Effective overhead compares an
epoch with reward scoring against a constant-reward baseline epoch.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def measure_latency(fn: Callable[[T], object], batch: Sequence[T], warmup: int = 1,
                    repeats: int = 5, clock: Callable[[], float] = time.perf_counter) -> float:
    """Mean seconds per item over ``repeats`` timed passes after ``warmup`` passes."""
    if not batch:
        raise ValueError("empty batch")
    for _ in range(warmup):
        for item in batch:
            fn(item)
    start = clock()
    for _ in range(repeats):
        for item in batch:
            fn(item)
    return (clock() - start) / (repeats * len(batch))


def effective_overhead(epoch_with_reward: float, epoch_baseline: float) -> float:
    """Relative slowdown of a training epoch caused by reward computation."""
    if epoch_baseline <= 0:
        raise ValueError("baseline epoch time must be positive")
    return (epoch_with_reward - epoch_baseline) / epoch_baseline


def pipelined(batches: Iterable[T], score: Callable[[T], R]) -> Iterator[R]:
    """Score batch k on a background thread while batch k+1 is being produced.

    Yields results in input order; only the non-overlapped part of scoring
    adds to the wall time of the producer.
    """
    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = None
        for batch in batches:
            future = pool.submit(score, batch)
            if pending is not None:
                yield pending.result()
            pending = future
        if pending is not None:
            yield pending.result()
