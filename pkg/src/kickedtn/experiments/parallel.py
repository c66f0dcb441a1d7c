"""Seed derivation and an order-preserving parallel map."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable

import numpy as np

# streams kept apart inside one (seed, L, sample) key
STREAM_STATE = 0
STREAM_DISORDER = 1
STREAM_PAIR = 2
STREAM_MF = 3


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for a point of the grid; depends only on (seed, key)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class TaskOutcome:
    key: Any
    value: Any = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_one(fn, key, args):
    try:
        return TaskOutcome(key, fn(*args))
    except Exception as exc:  # per-point soft failure, recorded by the caller
        return TaskOutcome(key, None, f"{type(exc).__name__}: {exc}")


def parallel_map(fn: Callable, tasks: Iterable[tuple[Any, tuple]], workers: int = 1) -> list[TaskOutcome]:
    """Apply ``fn(*args)`` to every ``(key, args)`` task.

    Results come back in task order whatever the worker count, so serial and
    parallel runs produce identical tables.  Exceptions become failed
    outcomes instead of aborting the sweep.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [_run_one(fn, k, a) for k, a in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(_run_one, fn, k, a) for k, a in tasks]
        return [f.result() for f in futs]
