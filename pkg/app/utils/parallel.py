# app/utils/parallel.py
from typing import Callable, Iterable, TypeVar

import numpy as np
from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], n_jobs: int = 1) -> list[R]:
    """joblib map; results come back in submission order whatever the scheduling."""
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in items)


def spawn_generators(seed: int, count: int, key: tuple[int, ...] = ()) -> list[np.random.Generator]:
    """Independent generators derived from one seed; `key` separates unrelated call sites."""
    root = np.random.SeedSequence(seed, spawn_key=key)
    return [np.random.default_rng(child) for child in root.spawn(count)]
