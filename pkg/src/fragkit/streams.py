"""Counter-based random streams and order-preserving replicate maps."""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, rep: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, tag, rep)``; scheduling cannot perturb it."""
    if seed < 0 or rep < 0:
        raise ValueError("seed and replicate index must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tag_key(tag), rep])))


def replicate_map(fn: Callable[[int, np.random.Generator], T], n_reps: int, seed: int, tag: str,
                  workers: int = 1) -> list[T]:
    """Run ``fn(rep, rng)`` for every replicate; results come back in replicate order."""
    job = lambda r: fn(r, stream(seed, tag, r))
    if workers <= 1:
        return [job(r) for r in range(n_reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(n_reps)))
