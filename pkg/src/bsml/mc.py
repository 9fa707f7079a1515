"""Reproducible parallel Monte Carlo.

Replicates are cut into fixed-size blocks. Block b of a task labelled ``key``
draws from a Philox stream keyed by SeedSequence(seed, spawn_key=(key, b)), so
the numbers produced depend only on (seed, key, replicates, block_size) and
never on how many workers ran the blocks. Results come back in block order.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

import numpy as np

__all__ = ["BLOCK_SIZE", "run_blocks", "stream", "stream_key"]

BLOCK_SIZE = 4096
T = TypeVar("T")


def stream_key(*parts) -> int:
    """Stable 32-bit key for a task label such as ("converge-dist", n, t)."""
    return zlib.crc32(repr(parts).encode())


def stream(seed: int, key: int, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(key), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def _run_one(task, seed, key, block, size):
    return task(stream(seed, key, block), size)


def run_blocks(
    task: Callable[[np.random.Generator, int], T],
    seed: int,
    key: int,
    replicates: int,
    jobs: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Apply ``task(rng, size)`` to every block; ``task`` must be picklable when jobs > 1."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sizes = [min(block_size, replicates - lo) for lo in range(0, replicates, block_size)]
    blocks = range(len(sizes))
    if jobs <= 1 or len(sizes) == 1:
        return [_run_one(task, seed, key, b, s) for b, s in zip(blocks, sizes)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_one, task, seed, key, b, s) for b, s in zip(blocks, sizes)]
        return [f.result() for f in futures]
