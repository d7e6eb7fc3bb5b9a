"""Counter-based random substreams and block-parallel map.

Samples are cut into fixed blocks of ``BLOCK`` consecutive sample indices.
Block ``b`` always draws from the stream keyed by ``(seed, tag, b)``, so the
result arrays are identical whatever the number of workers; reductions are
done afterwards on the concatenated array.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

BLOCK = 1024


def _tag_int(tag: str) -> int:
    return zlib.crc32(tag.encode())


def block_rng(seed: int, tag: str, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), _tag_int(tag), block]))


def _run_block(fn, seed, tag, samples, block, kwargs):
    start = block * BLOCK
    count = min(BLOCK, samples - start)
    return fn(block_rng(seed, tag, block), count, **kwargs)


def map_blocks(fn, samples: int, seed: int, tag: str, workers: int = 1, **kwargs):
    """Call ``fn(rng, count, **kwargs)`` per block and stack the results.

    ``fn`` must return an ndarray (stacked along axis 0) or a tuple of them.
    With ``workers > 1`` it must be a picklable top-level function.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    nblocks = -(-samples // BLOCK)
    job = partial(_run_block, fn, seed, tag, samples, kwargs=kwargs)
    if workers > 1 and nblocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(nblocks)))
    else:
        parts = [job(b) for b in range(nblocks)]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)


def mean_and_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(np.sum(values) / n)
    if n < 2:
        return mean, float("nan")
    return mean, float(np.std(values, ddof=1) / np.sqrt(n))
