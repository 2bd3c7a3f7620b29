"""Worker-count resolution and order-preserving chunked execution."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get("COVERT_IC_WORKERS", "1"))
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def chunk_ranges(total: int, parts: int) -> list[range]:
    parts = max(1, min(parts, total)) if total else 1
    bounds = [total * i // parts for i in range(parts + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def run_chunks(fn, arg_tuples: list[tuple], workers: int) -> list:
    """Apply ``fn(*args)`` to every tuple; results come back in input order."""
    if workers <= 1 or len(arg_tuples) <= 1:
        return [fn(*a) for a in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *a) for a in arg_tuples]
        return [f.result() for f in futures]


# Stream domains. SeedSequence pads short entropy with zeros, so every domain
# uses a distinct tag and a fixed number of indices to keep streams disjoint.
CODEBOOK, TRIAL, WARDEN_D, WARDEN_LRT, GAUSS_CODEBOOK, GAUSS_TRIAL, SWEEP_ROW = range(1, 8)


def seed_seq(seed: int, domain: int, *ids: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(domain), *map(int, ids)])


def derived_rng(seed: int, domain: int, *ids: int) -> np.random.Generator:
    return np.random.default_rng(seed_seq(seed, domain, *ids))
