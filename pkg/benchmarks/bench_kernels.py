"""Time the numba and numpy implementations of the hot kernels side by side.

    python benchmarks/bench_kernels.py --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from covert_ic import _kernels


def _cases(rng, scale):
    m, n = 2000 * scale, 2000
    llr = rng.normal(size=(3, 4))
    yield "tin_statistics", (rng.integers(0, 3, (m, n)).astype(np.int8), rng.integers(0, 4, n), llr)

    seqs = rng.integers(0, 4, (200 * scale, 12))
    chan = rng.dirichlet(np.ones(2), size=4)
    yield "sequence_likelihoods", (seqs, rng.random(seqs.shape[0]), chan)

    z = rng.integers(0, 2, (1000, 200))
    seqs = rng.integers(0, 4, (64 * scale, 200))
    yield "log_mixture", (z, seqs, np.log(chan), np.full(seqs.shape[0], -np.log(seqs.shape[0])))

    cum = np.cumsum(rng.dirichlet(np.ones(6), size=16), axis=1)
    rows = rng.integers(0, 16, 10**6 * scale)
    yield "sample_categorical", (cum, rows, rng.random(rows.size))


def _time(fn, args, repeat):
    fn(*args)  # warm-up (includes numba compilation)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=int, default=1, help="multiply problem sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if "numba" not in _kernels._IMPLS:
        print("numba unavailable; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  agree")
    for name, raw in _cases(rng, args.scale):
        wrapped = [np.ascontiguousarray(a) for a in raw]
        if name != "tin_statistics":
            wrapped = [a.astype(np.int64) if a.dtype.kind == "i" else a.astype(np.float64) for a in wrapped]
        else:
            wrapped[1] = wrapped[1].astype(np.int64)
        f_np = _kernels.get_impl(name, "numpy")
        f_nb = _kernels.get_impl(name, "numba")
        t_np = _time(f_np, wrapped, args.repeat)
        t_nb = _time(f_nb, wrapped, args.repeat)
        agree = np.allclose(f_np(*wrapped), f_nb(*wrapped), rtol=1e-10, atol=1e-12)
        print(f"{name:<22}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
