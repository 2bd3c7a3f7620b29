"""Hot inner loops, with numba-compiled and pure-numpy implementations.

The numba path is used when numba imports and the environment variable
``COVERT_IC_NUMBA`` is not set to ``0``. Both paths return identical results
up to floating-point summation order; ``set_backend`` switches at runtime.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import logsumexp

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

#: element budget for intermediate arrays in the numpy path
_CHUNK_ELEMENTS = 1 << 23


# ---------------------------------------------------------------------------
# numpy implementations


def _tin_statistics_np(codewords, y, llr):
    out = np.empty(codewords.shape[0])
    step = max(1, _CHUNK_ELEMENTS // max(1, codewords.shape[1]))
    for s in range(0, codewords.shape[0], step):
        out[s : s + step] = llr[codewords[s : s + step], y[None, :]].sum(axis=1)
    return out


def _sequence_likelihoods_np(seqs, weights, chan):
    n = seqs.shape[1]
    nz = chan.shape[1]
    total = np.zeros(nz**n)
    step = max(1, _CHUNK_ELEMENTS // nz**n)
    for s in range(0, seqs.shape[0], step):
        block = seqs[s : s + step]
        mat = chan[block[:, 0]]
        for i in range(1, n):
            mat = (mat[:, :, None] * chan[block[:, i]][:, None, :]).reshape(block.shape[0], -1)
        total += weights[s : s + step] @ mat
    return total


def _log_mixture_np(z, seqs, log_chan, log_weights):
    out = np.empty(z.shape[0])
    per_sample = seqs.shape[0] * seqs.shape[1]
    step = max(1, _CHUNK_ELEMENTS // max(1, per_sample))
    for s in range(0, z.shape[0], step):
        ll = log_chan[seqs[None, :, :], z[s : s + step, None, :]].sum(axis=2)
        out[s : s + step] = logsumexp(ll + log_weights[None, :], axis=1)
    return out


def _sample_categorical_np(cum, rows, u):
    # first column of cum[rows] strictly above u; cum rows end at 1
    return np.minimum((u[:, None] >= cum[rows]).sum(axis=1), cum.shape[1] - 1)


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def _tin_statistics_nb(codewords, y, llr):
        r, n = codewords.shape
        out = np.empty(r)
        for w in range(r):
            acc = 0.0
            for i in range(n):
                acc += llr[codewords[w, i], y[i]]
            out[w] = acc
        return out

    @njit(cache=True)
    def _sequence_likelihoods_nb(seqs, weights, chan):
        u_count, n = seqs.shape
        nz = chan.shape[1]
        size = nz**n
        total = np.zeros(size)
        buf = np.empty(size)
        tmp = np.empty(size)
        for u in range(u_count):
            length = nz
            for c in range(nz):
                buf[c] = chan[seqs[u, 0], c]
            for i in range(1, n):
                row = seqs[u, i]
                for a in range(length):
                    base = buf[a]
                    for c in range(nz):
                        tmp[a * nz + c] = base * chan[row, c]
                length *= nz
                for a in range(length):
                    buf[a] = tmp[a]
            wt = weights[u]
            for a in range(size):
                total[a] += wt * buf[a]
        return total

    @njit(cache=True)
    def _log_mixture_nb(z, seqs, log_chan, log_weights):
        s_count, n = z.shape
        u_count = seqs.shape[0]
        out = np.empty(s_count)
        ll = np.empty(u_count)
        for s in range(s_count):
            best = -np.inf
            for u in range(u_count):
                acc = log_weights[u]
                for i in range(n):
                    acc += log_chan[seqs[u, i], z[s, i]]
                ll[u] = acc
                if acc > best:
                    best = acc
            if best == -np.inf:
                out[s] = -np.inf
                continue
            tot = 0.0
            for u in range(u_count):
                tot += np.exp(ll[u] - best)
            out[s] = best + np.log(tot)
        return out

    @njit(cache=True)
    def _sample_categorical_nb(cum, rows, u):
        m = u.shape[0]
        last = cum.shape[1] - 1
        out = np.empty(m, dtype=np.int64)
        for t in range(m):
            c = 0
            r = rows[t]
            while c < last and u[t] >= cum[r, c]:
                c += 1
            out[t] = c
        return out


_IMPLS = {
    "numpy": {
        "tin_statistics": _tin_statistics_np,
        "sequence_likelihoods": _sequence_likelihoods_np,
        "log_mixture": _log_mixture_np,
        "sample_categorical": _sample_categorical_np,
    }
}
if HAVE_NUMBA:
    _IMPLS["numba"] = {
        "tin_statistics": _tin_statistics_nb,
        "sequence_likelihoods": _sequence_likelihoods_nb,
        "log_mixture": _log_mixture_nb,
        "sample_categorical": _sample_categorical_nb,
    }


def _default_backend() -> str:
    flag = os.environ.get("COVERT_IC_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_backend = _default_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in _IMPLS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(_IMPLS)}")
    _backend = name


def get_impl(name: str, which: str | None = None):
    return _IMPLS[which or _backend][name]


def tin_statistics(codewords: np.ndarray, y: np.ndarray, llr: np.ndarray) -> np.ndarray:
    """Sum_i llr[codewords[w, i], y[i]] for every row w."""
    return get_impl("tin_statistics")(
        np.ascontiguousarray(codewords), np.ascontiguousarray(y, dtype=np.int64), np.ascontiguousarray(llr)
    )


def sequence_likelihoods(seqs: np.ndarray, weights: np.ndarray, chan: np.ndarray) -> np.ndarray:
    """Sum_u weights[u] prod_i chan[seqs[u, i], z_i] for all z in Z^n, position 0 most significant."""
    return get_impl("sequence_likelihoods")(
        np.ascontiguousarray(seqs, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(chan, dtype=np.float64),
    )


def log_mixture(z: np.ndarray, seqs: np.ndarray, log_chan: np.ndarray, log_weights: np.ndarray) -> np.ndarray:
    """ln sum_u exp(log_weights[u] + sum_i log_chan[seqs[u, i], z[s, i]]) for each sample row s."""
    return get_impl("log_mixture")(
        np.ascontiguousarray(z, dtype=np.int64),
        np.ascontiguousarray(seqs, dtype=np.int64),
        np.ascontiguousarray(log_chan, dtype=np.float64),
        np.ascontiguousarray(log_weights, dtype=np.float64),
    )


def sample_categorical(cum: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from row ``rows[t]`` of the cumulative table ``cum`` with uniform ``u[t]``."""
    return get_impl("sample_categorical")(
        np.ascontiguousarray(cum, dtype=np.float64),
        np.ascontiguousarray(rows, dtype=np.int64),
        np.ascontiguousarray(u, dtype=np.float64),
    )
