"""Finite-alphabet probability primitives.

Distributions are plain 1-D numpy arrays. Every divergence is in nats;
use :func:`nats_to_bits` for reporting in bits.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AbsoluteContinuityViolation, AlphabetMismatch, SimplexViolation

#: Inputs whose total mass is within this of 1 are renormalized silently.
NORMALIZATION_TOL = 1e-9


def as_dist(p, *, tol: float = NORMALIZATION_TOL, name: str = "distribution") -> np.ndarray:
    """Validate ``p`` as a probability vector and return a float64 copy summing to 1."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(arr < -tol):
        raise ValueError(f"{name} has negative entries")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} sums to {total!r}, not 1")
    return arr / total


def as_simplex(w, *, tol: float = NORMALIZATION_TOL, size: int | None = None) -> np.ndarray:
    """Like :func:`as_dist` but raises :class:`SimplexViolation` for weight vectors."""
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 1 or (size is not None and arr.size != size):
        raise SimplexViolation(f"weights must be a vector of length {size}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < -tol) or abs(arr.sum() - 1.0) > tol:
        raise SimplexViolation(f"weights {arr.tolist()} are not on the probability simplex")
    arr = np.clip(arr, 0.0, None)
    return arr / arr.sum()


def _pair(p, q):
    p = as_dist(p, name="p")
    q = as_dist(q, name="q")
    if p.shape != q.shape:
        raise AlphabetMismatch(f"alphabet sizes differ: {p.size} vs {q.size}")
    return p, q


def absolutely_continuous(p, q) -> bool:
    """True iff q(x) = 0 implies p(x) = 0."""
    p, q = _pair(p, q)
    return not bool(np.any((q == 0) & (p > 0)))


def kl_divergence(p, q) -> float:
    """Relative entropy D(p||q) in nats, with 0 ln(0/q) = 0."""
    p, q = _pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        bad = np.flatnonzero(support & (q == 0)).tolist()
        raise AbsoluteContinuityViolation(f"p is not absolutely continuous w.r.t. q at {bad}")
    ps, qs = p[support], q[support]
    return max(0.0, math.fsum(ps * np.log(ps / qs)))


def _phi(x: np.ndarray) -> np.ndarray:
    """(1 + x) ln(1 + x) - x, accurate near 0."""
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    # alternating series sum_{m>=2} (-1)^m x^m / (m (m - 1))
    out[small] = sum((-1) ** m * xs**m / (m * (m - 1)) for m in range(2, 10))
    xl = x[~small]
    out[~small] = (1.0 + xl) * np.log1p(xl) - xl
    return out


def kl_from_shift(q, dq) -> float:
    """D(q + dq || q) for a small signed perturbation ``dq`` summing to zero.

    Written as sum_z q(z) phi(dq(z)/q(z)) with every term nonnegative, so no
    cancellation occurs when the two laws are close.
    """
    q = np.asarray(q, dtype=np.float64)
    dq = np.asarray(dq, dtype=np.float64)
    if q.shape != dq.shape:
        raise AlphabetMismatch(f"alphabet sizes differ: {q.size} vs {dq.size}")
    null = q == 0
    if np.any(dq[null] > 0):
        raise AbsoluteContinuityViolation("perturbation puts mass where q vanishes")
    keep = ~null
    return max(0.0, math.fsum(q[keep] * _phi(dq[keep] / q[keep])))


def total_variation(p, q) -> float:
    """Variational distance 1/2 sum |p - q|."""
    p, q = _pair(p, q)
    return min(1.0, 0.5 * math.fsum(np.abs(p - q)))


def chi_squared(p, q) -> float:
    """Pearson chi-squared distance sum (p - q)^2 / q."""
    return chi_squared_mixture([p], [1.0], q)


def chi_squared_mixture(components, weights, q0) -> float:
    """chi^2 distance between the mixture sum_k w_k Q_k and q0.

    Points with q0(z) = 0 are dropped when the mixture also puts no mass
    there; any mass on such a point is an absolute-continuity violation.
    """
    q0 = as_dist(q0, name="q0")
    comps = [as_dist(c, name="component") for c in components]
    if not comps:
        raise ValueError("need at least one component")
    for c in comps:
        if c.shape != q0.shape:
            raise AlphabetMismatch(f"component size {c.size} differs from q0 size {q0.size}")
    w = as_simplex(weights, size=len(comps))
    mix = w @ np.vstack(comps)
    null = q0 == 0
    if np.any(mix[null] > 0):
        raise AbsoluteContinuityViolation("mixture puts mass where q0 vanishes")
    keep = ~null
    return math.fsum((mix[keep] - q0[keep]) ** 2 / q0[keep])


def nats_to_bits(x):
    return x / math.log(2.0)
