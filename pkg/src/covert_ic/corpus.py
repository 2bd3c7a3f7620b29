"""Reference channels and a seeded random-channel generator for test corpora."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .channel import DmIcSpec, GaussianIcSpec, validate_assumptions
from .prob import kl_divergence

#: Receiver null distribution of the symmetric test channel.
SYMMETRIC_RX_NULL = (0.4, 0.6)
SYMMETRIC_DIVERGENCE = 0.5


def _bernoulli_for_divergence(null, target):
    """eta such that D((eta, 1-eta) || null) = target, on the branch eta < null[0]."""
    return brentq(lambda e: kl_divergence([e, 1 - e], null) - target, 1e-300, null[0], xtol=1e-300, rtol=1e-15)


def binary_two_user(rx1, rx2, warden, extra_wardens=()) -> DmIcSpec:
    """Assemble a K=2 binary spec from dicts keyed by input tuple."""
    def tensor(table):
        size = len(next(iter(table.values())))
        t = np.zeros((2, 2, size))
        for x, row in table.items():
            t[x] = row
        return t

    return DmIcSpec((2, 2), (tensor(rx1), tensor(rx2)), tuple(tensor(w) for w in (warden, *extra_wardens)))


def symmetric_test_spec() -> DmIcSpec:
    """Two identical users: D(W_k^{(k)} || W_0^{(k)}) = 0.5 nats, Q_1 = Q_2 = (0.7, 0.3), Q_0 = (0.9, 0.1).

    The own-signal output is nearly deterministic so that each received "on"
    symbol contributes an almost constant log-likelihood ratio.
    """
    w0 = np.array(SYMMETRIC_RX_NULL)
    eta = _bernoulli_for_divergence(w0, SYMMETRIC_DIVERGENCE)
    own = (eta, 1 - eta)
    cross = (0.38, 0.62)
    both = (0.5 * eta, 1 - 0.5 * eta)
    rx1 = {(0, 0): w0, (1, 0): own, (0, 1): cross, (1, 1): both}
    rx2 = {(0, 0): w0, (0, 1): own, (1, 0): cross, (1, 1): both}
    warden = {(0, 0): (0.9, 0.1), (1, 0): (0.7, 0.3), (0, 1): (0.7, 0.3), (1, 1): (0.5, 0.5)}
    return binary_two_user(rx1, rx2, warden)


def asymmetric_test_spec() -> DmIcSpec:
    """Like the symmetric channel, but user 2 is less visible to the warden: Q_2 = (0.8, 0.2)."""
    spec = symmetric_test_spec()
    v = np.array(spec.warden_channels[0])
    v[0, 1] = (0.8, 0.2)
    return DmIcSpec(spec.input_sizes, spec.rx_channels, (v,))


def hull_violating_spec() -> DmIcSpec:
    """Q_1 = (0.95, 0.05) puts Q_0 = (0.9, 0.1) inside conv{Q_1, Q_2, Q_12}."""
    spec = symmetric_test_spec()
    v = np.array(spec.warden_channels[0])
    v[1, 0] = (0.95, 0.05)
    v[0, 1] = (0.8, 0.2)
    return DmIcSpec(spec.input_sizes, spec.rx_channels, (v,))


def ternary_test_spec() -> DmIcSpec:
    """K=2 with three-symbol inputs, three-letter receivers and a three-letter warden."""
    rng = np.random.default_rng(20240611)
    sizes = (3, 3)
    rx = []
    for k in range(2):
        t = np.empty(sizes + (3,))
        for x in np.ndindex(sizes):
            t[x] = rng.dirichlet(np.ones(3) * 2)
        t[0, 0] = (0.6, 0.3, 0.1)
        rx.append(t)
    v = np.empty(sizes + (3,))
    v[0, 0] = (0.8, 0.15, 0.05)
    for x in np.ndindex(sizes):
        if x != (0, 0):
            v[x] = (0.8 - 0.1 * sum(x), 0.15 + 0.05 * sum(x), 0.05 + 0.05 * sum(x))
    return DmIcSpec(sizes, tuple(rx), (v,))


def random_dmic(
    rng: np.random.Generator,
    K: int = 2,
    input_size: int = 2,
    rx_size: int = 2,
    warden_size: int = 2,
    J: int = 1,
    max_tries: int = 10_000,
) -> DmIcSpec:
    """Draw every conditional row from Dirichlet(1, ..., 1), resampling until the
    standing assumptions hold."""
    sizes = (input_size,) * K
    for _ in range(max_tries):
        rx = tuple(rng.dirichlet(np.ones(rx_size), size=sizes) for _ in range(K))
        wd = tuple(rng.dirichlet(np.ones(warden_size), size=sizes) for _ in range(J))
        spec = DmIcSpec(sizes, rx, wd)
        if validate_assumptions(spec).ok:
            return spec
    raise RuntimeError(f"no valid channel after {max_tries} draws")


def unity_gaussian_spec(K: int = 2) -> GaussianIcSpec:
    return GaussianIcSpec(np.eye(K) + 0.1 * (1 - np.eye(K)), np.ones(K), 1.0, 1.0)


def example_gaussian_spec() -> GaussianIcSpec:
    """g_11 = 1, g_22 = 2, warden gains (1, 3)."""
    return GaussianIcSpec([[1.0, 0.2], [0.3, 2.0]], [1.0, 3.0], 1.0, 1.0)


def symmetric_key_divergence() -> float:
    """D(Q_k || Q_0) of the symmetric channel, 0.7 ln(7/9) + 0.3 ln 3."""
    return 0.7 * math.log(7 / 9) + 0.3 * math.log(3)
