"""Interference-channel models and the single-letter distributions derived from them.

A :class:`DmIcSpec` stores, for every receiver ``k``, the marginal channel
``W_{Y_k|X_1..X_K}`` as a tensor of shape ``input_sizes + (|Y_k|,)`` and, for
every warden ``j``, ``V_{Z_j|X_1..X_K}`` of shape ``input_sizes + (|Z_j|,)``.
Input symbol 0 is the "off" symbol for every user.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import (
    AbsoluteContinuityViolation,
    AssumptionViolation,
    EmptySubset,
    IndexOutOfRange,
    SimplexViolation,
)
from .prob import NORMALIZATION_TOL, as_simplex, chi_squared_mixture, kl_divergence, kl_from_shift

HULL_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _as_channel(tensor, input_sizes, what):
    t = np.asarray(tensor, dtype=np.float64)
    if t.ndim != len(input_sizes) + 1 or t.shape[:-1] != tuple(input_sizes):
        raise ValueError(f"{what} has shape {t.shape}, expected {tuple(input_sizes)} + (outputs,)")
    if t.shape[-1] < 2:
        raise ValueError(f"{what} needs an output alphabet of size >= 2")
    if not np.all(np.isfinite(t)) or np.any(t < -NORMALIZATION_TOL):
        raise ValueError(f"{what} has negative or non-finite entries")
    t = np.clip(t, 0.0, None)
    sums = t.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > NORMALIZATION_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ValueError(f"{what} has conditional rows off by {worst:.3g} from 1")
    return _freeze(t / sums)


@dataclass(frozen=True)
class DmIcSpec:
    """K-user discrete memoryless interference channel with J >= 1 wardens."""

    input_sizes: tuple[int, ...]
    rx_channels: tuple[np.ndarray, ...]
    warden_channels: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.input_sizes)
        if len(sizes) < 2:
            raise ValueError("an interference channel needs K >= 2 users")
        if any(s < 2 for s in sizes):
            raise ValueError(f"input alphabets must have size >= 2, got {sizes}")
        if len(self.rx_channels) != len(sizes):
            raise ValueError(f"expected {len(sizes)} receiver channels, got {len(self.rx_channels)}")
        if len(self.warden_channels) < 1:
            raise ValueError("need at least one warden channel")
        rx = tuple(_as_channel(t, sizes, f"rx_channels[{k}]") for k, t in enumerate(self.rx_channels))
        wd = tuple(
            _as_channel(t, sizes, f"warden_channels[{j}]") for j, t in enumerate(self.warden_channels)
        )
        object.__setattr__(self, "input_sizes", sizes)
        object.__setattr__(self, "rx_channels", rx)
        object.__setattr__(self, "warden_channels", wd)

    @property
    def K(self) -> int:
        return len(self.input_sizes)

    @property
    def J(self) -> int:
        return len(self.warden_channels)

    @property
    def is_binary(self) -> bool:
        return all(s == 2 for s in self.input_sizes)

    @property
    def max_symbols(self) -> int:
        """m = max_k m_k, the number of non-off symbols of the largest alphabet."""
        return max(self.input_sizes) - 1

    @property
    def num_joint_inputs(self) -> int:
        return int(np.prod(self.input_sizes))

    def rx_flat(self, k: int) -> np.ndarray:
        """Receiver ``k`` channel as a (joint input index, output) matrix."""
        return self.rx_channels[k].reshape(self.num_joint_inputs, -1)

    def warden_flat(self, j: int) -> np.ndarray:
        return self.warden_channels[j].reshape(self.num_joint_inputs, -1)

    def joint_index(self, x) -> np.ndarray | int:
        """Row-major index of input tuple(s); ``x`` has the user axis first."""
        return np.ravel_multi_index(tuple(np.asarray(x)), self.input_sizes)

    def single_user_tuple(self, k: int, symbol: int = 1) -> tuple[int, ...]:
        x = [0] * self.K
        x[k] = symbol
        return tuple(x)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "input_sizes": list(self.input_sizes),
            "rx_channels": [t.tolist() for t in self.rx_channels],
            "warden_channels": [t.tolist() for t in self.warden_channels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DmIcSpec":
        sizes = d.get("input_sizes")
        if sizes is None:
            sizes = np.asarray(d["rx_channels"][0]).shape[:-1]
        spec = cls(tuple(sizes), tuple(d["rx_channels"]), tuple(d["warden_channels"]))
        if "K" in d and int(d["K"]) != spec.K:
            raise ValueError(f"K={d['K']} disagrees with {spec.K} input alphabets")
        return spec


@dataclass(frozen=True)
class GaussianIcSpec:
    """K-user Gaussian interference channel; ``gains[j, k]`` is Tx k -> Rx j."""

    gains: np.ndarray
    warden_gains: np.ndarray  # (J, K)
    sigma2: float
    power_cap: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise ValueError(f"gains must be a KxK matrix with K >= 2, got shape {g.shape}")
        gw = np.atleast_2d(np.asarray(self.warden_gains, dtype=np.float64))
        if gw.shape[1] != g.shape[0]:
            raise ValueError(f"warden_gains must have {g.shape[0]} columns, got {gw.shape}")
        if not self.sigma2 > 0 or not self.power_cap > 0:
            raise ValueError("sigma2 and power_cap must be positive")
        object.__setattr__(self, "gains", _freeze(g))
        object.__setattr__(self, "warden_gains", _freeze(gw))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "power_cap", float(self.power_cap))

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def J(self) -> int:
        return self.warden_gains.shape[0]

    def to_dict(self) -> dict:
        wg = self.warden_gains.tolist()
        return {
            "K": self.K,
            "gains": self.gains.tolist(),
            "warden_gains": wg[0] if self.J == 1 else wg,
            "sigma2": self.sigma2,
            "power_cap": self.power_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianIcSpec":
        spec = cls(d["gains"], d["warden_gains"], d["sigma2"], d["power_cap"])
        if "K" in d and int(d["K"]) != spec.K:
            raise ValueError(f"K={d['K']} disagrees with gain matrix size {spec.K}")
        return spec


def load_spec(path) -> DmIcSpec | GaussianIcSpec:
    """Read a channel spec JSON file; the Gaussian form is recognized by its ``gains`` key."""
    d = json.loads(Path(path).read_text())
    if "gains" in d:
        return GaussianIcSpec.from_dict(d)
    return DmIcSpec.from_dict(d)


def save_spec(spec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=1))


@dataclass(frozen=True)
class InputWeight:
    """Allocation alpha on the K-simplex, symbol weights beta and on-probability scale gamma.

    User k sends symbol i != 0 with probability ``alpha[k] * beta[k, i-1] * gamma``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: float

    def __post_init__(self):
        alpha = as_simplex(self.alpha)
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 2 or beta.shape[0] != alpha.size:
            raise SimplexViolation(f"beta must be K x m with K={alpha.size}, got {beta.shape}")
        if np.any(beta < -NORMALIZATION_TOL) or np.any(np.abs(beta.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
            raise SimplexViolation("every row of beta must lie on the simplex")
        beta = np.clip(beta, 0.0, None)
        beta = beta / beta.sum(axis=1, keepdims=True)
        gamma = float(self.gamma)
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        if np.any(alpha[:, None] * beta * gamma > 1.0 + 1e-12):
            raise ValueError("alpha_k * beta_ki * gamma exceeds 1")
        object.__setattr__(self, "alpha", _freeze(alpha))
        object.__setattr__(self, "beta", _freeze(beta))
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def make(cls, alpha, gamma, beta=None, input_sizes: Sequence[int] | None = None) -> "InputWeight":
        """Build a weight, defaulting beta to uniform over each user's non-off symbols."""
        alpha = np.asarray(alpha, dtype=np.float64)
        if beta is None:
            sizes = input_sizes if input_sizes is not None else [2] * alpha.size
            m = max(sizes) - 1
            beta = np.zeros((alpha.size, m))
            for k, s in enumerate(sizes):
                beta[k, : s - 1] = 1.0 / (s - 1)
        return cls(alpha, beta, gamma)

    @property
    def K(self) -> int:
        return self.alpha.size

    def on_probs(self) -> np.ndarray:
        """(K, m) matrix of per-symbol transmission probabilities."""
        return self.alpha[:, None] * self.beta * self.gamma

    def input_dist(self, k: int, size: int) -> np.ndarray:
        p = np.zeros(size)
        on = self.on_probs()[k]
        if np.any(on[size - 1 :] > 0):
            raise SimplexViolation(f"beta row {k} puts mass beyond user {k}'s {size - 1} symbols")
        p[1:] = on[: size - 1]
        p[0] = 1.0 - p[1:].sum()
        return p

    def input_dists(self, spec: DmIcSpec) -> list[np.ndarray]:
        if self.K != spec.K:
            raise SimplexViolation(f"weight has K={self.K}, channel has K={spec.K}")
        return [self.input_dist(k, s) for k, s in enumerate(spec.input_sizes)]


def _contract(tensor: np.ndarray, dists: list[np.ndarray], keep: Sequence[int] = ()) -> np.ndarray:
    """Average ``tensor`` over the input axes not in ``keep`` using the product input law."""
    out = tensor
    for ax in reversed(range(len(dists))):
        if ax in keep:
            continue
        out = np.moveaxis(out, ax, -1) @ dists[ax]
    return out


def point_dists(spec: DmIcSpec, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Receiver and warden output distributions for a fixed input tuple."""
    x = tuple(int(v) for v in x)
    if len(x) != spec.K or any(not 0 <= v < s for v, s in zip(x, spec.input_sizes)):
        raise IndexOutOfRange(f"input tuple {x} outside alphabets {spec.input_sizes}")
    return [t[x].copy() for t in spec.rx_channels], [t[x].copy() for t in spec.warden_channels]


def effective_channel(spec: DmIcSpec, k: int, w: InputWeight) -> np.ndarray:
    """TIN channel of pair k: interferers averaged over their sparse inputs, shape (|X_k|, |Y_k|)."""
    dists = w.input_dists(spec)
    out = _contract(spec.rx_channels[k], dists, keep=(k,))
    return out / out.sum(axis=-1, keepdims=True)


def induced_rx_dist(spec: DmIcSpec, k: int, w: InputWeight) -> np.ndarray:
    return _contract(spec.rx_channels[k], w.input_dists(spec))


def induced_warden_dist(spec: DmIcSpec, j: int, w: InputWeight) -> np.ndarray:
    """Q_{alpha,gamma}^{(j)}: warden j's output law under i.i.d. inputs P_1 x ... x P_K."""
    return _contract(spec.warden_channels[j], w.input_dists(spec))


def induced_warden_shift(spec: DmIcSpec, j: int, w: InputWeight) -> np.ndarray:
    """Q_{alpha,gamma}^{(j)} - Q_0^{(j)}, accumulated from the per-tuple differences."""
    v = spec.warden_channels[j]
    return _contract(v - v[(0,) * spec.K], w.input_dists(spec))


def warden_divergence(spec: DmIcSpec, j: int, w: InputWeight) -> float:
    """D(Q_{alpha,gamma}^{(j)} || Q_0^{(j)}) without cancellation at small gamma."""
    return kl_from_shift(warden_null(spec, j), induced_warden_shift(spec, j, w))


def warden_null(spec: DmIcSpec, j: int) -> np.ndarray:
    return spec.warden_channels[j][(0,) * spec.K].copy()


def rx_null(spec: DmIcSpec, k: int) -> np.ndarray:
    return spec.rx_channels[k][(0,) * spec.K].copy()


def chi2_alpha(spec: DmIcSpec, j: int, alpha, beta=None) -> float:
    """chi^2_j(alpha, B) between sum_k sum_i alpha_k beta_ki Q_{k,i}^{(j)} and Q_0^{(j)}."""
    alpha = as_simplex(alpha, size=spec.K)
    if beta is None:
        beta = InputWeight.make(alpha, 0.0, input_sizes=spec.input_sizes).beta
    beta = np.asarray(beta, dtype=np.float64)
    comps, weights = [], []
    for k in range(spec.K):
        for i in range(1, spec.input_sizes[k]):
            comps.append(spec.warden_channels[j][spec.single_user_tuple(k, i)])
            weights.append(alpha[k] * beta[k, i - 1])
    return chi_squared_mixture(comps, weights, warden_null(spec, j))


def chi2_max(spec: DmIcSpec, alpha, beta=None) -> float:
    return max(chi2_alpha(spec, j, alpha, beta) for j in range(spec.J))


@dataclass(frozen=True)
class Lemma1Report:
    d_exact: float
    lower: float
    upper: float
    chi2: float
    holds: bool


def check_lemma1_sandwich(spec: DmIcSpec, j: int, w: InputWeight) -> Lemma1Report:
    """Compare D(Q_{alpha,gamma} || Q_0) with (gamma^2/2)(1 -+ sqrt(gamma)) chi^2(alpha)."""
    if not spec.is_binary:
        raise ValueError("the sandwich bound is stated for binary inputs")
    try:
        chi2 = chi2_alpha(spec, j, w.alpha)
    except AbsoluteContinuityViolation as exc:
        raise AssumptionViolation(str(exc)) from exc
    d = warden_divergence(spec, j, w)
    g = w.gamma
    lower = 0.5 * g * g * (1.0 - math.sqrt(g)) * chi2
    upper = 0.5 * g * g * (1.0 + math.sqrt(g)) * chi2
    return Lemma1Report(d, lower, upper, chi2, bool(lower <= d <= upper))


@dataclass(frozen=True)
class MutualInfoReport:
    i_exact: float
    first_order: float

    @property
    def gap(self) -> float:
        return abs(self.i_exact - self.first_order)


def mutual_info_warden(spec: DmIcSpec, j: int, subset: Sequence[int], w: InputWeight) -> MutualInfoReport:
    """I(X_U; Z_j) under product inputs, against sum_{k in U} alpha_k gamma D(Q_k || Q_0).

    Users outside U are averaged over their own input laws. For non-binary
    inputs the first-order term is beta-weighted.
    """
    subset = sorted(set(int(k) for k in subset))
    if not subset:
        raise EmptySubset("mutual information needs a nonempty user subset")
    if any(not 0 <= k < spec.K for k in subset):
        raise IndexOutOfRange(f"subset {subset} outside users 0..{spec.K - 1}")
    dists = w.input_dists(spec)
    cond = _contract(spec.warden_channels[j], dists, keep=subset)  # axes: subset..., z
    q = induced_warden_dist(spec, j, w)
    i_terms = []
    for xs in itertools.product(*(range(spec.input_sizes[k]) for k in subset)):
        px = math.prod(dists[k][x] for k, x in zip(subset, xs))
        if px > 0:
            i_terms.append(px * kl_divergence(cond[xs], q))
    q0 = warden_null(spec, j)
    first = 0.0
    on = w.on_probs()
    for k in subset:
        for i in range(1, spec.input_sizes[k]):
            if on[k, i - 1] > 0:
                first += on[k, i - 1] * kl_divergence(spec.warden_channels[j][spec.single_user_tuple(k, i)], q0)
    return MutualInfoReport(math.fsum(i_terms), first)


def second_order_constant(spec: DmIcSpec, j: int, subset, alpha, gammas=(1e-2, 1e-3, 1e-4), beta=None) -> float:
    """Smallest C with |I_exact - first_order| <= C gamma^2 over ``gammas``."""
    c = 0.0
    for g in gammas:
        w = InputWeight.make(alpha, g, beta, spec.input_sizes)
        c = max(c, mutual_info_warden(spec, j, subset, w).gap / (g * g))
    return c


@dataclass
class HullResult:
    in_hull: bool
    weights: dict = field(default_factory=dict)
    residual: float = math.inf


@dataclass
class AssumptionReport:
    warden_ac_violations: list  # per warden: list of input tuples with Q_x not << Q_0
    rx_ac_violations: list  # per receiver
    hull: list  # per warden HullResult

    @property
    def warden_ac(self) -> bool:
        return not any(self.warden_ac_violations)

    @property
    def rx_ac(self) -> bool:
        return not any(self.rx_ac_violations)

    @property
    def hull_ok(self) -> bool:
        return not any(h.in_hull for h in self.hull)

    @property
    def ok(self) -> bool:
        return self.warden_ac and self.rx_ac and self.hull_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "warden_absolute_continuity": {
                "ok": self.warden_ac,
                "violations": [[list(x) for x in v] for v in self.warden_ac_violations],
            },
            "rx_absolute_continuity": {
                "ok": self.rx_ac,
                "violations": [[list(x) for x in v] for v in self.rx_ac_violations],
            },
            "null_not_in_hull": {
                "ok": self.hull_ok,
                "wardens": [
                    {
                        "in_hull": h.in_hull,
                        "residual": h.residual,
                        "weights": [{"inputs": list(x), "weight": lam} for x, lam in h.weights.items()],
                    }
                    for h in self.hull
                ],
            },
        }


def _active_tuples(spec: DmIcSpec):
    zero = (0,) * spec.K
    return [x for x in itertools.product(*(range(s) for s in spec.input_sizes)) if x != zero]


def hull_membership(points: np.ndarray, target: np.ndarray, labels=None) -> HullResult:
    """Decide whether ``target`` is a convex combination of the rows of ``points``.

    All rows are distributions, so nonnegative least squares on the rows alone
    enforces the sum-to-one constraint implicitly. Binary alphabets use the
    exact interval test.
    """
    pts = np.asarray(points, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    labels = list(labels) if labels is not None else list(range(len(pts)))
    lam, resid = nnls(pts.T, target)
    weights = {labels[i]: float(lam[i]) for i in np.flatnonzero(lam > 0)}
    if target.size == 2:
        lo, hi = int(np.argmin(pts[:, 1])), int(np.argmax(pts[:, 1]))
        inside = pts[lo, 1] - HULL_TOL <= target[1] <= pts[hi, 1] + HULL_TOL
        if inside:
            span = pts[hi, 1] - pts[lo, 1]
            t = 1.0 if span <= 0 else (target[1] - pts[lo, 1]) / span
            t = min(1.0, max(0.0, t))
            weights = {labels[lo]: 1.0 - t} if lo == hi else {labels[lo]: 1.0 - t, labels[hi]: t}
            weights = {k: float(v) for k, v in weights.items() if v > 0}
            resid = 0.0
        else:
            resid = min(abs(target[1] - pts[lo, 1]), abs(target[1] - pts[hi, 1])) * math.sqrt(2)
        return HullResult(bool(inside), weights if inside else {}, float(resid))
    inside = resid <= HULL_TOL
    return HullResult(bool(inside), weights if inside else {}, float(resid))


def validate_assumptions(spec: DmIcSpec) -> AssumptionReport:
    """Check the standing assumptions: absolute continuity at wardens and receivers, and
    that no warden's null distribution is a convex combination of its active ones."""
    active = _active_tuples(spec)
    w_viol, hull = [], []
    for j in range(spec.J):
        q0 = warden_null(spec, j)
        w_viol.append([x for x in active if np.any((q0 == 0) & (spec.warden_channels[j][x] > 0))])
        pts = np.vstack([spec.warden_channels[j][x] for x in active])
        hull.append(hull_membership(pts, q0, labels=active))
    r_viol = []
    for k in range(spec.K):
        w0 = rx_null(spec, k)
        r_viol.append([x for x in active if np.any((w0 == 0) & (spec.rx_channels[k][x] > 0))])
    return AssumptionReport(w_viol, r_viol, hull)


def gaussian_lambda(spec: GaussianIcSpec, alpha, j: int | None = None) -> float:
    """lambda(alpha) = sum_k alpha_k g_wk^2; with several wardens, the max over wardens unless j is given."""
    alpha = as_simplex(alpha, size=spec.K)
    lams = (spec.warden_gains**2) @ alpha
    return float(lams[j]) if j is not None else float(lams.max())
