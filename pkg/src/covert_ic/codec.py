"""Low-weight random coding with per-pair secret keys and TIN threshold decoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal

import numpy as np
from scipy import stats
from scipy.special import gammaln

from . import _kernels
from ._parallel import CODEBOOK, TRIAL, chunk_ranges, derived_rng, resolve_workers, run_chunks, seed_seq
from .channel import (
    DmIcSpec,
    InputWeight,
    chi2_max,
    effective_channel,
    validate_assumptions,
    warden_divergence,
)
from .errors import (
    AssumptionViolation,
    DegenerateChiSquared,
    InfeasibleSchedule,
    NumericalUnderflow,
)
from .prob import as_simplex, kl_divergence
from .region import DEGENERATE_TOL, _check_beta, _Divergences

#: Codebooks are held in memory only when M_k J_k n stays at or below this many symbols.
MATERIALIZE_LIMIT = 10**8


def _exp_int(x: float, rounding) -> int:
    """floor/ceil of e^x as an exact integer, valid far beyond float range."""
    if x <= 0:
        return 1 if rounding == ROUND_CEILING else int(x == 0)
    # Decimal exp is correctly rounded, so the true value lies within one ulp of y;
    # e^x is irrational for x != 0, so raising the precision always separates it
    # from the nearest integer.
    prec = int(x / 2.302585092994046) + 30
    while True:
        y = Context(prec=prec).exp(Decimal(x))
        ulp = Decimal(1).scaleb(y.adjusted() - prec + 1)
        wide = Context(prec=prec + 2)
        lo = wide.subtract(y, ulp).to_integral_value(rounding=rounding)
        if lo == wide.add(y, ulp).to_integral_value(rounding=rounding):
            return int(lo)
        prec += 30


#: decimal digits Python converts to and from int by default
_INT_DIGITS = 4000


def _int_out(v: int):
    """Exact JSON form of a size: an int, or a hex string past the decimal conversion limit."""
    return v if v < 10**_INT_DIGITS else hex(v)


def _int_in(v) -> int:
    return int(v, 0) if isinstance(v, str) else int(v)


@dataclass(frozen=True)
class Schedule:
    """Blocklength, on-probability scale and per-user codebook sizes and thresholds."""

    n: int
    gamma: float
    alpha: tuple
    M: tuple
    J: tuple
    tau: tuple
    epsilon: float
    delta: float
    beta: tuple | None = None
    seed: int | None = None
    epsilon_key: float | None = None

    @property
    def K(self) -> int:
        return len(self.M)

    @property
    def log_M(self) -> np.ndarray:
        return np.array([math.log(m) for m in self.M])

    @property
    def log_J(self) -> np.ndarray:
        return np.array([math.log(j) for j in self.J])

    def weight(self, spec: DmIcSpec) -> InputWeight:
        return InputWeight.make(self.alpha, self.gamma, self.beta_array(spec), spec.input_sizes)

    def beta_array(self, spec: DmIcSpec) -> np.ndarray:
        return _check_beta(spec, None if self.beta is None else np.asarray(self.beta))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "alpha": list(self.alpha),
            "beta": None if self.beta is None else [list(r) for r in self.beta],
            "M": [_int_out(m) for m in self.M],
            "J": [_int_out(j) for j in self.J],
            "tau": [t if math.isfinite(t) else None for t in self.tau],
            "epsilon": self.epsilon,
            "epsilon_key": self.epsilon_key,
            "delta": self.delta,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        tau = tuple(float("-inf") if t is None else float(t) for t in d["tau"])
        beta = d.get("beta")
        return cls(
            n=int(d["n"]),
            gamma=float(d["gamma"]),
            alpha=tuple(float(a) for a in d["alpha"]),
            M=tuple(_int_in(m) for m in d["M"]),
            J=tuple(_int_in(j) for j in d["J"]),
            tau=tau,
            epsilon=float(d["epsilon"]),
            delta=float(d["delta"]),
            beta=None if beta is None else tuple(tuple(float(b) for b in r) for r in beta),
            seed=d.get("seed"),
            epsilon_key=d.get("epsilon_key"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        return cls.from_dict(json.loads(text))


def effective_divergence(spec: DmIcSpec, k: int, w: InputWeight) -> float:
    """beta-weighted D(W-bar(.|i) || W-bar(.|0)) of pair k's TIN channel."""
    wbar = effective_channel(spec, k, w)
    return sum(
        w.beta[k, i - 1] * kl_divergence(wbar[i], wbar[0]) for i in range(1, spec.input_sizes[k]) if w.beta[k, i - 1] > 0
    )


def midpoint_threshold(log_m: float, n: int, gamma: float, alpha_k: float, dbar: float, epsilon: float) -> float:
    """Halfway between the message rate and the backed-off effective-channel information."""
    return 0.5 * (log_m + (1.0 - 0.5 * epsilon) * n * gamma * alpha_k * dbar)


def _size_users(spec, div, alpha, beta, n, gamma, epsilon, epsilon_key, log_m_scale=1.0):
    num, key_num = div.numerators(beta)
    w = InputWeight.make(alpha, gamma, beta, spec.input_sizes)
    M, J, tau = [], [], []
    for k in range(spec.K):
        if alpha[k] == 0:
            M.append(1)
            J.append(1)
            tau.append(float("-inf"))
            continue
        base = alpha[k] * n * gamma
        log_m = log_m_scale * (1.0 - epsilon) * base * num[k]
        log_mj = (1.0 + epsilon_key) * base * key_num[k]
        m = max(1, _exp_int(log_m, ROUND_FLOOR))
        if log_mj <= log_m:
            j = 1
        else:
            total = _exp_int(log_mj, ROUND_CEILING)
            j = max(1, -(-total // m))
        M.append(m)
        J.append(j)
        tau.append(float(midpoint_threshold(math.log(m), n, gamma, alpha[k], effective_divergence(spec, k, w), epsilon)))
    return tuple(M), tuple(J), tuple(tau)


def make_schedule(
    spec: DmIcSpec,
    alpha,
    n: int,
    epsilon: float,
    delta: float,
    *,
    beta=None,
    epsilon_key: float | None = None,
    gamma: float | None = None,
    seed: int | None = None,
) -> Schedule:
    """Size codebooks for blocklength n and covertness budget delta.

    gamma = sqrt(2 delta / (n chi^2_max)) unless given, log M_k = (1-eps) alpha_k n gamma D(W_k||W_0)
    (rounded down), log M_k J_k = (1+eps_key) alpha_k n gamma max_j D(Q_k^{(j)}||Q_0^{(j)})
    (rounded up), thresholds by :func:`midpoint_threshold`.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    epsilon_key = epsilon if epsilon_key is None else float(epsilon_key)
    alpha = as_simplex(alpha, size=spec.K)
    beta = _check_beta(spec, beta)
    report = validate_assumptions(spec)
    if not report.ok:
        raise AssumptionViolation("channel violates the standing assumptions", report)
    chi2 = chi2_max(spec, alpha, beta)
    if not chi2 > DEGENERATE_TOL:
        raise DegenerateChiSquared(f"chi^2 vanishes at alpha = {alpha.tolist()}")
    if gamma is None:
        gamma = math.sqrt(2.0 * delta / (n * chi2))
        if gamma > 1.0:
            gamma = 1.0
            w = InputWeight.make(alpha, gamma, beta, spec.input_sizes)
            achieved = n * max(warden_divergence(spec, j, w) for j in range(spec.J))
            if not delta / 2.0 <= achieved <= 2.0 * delta:
                raise InfeasibleSchedule(
                    f"gamma clipped to 1 gives n D = {achieved:.3g}, more than 2x off the budget {delta:.3g}"
                )
    gamma = float(gamma)
    if gamma <= 0.0:
        raise InfeasibleSchedule("gamma = 0: no covert throughput")
    div = _Divergences(spec)
    M, J, tau = _size_users(spec, div, alpha, beta, n, gamma, epsilon, epsilon_key)
    short = [k for k in range(spec.K) if alpha[k] > 0 and M[k] < 2]
    if short:
        raise InfeasibleSchedule(f"users {short} get fewer than 2 messages at n={n}, delta={delta}")
    return Schedule(
        n=int(n),
        gamma=gamma,
        alpha=tuple(alpha.tolist()),
        M=M,
        J=J,
        tau=tau,
        epsilon=float(epsilon),
        delta=float(delta),
        beta=None if spec.is_binary else tuple(map(tuple, beta.tolist())),
        seed=seed,
        epsilon_key=epsilon_key,
    )


def inflate_schedule(spec: DmIcSpec, schedule: Schedule, factor: float) -> Schedule:
    """Scale every log M_k by ``factor`` and re-derive keys and thresholds."""
    alpha = np.asarray(schedule.alpha)
    beta = schedule.beta_array(spec)
    eps_key = schedule.epsilon if schedule.epsilon_key is None else schedule.epsilon_key
    M, J, tau = _size_users(
        spec, _Divergences(spec), alpha, beta, schedule.n, schedule.gamma, schedule.epsilon, eps_key, factor
    )
    return replace(schedule, M=M, J=J, tau=tau)


# ---------------------------------------------------------------------------
# codebooks


def _symbol_cdf(schedule: Schedule, spec: DmIcSpec, k: int) -> np.ndarray:
    """Cumulative probabilities of symbols 1..m_k; a uniform above the last value maps to 0."""
    p = schedule.weight(spec).input_dist(k, spec.input_sizes[k])
    return np.cumsum(p[1:])


def _to_symbols(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    sym = np.searchsorted(cdf, u, side="right") + 1
    sym[sym > cdf.size] = 0
    return sym.astype(np.int8)


def _user_stream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq(seed, CODEBOOK, k)))


@dataclass
class CodebookSet:
    """K random codebooks; row ``w * J_k + s`` of user k holds codeword x_k(w, s).

    Row r of user k is the r-th block of n uniforms from the user's PCG64 stream,
    so implicit (non-materialized) codebooks regenerate any row exactly.
    """

    spec: DmIcSpec
    schedule: Schedule
    seed: int
    codewords: list = field(default_factory=list)  # per user: array (M_k J_k, n) or None

    @property
    def materialized(self) -> bool:
        return all(c is not None for c in self.codewords)

    def size(self, k: int) -> int:
        return self.schedule.M[k] * self.schedule.J[k]

    def regenerate(self, k: int, rows) -> np.ndarray:
        n = self.schedule.n
        cdf = _symbol_cdf(self.schedule, self.spec, k)
        out = np.empty((len(rows), n), dtype=np.int8)
        for t, r in enumerate(rows):
            g = _user_stream(self.seed, k)
            g.bit_generator.advance(int(r) * n)
            out[t] = _to_symbols(g.random(n), cdf)
        return out

    def rows(self, k: int, rows=None) -> np.ndarray:
        if rows is None:
            rows = range(self.size(k))
        if self.codewords[k] is not None:
            return self.codewords[k][np.asarray(list(rows), dtype=np.int64)]
        return self.regenerate(k, rows)

    def codeword(self, k: int, w: int, s: int) -> np.ndarray:
        return self.rows(k, [w * self.schedule.J[k] + s])[0]

    def key_slice(self, k: int, s: int) -> np.ndarray:
        """The M_k codewords a receiver holding key s must search."""
        J = self.schedule.J[k]
        if self.codewords[k] is not None:
            return self.codewords[k][s::J]
        return self.regenerate(k, range(s, self.size(k), J))

    def all_rows(self, k: int) -> np.ndarray:
        return self.codewords[k] if self.codewords[k] is not None else self.regenerate(k, range(self.size(k)))


def generate_codebooks(spec: DmIcSpec, schedule: Schedule, seed: int, materialize: bool | None = None) -> CodebookSet:
    """i.i.d. codebooks: each symbol is 0 w.p. 1 - alpha_k gamma and i w.p. alpha_k beta_ki gamma."""
    books = []
    for k in range(spec.K):
        size = schedule.M[k] * schedule.J[k]
        keep = size * schedule.n <= MATERIALIZE_LIMIT if materialize is None else materialize
        if keep:
            u = _user_stream(seed, k).random((size, schedule.n))
            books.append(_to_symbols(u.ravel(), _symbol_cdf(schedule, spec, k)).reshape(size, schedule.n))
        else:
            books.append(None)
    return CodebookSet(spec, schedule, int(seed), books)


# ---------------------------------------------------------------------------
# decoding


def decoder_llr(spec: DmIcSpec, k: int, schedule: Schedule) -> np.ndarray:
    """ln W-bar(y|x) - ln W-bar(y|0) as an (|X_k|, |Y_k|) table; +inf where W-bar(y|0) = 0."""
    wbar = effective_channel(spec, k, schedule.weight(spec))
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log(wbar) - np.log(wbar[0])[None, :]
    llr[:, wbar[0] == 0] = np.inf
    llr[0] = 0.0
    return llr


def _check_observation(llr: np.ndarray, y: np.ndarray) -> None:
    if np.isposinf(llr[1:, y]).any():
        raise NumericalUnderflow("observed an output that the all-off reference channel cannot produce")


def tin_decode(spec: DmIcSpec, k: int, y, codewords: np.ndarray, schedule: Schedule, tau: float | None = None,
               llr: np.ndarray | None = None) -> int | None:
    """Threshold decoder of pair k: the unique row w of ``codewords`` whose statistic
    sum_i ln W-bar(y_i|x_i)/W-bar(y_i|0) exceeds tau, or ``None`` (no or several candidates).

    Messages are 0-based row indices of the key slice.
    """
    y = np.asarray(y, dtype=np.int64)
    if llr is None:
        llr = decoder_llr(spec, k, schedule)
    _check_observation(llr, y)
    tau = schedule.tau[k] if tau is None else tau
    stat = _kernels.tin_statistics(np.asarray(codewords, dtype=np.int8), y, llr)
    hits = np.flatnonzero(stat > tau)
    return int(hits[0]) if hits.size == 1 else None


# ---------------------------------------------------------------------------
# reliability simulation


@dataclass
class ErrorRateReport:
    trials: int
    user_errors: np.ndarray
    union_errors: int
    method: str

    @property
    def p_user(self) -> np.ndarray:
        return self.user_errors / self.trials

    @property
    def p_union(self) -> float:
        return self.union_errors / self.trials

    @property
    def ci_user(self) -> list:
        return [wilson_interval(int(e), self.trials) for e in self.user_errors]

    @property
    def ci_union(self) -> tuple:
        return wilson_interval(self.union_errors, self.trials)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "method": self.method,
            "p_user": self.p_user.tolist(),
            "ci_user": [list(c) for c in self.ci_user],
            "p_union": self.p_union,
            "ci_union": list(self.ci_union),
        }


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return derived_rng(seed, TRIAL, trial)


def _codebook_trials(spec, books, schedule, seed, trials, tau):
    K, n = spec.K, schedule.n
    llrs = [decoder_llr(spec, k, schedule) for k in range(K)]
    cums = [np.cumsum(spec.rx_flat(k), axis=1) for k in range(K)]
    out = np.zeros((len(trials), K), dtype=bool)
    for t_i, t in enumerate(trials):
        rng = _trial_rng(seed, t)
        w = [int(rng.integers(schedule.M[k])) for k in range(K)]
        s = [int(rng.integers(schedule.J[k])) for k in range(K)]
        x = np.vstack([books[k][w[k] * schedule.J[k] + s[k]] for k in range(K)])
        a = spec.joint_index(x)
        for k in range(K):
            y = _kernels.sample_categorical(cums[k], a, rng.random(n))
            got = tin_decode(spec, k, y, books[k][s[k] :: schedule.J[k]], schedule, tau[k], llrs[k])
            out[t_i, k] = got != w[k]
    return out


def competitor_tail(counts, probs, llr, tau: float, floor: float = 1e-300) -> float:
    """P(T > tau) for a codeword independent of the output.

    ``counts[c]`` positions carry output class c; each position independently holds
    symbol s with probability ``probs[s-1]`` (else 0) and contributes ``llr[s-1, c]``.
    Exact up to tail truncation at 1e-25 per class.
    """
    counts = np.asarray(counts, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    llr = np.asarray(llr, dtype=np.float64)
    m = probs.size
    atoms_v, atoms_p = np.zeros(1), np.ones(1)
    classes = [c for c in range(counts.size) if counts[c] > 0]
    last = None
    if m == 1 and classes:
        finite = [c for c in classes if np.isfinite(llr[0, c]) and llr[0, c] != 0]
        if finite:
            last = max(finite, key=lambda c: counts[c])
    for c in classes:
        if c == last:
            continue
        v, p = _class_atoms(int(counts[c]), probs, llr[:, c])
        atoms_v = (atoms_v[:, None] + v[None, :]).ravel()
        atoms_p = (atoms_p[:, None] * p[None, :]).ravel()
        keep = atoms_p > floor
        atoms_v, atoms_p = atoms_v[keep], atoms_p[keep]
    if last is None:
        return float(min(1.0, atoms_p[atoms_v > tau].sum()))
    n_c, p, l = int(counts[last]), float(probs[0]), float(llr[0, last])
    with np.errstate(invalid="ignore"):
        t = (tau - atoms_v) / l
    if l > 0:
        tail = np.where(np.isneginf(atoms_v), 0.0, stats.binom.sf(np.floor(t), n_c, p))
    else:
        tail = np.where(np.isneginf(atoms_v), 0.0, stats.binom.cdf(np.ceil(t) - 1, n_c, p))
    return float(min(1.0, np.dot(atoms_p, tail)))


def _class_atoms(n_c: int, probs: np.ndarray, llr_c: np.ndarray):
    """Distinct contributions of one output class and their probabilities."""
    m = probs.size
    his = [min(n_c, int(stats.binom.isf(1e-25, n_c, p)) + 1) if p > 0 else 0 for p in probs]
    grids = np.meshgrid(*[np.arange(h + 1) for h in his], indexing="ij")
    N = np.stack([g.ravel() for g in grids], axis=1)
    rest = n_c - N.sum(axis=1)
    ok = rest >= 0
    N, rest = N[ok], rest[ok]
    p0 = 1.0 - probs.sum()
    with np.errstate(divide="ignore"):
        logp = gammaln(n_c + 1) - gammaln(rest + 1) - gammaln(N + 1).sum(axis=1)
        logp = logp + (N * np.log(np.where(probs > 0, probs, 1.0))).sum(axis=1)
        logp = logp + (rest * math.log(p0) if p0 > 0 else np.where(rest > 0, -np.inf, 0.0))
    prob = np.exp(logp)
    with np.errstate(invalid="ignore"):
        vals = np.where(N > 0, N * llr_c[None, :m], 0.0).sum(axis=1)
    return vals, prob


def _ensemble_trials(spec, schedule, seed, trials, tau):
    K, n = spec.K, schedule.n
    w = schedule.weight(spec)
    on = w.on_probs()
    p_on = on.sum(axis=1)
    llrs = [decoder_llr(spec, k, schedule) for k in range(K)]
    rx = [spec.rx_flat(k) for k in range(K)]
    cums = [np.cumsum(r, axis=1) for r in rx]
    zero_row = spec.joint_index((0,) * K)
    out = np.zeros((len(trials), K), dtype=bool)
    for t_i, t in enumerate(trials):
        rng = _trial_rng(seed, t)
        pos, sym = [], []
        for k in range(K):
            c = int(rng.binomial(n, p_on[k])) if p_on[k] > 0 else 0
            pos.append(np.sort(rng.choice(n, size=c, replace=False)) if c else np.zeros(0, dtype=np.int64))
            if c and spec.input_sizes[k] > 2:
                probs = on[k, : spec.input_sizes[k] - 1] / p_on[k]
                sym.append(rng.choice(np.arange(1, spec.input_sizes[k]), size=c, p=probs))
            else:
                sym.append(np.ones(c, dtype=np.int64))
        support = np.unique(np.concatenate(pos)) if any(p.size for p in pos) else np.zeros(0, dtype=np.int64)
        x = np.zeros((K, support.size), dtype=np.int64)
        for k in range(K):
            x[k, np.searchsorted(support, pos[k])] = sym[k]
        a = spec.joint_index(x) if support.size else np.zeros(0, dtype=np.int64)
        for k in range(K):
            if schedule.M[k] == 1 and not math.isfinite(tau[k]):
                continue
            y_s = _kernels.sample_categorical(cums[k], a, rng.random(support.size))
            counts = rng.multinomial(n - support.size, rx[k][zero_row])
            np.add.at(counts, y_s, 1)
            llr = llrs[k]
            if np.isposinf(llr[1:, np.flatnonzero(counts)]).any():
                raise NumericalUnderflow("observed an output that the all-off reference channel cannot produce")
            own = np.searchsorted(support, pos[k])
            t_true = float(llr[sym[k], y_s[own]].sum()) if own.size else 0.0
            q = competitor_tail(counts, on[k, : spec.input_sizes[k] - 1], llr[1:], tau[k])
            p_clear = math.exp((schedule.M[k] - 1) * math.log1p(-q)) if q < 1.0 else float(schedule.M[k] == 1)
            clear = rng.random() < p_clear
            out[t_i, k] = not (t_true > tau[k] and clear)
    return out


def simulate_error_rate(
    spec: DmIcSpec,
    codebooks: CodebookSet | None,
    trials: int,
    seed: int,
    *,
    schedule: Schedule | None = None,
    workers: int | None = None,
    tau=None,
    method: str | None = None,
) -> ErrorRateReport:
    """Monte Carlo decoding error rates per user and for the union event.

    ``method="codebook"`` decodes against the given materialized codebooks.
    ``method="ensemble"`` averages over the random-codebook ensemble: every trial
    draws fresh codewords, and the chance that none of the M_k - 1 competing
    codewords passes the threshold is computed exactly from the output's class
    counts. The default picks "codebook" when the codebooks are in memory.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    schedule = schedule or codebooks.schedule
    if method is None:
        method = "codebook" if codebooks is not None and codebooks.materialized else "ensemble"
    tau = tuple(schedule.tau) if tau is None else tuple(float(t) for t in np.broadcast_to(tau, (spec.K,)))
    workers = resolve_workers(workers)
    chunks = chunk_ranges(trials, workers)
    if method == "codebook":
        if codebooks is None or not codebooks.materialized:
            raise ValueError("codebook simulation needs materialized codebooks")
        args = [(spec, codebooks.codewords, schedule, seed, r, tau) for r in chunks]
        parts = run_chunks(_codebook_trials, args, workers)
    elif method == "ensemble":
        args = [(spec, schedule, seed, r, tau) for r in chunks]
        parts = run_chunks(_ensemble_trials, args, workers)
    else:
        raise ValueError(f"unknown method {method!r}")
    errs = np.vstack(parts)
    return ErrorRateReport(trials, errs.sum(axis=0), int(errs.any(axis=1).sum()), method)


def bare_schedule(spec: DmIcSpec, alpha, gamma: float, n: int, sizes, beta=None) -> Schedule:
    """Schedule with explicit codebook sizes (J_k = 1) and vacuous thresholds.

    Used to study the warden's view at chosen codebook sizes; ``delta`` records
    the single-letter proxy n max_j D(Q_{alpha,gamma}^{(j)} || Q_0^{(j)}).
    """
    alpha = as_simplex(alpha, size=spec.K)
    beta = _check_beta(spec, beta)
    w = InputWeight.make(alpha, gamma, beta, spec.input_sizes)
    proxy = n * max(warden_divergence(spec, j, w) for j in range(spec.J))
    return Schedule(
        n=int(n),
        gamma=float(gamma),
        alpha=tuple(alpha.tolist()),
        M=tuple(int(s) for s in sizes),
        J=(1,) * spec.K,
        tau=(float("-inf"),) * spec.K,
        epsilon=0.5,
        delta=float(proxy),
        beta=None if spec.is_binary else tuple(map(tuple, beta.tolist())),
    )
