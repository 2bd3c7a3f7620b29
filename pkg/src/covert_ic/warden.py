"""The warden's view: induced output law, divergences and the optimal detector."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import rel_entr

from . import _kernels
from ._parallel import WARDEN_D, WARDEN_LRT, chunk_ranges, derived_rng, resolve_workers, run_chunks
from .channel import DmIcSpec, induced_warden_dist, warden_null
from .codec import CodebookSet, wilson_interval
from .errors import ScaleGuardExceeded
from .prob import kl_divergence

#: |Z|^n cap for exact enumeration
EXACT_OUTPUT_LIMIT = 10**7
#: prod_k M_k J_k cap for exact enumeration
EXACT_TUPLE_LIMIT = 10**5
#: codeword tuples evaluated per sample in pointwise (Monte Carlo) mode
MC_TUPLE_LIMIT = 10**6
#: stored joint-input symbols (tuples x n) for either mode
SEQUENCE_ELEMENT_LIMIT = 2 * 10**7
#: log-likelihood-ratio margin below which the detector treats a tie as H0
LRT_TIE_TOL = 1e-12
_BLOCK = 1024


def _tuple_sequences(spec: DmIcSpec, codebooks: CodebookSet, limit: int):
    """Distinct joint-input sequences over all codeword tuples, with their weights."""
    sizes = [codebooks.size(k) for k in range(spec.K)]
    total = math.prod(sizes)
    if total > limit:
        raise ScaleGuardExceeded(f"prod_k M_k J_k = {total} exceeds {limit}", cost=total, limit=limit)
    cost = total * codebooks.schedule.n
    if cost > SEQUENCE_ELEMENT_LIMIT:
        raise ScaleGuardExceeded(
            f"{total} codeword tuples of length {codebooks.schedule.n} exceed {SEQUENCE_ELEMENT_LIMIT} symbols",
            cost=cost,
            limit=SEQUENCE_ELEMENT_LIMIT,
        )
    rows = [codebooks.all_rows(k).astype(np.int64) for k in range(spec.K)]
    strides = np.cumprod((1,) + spec.input_sizes[::-1])[:-1][::-1]
    idx = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    seqs = np.zeros((total, codebooks.schedule.n), dtype=np.int64)
    for k in range(spec.K):
        seqs += strides[k] * rows[k][idx[k].ravel()]
    uniq, counts = np.unique(seqs, axis=0, return_counts=True)
    return uniq, counts / total


def _output_guard(spec: DmIcSpec, j: int, n: int) -> None:
    cost = spec.warden_channels[j].shape[-1] ** n
    if cost > EXACT_OUTPUT_LIMIT:
        raise ScaleGuardExceeded(f"|Z|^n = {cost} exceeds {EXACT_OUTPUT_LIMIT}", cost=cost, limit=EXACT_OUTPUT_LIMIT)


def product_dist(p, n: int) -> np.ndarray:
    """p^{x n} flattened with position 0 most significant."""
    p = np.asarray(p, dtype=np.float64)
    return _kernels.sequence_likelihoods(np.zeros((1, n), dtype=np.int64), np.ones(1), p[None, :])


def exact_induced_dist(spec: DmIcSpec, j: int, codebooks: CodebookSet) -> np.ndarray:
    """Q-hat^n over Z_j^n: uniform mixture over all codeword tuples of the product channel law."""
    n = codebooks.schedule.n
    _output_guard(spec, j, n)
    seqs, weights = _tuple_sequences(spec, codebooks, EXACT_TUPLE_LIMIT)
    return _kernels.sequence_likelihoods(seqs, weights, spec.warden_flat(j))


@dataclass
class DetectionReport:
    """Warden j's view of one codebook set.

    ``d_iid`` is the single-letter proxy n D(Q_{alpha,gamma} || Q_0) and
    ``lemma4_gap`` the measured |D_to_null - d_iid|.
    """

    warden: int
    method: str
    n: int
    d_to_null: float
    d_stderr: float
    resolvability_gap: float
    gap_stderr: float
    tv_to_null: float | None
    error_sum: float
    error_sum_ci: tuple
    identity_residual: float | None
    d_iid: float
    samples: int = 0

    @property
    def lemma4_gap(self) -> float:
        return abs(self.d_to_null - self.d_iid)

    @property
    def pinsker_floor(self) -> float:
        return 1.0 - math.sqrt(max(self.d_to_null, 0.0) / 2.0)

    @property
    def pinsker_ok(self) -> bool:
        return self.error_sum >= self.pinsker_floor - 1e-12

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error_sum_ci"] = list(self.error_sum_ci)
        d["lemma4_gap"] = self.lemma4_gap
        d["pinsker_floor"] = self.pinsker_floor
        d["pinsker_ok"] = self.pinsker_ok
        return d

    CSV_FIELDS = (
        "warden", "method", "n", "d_to_null", "d_stderr", "resolvability_gap", "gap_stderr",
        "tv_to_null", "error_sum", "identity_residual", "d_iid", "lemma4_gap", "samples",
    )

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[f] for f in self.CSV_FIELDS]


def _reference(spec: DmIcSpec, j: int, codebooks: CodebookSet) -> np.ndarray:
    return induced_warden_dist(spec, j, codebooks.schedule.weight(spec))


def lrt_error_masses(qhat: np.ndarray, q0n: np.ndarray) -> tuple[float, float]:
    """(pi_{1|0}, pi_{0|1}) of the test that says H1 iff qhat(z) > q0n(z)."""
    say_h1 = qhat > q0n
    return float(q0n[say_h1].sum()), float(qhat[~say_h1].sum())


def exact_detection(spec: DmIcSpec, j: int, codebooks: CodebookSet) -> DetectionReport:
    """Exhaustive D, V and optimal-test error sum for warden j."""
    n = codebooks.schedule.n
    qhat = exact_induced_dist(spec, j, codebooks)
    q0 = warden_null(spec, j)
    ref = _reference(spec, j, codebooks)
    q0n = product_dist(q0, n)
    d = float(rel_entr(qhat, q0n).sum())
    gap = float(rel_entr(qhat, product_dist(ref, n)).sum())
    tv = 0.5 * float(np.abs(qhat - q0n).sum())
    fa, miss = lrt_error_masses(qhat, q0n)
    err = fa + miss
    return DetectionReport(
        warden=j,
        method="exact",
        n=n,
        d_to_null=max(d, 0.0),
        d_stderr=0.0,
        resolvability_gap=max(gap, 0.0),
        gap_stderr=0.0,
        tv_to_null=tv,
        error_sum=err,
        error_sum_ci=(err, err),
        identity_residual=abs(err - (1.0 - tv)),
        d_iid=n * kl_divergence(ref, q0),
    )


# ---------------------------------------------------------------------------
# pointwise (Monte Carlo) mode


class _Pointwise:
    """Sampler and evaluator of Q-hat^n, Q_0^n and the i.i.d. reference at sampled z."""

    def __init__(self, spec: DmIcSpec, j: int, codebooks: CodebookSet):
        self.n = codebooks.schedule.n
        self.seqs, self.weights = _tuple_sequences(spec, codebooks, MC_TUPLE_LIMIT)
        chan = spec.warden_flat(j)
        self.cum = np.cumsum(chan, axis=1)
        self.cum_cdf_w = np.cumsum(self.weights)
        with np.errstate(divide="ignore"):
            self.log_chan = np.log(chan)
            self.log_w = np.log(self.weights)
            self.log_q0 = np.log(warden_null(spec, j))[None, :]
            ref = _reference(spec, j, codebooks)
            self.cum_q0 = np.cumsum(warden_null(spec, j))[None, :]
            self.log_ref_chan = np.log(ref)[None, :]
        self.zero = np.zeros((1, self.n), dtype=np.int64)
        self.one = np.zeros(1)

    def sample_hat(self, rng, count: int) -> np.ndarray:
        pick = np.minimum(np.searchsorted(self.cum_cdf_w, rng.random(count), side="right"), len(self.weights) - 1)
        rows = self.seqs[pick].ravel()
        return _kernels.sample_categorical(self.cum, rows, rng.random(rows.size)).reshape(count, self.n)

    def sample_null(self, rng, count: int) -> np.ndarray:
        rows = np.zeros(count * self.n, dtype=np.int64)
        return _kernels.sample_categorical(self.cum_q0, rows, rng.random(rows.size)).reshape(count, self.n)

    def log_hat(self, z):
        return _kernels.log_mixture(z, self.seqs, self.log_chan, self.log_w)

    def log_null(self, z):
        return _kernels.log_mixture(z, self.zero, self.log_q0, self.one)

    def log_ref(self, z):
        return _kernels.log_mixture(z, self.zero, self.log_ref_chan, self.one)


def _blocks(samples: int):
    return [(b, min(_BLOCK, samples - b * _BLOCK)) for b in range(-(-samples // _BLOCK))]


def _mc_entropy_blocks(pw: _Pointwise, seed: int, blocks):
    out = []
    for b, count in blocks:
        rng = derived_rng(seed, WARDEN_D, b)
        z = pw.sample_hat(rng, count)
        lh = pw.log_hat(z)
        d = lh - pw.log_null(z)
        g = lh - pw.log_ref(z)
        out.append((d.sum(), (d * d).sum(), g.sum(), (g * g).sum()))
    return out


@dataclass
class McEstimate:
    estimate: float
    std_error: float
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def _moments(total, total_sq, count) -> McEstimate:
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return McEstimate(float(mean), float(math.sqrt(var / count)), int(count))


def _mc_run(spec, j, codebooks, samples, seed, workers):
    if samples < 2:
        raise ValueError("need at least 2 samples")
    pw = _Pointwise(spec, j, codebooks)
    blocks = _blocks(samples)
    workers = resolve_workers(workers)
    parts = run_chunks(_mc_entropy_blocks, [(pw, seed, [blocks[i] for i in r]) for r in chunk_ranges(len(blocks), workers)], workers)
    sums = np.array([row for part in parts for row in part])
    # fixed block order keeps the total independent of the worker count
    d = _moments(math.fsum(sums[:, 0]), math.fsum(sums[:, 1]), samples)
    g = _moments(math.fsum(sums[:, 2]), math.fsum(sums[:, 3]), samples)
    return d, g


def mc_relative_entropy(spec: DmIcSpec, j: int, codebooks: CodebookSet, samples: int, seed: int,
                        workers: int | None = None) -> McEstimate:
    """D(Q-hat^n || Q_0^n) as the mean of ln Q-hat^n(z) - ln Q_0^n(z) over z drawn from Q-hat^n."""
    return _mc_run(spec, j, codebooks, samples, seed, workers)[0]


@dataclass
class GapReport:
    gap: float
    std_error: float
    d_to_null: float
    d_iid: float
    method: str

    @property
    def lemma4_gap(self) -> float:
        return abs(self.d_to_null - self.d_iid)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lemma4_gap"] = self.lemma4_gap
        return d


def resolvability_gap(spec: DmIcSpec, j: int, codebooks: CodebookSet, *, method: str = "auto",
                      samples: int = 4096, seed: int = 0, workers: int | None = None) -> GapReport:
    """D(Q-hat^n || Q_{alpha,gamma}^n) against the i.i.d. single-letter induced law."""
    n = codebooks.schedule.n
    if method == "auto":
        try:
            _output_guard(spec, j, n)
            method = "exact" if math.prod(codebooks.size(k) for k in range(spec.K)) <= EXACT_TUPLE_LIMIT else "mc"
        except ScaleGuardExceeded:
            method = "mc"
    if method == "exact":
        rep = exact_detection(spec, j, codebooks)
        return GapReport(rep.resolvability_gap, 0.0, rep.d_to_null, rep.d_iid, "exact")
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    d, g = _mc_run(spec, j, codebooks, samples, seed, workers)
    d_iid = n * kl_divergence(_reference(spec, j, codebooks), warden_null(spec, j))
    return GapReport(g.estimate, g.std_error, d.estimate, d_iid, "monte_carlo")


def _lrt_blocks(pw: _Pointwise, seed: int, blocks):
    fa = miss = 0
    for b, count in blocks:
        rng = derived_rng(seed, WARDEN_LRT, b)
        z0 = pw.sample_null(rng, count)
        fa += int((pw.log_hat(z0) - pw.log_null(z0) > LRT_TIE_TOL).sum())
        z1 = pw.sample_hat(rng, count)
        miss += int((pw.log_hat(z1) - pw.log_null(z1) <= LRT_TIE_TOL).sum())
    return fa, miss


@dataclass
class LrtEstimate:
    error_sum: float
    ci: tuple
    sigma: float
    p_false_alarm: float
    p_miss: float
    trials: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci"] = list(self.ci)
        return d


def lrt_detection_mc(spec: DmIcSpec, j: int, codebooks: CodebookSet, trials: int, seed: int,
                     workers: int | None = None) -> LrtEstimate:
    """Simulate ``trials`` observations under each hypothesis and apply the likelihood-ratio test.

    The interval adds the two Wilson 95% endpoints, so it covers the sum conservatively.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pw = _Pointwise(spec, j, codebooks)
    blocks = _blocks(trials)
    workers = resolve_workers(workers)
    parts = run_chunks(_lrt_blocks, [(pw, seed, [blocks[i] for i in r]) for r in chunk_ranges(len(blocks), workers)], workers)
    fa = sum(p[0] for p in parts)
    miss = sum(p[1] for p in parts)
    lo1, hi1 = wilson_interval(fa, trials)
    lo2, hi2 = wilson_interval(miss, trials)
    p1, p2 = fa / trials, miss / trials
    sigma = math.sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / trials)
    return LrtEstimate(p1 + p2, (lo1 + lo2, hi1 + hi2), sigma, p1, p2, trials)


def mc_detection(spec: DmIcSpec, j: int, codebooks: CodebookSet, samples: int, seed: int,
                 workers: int | None = None) -> DetectionReport:
    """DetectionReport from pointwise Monte Carlo (no total variation available)."""
    d, g = _mc_run(spec, j, codebooks, samples, seed, workers)
    lrt = lrt_detection_mc(spec, j, codebooks, samples, seed, workers)
    return DetectionReport(
        warden=j,
        method="monte_carlo",
        n=codebooks.schedule.n,
        d_to_null=d.estimate,
        d_stderr=d.std_error,
        resolvability_gap=g.estimate,
        gap_stderr=g.std_error,
        tv_to_null=None,
        error_sum=lrt.error_sum,
        error_sum_ci=lrt.ci,
        identity_residual=None,
        d_iid=codebooks.schedule.n * kl_divergence(_reference(spec, j, codebooks), warden_null(spec, j)),
        samples=samples,
    )


def detect(spec: DmIcSpec, codebooks: CodebookSet, *, exact: bool | None = None, samples: int = 4096,
           seed: int = 0, workers: int | None = None) -> list[DetectionReport]:
    """One report per warden; ``exact=None`` enumerates when the guards allow it."""
    reports = []
    for j in range(spec.J):
        use_exact = exact
        if use_exact is None:
            try:
                _output_guard(spec, j, codebooks.schedule.n)
                use_exact = math.prod(codebooks.size(k) for k in range(spec.K)) <= EXACT_TUPLE_LIMIT
            except ScaleGuardExceeded:
                use_exact = False
        reports.append(exact_detection(spec, j, codebooks) if use_exact else mc_detection(spec, j, codebooks, samples, seed, workers))
    return reports
