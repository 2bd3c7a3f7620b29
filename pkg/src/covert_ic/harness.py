"""Experiment configuration, blocklength sweeps and Gaussian link simulations."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._parallel import GAUSS_CODEBOOK, GAUSS_TRIAL, SWEEP_ROW, derived_rng, resolve_workers, run_chunks, seed_seq
from .channel import DmIcSpec, GaussianIcSpec, load_spec, validate_assumptions, warden_divergence
from .codec import MATERIALIZE_LIMIT, generate_codebooks, make_schedule, simulate_error_rate, wilson_interval
from .errors import AssumptionViolation, InfeasibleSchedule, PowerCapExceeded, ScaleGuardExceeded
from .region import region_point, region_point_gaussian
from .warden import detect, resolvability_gap

MODES = ("region", "frontier", "schedule", "simulate", "detect", "sweep", "gaussian", "validate")

#: fixed-codebook simulation is used below this many stored symbols, the ensemble above
SIM_CODEBOOK_LIMIT = 10**6
#: Monte Carlo resolvability gap is logged when samples * tuples * n stays below this
GAP_COST_LIMIT = 2 * 10**8
#: Gaussian codebooks are simulated only up to this many stored reals
GAUSS_MATERIALIZE_LIMIT = 2 * 10**7


@dataclass
class ExperimentConfig:
    spec: str | None = None
    mode: str = "sweep"
    alpha: list | None = None
    beta: list | None = None
    weights: list | None = None
    n_grid: list = field(default_factory=lambda: [1000])
    delta: float = 0.01
    epsilon: float = 0.1
    trials: int = 1000
    seed: int = 0
    gamma: float | None = None
    sim_method: str = "auto"
    gap_samples: int = 256
    tdma: bool = False
    out: str | None = None
    format: str = "json"
    workers: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.n_grid = [int(n) for n in self.n_grid]
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])) or not self.n_grid or self.n_grid[0] < 1:
            raise ValueError(f"n_grid must be positive and strictly increasing, got {self.n_grid}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.sim_method not in ("auto", "codebook", "ensemble"):
            raise ValueError(f"unknown sim_method {self.sim_method!r}")
        if self.format not in ("json", "csv"):
            raise ValueError(f"format must be json or csv, got {self.format!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self) -> str:
        """Digest of every field that influences results (output and worker flags excluded)."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("out", "format", "workers")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def row_seed(seed: int, n: int, variant: int = 0) -> int:
    """Seed of the grid row at blocklength n; rows do not depend on their neighbours."""
    return int(seed_seq(seed, SWEEP_ROW, n, variant).generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    kind: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": self.config.to_dict(), "config_hash": self.config.config_hash(), "rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=_json_default)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return "" if v is None else str(v)


def _flatten(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, (list, tuple, np.ndarray)):
            for i, item in enumerate(v):
                if isinstance(item, (list, tuple)):
                    for t, x in enumerate(item):
                        out[f"{k}_{i}_{t}"] = x
                else:
                    out[f"{k}_{i}"] = item
        else:
            out[k] = v
    return out


def rows_to_csv(rows: list) -> str:
    """CSV with list columns split per user and floats at 17 significant digits."""
    flat = [_flatten(r) for r in rows]
    header = []
    for r in flat:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in flat:
        w.writerow([_fmt(r.get(k)) for k in header])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# discrete sweep


def _proxy_d(spec: DmIcSpec, schedule) -> float:
    w = schedule.weight(spec)
    return schedule.n * max(warden_divergence(spec, j, w) for j in range(spec.J))


def _sweep_row(spec: DmIcSpec, cfg: ExperimentConfig, n: int, workers: int) -> dict:
    seed = row_seed(cfg.seed, n)
    row = {"n": n, "seed": seed, "config_hash": cfg.config_hash()}
    try:
        sched = make_schedule(spec, cfg.alpha, n, cfg.epsilon, cfg.delta, beta=cfg.beta, gamma=cfg.gamma, seed=seed)
    except InfeasibleSchedule as exc:
        row.update(status="infeasible", error=str(exc))
        return row
    theory = region_point(spec, sched.alpha, cfg.beta, validate=False).rates
    stored = sum(sched.M[k] * sched.J[k] for k in range(spec.K)) * n
    method = cfg.sim_method
    if method == "auto":
        method = "codebook" if stored <= SIM_CODEBOOK_LIMIT else "ensemble"
    books = generate_codebooks(spec, sched, seed) if method == "codebook" or stored <= MATERIALIZE_LIMIT // 10 else None
    rep = simulate_error_rate(spec, books, cfg.trials, seed, schedule=sched, workers=workers, method=method)
    tuples = math.prod(sched.M[k] * sched.J[k] for k in range(spec.K))
    d_method, d, d_se = "proxy", _proxy_d(spec, sched), 0.0
    gap = gap_se = None
    try:
        reports = detect(spec, books, exact=True) if books is not None else None
    except ScaleGuardExceeded:
        reports = None
    if reports:
        worst = max(reports, key=lambda r: r.d_to_null)
        d_method, d, gap = "exact", worst.d_to_null, worst.resolvability_gap
        gap_se = 0.0
    elif books is not None and cfg.gap_samples >= 2 and cfg.gap_samples * tuples * n <= GAP_COST_LIMIT:
        g = max((resolvability_gap(spec, j, books, method="mc", samples=cfg.gap_samples, seed=seed) for j in range(spec.J)),
                key=lambda r: r.gap)
        gap, gap_se = g.gap, g.std_error
    log_m = sched.log_M
    norm = log_m / math.sqrt(n * d) if d > 0 else np.full(spec.K, np.nan)
    row.update(
        status="ok",
        gamma=sched.gamma,
        M=list(sched.M),
        J=list(sched.J),
        log_M=log_m.tolist(),
        log_J=sched.log_J.tolist(),
        tau=list(sched.tau),
        sim_method=rep.method,
        p_user=rep.p_user.tolist(),
        ci_user=[list(c) for c in rep.ci_user],
        p_union=rep.p_union,
        ci_union=list(rep.ci_union),
        d=d,
        d_stderr=d_se,
        d_method=d_method,
        resolvability_gap=gap,
        gap_stderr=gap_se,
        normalized_rate=np.asarray(norm).tolist(),
        theory_rate=theory.tolist(),
        scheduled_theory=((1.0 - cfg.epsilon) * theory).tolist(),
    )
    return row


def _rows_parallel(fn, spec, cfg, keys):
    workers = resolve_workers(cfg.workers)
    if workers > 1 and len(keys) > 1:
        return run_chunks(fn, [(spec, cfg, key, 1) for key in keys], workers)
    return [fn(spec, cfg, key, workers) for key in keys]


def run_scaling_sweep(config: ExperimentConfig, spec: DmIcSpec | None = None) -> SweepResult:
    """One row per blocklength: schedule, simulated error rates, warden divergence, normalized rate."""
    spec = spec if spec is not None else load_spec(config.spec)
    if not isinstance(spec, DmIcSpec):
        raise TypeError("run_scaling_sweep needs a discrete channel spec")
    report = validate_assumptions(spec)
    if not report.ok:
        raise AssumptionViolation("channel violates the standing assumptions", report)
    if config.alpha is None:
        raise ValueError("sweep needs an allocation alpha")
    return SweepResult(config, _rows_parallel(_sweep_row, spec, config, config.n_grid), "dm")


# ---------------------------------------------------------------------------
# Gaussian


def gaussian_divergence(n: int, lam_p: float, sigma2: float) -> float:
    """n D(N(0, sigma2 + lam_p) || N(0, sigma2))."""
    r = lam_p / sigma2
    return n * 0.5 * (r - math.log1p(r))


def _tin_stat(book, y, g, s2):
    return (g * (book @ y)) / s2 - (g * g) * np.einsum("ij,ij->i", book, book) / (2.0 * s2)


def _gauss_threshold(m, n_k, snr_eff, eps):
    return 0.5 * (math.log(m) + (1.0 - 0.5 * eps) * n_k * snr_eff / 2.0)


def _gauss_books(M, lengths, powers, seed):
    books = []
    for k, (m, n_k, p) in enumerate(zip(M, lengths, powers)):
        if m * n_k > GAUSS_MATERIALIZE_LIMIT:
            raise ScaleGuardExceeded(f"Gaussian codebook {k} needs {m * n_k} reals", cost=m * n_k, limit=GAUSS_MATERIALIZE_LIMIT)
        books.append(derived_rng(seed, GAUSS_CODEBOOK, k).normal(0.0, math.sqrt(p), (m, n_k)) if m > 1 else np.zeros((1, n_k)))
    return books


def _gaussian_trials(spec: GaussianIcSpec, M, tau, books, s2_eff, tdma, trials, seed):
    K = spec.K
    sd = math.sqrt(spec.sigma2)
    errs = np.zeros((trials, K), dtype=bool)
    for t in range(trials):
        rng = derived_rng(seed, GAUSS_TRIAL, t)
        w = [int(rng.integers(m)) for m in M]
        for k in range(K):
            n_k = books[k].shape[1]
            y = rng.normal(0.0, sd, n_k) + spec.gains[k, k] * books[k][w[k]]
            if not tdma:
                for j in range(K):
                    if j != k:
                        y = y + spec.gains[k, j] * books[j][w[j]]
            if M[k] == 1:
                continue
            hits = np.flatnonzero(_tin_stat(books[k], y, spec.gains[k, k], s2_eff[k]) > tau[k])
            errs[t, k] = not (hits.size == 1 and hits[0] == w[k])
    return errs


def _gaussian_row(spec: GaussianIcSpec, cfg: ExperimentConfig, key, workers: int) -> dict:
    n, tdma = key
    K, s2 = spec.K, spec.sigma2
    seed = row_seed(cfg.seed, n, int(tdma))
    row = {"n": n, "variant": "tdma" if tdma else "split", "seed": seed, "config_hash": cfg.config_hash()}
    g_direct = np.diag(spec.gains)
    eps = cfg.epsilon
    if tdma:
        n_k = [n // K] * K
        lam = [float((spec.warden_gains[:, k] ** 2).max()) for k in range(K)]
        powers = [(2 * s2 / lam[k]) * math.sqrt((cfg.delta / K) / n_k[k]) for k in range(K)]
        d = max(sum(gaussian_divergence(n_k[k], spec.warden_gains[j, k] ** 2 * powers[k], s2) for k in range(K))
                for j in range(spec.J))
        theory = [float(g_direct[k] ** 2 / (K * lam[k])) for k in range(K)]
        inr = [0.0] * K
        s2_eff = [s2] * K
    else:
        alpha = np.asarray(cfg.alpha, dtype=np.float64)
        pt = region_point_gaussian(spec, alpha)
        P = (2 * s2 / pt.lam) * math.sqrt(cfg.delta / n)
        n_k = [n] * K
        powers = (alpha * P).tolist()
        d = max(gaussian_divergence(n, float(spec.warden_gains[j] ** 2 @ alpha) * P, s2) for j in range(spec.J))
        theory = pt.rates.tolist()
        interf = [sum(spec.gains[k, j] ** 2 * powers[j] for j in range(K) if j != k) for k in range(K)]
        inr = [float(i / s2) for i in interf]
        s2_eff = [s2 + float(i) for i in interf]
    over = [k for k in range(K) if powers[k] > spec.power_cap]
    if over:
        row.update(status="power_cap", error=str(PowerCapExceeded(f"users {over} exceed the power cap {spec.power_cap}")))
        return row
    log_m = [(1 - eps) * n_k[k] * g_direct[k] ** 2 * powers[k] / (2 * s2) for k in range(K)]
    M = [max(1, int(math.floor(math.exp(x)))) if x < 700 else None for x in log_m]
    tau = [
        _gauss_threshold(M[k], n_k[k], g_direct[k] ** 2 * powers[k] / s2_eff[k], eps) if M[k] and M[k] > 1 else float("-inf")
        for k in range(K)
    ]
    row.update(
        status="ok",
        power=powers,
        M=M,
        log_M=[math.log(m) if m else x for m, x in zip(M, log_m)],
        tau=tau,
        d=d,
        d_method="closed_form_iid",
        inr=inr,
        normalized_rate=[(math.log(m) if m else x) / math.sqrt(n * d) for m, x in zip(M, log_m)],
        theory_rate=theory,
        scheduled_theory=[(1 - eps) * r for r in theory],
    )
    if all(m == 1 for m in M):
        row["sim"] = "skipped: no active user"
        return row
    if any(m is None for m in M):
        row["sim"] = "skipped: codebook too large"
        return row
    try:
        books = _gauss_books(M, n_k, powers, seed)
    except ScaleGuardExceeded as exc:
        row["sim"] = f"skipped: {exc}"
        return row
    errs = _gaussian_trials(spec, M, tau, books, s2_eff, tdma, cfg.trials, seed)
    union = int(errs.any(axis=1).sum())
    row.update(
        sim="codebook",
        p_user=(errs.sum(axis=0) / cfg.trials).tolist(),
        ci_user=[list(wilson_interval(int(e), cfg.trials)) for e in errs.sum(axis=0)],
        p_union=union / cfg.trials,
        ci_union=list(wilson_interval(union, cfg.trials)),
    )
    return row


def run_gaussian_sim(config: ExperimentConfig, spec: GaussianIcSpec | None = None) -> SweepResult:
    """Per blocklength: covert power from the budget, Gaussian codebooks, TIN decoding.

    Rows for the allocation ``alpha`` (variant "split") and, when ``tdma`` is set,
    for time division where user k sends alone on n/K symbols with budget delta/K.
    """
    spec = spec if spec is not None else load_spec(config.spec)
    if not isinstance(spec, GaussianIcSpec):
        raise TypeError("run_gaussian_sim needs a Gaussian channel spec")
    keys = []
    for n in config.n_grid:
        if config.alpha is not None:
            keys.append((n, False))
        if config.tdma:
            keys.append((n, True))
    if not keys:
        raise ValueError("give an allocation alpha or enable tdma")
    return SweepResult(config, _rows_parallel(_gaussian_row, spec, config, keys), "gaussian")
