"""Covert capacity region points, key-length bounds and scalarized frontier search.

Rates and key lengths are in the normalized unit log M / sqrt(n D) (nats);
:func:`to_per_use` converts to nats per channel use for a budget and blocklength.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    DmIcSpec,
    GaussianIcSpec,
    InputWeight,
    chi2_alpha,
    gaussian_lambda,
    rx_null,
    validate_assumptions,
    warden_null,
)
from .errors import AssumptionViolation, DegenerateChiSquared, NoFeasibleAllocation, SimplexViolation
from .prob import as_simplex, kl_divergence

#: chi^2 (or lambda) at or below this is treated as zero.
DEGENERATE_TOL = 1e-13


@dataclass
class RegionPoint:
    alpha: np.ndarray
    rates: np.ndarray
    key_lengths: np.ndarray | None
    chi2: float | None = None
    lam: float | None = None
    beta: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {"alpha": self.alpha.tolist()}
        if self.beta is not None:
            d["beta"] = self.beta.tolist()
        d["rates"] = self.rates.tolist()
        d["key_lengths"] = None if self.key_lengths is None else self.key_lengths.tolist()
        if self.chi2 is not None:
            d["chi2"] = self.chi2
        if self.lam is not None:
            d["lambda"] = self.lam
        return d


def to_per_use(rate, delta: float, n: int):
    """Convert a normalized rate to nats per channel use at budget delta and blocklength n."""
    return rate * math.sqrt(delta / n)


def _default_beta(spec: DmIcSpec) -> np.ndarray:
    return InputWeight.make(np.full(spec.K, 1.0 / spec.K), 0.0, input_sizes=spec.input_sizes).beta


def _check_beta(spec: DmIcSpec, beta) -> np.ndarray:
    if beta is None:
        return _default_beta(spec)
    beta = np.asarray(beta, dtype=np.float64)
    # reuse InputWeight validation for shape/simplex checks
    w = InputWeight(np.full(spec.K, 1.0 / spec.K), beta, 0.0)
    for k, s in enumerate(spec.input_sizes):
        if np.any(w.beta[k, s - 1 :] > 0):
            raise SimplexViolation(f"beta row {k} puts mass beyond user {k}'s {s - 1} symbols")
    return w.beta


class _Divergences:
    """Per-symbol divergences and chi^2 Gram matrices, computed once per spec."""

    def __init__(self, spec: DmIcSpec):
        self.spec = spec
        K, m = spec.K, spec.max_symbols
        self.dw = np.zeros((K, m))  # D(W_{k,i}^{(k)} || W_0^{(k)})
        self.dq = np.zeros((spec.J, K, m))  # D(Q_{k,i}^{(j)} || Q_0^{(j)})
        self.mask = np.zeros((K, m), dtype=bool)
        for k, s in enumerate(spec.input_sizes):
            w0 = rx_null(spec, k)
            for i in range(1, s):
                x = spec.single_user_tuple(k, i)
                self.mask[k, i - 1] = True
                self.dw[k, i - 1] = kl_divergence(spec.rx_channels[k][x], w0)
                for j in range(spec.J):
                    self.dq[j, k, i - 1] = kl_divergence(spec.warden_channels[j][x], warden_null(spec, j))
        # chi^2_j(v) = v' G_j v for mixture weights v summing to one
        self.gram = []
        for j in range(spec.J):
            q0 = warden_null(spec, j)
            keep = q0 > 0
            rows = []
            for k, s in enumerate(spec.input_sizes):
                for i in range(1, m + 1):
                    if i < s:
                        d = spec.warden_channels[j][spec.single_user_tuple(k, i)] - q0
                        rows.append(d[keep] / np.sqrt(q0[keep]))
                    else:
                        rows.append(np.zeros(int(keep.sum())))
            a = np.vstack(rows)
            self.gram.append(a @ a.T)

    def chi2(self, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """chi^2_max for one allocation or a stack of allocations (..., K)."""
        v = (alpha[..., :, None] * beta).reshape(alpha.shape[:-1] + (-1,))
        vals = [np.einsum("...a,ab,...b->...", v, g, v) for g in self.gram]
        return np.max(np.stack(vals), axis=0)

    def numerators(self, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rate = (beta * self.dw).sum(axis=1)
        key = (beta[None] * self.dq).sum(axis=2).max(axis=0)
        return rate, key


def _region_from(div: _Divergences, alpha, beta, chi2, binary):
    if not chi2 > DEGENERATE_TOL:
        raise DegenerateChiSquared(f"chi^2(alpha) = {chi2:.3g} at alpha = {alpha.tolist()}")
    num, key_num = div.numerators(beta)
    denom = math.sqrt(chi2 / 2.0)
    rates = alpha * num / denom
    keys = alpha * np.clip(key_num - num, 0.0, None) / denom
    return RegionPoint(alpha.copy(), rates, keys, chi2=float(chi2), beta=None if binary else beta.copy())


def region_point(spec: DmIcSpec, alpha, beta=None, *, validate: bool = True) -> RegionPoint:
    """Rate and key-length bounds at one allocation.

    Binary single-warden inputs give R_k = alpha_k D(W_k||W_0) / sqrt(chi^2/2).
    Non-binary inputs weight the per-symbol divergences by ``beta`` and several
    wardens use chi^2_max and the largest warden divergence in the key bound.
    """
    alpha = as_simplex(alpha, size=spec.K)
    beta = _check_beta(spec, beta)
    if validate:
        report = validate_assumptions(spec)
        if not report.ok:
            raise AssumptionViolation("channel violates the standing assumptions", report)
    div = _Divergences(spec)
    chi2 = max(chi2_alpha(spec, j, alpha, beta) for j in range(spec.J))
    return _region_from(div, alpha, beta, chi2, spec.is_binary)


def region_point_gaussian(spec: GaussianIcSpec, alpha) -> RegionPoint:
    """R_k = alpha_k g_kk^2 / lambda(alpha); key lengths are not part of the Gaussian result."""
    alpha = as_simplex(alpha, size=spec.K)
    lam = gaussian_lambda(spec, alpha)
    if not lam > DEGENERATE_TOL:
        raise DegenerateChiSquared(f"lambda(alpha) = {lam:.3g}: no active warden gain")
    rates = alpha * np.diag(spec.gains) ** 2 / lam
    return RegionPoint(alpha.copy(), rates, None, lam=lam)


def simplex_grid(K: int, resolution: int) -> np.ndarray:
    """All points of the K-simplex with coordinates in multiples of 1/resolution."""
    pts = []
    for bars in itertools.combinations(range(resolution + K - 1), K - 1):
        edges = (-1,) + bars + (resolution + K - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(K)])
    return np.asarray(pts, dtype=np.float64) / resolution


@dataclass
class FrontierResult:
    alpha: np.ndarray
    point: RegionPoint
    objective: float
    grid_best: float
    trace: list = field(default_factory=list)
    beta: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = self.point.to_dict()
        d["objective"] = self.objective
        d["grid_best"] = self.grid_best
        d["trace"] = self.trace
        return d


def _grid_objective(div, grid, beta, u):
    chi2 = div.chi2(grid, beta)
    num, _ = div.numerators(beta)
    ok = chi2 > DEGENERATE_TOL
    rates = np.zeros_like(grid)
    rates[ok] = grid[ok] * num / np.sqrt(chi2[ok, None] / 2.0)
    obj = np.where(ok, rates @ u, -np.inf)
    return obj, rates


def _pick_best(grid, obj):
    """Best grid point; exact ties go to the point nearest the simplex barycenter."""
    best = obj.max()
    ties = np.flatnonzero(obj >= best - 1e-12 * max(1.0, abs(best)))
    centre = np.full(grid.shape[1], 1.0 / grid.shape[1])
    i = ties[np.argmin(np.linalg.norm(grid[ties] - centre, axis=1))]
    return int(i), float(obj[i])


def _refine(f, x, fx, step, iterations, shrink, tol, trace, label):
    """Projected pairwise coordinate moves on a simplex; ``f`` returns -inf when infeasible."""
    d = x.size
    for it in range(iterations):
        if step < 1e-12:
            break
        improved = False
        for i, j in itertools.permutations(range(d), 2):
            h = min(step, x[j])
            if h <= 0:
                continue
            y = x.copy()
            y[i] += h
            y[j] -= h
            fy = f(y)
            if fy > fx + tol * max(1.0, abs(fx)):
                x, fx, improved = y, fy, True
        trace.append({"stage": label, "iteration": it, "step": step, "point": x.tolist(), "objective": fx})
        if not improved:
            step *= shrink
    return x, fx


def pareto_frontier(
    spec: DmIcSpec,
    weights,
    *,
    resolution: int = 50,
    iterations: int = 200,
    shrink: float = 0.5,
    tol: float = 1e-10,
    beta=None,
    optimize_beta: bool = True,
    max_rounds: int = 20,
) -> FrontierResult:
    """Maximize sum_k u_k R_k over the allocation simplex (and beta for non-binary inputs).

    Coarse grid search followed by coordinate-descent refinement. Non-binary
    inputs alternate between alpha and each row of beta. The result is the best
    point found; no global-optimality claim is made.
    """
    u = np.asarray(weights, dtype=np.float64)
    if u.shape != (spec.K,) or np.any(u < 0) or not np.any(u > 0):
        raise ValueError(f"weights must be {spec.K} nonnegative values, not all zero")
    report = validate_assumptions(spec)
    if not report.ok:
        raise AssumptionViolation("channel violates the standing assumptions", report)
    div = _Divergences(spec)
    beta = _check_beta(spec, beta)
    grid = simplex_grid(spec.K, resolution)
    trace: list = []

    def f_alpha(a, b):
        return float(_grid_objective(div, a[None], b, u)[0][0])

    obj, grid_rates = _grid_objective(div, grid, beta, u)
    if not np.isfinite(obj).any():
        raise NoFeasibleAllocation("chi^2 vanishes at every grid allocation")
    i, grid_best = _pick_best(grid, obj)
    trace.append({"stage": "grid", "points": int(grid.shape[0]), "point": grid[i].tolist(), "objective": grid_best})
    alpha, fx = _refine(lambda a: f_alpha(a, beta), grid[i].copy(), grid_best, 1.0 / resolution,
                        iterations, shrink, tol, trace, "alpha")

    if optimize_beta and not spec.is_binary:
        for rnd in range(max_rounds):
            start = fx
            for k, s in enumerate(spec.input_sizes):
                if s <= 2:
                    continue

                def f_row(row, k=k):
                    b = beta.copy()
                    b[k, : row.size] = row
                    return f_alpha(alpha, b)

                sub = simplex_grid(s - 1, resolution)
                vals = np.array([f_row(r) for r in sub])
                r_i, r_best = _pick_best(sub, vals)
                row, _ = _refine(f_row, sub[r_i].copy(), r_best, 1.0 / resolution,
                                 iterations, shrink, tol, trace, f"beta[{k}]")
                beta = beta.copy()
                beta[k, : row.size] = row
            alpha, fx = _refine(lambda a: f_alpha(a, beta), alpha, f_alpha(alpha, beta), 1.0 / resolution,
                                iterations, shrink, tol, trace, "alpha")
            trace.append({"stage": "round", "iteration": rnd, "objective": fx})
            if fx <= start + tol * max(1.0, abs(start)):
                break
        obj, grid_rates = _grid_objective(div, grid, beta, u)

    point = _region_from(div, alpha, beta, float(div.chi2(alpha, beta)), spec.is_binary)
    # never hand back a point that an evaluated grid point dominates
    while True:
        r = point.rates
        dom = np.all(grid_rates >= r - 1e-12, axis=1) & np.any(grid_rates > r + 1e-12, axis=1) & np.isfinite(obj)
        if not dom.any():
            break
        cand = np.flatnonzero(dom)
        g = cand[np.argmax(grid_rates[cand].sum(axis=1))]
        alpha = grid[g].copy()
        point = _region_from(div, alpha, beta, float(div.chi2(alpha, beta)), spec.is_binary)
        trace.append({"stage": "dominance", "point": alpha.tolist()})
    return FrontierResult(alpha, point, float(point.rates @ u), grid_best, trace,
                          None if spec.is_binary else beta)


@dataclass
class RegionTrace:
    alphas: np.ndarray
    rates: np.ndarray
    hull_vertices: list | None


def trace_region(spec: DmIcSpec, resolution: int = 50, beta=None) -> RegionTrace:
    """Boundary points of the alpha-parameterized family and, separately, their convex hull.

    The hull is taken over the family plus the origin; ``hull_vertices`` indexes
    family points and is ``None`` when the point cloud is degenerate.
    """
    from scipy.spatial import ConvexHull, QhullError

    div = _Divergences(spec)
    beta = _check_beta(spec, beta)
    grid = simplex_grid(spec.K, resolution)
    obj, rates = _grid_objective(div, grid, beta, np.ones(spec.K))
    ok = np.isfinite(obj)
    grid, rates = grid[ok], rates[ok]
    try:
        hull = ConvexHull(np.vstack([rates, np.zeros(spec.K)]))
        verts = sorted(int(v) for v in hull.vertices if v < len(rates))
    except (QhullError, ValueError):
        verts = None
    return RegionTrace(grid, rates, verts)


def symmetric_warden_check(spec: DmIcSpec, samples: int = 10, seed: int = 0) -> bool:
    """True iff every warden sees identical single-user distributions Q_k^{(j)}.

    In that case chi^2 is constant in alpha, which is confirmed at random allocations.
    """
    if not spec.is_binary:
        raise ValueError("symmetric_warden_check is defined for binary inputs")
    for j in range(spec.J):
        qs = np.vstack([spec.warden_channels[j][spec.single_user_tuple(k)] for k in range(spec.K)])
        if np.max(np.abs(qs - qs[0])) > 1e-12:
            return False
    rng = np.random.default_rng(seed)
    vals = [max(chi2_alpha(spec, j, a) for j in range(spec.J)) for a in rng.dirichlet(np.ones(spec.K), samples)]
    if max(vals) - min(vals) >= 1e-12:
        raise RuntimeError(f"symmetric wardens but chi^2 varies by {max(vals) - min(vals):.3g}")
    return True
