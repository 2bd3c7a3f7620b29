"""Command-line entry point: ``covert-ic <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channel import DmIcSpec, GaussianIcSpec, load_spec, validate_assumptions
from .codec import Schedule, generate_codebooks, make_schedule, simulate_error_rate
from .errors import AssumptionViolation, CovertICError
from .harness import ExperimentConfig, rows_to_csv, run_gaussian_sim, run_scaling_sweep, _json_default
from .region import pareto_frontier, region_point, region_point_gaussian
from .warden import detect

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ASSUMPTION = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _matrix(text: str) -> list[list[float]]:
    """Rows separated by ';', entries by ','."""
    return [_floats(r) for r in text.split(";") if r.strip()]


def _ints(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _load(path) -> DmIcSpec | GaussianIcSpec:
    try:
        return load_spec(path)
    except FileNotFoundError as exc:
        raise UsageError(f"no such spec file: {path}") from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed spec file {path}: {exc}") from exc


def _require_dm(spec, cmd):
    if not isinstance(spec, DmIcSpec):
        raise UsageError(f"{cmd} needs a discrete channel spec")
    return spec


def _check(spec: DmIcSpec) -> None:
    report = validate_assumptions(spec)
    if not report.ok:
        raise AssumptionViolation("channel violates the standing assumptions", report)


def _emit(args, payload, rows=None) -> None:
    if args.format == "csv":
        text = rows_to_csv(rows if rows is not None else [payload])
    else:
        text = json.dumps(payload, indent=1, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_schedule(path) -> Schedule:
    try:
        return Schedule.from_json(Path(path).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"no such schedule file: {path}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    spec = _require_dm(_load(args.spec), "validate")
    report = validate_assumptions(spec)
    _emit(args, report.to_dict())
    return EXIT_OK if report.ok else EXIT_ASSUMPTION


def cmd_region(args) -> int:
    spec = _load(args.spec)
    if isinstance(spec, GaussianIcSpec):
        point = region_point_gaussian(spec, args.alpha)
    else:
        point = region_point(spec, args.alpha, args.beta)
    _emit(args, point.to_dict())
    return EXIT_OK


def cmd_frontier(args) -> int:
    spec = _require_dm(_load(args.spec), "frontier")
    _check(spec)
    res = pareto_frontier(spec, args.weights, resolution=args.grid, beta=args.beta)
    out = res.to_dict()
    if not args.trace:
        out.pop("trace")
    _emit(args, out)
    return EXIT_OK


def cmd_schedule(args) -> int:
    spec = _require_dm(_load(args.spec), "schedule")
    sched = make_schedule(
        spec, args.alpha, args.n, args.epsilon, args.delta, beta=args.beta, epsilon_key=args.epsilon_key, seed=args.seed
    )
    _emit(args, sched.to_dict())
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _require_dm(_load(args.spec), "simulate")
    sched = _load_schedule(args.schedule)
    seed = args.seed if args.seed is not None else (sched.seed or 0)
    books = generate_codebooks(spec, sched, seed) if args.method != "ensemble" else None
    rep = simulate_error_rate(spec, books, args.trials, seed, schedule=sched, workers=args.workers, method=args.method)
    out = rep.to_dict()
    out["seed"] = seed
    _emit(args, out)
    return EXIT_OK


def cmd_detect(args) -> int:
    spec = _require_dm(_load(args.spec), "detect")
    sched = _load_schedule(args.schedule)
    seed = args.seed if args.seed is not None else (sched.seed or 0)
    books = generate_codebooks(spec, sched, seed)
    reports = detect(spec, books, exact=True if args.exact else None, samples=args.samples, seed=seed, workers=args.workers)
    rows = [r.to_dict() for r in reports]
    _emit(args, {"seed": seed, "wardens": rows}, rows)
    return EXIT_OK


def _run_config(cfg: ExperimentConfig, args) -> int:
    spec = _load(cfg.spec)
    if isinstance(spec, GaussianIcSpec):
        res = run_gaussian_sim(cfg, spec)
    else:
        res = run_scaling_sweep(cfg, spec)
    _emit(args, res.to_dict(), res.rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"no such config file: {args.config}") from exc
    if raw.get("spec") and not Path(raw["spec"]).is_absolute():
        raw["spec"] = str(Path(args.config).parent / raw["spec"])
    for key in ("seed", "workers"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    cfg = ExperimentConfig.from_dict(raw)
    return _run_config(cfg, args)


def cmd_gaussian(args) -> int:
    cfg = ExperimentConfig(
        spec=args.spec,
        mode="gaussian",
        alpha=args.alpha,
        n_grid=args.n_grid,
        delta=args.delta,
        epsilon=args.epsilon,
        trials=args.trials,
        seed=args.seed or 0,
        tdma=args.tdma,
        workers=args.workers,
    )
    return _run_config(cfg, args)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: $COVERT_IC_WORKERS or 1)")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="covert-ic", description="Covert communication over interference channels.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check absolute continuity and the hull condition")
    s.add_argument("spec")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("region", parents=[common], help="rates and key lengths at one allocation")
    s.add_argument("spec")
    s.add_argument("--alpha", type=_floats, required=True)
    s.add_argument("--beta", type=_matrix, default=None, help="per-user symbol weights, rows split by ';'")
    s.set_defaults(func=cmd_region)

    s = sub.add_parser("frontier", parents=[common], help="maximize a weighted sum rate")
    s.add_argument("spec")
    s.add_argument("--weights", type=_floats, required=True)
    s.add_argument("--grid", type=int, default=50)
    s.add_argument("--beta", type=_matrix, default=None)
    s.add_argument("--trace", action="store_true", help="include the refinement trace")
    s.set_defaults(func=cmd_frontier)

    s = sub.add_parser("schedule", parents=[common], help="codebook sizes and thresholds for one blocklength")
    s.add_argument("spec")
    s.add_argument("--alpha", type=_floats, required=True)
    s.add_argument("--beta", type=_matrix, default=None)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--epsilon-key", type=float, default=None)
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo decoding error rates")
    s.add_argument("spec")
    s.add_argument("--schedule", required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--method", choices=("codebook", "ensemble"), default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("detect", parents=[common], help="the warden's divergence and optimal test")
    s.add_argument("spec")
    s.add_argument("--schedule", required=True)
    s.add_argument("--exact", action="store_true", help="require exhaustive enumeration")
    s.add_argument("--samples", type=int, default=4096)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("sweep", parents=[common], help="run an experiment config over a blocklength grid")
    s.add_argument("config")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("gaussian", parents=[common], help="Gaussian interference channel experiment")
    s.add_argument("spec")
    s.add_argument("--alpha", type=_floats, default=None)
    s.add_argument("--n-grid", type=_ints, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--tdma", action="store_true", help="add time-division rows")
    s.set_defaults(func=cmd_gaussian)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolation as exc:
        payload = exc.report.to_dict() if exc.report is not None else {"error": str(exc)}
        sys.stdout.write(json.dumps(payload, indent=1, default=_json_default) + "\n")
        print(f"covert-ic: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (UsageError, ValueError, TypeError) as exc:
        print(f"covert-ic: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CovertICError as exc:
        print(f"covert-ic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
