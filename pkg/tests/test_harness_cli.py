import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from covert_ic.channel import GaussianIcSpec, save_spec
from covert_ic.cli import main
from covert_ic.codec import make_schedule
from covert_ic.corpus import hull_violating_spec, symmetric_test_spec
from covert_ic.harness import (
    ExperimentConfig,
    gaussian_divergence,
    row_seed,
    rows_to_csv,
    run_gaussian_sim,
    run_scaling_sweep,
)


def sweep_cfg(**kw):
    base = dict(mode="sweep", alpha=[0.5, 0.5], n_grid=[400, 2000], delta=0.5, epsilon=0.3, trials=40, seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


def strip(rows):
    return [{k: v for k, v in r.items() if k != "config_hash"} for r in rows]


# ---------------------------------------------------------------------------
# config and sweeps


def test_config_validation():
    with pytest.raises(ValueError):
        sweep_cfg(n_grid=[100, 100])
    with pytest.raises(ValueError):
        sweep_cfg(trials=0)
    with pytest.raises(ValueError):
        sweep_cfg(mode="nope")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"mode": "sweep", "bogus": 1})
    a, b = sweep_cfg(), sweep_cfg(workers=4, out="x.json", format="csv")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != sweep_cfg(seed=8).config_hash()


def test_row_seeds_are_distinct_and_stable():
    seeds = {row_seed(1, n, v) for n in (10, 100, 1000) for v in (0, 1)}
    assert len(seeds) == 6
    assert row_seed(1, 100) == row_seed(1, 100)
    assert 0 <= row_seed(2**64 - 1, 5) < 2**63


def test_sweep_rows(sym):
    res = run_scaling_sweep(sweep_cfg(), sym)
    assert [r["n"] for r in res.rows] == [400, 2000]
    for r in res.rows:
        assert r["status"] == "ok"
        assert r["sim_method"] in ("codebook", "ensemble")
        assert r["d_method"] in ("exact", "proxy")
        assert len(r["normalized_rate"]) == 2
        assert r["scheduled_theory"] == pytest.approx([0.7 * t for t in r["theory_rate"]])
    d = json.loads(res.to_json())
    assert d["kind"] == "dm" and d["config_hash"] == res.config.config_hash()


def test_sweep_rows_do_not_depend_on_neighbours(sym):
    alone = run_scaling_sweep(sweep_cfg(n_grid=[2000]), sym).rows
    both = run_scaling_sweep(sweep_cfg(n_grid=[400, 2000]), sym).rows
    assert strip(alone) == strip(both[1:])


def test_sweep_worker_independent(sym):
    one = run_scaling_sweep(sweep_cfg(workers=1), sym).rows
    two = run_scaling_sweep(sweep_cfg(workers=2), sym).rows
    assert one == two


def test_sweep_infeasible_row_and_exact_small_case(sym):
    rows = run_scaling_sweep(sweep_cfg(n_grid=[3, 2000], delta=0.01, trials=5), sym).rows
    assert rows[0]["status"] == "infeasible" and "error" in rows[0]
    tiny = run_scaling_sweep(sweep_cfg(n_grid=[12], delta=2.0, epsilon=0.5, trials=5), sym).rows[0]
    assert tiny["status"] == "ok" and tiny["d_method"] == "exact" and tiny["gap_stderr"] == 0.0


def test_sweep_rejects_bad_specs():
    with pytest.raises(Exception) as exc:
        run_scaling_sweep(sweep_cfg(), hull_violating_spec())
    assert type(exc.value).__name__ == "AssumptionViolation"
    with pytest.raises(ValueError):
        run_scaling_sweep(sweep_cfg(alpha=None), symmetric_test_spec())
    with pytest.raises(TypeError):
        run_scaling_sweep(sweep_cfg(), GaussianIcSpec(np.eye(2), [1.0, 1.0], 1.0, 1.0))


def test_csv_full_precision():
    rows = [{"n": 10, "x": 1 / 3, "v": [0.1, 2 / 7], "ci": [[0.1, 0.2], [0.3, 0.4]], "none": None}]
    text = rows_to_csv(rows)
    rec = next(csv.DictReader(io.StringIO(text)))
    assert float(rec["x"]) == 1 / 3 and float(rec["v_1"]) == 2 / 7
    assert rec["ci_1_0"] == "0.29999999999999999" and rec["none"] == ""
    assert "v_0" in rec and "ci_0_1" in rec


# ---------------------------------------------------------------------------
# Gaussian


def gauss_cfg(**kw):
    base = dict(mode="gaussian", alpha=[0.5, 0.5], n_grid=[200, 400, 800], delta=0.5, epsilon=0.2, trials=30, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_gaussian_divergence():
    assert gaussian_divergence(10, 0.5, 1.0) == pytest.approx(10 * 0.5 * (0.5 - math.log(1.5)))


def test_gaussian_rows_inr_decreases():
    spec = GaussianIcSpec([[1.0, 0.3], [0.3, 1.0]], [1.0, 1.0], 1.0, 1.0)
    rows = run_gaussian_sim(gauss_cfg(), spec).rows
    inr = [r["inr"][0] for r in rows]
    assert all(b < a for a, b in zip(inr, inr[1:]))
    for r in rows:
        assert r["status"] == "ok" and r["sim"] == "codebook" and r["d_method"] == "closed_form_iid"
        assert r["d"] <= 0.5
        assert 0.0 <= r["p_union"] <= 1.0


def test_gaussian_zero_direct_gain():
    spec = GaussianIcSpec([[0.0, 0.3], [0.3, 1.0]], [1.0, 1.0], 1.0, 1.0)
    row = run_gaussian_sim(gauss_cfg(n_grid=[400]), spec).rows[0]
    assert row["M"][0] == 1 and row["normalized_rate"][0] == 0.0 and row["theory_rate"][0] == 0.0
    assert row["p_user"][0] == 0.0


def test_gaussian_power_cap_and_tdma():
    spec = GaussianIcSpec(np.eye(2), [0.1, 0.1], 1.0, 1.0)
    rows = run_gaussian_sim(gauss_cfg(n_grid=[10], tdma=True), spec).rows
    assert {r["variant"] for r in rows} == {"split", "tdma"}
    assert all(r["status"] == "power_cap" for r in rows)
    with pytest.raises(ValueError):
        run_gaussian_sim(gauss_cfg(alpha=None, tdma=False), spec)


# ---------------------------------------------------------------------------
# CLI


def run_cli(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_validate(capsys, data_dir):
    code, out, _ = run_cli(["validate", data_dir / "symmetric.json"], capsys)
    assert code == 0 and json.loads(out)["ok"] is True
    code, out, _ = run_cli(["validate", data_dir / "hull_violating.json"], capsys)
    assert code == 3 and json.loads(out)["null_not_in_hull"]["ok"] is False


def test_cli_region(capsys, data_dir):
    code, out, _ = run_cli(["region", data_dir / "symmetric.json", "--alpha", "0.5,0.5"], capsys)
    d = json.loads(out)
    assert code == 0 and d["rates"] == [0.5303300858899107, 0.5303300858899107]
    assert d["key_lengths"] == [0.0, 0.0] and d["chi2"] == 0.44444444444444436
    code, out, _ = run_cli(["region", data_dir / "gaussian.json", "--alpha", "0.5,0.5"], capsys)
    d = json.loads(out)
    assert d["lambda"] == 5.0 and d["rates"] == pytest.approx([0.1, 0.4], abs=1e-15)
    code, out, _ = run_cli(["region", data_dir / "hull_violating.json", "--alpha", "0.5,0.5"], capsys)
    assert code == 3 and json.loads(out)["ok"] is False


def test_cli_frontier(capsys, data_dir):
    code, out, _ = run_cli(["frontier", data_dir / "asymmetric.json", "--weights", "1,0", "--grid", "10"], capsys)
    d = json.loads(out)
    assert code == 0 and d["alpha"] == [1.0, 0.0] and "trace" not in d
    code, out, _ = run_cli(["frontier", data_dir / "ternary.json", "--weights", "1,1", "--grid", "6", "--trace"],
                           capsys)
    d = json.loads(out)
    assert code == 0 and "beta" in d and d["trace"]


def test_cli_schedule_simulate_detect(capsys, data_dir, tmp_path):
    spec = data_dir / "symmetric.json"
    sched = tmp_path / "s.json"
    code, _, _ = run_cli(["schedule", spec, "--alpha", "0.5,0.5", "--n", "150", "--delta", "0.5",
                          "--epsilon", "0.3", "--seed", "4", "--out", sched], capsys)
    assert code == 0
    d = json.loads(sched.read_text())
    assert d == make_schedule(symmetric_test_spec(), [0.5, 0.5], 150, 0.3, 0.5, seed=4).to_dict()
    code, out, _ = run_cli(["simulate", spec, "--schedule", sched, "--trials", "30"], capsys)
    r = json.loads(out)
    assert code == 0 and r["seed"] == 4 and r["trials"] == 30 and r["method"] == "codebook"
    code, out2, _ = run_cli(["simulate", spec, "--schedule", sched, "--trials", "30", "--workers", "2"], capsys)
    assert json.loads(out2) == r
    code, out, _ = run_cli(["simulate", spec, "--schedule", sched, "--trials", "30", "--method", "ensemble"], capsys)
    assert json.loads(out)["method"] == "ensemble"
    code, out, _ = run_cli(["detect", spec, "--schedule", sched, "--samples", "256"], capsys)
    w = json.loads(out)["wardens"]
    assert code == 0 and w[0]["method"] == "monte_carlo" and w[0]["samples"] == 256
    code, _, err = run_cli(["detect", spec, "--schedule", sched, "--exact"], capsys)
    assert code == 1 and "ScaleGuardExceeded" in err


def test_cli_detect_exact_small(capsys, data_dir, tmp_path):
    sched = tmp_path / "s.json"
    run_cli(["schedule", data_dir / "symmetric.json", "--alpha", "0.5,0.5", "--n", "12", "--delta", "2",
             "--epsilon", "0.5", "--out", sched], capsys)
    code, out, _ = run_cli(["detect", data_dir / "symmetric.json", "--schedule", sched, "--exact", "--format", "csv"],
                           capsys)
    rec = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rec["method"] == "exact" and float(rec["identity_residual"]) < 1e-12


def test_cli_errors(capsys, data_dir, tmp_path):
    code, _, err = run_cli(["validate", tmp_path / "missing.json"], capsys)
    assert code == 2 and "no such spec" in err
    code, _, err = run_cli(["schedule", data_dir / "symmetric.json", "--alpha", "0.5,0.5", "--n", "3",
                            "--delta", "0.01", "--epsilon", "0.1"], capsys)
    assert code == 1 and "InfeasibleSchedule" in err
    code, _, _ = run_cli(["region", data_dir / "symmetric.json", "--alpha", "0.7,0.7"], capsys)
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["region", str(data_dir / "symmetric.json"), "--alpha", "a,b"])
    assert exc.value.code == 2
    code, _, err = run_cli(["simulate", data_dir / "gaussian.json", "--schedule", "x", "--trials", "1"], capsys)
    assert code == 2 and "discrete" in err


def test_cli_sweep_config_and_csv(capsys, tmp_path, monkeypatch):
    save_spec(symmetric_test_spec(), tmp_path / "spec.json")
    cfg = {"spec": "spec.json", "mode": "sweep", "alpha": [0.5, 0.5], "n_grid": [400, 2000], "delta": 0.5,
           "epsilon": 0.3, "trials": 20, "seed": 2}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code, out, _ = run_cli(["sweep", tmp_path / "cfg.json"], capsys)
    d = json.loads(out)
    assert code == 0 and len(d["rows"]) == 2
    monkeypatch.setenv("COVERT_IC_WORKERS", "2")
    code, out2, _ = run_cli(["sweep", tmp_path / "cfg.json"], capsys)
    assert json.loads(out2)["rows"] == d["rows"]
    code, _, _ = run_cli(["sweep", tmp_path / "cfg.json", "--format", "csv", "--out", tmp_path / "o.csv"], capsys)
    recs = list(csv.DictReader(io.StringIO((tmp_path / "o.csv").read_text())))
    assert [int(r["n"]) for r in recs] == [400, 2000]
    assert float(recs[0]["normalized_rate_0"]) == d["rows"][0]["normalized_rate"][0]
    (tmp_path / "bad.json").write_text(json.dumps({**cfg, "extra": 1}))
    assert run_cli(["sweep", tmp_path / "bad.json"], capsys)[0] == 2


def test_cli_gaussian(capsys, data_dir):
    code, out, _ = run_cli(["gaussian", data_dir / "gaussian_symmetric.json", "--alpha", "0.5,0.5",
                            "--n-grid", "200,400", "--delta", "0.5", "--trials", "20", "--tdma"], capsys)
    d = json.loads(out)
    assert code == 0 and d["kind"] == "gaussian" and len(d["rows"]) == 4


def test_module_entry_point(data_dir):
    res = subprocess.run([sys.executable, "-m", "covert_ic", "validate", str(data_dir / "asymmetric.json")],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and json.loads(res.stdout)["ok"] is True
