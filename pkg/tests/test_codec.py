import itertools
import json
import math
from decimal import ROUND_CEILING, ROUND_FLOOR

import mpmath
import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

import oracles as O
from covert_ic.channel import DmIcSpec, InputWeight, chi2_max, effective_channel
from covert_ic.codec import (
    Schedule,
    _exp_int,
    bare_schedule,
    competitor_tail,
    decoder_llr,
    effective_divergence,
    generate_codebooks,
    inflate_schedule,
    make_schedule,
    simulate_error_rate,
    tin_decode,
    wilson_interval,
)
from covert_ic.errors import AssumptionViolation, InfeasibleSchedule, NumericalUnderflow
from covert_ic.prob import kl_divergence
from covert_ic.region import region_point


def test_schedule_frozen_values(sym):
    s = make_schedule(sym, [0.5, 0.5], 10**5, 0.1, 0.01, seed=1)
    assert s.gamma == pytest.approx(6.70820393249937e-4, rel=1e-14)
    assert s.M == (3589268, 3589268) and s.J == (1, 1)
    assert s.tau[0] == pytest.approx(15.512568981373729, rel=1e-13)
    assert s.log_M[0] == pytest.approx(15.09345884, abs=1e-8)
    s2 = make_schedule(sym, [0.5, 0.5], 10**5, 0.2, 0.01, seed=1)
    assert s2.M == (670921, 670921)
    assert s2.tau[0] == pytest.approx(14.254788184788776, rel=1e-13)


@given(st.integers(10**3, 10**7), st.floats(0.01, 0.99), st.floats(0.05, 0.5))
def test_schedule_matches_formulas(n, a, eps):
    from covert_ic.corpus import asymmetric_test_spec

    spec = asymmetric_test_spec()
    alpha = np.array([a, 1 - a])
    delta = 0.05
    try:
        s = make_schedule(spec, alpha, n, eps, delta)
    except InfeasibleSchedule:
        return
    chi2 = chi2_max(spec, alpha)
    gamma = math.sqrt(2 * delta / (n * chi2))
    assert s.gamma == pytest.approx(gamma, rel=1e-14)
    mpmath.mp.dps = 60
    for k in range(2):
        x = spec.rx_channels[k]
        dw = kl_divergence(x[spec.single_user_tuple(k)], x[0, 0])
        log_m = (1 - eps) * alpha[k] * n * gamma * dw
        # e^x amplifies the last-bit rounding of x, so sizes agree to float precision
        ref = max(1, int(mpmath.floor(mpmath.exp(log_m))))
        assert math.log(s.M[k]) == pytest.approx(math.log(ref), rel=1e-12, abs=1e-12)
        w = InputWeight.make(alpha, gamma)
        dbar = kl_divergence(effective_channel(spec, k, w)[1], effective_channel(spec, k, w)[0])
        tau = 0.5 * (math.log(s.M[k]) + (1 - eps / 2) * n * gamma * alpha[k] * dbar)
        assert s.tau[k] == pytest.approx(tau, rel=1e-9)


@example(1.175494351e-38)
@example(5e-324)
@given(st.floats(0.0, 3000.0))
def test_exp_int_is_exact(x):
    # enough digits for both the integer part and a tiny fractional excess over 1
    mpmath.mp.dps = int(x / 2.3) + 40 + (int(-math.log10(x)) if 0 < x < 1 else 0)
    e = mpmath.exp(mpmath.mpf(x))
    assert _exp_int(x, ROUND_FLOOR) == int(mpmath.floor(e))
    assert _exp_int(x, ROUND_CEILING) == int(mpmath.ceil(e))


def test_huge_codebook_sizes_are_exact(sym):
    s = make_schedule(sym, [0.5, 0.5], 10**9, 0.1, 1.0)
    gamma = math.sqrt(2 * 1.0 / (10**9 * (4 / 9)))
    log_m = 0.9 * 0.5 * 10**9 * gamma * 0.5
    mpmath.mp.dps = int(log_m / 2.3) + 40
    assert s.M[0] == int(mpmath.floor(mpmath.exp(mpmath.mpf(log_m))))
    assert s.M[0] > 2**64
    text = s.to_json()
    assert json.loads(text)["M"][0].startswith("0x")
    assert Schedule.from_json(text) == s


def keyed_spec(sym):
    v = np.array(sym.warden_channels[0])
    v[1, 0] = v[0, 1] = (0.3, 0.7)
    v[1, 1] = (0.2, 0.8)
    return DmIcSpec(sym.input_sizes, sym.rx_channels, (v,))


def test_key_sizes(sym):
    spec = keyed_spec(sym)
    s = make_schedule(spec, [0.5, 0.5], 10**4, 0.1, 0.05)
    pt = region_point(spec, [0.5, 0.5])
    assert np.all(pt.key_lengths > 0)
    dq = kl_divergence(spec.warden_channels[0][1, 0], spec.warden_channels[0][0, 0])
    mpmath.mp.dps = 60
    for k in range(2):
        log_mj = 1.1 * 0.5 * 10**4 * s.gamma * dq
        total = int(mpmath.ceil(mpmath.exp(log_mj)))
        assert s.J[k] == -(-total // s.M[k])
        assert s.M[k] * s.J[k] >= total
    s_key = make_schedule(spec, [0.5, 0.5], 10**4, 0.1, 0.05, epsilon_key=0.3)
    assert s_key.J[0] > s.J[0] and s_key.M == s.M


def test_inactive_user_and_json(sym, tmp_path):
    s = make_schedule(sym, [1.0, 0.0], 10**4, 0.1, 0.05, seed=9)
    assert s.M[1] == 1 and s.J[1] == 1 and s.tau[1] == -math.inf
    d = json.loads(s.to_json())
    assert d["tau"][1] is None and d["seed"] == 9
    back = Schedule.from_json(s.to_json())
    assert back == s


def test_schedule_errors(sym, hullbad):
    with pytest.raises(AssumptionViolation):
        make_schedule(hullbad, [0.5, 0.5], 10**4, 0.1, 0.01)
    with pytest.raises(InfeasibleSchedule):
        make_schedule(sym, [0.5, 0.5], 5, 0.1, 0.01)
    with pytest.raises(InfeasibleSchedule):
        make_schedule(sym, [0.5, 0.5], 10**4, 0.1, 0.01, gamma=0.0)
    # gamma clipped to 1 with n D far from the budget
    with pytest.raises(InfeasibleSchedule, match="clipped"):
        make_schedule(sym, [0.5, 0.5], 1, 0.1, 10.0)


def test_gamma_clip_within_budget(sym):
    s = make_schedule(sym, [0.5, 0.5], 10, 0.1, 2.5)
    assert s.gamma == 1.0
    assert min(s.M) >= 2


def test_inflate_schedule(sym):
    s = make_schedule(sym, [0.5, 0.5], 10**5, 0.2, 0.01)
    assert inflate_schedule(sym, s, 1.0) == s
    big = inflate_schedule(sym, s, 1.5)
    assert np.allclose(big.log_M, 1.5 * s.log_M, atol=1e-6 * s.log_M.max())
    assert big.gamma == s.gamma and big.tau[0] > s.tau[0]


def test_codebook_rows_regenerate(sym):
    s = make_schedule(sym, [0.5, 0.5], 2000, 0.2, 0.1)
    mat = generate_codebooks(sym, s, 3)
    lazy = generate_codebooks(sym, s, 3, materialize=False)
    assert mat.materialized and not lazy.materialized
    rows = [0, 5, 17, s.M[0] - 1]
    for k in range(2):
        assert np.array_equal(mat.rows(k, rows), lazy.rows(k, rows))
        assert np.array_equal(mat.regenerate(k, rows), mat.codewords[k][rows])
    assert not np.array_equal(mat.codewords[0], mat.codewords[1])
    assert not np.array_equal(mat.codewords[0], generate_codebooks(sym, s, 4).codewords[0])


def test_codebook_key_layout(sym):
    s = bare_schedule(sym, [0.5, 0.5], 0.3, 8, (3, 3))
    s = Schedule(**{**s.__dict__, "J": (2, 2)})
    books = generate_codebooks(sym, s, 1)
    assert books.codewords[0].shape == (6, 8)
    assert np.array_equal(books.codeword(0, 2, 1), books.codewords[0][5])
    assert np.array_equal(books.key_slice(0, 1), books.codewords[0][[1, 3, 5]])
    lazy = generate_codebooks(sym, s, 1, materialize=False)
    assert np.array_equal(lazy.key_slice(0, 1), books.key_slice(0, 1))


def test_codebook_symbol_frequencies(ternary):
    s = bare_schedule(ternary, [0.3, 0.7], 0.2, 5000, (20, 20), beta=[[0.25, 0.75], [1.0, 0.0]])
    books = generate_codebooks(ternary, s, 11)
    on = s.weight(ternary).on_probs()
    for k in range(2):
        cw = books.codewords[k]
        for sym_i in (1, 2):
            freq = np.mean(cw == sym_i)
            p = on[k, sym_i - 1]
            assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / cw.size) + 1e-12


@settings(max_examples=80)
@given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_tin_decode_matches_brute_force(n, m, seed, tau):
    rng = np.random.default_rng(seed)
    rx = tuple(rng.dirichlet(np.ones(3), size=(2, 2)) for _ in range(2))
    spec = DmIcSpec((2, 2), rx, (rng.dirichlet(np.ones(2), size=(2, 2)),))
    s = bare_schedule(spec, [0.5, 0.5], 0.4, n, (m, m))
    cw = rng.integers(0, 2, (m, n)).astype(np.int8)
    y = rng.integers(0, 3, n)
    llr = decoder_llr(spec, 0, s)
    got = tin_decode(spec, 0, y, cw, s, tau=tau)
    assert got == O.tin_decide(llr.tolist(), cw.tolist(), y.tolist(), tau)


def test_decoder_llr_and_impossible_output(sym):
    s = bare_schedule(sym, [0.5, 0.5], 0.1, 4, (2, 2))
    llr = decoder_llr(sym, 0, s)
    wbar = effective_channel(sym, 0, s.weight(sym))
    assert np.allclose(llr[1], np.log(wbar[1] / wbar[0]))
    assert np.all(llr[0] == 0)
    rx = np.array(sym.rx_channels[0])
    rx[0, :] = (1.0, 0.0)  # off symbol never produces output 1 at receiver 0
    spec = DmIcSpec(sym.input_sizes, (rx, sym.rx_channels[1]), sym.warden_channels)
    s = bare_schedule(spec, [0.5, 0.5], 0.1, 4, (2, 2))
    llr = decoder_llr(spec, 0, s)
    assert np.isposinf(llr[1, 1]) and llr[0, 1] == 0
    with pytest.raises(NumericalUnderflow):
        tin_decode(spec, 0, [1, 0, 0, 0], np.zeros((2, 4), dtype=np.int8), s)


def brute_tail(counts, probs, llr, tau):
    positions = [c for c, n_c in enumerate(counts) for _ in range(n_c)]
    p0 = 1 - sum(probs)
    total = 0.0
    for syms in itertools.product(range(len(probs) + 1), repeat=len(positions)):
        p, t = 1.0, 0.0
        for c, s in zip(positions, syms):
            p *= p0 if s == 0 else probs[s - 1]
            t += 0.0 if s == 0 else llr[s - 1][c]
        total += p * (t > tau)
    return total


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.floats(-2, 4))
def test_competitor_tail_matches_enumeration(seed, m, tau):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 4, 3)
    probs = rng.dirichlet(np.ones(m + 1))[:m] * 0.8
    llr = rng.normal(size=(m, 3))
    got = competitor_tail(counts, probs, llr, tau)
    assert got == pytest.approx(brute_tail(counts.tolist(), probs.tolist(), llr.tolist(), tau), abs=1e-12)


def test_competitor_tail_large_binary_class():
    # one class, binary symbol: a plain binomial tail
    from scipy import stats

    got = competitor_tail([5000], [0.01], [[0.7]], 30.0)
    assert got == pytest.approx(stats.binom.sf(math.floor(30 / 0.7), 5000, 0.01), rel=1e-10)


def test_wilson_interval():
    lo, hi = wilson_interval(5, 100)
    z, p, n = 1.959963984540054, 0.05, 100
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert lo == pytest.approx(centre - half, abs=1e-12)
    assert hi == pytest.approx(centre + half, abs=1e-12)
    assert wilson_interval(0, 10)[0] == 0.0


def test_simulation_is_worker_independent(sym):
    s = make_schedule(sym, [0.5, 0.5], 400, 0.3, 0.5)
    books = generate_codebooks(sym, s, 2)
    one = simulate_error_rate(sym, books, 60, 7, workers=1)
    two = simulate_error_rate(sym, books, 60, 7, workers=2)
    assert np.array_equal(one.user_errors, two.user_errors) and one.union_errors == two.union_errors
    e1 = simulate_error_rate(sym, None, 60, 7, schedule=s, workers=1)
    e2 = simulate_error_rate(sym, None, 60, 7, schedule=s, workers=2)
    assert e1.method == "ensemble" and np.array_equal(e1.user_errors, e2.user_errors)


def test_env_worker_fallback(sym, monkeypatch):
    from covert_ic._parallel import resolve_workers

    monkeypatch.setenv("COVERT_IC_WORKERS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(2) == 2
    with pytest.raises(ValueError):
        resolve_workers(0)


@pytest.mark.slow
def test_ensemble_agrees_with_fixed_codebooks(sym):
    s = make_schedule(sym, [0.5, 0.5], 400, 0.3, 0.5)
    fixed = [simulate_error_rate(sym, generate_codebooks(sym, s, sd), 1000, sd).p_union for sd in range(4)]
    ens = simulate_error_rate(sym, None, 3000, 1, schedule=s, method="ensemble")
    assert abs(np.mean(fixed) - ens.p_union) < 0.05


def test_error_report(sym):
    s = make_schedule(sym, [0.5, 0.5], 400, 0.3, 0.5)
    rep = simulate_error_rate(sym, generate_codebooks(sym, s, 2), 50, 1)
    d = rep.to_dict()
    assert d["trials"] == 50 and d["method"] == "codebook"
    assert d["p_union"] >= max(d["p_user"])
    assert all(lo <= p <= hi for (lo, hi), p in zip(d["ci_user"], d["p_user"]))
    with pytest.raises(ValueError):
        simulate_error_rate(sym, None, 0, 1, schedule=s)
    with pytest.raises(ValueError):
        simulate_error_rate(sym, generate_codebooks(sym, s, 2, materialize=False), 5, 1, method="codebook")


def test_effective_divergence_binary(sym):
    w = InputWeight.make([0.5, 0.5], 1e-4)
    wbar = effective_channel(sym, 0, w)
    assert effective_divergence(sym, 0, w) == pytest.approx(kl_divergence(wbar[1], wbar[0]))
    assert effective_divergence(sym, 0, w) == pytest.approx(0.5, rel=1e-3)


def test_reliable_at_low_rate(sym):
    # well below capacity and with a large threshold margin, decoding almost never fails
    s = make_schedule(sym, [0.5, 0.5], 4000, 0.6, 2.0)
    rep = simulate_error_rate(sym, None, 300, 4, schedule=s, method="ensemble")
    assert rep.p_union < 0.05
