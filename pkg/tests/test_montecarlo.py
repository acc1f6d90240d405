import numpy as np
import pytest
from scipy import stats as sstats

from skfade import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    InvalidConfig,
    build_schedule,
    clopper_pearson_upper,
    error_budget_check,
    estimate,
    run_trial,
    run_trial_full,
)
from skfade._rng import trial_seed
from skfade.montecarlo import simulate_batch

CH = ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-3)
EST = CsiEstimate(h_hat=0.88, D=0.05)
CFG = CodingConfig(N=10, epsilon=1e-2, M=128)
SCHED = build_schedule(CH, EST, CFG)


def test_trial_replay_is_identical():
    a = run_trial(CH, EST, CFG, SCHED, trial_seed=42)
    b = run_trial(CH, EST, CFG, SCHED, trial_seed=42)
    assert a.sent == b.sent and a.decoded == b.decoded and a.error == b.error
    assert np.array_equal(a.aliasing, b.aliasing)
    assert np.array_equal(a.forward_powers, b.forward_powers)
    assert np.array_equal(a.feedback_powers, b.feedback_powers)
    c = run_trial(CH, EST, CFG, SCHED, trial_seed=43)
    assert not np.array_equal(a.forward_powers, c.forward_powers)


def test_error_flag_consistency():
    for s in range(50):
        rec = run_trial(CH, EST, CFG, SCHED, trial_seed=s)
        assert rec.error == (rec.sent != rec.decoded)
        assert rec.forward_powers.shape == (CFG.N,)
        assert rec.feedback_powers.shape == (CFG.N - 1,)


def test_batch_engine_matches_scalar_reference():
    seed = 20260810
    _, traces = simulate_batch(CH, EST, CFG, SCHED, seed, range(200),
                               want_traces=True)
    for j in range(200):
        out = run_trial_full(CH, EST, CFG, SCHED, trial_seed(seed, j))
        assert out.record.sent == traces.sent[j]
        assert out.record.decoded == traces.decoded[j]
        assert np.array_equal(out.eps_trace.eps, traces.eps[j])
        assert np.array_equal(out.noise.feedback_residuals, traces.residuals[j])
        assert np.array_equal(out.record.aliasing, traces.aliasing[j])


def test_single_trial_report():
    rep = estimate(CH, EST, CFG, trials=1, master_seed=3)
    rec = run_trial(CH, EST, CFG, SCHED, trial_seed(3, 0))
    assert rep.trials == 1
    assert rep.errors == int(rec.error)
    assert rep.avg_forward_power == pytest.approx(rec.forward_powers.mean(), rel=1e-12)
    assert rep.avg_feedback_power == pytest.approx(rec.feedback_powers.mean(), rel=1e-12)


def test_partitioned_runs_aggregate_identically():
    whole = estimate(CH, EST, CFG, trials=3000, master_seed=5, chunk_size=3000)
    parts = estimate(CH, EST, CFG, trials=3000, master_seed=5, chunk_size=701)
    assert whole.errors == parts.errors
    assert np.array_equal(whole.aliasing_counts, parts.aliasing_counts)
    assert whole.avg_forward_power == parts.avg_forward_power
    assert whole.avg_feedback_power == parts.avg_feedback_power
    assert whole.pam_errors == parts.pam_errors


def test_report_reproducible():
    a = estimate(CH, EST, CFG, trials=2000, master_seed=9)
    b = estimate(CH, EST, CFG, trials=2000, master_seed=9)
    assert a.errors == b.errors and a.p_e_hat == b.p_e_hat
    assert np.array_equal(a.per_step_aliasing_rates, b.per_step_aliasing_rates)


def test_noiseless_trials_never_err():
    ch = ChannelParams(h=0.9, sigma_sq=1e-30, P=10.0, P_tilde=10.0, sigma_z=0.0)
    cfg = CodingConfig(N=6, epsilon=1e-2, M=8)
    sched = build_schedule(ch, EST, cfg)
    for w in range(1, 9):
        out = run_trial_full(ch, EST, cfg, sched, trial_seed=w, message=w)
        assert not out.record.error


def test_pairing_guard_fires_before_simulation():
    with pytest.raises(InvalidConfig):
        estimate(CH, CsiEstimate(h_hat=0.5, D=0.05), CFG, trials=10, master_seed=0)


def test_clopper_pearson_upper():
    assert clopper_pearson_upper(0, 100) == pytest.approx(1 - 0.05 ** (1 / 100))
    assert clopper_pearson_upper(100, 100) == 1.0
    for k, n in ((3, 1000), (50, 2000)):
        assert clopper_pearson_upper(k, n) > k / n
    # exact binomial coverage identity: P(X <= k | p = upper) = 0.05
    up = clopper_pearson_upper(7, 500)
    assert sstats.binom.cdf(7, 500, up) == pytest.approx(0.05, rel=1e-9)


def test_desk_scale_budget_passes():
    rep = estimate(CH, EST, CFG, trials=20000, master_seed=77)
    chk = error_budget_check(rep, CFG, SCHED)
    assert chk.passed, chk.failures
    assert rep.p_e_upper_95 <= CFG.epsilon
    assert rep.avg_forward_power <= 1.02 * CH.P
    assert rep.avg_feedback_power <= 1.02 * CH.P_tilde


def test_budget_check_reports_failures():
    # tiny epsilon at tiny sample size: the exact binomial bound cannot reach it
    cfg = CodingConfig(N=10, epsilon=1e-6, M=128)
    sched = build_schedule(CH, EST, cfg)
    rep = estimate(CH, EST, cfg, trials=50, master_seed=1)
    chk = error_budget_check(rep, cfg, sched)
    assert not chk.passed
    assert not chk.p_e_ok
    assert any("epsilon" in msg for msg in chk.failures)


def _cp_lower(k, n):
    return 0.0 if k == 0 else float(sstats.beta.ppf(0.05, k, n - k + 1))


def test_error_rate_collapses_with_blocklength():
    # fixed 4-point alphabet, growing N: doubly-exponential decay of the
    # decision error; consecutive rate CIs must separate while measurable
    ch = ChannelParams(h=0.9, sigma_sq=1.0, P=0.8, P_tilde=10.0, sigma_z=1e-3)
    est = CsiEstimate(h_hat=0.9, D=0.0)
    trials = 100_000
    counts = []
    for n in (5, 10, 15, 20):
        rep = estimate(ch, est, CodingConfig(N=n, epsilon=1e-5, M=4),
                       trials=trials, master_seed=1234)
        counts.append(rep.errors)
    for prev, nxt in zip(counts, counts[1:]):
        if prev >= 30:
            assert clopper_pearson_upper(nxt, trials) < _cp_lower(prev, trials)
        else:
            assert nxt <= max(prev, 10)  # both in the Poisson-dust regime
