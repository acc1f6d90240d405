"""Acceptance suite: one test per exit criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances and runtime budgets are pinned in the assertions.
"""

import math
import time

import numpy as np
from scipy import special

import skfade as sk
from skfade.cli import main as cli_main
from skfade.montecarlo import simulate_batch

DESK_CH = sk.ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-3)
DESK_EST = sk.CsiEstimate(h_hat=0.88, D=0.05)
DESK_EPS = 1e-2
DESK_N = 10
MASTER_SEED = 20260810


def _verdict(num, name, ok, elapsed):
    print(f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'} [{elapsed:.2f} s]")


def _qinv_ref(p):
    # independent inverse-tail implementation for the oracle formulas
    return math.sqrt(2.0) * float(special.erfcinv(2.0 * p))


def _rate_ref(snr, eps, h_hat, dist, p_tilde, sigma_z, n):
    big_h = max(abs(h_hat) - dist, 0.0)
    if big_h == 0.0:
        return 0.0
    pm = eps / (2.0 * (n - 1))
    root = math.sqrt(3.0 * p_tilde)
    a = ((root - sigma_z) / _qinv_ref(pm / 2.0)) ** 2
    b = (abs(root - sigma_z) / _qinv_ref(pm / 2.0) + sigma_z) ** 2
    ell = _qinv_ref(eps / 4.0) ** 2 / 3.0
    c = big_h * big_h * snr
    return math.log2(1.0 + c * (1.0 + c * a / b) ** (n - 1) / ell) / (2.0 * n)


def test_criterion_1_rate_reproduction(tmp_path, capsys):
    start = time.perf_counter()
    ok = True
    for dist, sigma_z in ((0.0, 1e-3), (0.05, 1e-3), (0.1, 0.5)):
        out = tmp_path / f"sweep_{dist}_{sigma_z}.csv"
        code = cli_main([
            "rate-sweep",
            "--set", "sweep_axis=N", "--set", "sweep_start=10",
            "--set", "sweep_stop=200", "--set", "sweep_step=10",
            "--set", "h=0.9", "--set", "h_hat=0.9", "--set", "sigma_sq=1.0",
            "--set", "P=10", "--set", "P_tilde=10", "--set", "epsilon=1e-6",
            "--set", f"D={dist}", "--set", f"sigma_z={sigma_z}",
            "--out", str(out),
        ])
        assert code == 0
        rows = out.read_text().splitlines()[1:]
        assert len(rows) == 20
        for row in rows:
            fields = row.split(",")
            n, rate = int(fields[0]), float(fields[1])
            ref = _rate_ref(10.0, 1e-6, 0.9, dist, 10.0, sigma_z, n)
            if abs(rate / ref - 1.0) >= 1e-9:
                ok = False
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    _verdict(1, "rate formula reproduction", ok and elapsed < 1.0, elapsed)
    assert ok
    assert elapsed < 1.0


def test_criterion_2_perfect_csi_limit():
    start = time.perf_counter()
    ch = sk.ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-12)
    est = sk.CsiEstimate(h_hat=0.9, D=0.0)
    worst = 0.0
    for n in range(10, 101):
        got = sk.achievable_rate(ch, est, n, 1e-6).rate
        ell = _qinv_ref(1e-6 / 4.0) ** 2 / 3.0
        c = 0.81 * 10.0
        ref = math.log2(1.0 + c * (1.0 + c) ** (n - 1) / ell) / (2.0 * n)
        worst = max(worst, abs(got - ref))
    ok = worst < 1e-6
    elapsed = time.perf_counter() - start
    _verdict(2, "perfect-CSI limit", ok and elapsed < 1.0, elapsed)
    assert ok, f"worst deviation {worst:.3e} bits"
    assert elapsed < 1.0


def test_criterion_3_rate_vs_distortion_shape():
    start = time.perf_counter()
    ch = sk.ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-3)
    rates = [sk.achievable_rate(ch, sk.CsiEstimate(h_hat=0.9, D=d), 100, 1e-6).rate
             for d in np.linspace(0.0, 0.9, 91)]
    monotone = all(a >= b for a, b in zip(rates, rates[1:]))
    ok = monotone and rates[-1] == 0.0 and rates[0] > 0.0
    elapsed = time.perf_counter() - start
    _verdict(3, "rate vs distortion shape", ok and elapsed < 1.0, elapsed)
    assert ok
    assert elapsed < 1.0


def test_criterion_4_error_guarantee_desk_scale():
    start = time.perf_counter()
    rate = sk.achievable_rate(DESK_CH, DESK_EST, DESK_N, DESK_EPS).rate
    m = sk.select_alphabet(rate, DESK_N)
    cfg = sk.CodingConfig(N=DESK_N, epsilon=DESK_EPS, M=m)
    report = sk.estimate(DESK_CH, DESK_EST, cfg, trials=10 ** 5,
                         master_seed=MASTER_SEED)
    p_m = DESK_EPS / (2.0 * (DESK_N - 1))
    alias_uppers = [sk.clopper_pearson_upper(int(k), report.trials)
                    for k in report.aliasing_counts]
    ok_pe = report.p_e_upper_95 <= DESK_EPS
    ok_alias = all(u <= 1.5 * p_m for u in alias_uppers)
    ok_power = (report.avg_forward_power <= 1.02 * DESK_CH.P
                and report.avg_feedback_power <= 1.02 * DESK_CH.P_tilde)
    ok = ok_pe and ok_alias and ok_power
    elapsed = time.perf_counter() - start
    _verdict(4, "desk-scale error guarantee", ok and elapsed < 60.0, elapsed)
    assert ok_pe, f"p_e upper {report.p_e_upper_95:.3e} vs eps {DESK_EPS}"
    assert ok_alias, f"aliasing uppers {alias_uppers} vs 1.5*p_m {1.5 * p_m:.3e}"
    assert ok_power, (report.avg_forward_power, report.avg_feedback_power)
    assert elapsed < 60.0


def test_criterion_5_path_identity():
    start = time.perf_counter()
    rate = sk.achievable_rate(DESK_CH, DESK_EST, DESK_N, DESK_EPS).rate
    cfg = sk.CodingConfig(N=DESK_N, epsilon=DESK_EPS,
                          M=sk.select_alphabet(rate, DESK_N))
    sched = sk.build_schedule(DESK_CH, DESK_EST, cfg)
    _, traces = simulate_batch(DESK_CH, DESK_EST, cfg, sched, MASTER_SEED,
                               range(10 ** 4), want_traces=True)
    _, alias_p, pam_p = sk.run_coupled_batch(traces.forward_noise,
                                             traces.residuals, sched, DESK_CH)
    union_orig = traces.aliasing.any(axis=1) | traces.pam_error
    union_coup = alias_p.any(axis=1) | pam_p
    agree = int(np.sum(union_orig == union_coup))
    ok = agree == 10 ** 4
    # spot-check the scalar shadow runner against the batched one
    from skfade._rng import trial_seed
    for t in range(25):
        out = sk.run_trial_full(DESK_CH, DESK_EST, cfg, sched,
                                trial_seed(MASTER_SEED, t))
        trace = sk.run_coupled(out.noise, sched, DESK_CH)
        ok = ok and sk.check_lemma1(out.events, trace)
        ok = ok and np.array_equal(trace.aliasing_events_prime, alias_p[t])
    elapsed = time.perf_counter() - start
    _verdict(5, "per-path event-union identity", ok and elapsed < 30.0, elapsed)
    assert agree == 10 ** 4, f"{10 ** 4 - agree} disagreeing paths"
    assert ok
    assert elapsed < 30.0


def test_criterion_6_variance_ordering():
    start = time.perf_counter()
    cfg = sk.CodingConfig(N=100, epsilon=1e-3, M=2)
    checked = 0
    equality_ok = True
    ok = True
    for h_hat in (-2.1, -1.4, -0.9, -0.52, 0.3, 0.62, 0.9, 1.3, 1.8, 2.5):
        for frac in (0.0, 0.05, 0.15, 0.3, 0.45):
            d = frac * abs(h_hat)
            for t in (-1.0, -0.5, 0.0, 0.5, 1.0):
                h = h_hat + t * d
                d_eff = max(d, abs(h - h_hat))
                est = sk.CsiEstimate(h_hat=h_hat, D=d_eff)
                if sk.compute_H(est) == 0.0 or h == 0.0:
                    continue
                ch = sk.ChannelParams(h=h, sigma_sq=1.0, P=10.0, P_tilde=10.0,
                                      sigma_z=1e-3)
                sched = sk.build_schedule(ch, est, cfg)
                checked += 1
                if not np.all(sched.sigma_sq_true <= sched.sigma_sq_H + 1e-12):
                    ok = False
                if d == 0.0 and not np.array_equal(sched.sigma_sq_true,
                                                   sched.sigma_sq_H):
                    equality_ok = False
    ok = ok and equality_ok and checked >= 200
    elapsed = time.perf_counter() - start
    _verdict(6, "variance ordering over CSI grid", ok and elapsed < 1.0, elapsed)
    assert checked >= 200
    assert equality_ok
    assert ok
    assert elapsed < 1.0


def test_criterion_7_oracle_equivalence():
    start = time.perf_counter()
    # (a) planned-variance recursion vs closed form out to i = 200
    cfg200 = sk.CodingConfig(N=200, epsilon=DESK_EPS, M=2)
    sched200 = sk.build_schedule(DESK_CH, DESK_EST, cfg200)
    closed = sk.sigma_sq_h_closed_form(sched200.H, DESK_CH.snr,
                                       sched200.A / sched200.B, 200)
    ok_closed = bool(np.all(np.abs(sched200.sigma_sq_H / closed - 1.0) < 1e-9))
    # (b) shadow-system error variance vs the recursion, 1e6 sampled paths
    cfg = sk.CodingConfig(N=DESK_N, epsilon=DESK_EPS, M=2)
    sched = sk.build_schedule(DESK_CH, DESK_EST, cfg)
    rng = np.random.default_rng(MASTER_SEED)
    w = rng.normal(0.0, math.sqrt(DESK_CH.sigma_sq), size=(10 ** 6, DESK_N))
    eps_p, _, _ = sk.run_coupled_batch(w, np.zeros((10 ** 6, DESK_N - 1)),
                                       sched, DESK_CH)
    mc_var = eps_p.var(axis=0)
    ok_var = bool(np.all(np.abs(mc_var / sched.sigma_sq_true - 1.0) < 0.02))
    ok = ok_closed and ok_var
    elapsed = time.perf_counter() - start
    _verdict(7, "variance oracle equivalence", ok and elapsed < 60.0, elapsed)
    assert ok_closed
    assert ok_var
    assert elapsed < 60.0


def test_criterion_8_noiseless_correctness():
    start = time.perf_counter()
    ch = sk.ChannelParams(h=0.9, sigma_sq=1e-30, P=10.0, P_tilde=10.0, sigma_z=0.0)
    est = sk.CsiEstimate(h_hat=0.9, D=0.0)
    failures = 0
    for m in (2, 4, 8, 16, 32, 64):
        for n in (2, 3, 5, 10, 15, 20):
            cfg = sk.CodingConfig(N=n, epsilon=1e-2, M=m)
            sched = sk.build_schedule(ch, est, cfg)
            for w in range(1, m + 1):
                out = sk.run_trial_full(ch, est, cfg, sched,
                                        trial_seed=1000 * n + w, message=w)
                if out.record.decoded != w:
                    failures += 1
    ok = failures == 0
    elapsed = time.perf_counter() - start
    _verdict(8, "noiseless decoding correctness", ok and elapsed < 5.0, elapsed)
    assert failures == 0
    assert elapsed < 5.0


def test_criterion_9_modulo_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED)
    g = 10.954451150103322
    lat = sk.Lattice(g)
    cases = 10 ** 5
    a = rng.uniform(-20 * g, 20 * g, size=cases)
    b = rng.uniform(-20 * g, 20 * g, size=cases)

    def away(x, margin=1e-9):
        frac = np.abs(np.fmod(np.abs(x) / g + 0.5, 1.0))
        return np.minimum(frac, 1.0 - frac) * g > margin

    m_a = sk.modulo(a, lat)
    ok_range = bool(np.all((m_a >= -g / 2) & (m_a < g / 2)))
    ok_idem = bool(np.array_equal(sk.modulo(m_a, lat), m_a))
    keep_p = away(a)
    ok_period = True
    for k in (-2, 1, 3):
        shifted = sk.modulo(a + k * g, lat)
        ok_period = ok_period and bool(
            np.all(np.abs(shifted[keep_p] - m_a[keep_p]) <= 1e-12 * g))
    lhs = sk.modulo(sk.modulo(a, lat) + b, lat)
    rhs = sk.modulo(a + b, lat)
    keep = away(a + b) & away(sk.modulo(a, lat) + b)
    ok_dist = bool(np.all(np.abs(lhs[keep] - rhs[keep]) <= 1e-12 * g))
    ok = ok_range and ok_idem and ok_period and ok_dist
    elapsed = time.perf_counter() - start
    _verdict(9, "modulo algebra properties", ok and elapsed < 5.0, elapsed)
    assert ok_range and ok_idem and ok_period and ok_dist
    assert elapsed < 5.0
