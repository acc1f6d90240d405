"""End-to-end Monte Carlo campaign at a desk-scale operating point.

Picks the largest PAM alphabet the rate formula allows, runs 10^5
reproducible trials of the full transmit/feedback/decode loop, and audits
the outcome against the design targets: total error within epsilon, each
step's first-aliasing rate within its budget p_m, and average powers within
the forward and feedback constraints.
"""

import json

from skfade import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    achievable_rate,
    build_schedule,
    error_budget_check,
    estimate,
    select_alphabet,
)

TRIALS = 100_000
SEED = 20260810

ch = ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-3)
est = CsiEstimate(h_hat=0.88, D=0.05)
N, epsilon = 10, 1e-2

rate = achievable_rate(ch, est, N, epsilon).rate
M = select_alphabet(rate, N)
cfg = CodingConfig(N=N, epsilon=epsilon, M=M)
schedule = build_schedule(ch, est, cfg)

print(f"operating point: N={N}, eps={epsilon:g}, SNR={ch.snr:g}, "
      f"h={ch.h}, h_hat={est.h_hat}, D={est.D}, sigma_z={ch.sigma_z:g}")
print(f"achievable rate: {rate:.4f} bits/use  ->  M = {M} PAM points "
      f"({N * rate:.1f} bits per block)")
print(f"budgets: p_m = {schedule.p_m:.3e} per step, eps = {epsilon:g} total")
print(f"running {TRIALS} trials (seed {SEED})...")

report = estimate(ch, est, cfg, trials=TRIALS, master_seed=SEED)
check = error_budget_check(report, cfg, schedule)

print()
print(json.dumps(report.to_dict(), indent=2))
print()
print(f"error rate: {report.p_e_hat:.2e} "
      f"(95% upper bound {report.p_e_upper_95:.2e}, target {epsilon:g})")
print(f"power usage: forward {report.avg_forward_power:.3f} / {ch.P:g}, "
      f"feedback {report.avg_feedback_power:.3f} / {ch.P_tilde:g}")
print(f"budget audit: {'PASS' if check.passed else 'FAIL'}")
for msg in check.failures:
    print("  -", msg)
