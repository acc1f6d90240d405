"""Path-level verification against the modulo-free shadow system.

Three demonstrations on shared noise paths:

  1. the union of error events fires in the real system iff it fires in
     the shadow system, path by path (here over 20k paths);
  2. until the first wrap, the two systems are the *same* sample path;
  3. the shadow error variances match both the analytic recursion and a
     large Monte Carlo estimate.
"""

import numpy as np

from skfade import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    build_schedule,
    run_coupled_batch,
    variance_recursion_oracle,
)
from skfade.montecarlo import simulate_batch

PATHS = 20_000
SEED = 424242

ch = ChannelParams(h=0.9, sigma_sq=1.0, P=10.0, P_tilde=10.0, sigma_z=1e-3)
est = CsiEstimate(h_hat=0.88, D=0.05)
cfg = CodingConfig(N=10, epsilon=1e-2, M=256)
sched = build_schedule(ch, est, cfg)

print(f"simulating {PATHS} paired real/shadow paths...")
_, traces = simulate_batch(ch, est, cfg, sched, SEED, range(PATHS),
                           want_traces=True)
eps_p, alias_p, pam_p = run_coupled_batch(traces.forward_noise,
                                          traces.residuals, sched, ch)

union_real = traces.aliasing.any(axis=1) | traces.pam_error
union_shadow = alias_p.any(axis=1) | pam_p
agree = int(np.sum(union_real == union_shadow))
print(f"1) event-union identity: {agree}/{PATHS} paths agree "
      f"({int(union_real.sum())} paths carry an event)")

clean = ~traces.aliasing.any(axis=1)
gap = np.max(np.abs(traces.eps[clean] - eps_p[clean]))
print(f"2) on the {int(clean.sum())} wrap-free paths the trajectories "
      f"coincide to {gap:.2e}")

print("3) shadow error variance per step:")
oracle = variance_recursion_oracle(sched, ch)
mc = eps_p.var(axis=0)
print("   step   recursion      monte carlo    planned (from H)")
for i in range(cfg.N):
    print(f"   {i + 1:4d}   {oracle[i]:.6e}   {mc[i]:.6e}   {sched.sigma_sq_H[i]:.6e}")
rel = np.max(np.abs(mc / oracle - 1.0))
print(f"   worst relative gap recursion vs monte carlo: {rel:.1%} "
      f"({PATHS} paths; shrinks as 1/sqrt(paths))")
print(f"   actual variance stays below planned on all steps: "
      f"{bool(np.all(oracle <= sched.sigma_sq_H + 1e-12))}")
