"""Monte Carlo estimation of the decoding error rate and scheme audits.

Trials are mutually independent: trial t draws everything from a counter-based
stream keyed by master_seed XOR t, so a batched (vectorized) campaign, a
trial-by-trial rerun, or any partition of the index range produce identical
numbers.  `run_trial` is the scalar reference path built on the transceiver
state machines; `estimate` runs the same arithmetic vectorized across trials.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _rng
from .channel import NoiseRealization, _draw_noise_with_rng, feedback, forward
from .coupled import EventIndicators, _events
from .errors import InvalidConfig
from .lattice import Lattice, modulo
from .params import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    Schedule,
    build_schedule,
    q_function,
    validate_pair,
)
from .transceiver import (
    EpsilonTrace,
    ReceiverState,
    TransmitterState,
    _decode_indices,
    decode,
    map_message,
    rx_feedback,
    rx_init,
    rx_step,
    tx_init,
    tx_step,
)

__all__ = [
    "TrialRecord",
    "TrialOutcome",
    "MonteCarloReport",
    "BudgetCheck",
    "run_trial",
    "run_trial_full",
    "estimate",
    "clopper_pearson_upper",
    "error_budget_check",
]


@dataclass
class TrialRecord:
    """One simulated transmission."""

    sent: int
    decoded: int
    error: bool
    aliasing: np.ndarray        # observed per-step aliasing events, length N-1
    forward_powers: np.ndarray  # X_i^2, length N
    feedback_powers: np.ndarray  # X_tilde_i^2, length N-1


@dataclass
class TrialOutcome:
    """TrialRecord plus the diagnostics needed for path-level verification."""

    record: TrialRecord
    eps_trace: EpsilonTrace
    events: EventIndicators
    noise: NoiseRealization


@dataclass(frozen=True)
class MonteCarloReport:
    """Aggregated campaign statistics.

    per_step_aliasing_rates[i] is the fraction of trials whose FIRST aliasing
    event happened at step i+1.  Once a wrap occurs the estimate is corrupted
    and later steps re-wrap almost surely, so raw marginal flags at late steps
    just re-count the same failure; the first-event rate is the per-step
    quantity the budget p_m actually bounds.  Similarly pam_errors counts
    trials whose final estimation error left the PAM decision half-cell with
    no aliasing event at all, isolating the final-decision failure mode.
    """

    trials: int
    errors: int
    p_e_hat: float
    p_e_upper_95: float
    per_step_aliasing_rates: np.ndarray
    avg_forward_power: float
    avg_feedback_power: float
    seed: int
    aliasing_counts: np.ndarray
    pam_errors: int
    pam_error_rate: float

    def to_dict(self) -> dict:
        return {
            "p_e_hat": self.p_e_hat,
            "p_e_upper_95": self.p_e_upper_95,
            "per_step_aliasing_rates": [float(r) for r in self.per_step_aliasing_rates],
            "avg_forward_power": self.avg_forward_power,
            "avg_feedback_power": self.avg_feedback_power,
            "trials": self.trials,
            "errors": self.errors,
            "pam_error_rate": self.pam_error_rate,
            "seed": self.seed,
        }


def _check_schedule(cfg: CodingConfig, schedule: Schedule):
    if len(schedule.gamma) != cfg.N or len(schedule.constellation) != cfg.M:
        raise InvalidConfig("schedule does not match the coding config")


def run_trial_full(ch: ChannelParams, est: CsiEstimate, cfg: CodingConfig,
                   schedule: Schedule, trial_seed: int, *,
                   qfc_sign: str = "quantizer", dither: bool = True,
                   message: int = None, noise: NoiseRealization = None) -> TrialOutcome:
    """Scalar reference trial with full diagnostics.

    Normally both the noise and the message come from the trial's stream.
    Tests may force a specific noise path, in which case the message must be
    forced too (the stream is bypassed entirely).
    """
    validate_pair(ch, est)
    _check_schedule(cfg, schedule)
    if noise is None:
        noise, rng = _draw_noise_with_rng(ch, cfg, trial_seed)
        if not dither:
            noise.dithers = np.zeros_like(noise.dithers)
        sent = int(rng.integers(1, cfg.M + 1)) if message is None else int(message)
    else:
        if message is None:
            raise InvalidConfig("a forced noise path requires a forced message")
        sent = int(message)

    n = cfg.N
    theta = map_message(sent, schedule.constellation)
    x1 = tx_init(theta, ch.P)
    y1 = forward(x1, ch, noise.forward_noise[0])
    tx = TransmitterState(theta=theta, schedule=schedule, dithers=noise.dithers)
    rx = ReceiverState(theta_hat=rx_init(y1, ch.h, ch.P), h=ch.h,
                       schedule=schedule, dithers=noise.dithers)
    eps = np.empty(n)
    eps[0] = rx.theta_hat - theta
    fwd_p = np.empty(n)
    fwd_p[0] = x1 * x1
    fb_p = np.empty(n - 1)
    for i in range(1, n):
        x_t = rx_feedback(rx)
        fb_p[i - 1] = x_t * x_t
        y_t, z = feedback(x_t, ch, qfc_sign)
        noise.feedback_residuals[i - 1] = z
        rx.z_history.append(z)
        x = tx_step(y_t, tx)
        fwd_p[i] = x * x
        y = forward(x, ch, noise.forward_noise[i])
        rx_step(y, rx)
        eps[i] = rx.theta_hat - theta
    decoded = decode(rx.theta_hat, schedule.constellation)
    aliasing, pam = _events(eps, noise.feedback_residuals, schedule)
    record = TrialRecord(sent=sent, decoded=decoded, error=decoded != sent,
                         aliasing=aliasing, forward_powers=fwd_p,
                         feedback_powers=fb_p)
    return TrialOutcome(record=record, eps_trace=EpsilonTrace(eps=eps),
                        events=EventIndicators(aliasing=aliasing, pam_error=bool(pam)),
                        noise=noise)


def run_trial(ch: ChannelParams, est: CsiEstimate, cfg: CodingConfig,
              schedule: Schedule, trial_seed: int, *,
              qfc_sign: str = "quantizer", dither: bool = True) -> TrialRecord:
    """One end-to-end trial: uniform message, N rounds, minimum-distance
    decoding.  Deterministic in trial_seed."""
    return run_trial_full(ch, est, cfg, schedule, trial_seed,
                          qfc_sign=qfc_sign, dither=dither).record


@dataclass
class _BatchStats:
    """Aggregation monoid over disjoint trial batches."""

    trials: int = 0
    errors: int = 0
    aliasing_counts: np.ndarray = None
    pam_clean_errors: int = 0
    fwd_power_sum: float = 0.0
    fb_power_sum: float = 0.0

    def merge(self, other: "_BatchStats") -> "_BatchStats":
        return _BatchStats(
            trials=self.trials + other.trials,
            errors=self.errors + other.errors,
            aliasing_counts=(other.aliasing_counts if self.aliasing_counts is None
                             else self.aliasing_counts + other.aliasing_counts),
            pam_clean_errors=self.pam_clean_errors + other.pam_clean_errors,
            fwd_power_sum=self.fwd_power_sum + other.fwd_power_sum,
            fb_power_sum=self.fb_power_sum + other.fb_power_sum,
        )


@dataclass
class BatchTraces:
    """Per-trial arrays from a vectorized batch (for path-level checks)."""

    sent: np.ndarray
    decoded: np.ndarray
    eps: np.ndarray             # (T, N)
    forward_noise: np.ndarray   # (T, N)
    dithers: np.ndarray         # (T, N-1)
    residuals: np.ndarray       # (T, N-1)
    aliasing: np.ndarray        # (T, N-1) bool
    pam_error: np.ndarray       # (T,) bool


def simulate_batch(ch: ChannelParams, est: CsiEstimate, cfg: CodingConfig,
                   schedule: Schedule, master_seed: int, indices, *,
                   qfc_sign: str = "quantizer", dither: bool = True,
                   want_traces: bool = False):
    """Vectorized equivalent of run_trial over the given trial indices.

    Bit-identical to the scalar path trial by trial.  Returns
    (_BatchStats, BatchTraces | None).
    """
    validate_pair(ch, est)
    _check_schedule(cfg, schedule)
    indices = np.asarray(list(indices), dtype=np.uint64)
    t_count = len(indices)
    n, m = cfg.N, cfg.M

    w_noise = np.empty((t_count, n))
    v = np.zeros((t_count, n - 1))
    sent = np.empty(t_count, dtype=np.int64)
    for j, t in enumerate(indices):
        noise, rng = _draw_noise_with_rng(ch, cfg, _rng.trial_seed(master_seed, int(t)))
        w_noise[j] = noise.forward_noise
        if dither:
            v[j] = noise.dithers
        sent[j] = rng.integers(1, m + 1)

    theta = schedule.constellation[sent - 1]
    sqrt_p = math.sqrt(ch.P)
    lat = Lattice(schedule.d_tilde)
    half_d = schedule.d_tilde / 2.0

    x1 = sqrt_p * theta
    y = forward(x1, ch, w_noise[:, 0])
    theta_hat = y / (ch.h * sqrt_p)
    eps = theta_hat - theta

    eps_mat = np.empty((t_count, n)) if want_traces else None
    if want_traces:
        eps_mat[:, 0] = eps
    residuals = np.empty((t_count, n - 1))
    aliasing = np.empty((t_count, n - 1), dtype=bool)
    fwd_power = x1 * x1
    fwd_power_total = float(np.sum(fwd_power))
    fb_power_total = 0.0

    for i in range(1, n):
        g = schedule.gamma[i - 1]
        vi = v[:, i - 1]
        x_t = modulo(g * theta_hat + vi, lat)
        fb_power_total += float(np.sum(x_t * x_t))
        y_t, z = feedback(x_t, ch, qfc_sign)
        residuals[:, i - 1] = z
        u = g * eps + z
        aliasing[:, i - 1] = (u < -half_d) | (u >= half_d)
        x = schedule.alpha * modulo(y_t - g * theta - vi, lat)
        fwd_power_total += float(np.sum(x * x))
        y = forward(x, ch, w_noise[:, i])
        ydot = y - ch.h * schedule.alpha * z
        theta_hat = theta_hat - schedule.beta[i - 1] * ydot
        eps = theta_hat - theta
        if want_traces:
            eps_mat[:, i] = eps

    decoded = _decode_indices(theta_hat, schedule.constellation, schedule.d_min)
    errors = decoded != sent
    half_c = schedule.d_min / 2.0
    pam = (eps < -half_c) | (eps >= half_c)
    any_alias = aliasing.any(axis=1)
    first = np.argmax(aliasing, axis=1)
    first_counts = np.bincount(first[any_alias], minlength=n - 1).astype(np.int64)

    stats_out = _BatchStats(
        trials=t_count,
        errors=int(np.sum(errors)),
        aliasing_counts=first_counts,
        pam_clean_errors=int(np.sum(pam & ~any_alias)),
        fwd_power_sum=fwd_power_total,
        fb_power_sum=fb_power_total,
    )
    traces = None
    if want_traces:
        traces = BatchTraces(sent=sent, decoded=decoded, eps=eps_mat,
                             forward_noise=w_noise, dithers=v,
                             residuals=residuals, aliasing=aliasing,
                             pam_error=pam)
    return stats_out, traces


def clopper_pearson_upper(k: int, n: int, confidence: float = 0.95) -> float:
    """One-sided exact binomial upper confidence bound on a proportion."""
    if n <= 0:
        raise InvalidConfig("need at least one trial")
    if k >= n:
        return 1.0
    return float(stats.beta.ppf(confidence, k + 1, n - k))


def _report_from_stats(acc: _BatchStats, cfg: CodingConfig, master_seed: int) -> MonteCarloReport:
    n_tr = acc.trials
    return MonteCarloReport(
        trials=n_tr,
        errors=acc.errors,
        p_e_hat=acc.errors / n_tr,
        p_e_upper_95=clopper_pearson_upper(acc.errors, n_tr),
        per_step_aliasing_rates=acc.aliasing_counts / n_tr,
        avg_forward_power=acc.fwd_power_sum / (n_tr * cfg.N),
        avg_feedback_power=acc.fb_power_sum / (n_tr * (cfg.N - 1)),
        seed=int(master_seed),
        aliasing_counts=acc.aliasing_counts,
        pam_errors=acc.pam_clean_errors,
        pam_error_rate=acc.pam_clean_errors / n_tr,
    )


def estimate(ch: ChannelParams, est: CsiEstimate, cfg: CodingConfig,
             trials: int, master_seed: int, *, qfc_sign: str = "quantizer",
             dither: bool = True, chunk_size: int = 1 << 16) -> MonteCarloReport:
    """Run `trials` independent trials and aggregate.  The report depends only
    on (parameters, trials, master_seed), not on chunking or execution order."""
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")
    schedule = build_schedule(ch, est, cfg)
    acc = _BatchStats()
    for start in range(0, trials, chunk_size):
        batch, _ = simulate_batch(ch, est, cfg, schedule, master_seed,
                                  range(start, min(start + chunk_size, trials)),
                                  qfc_sign=qfc_sign, dither=dither)
        acc = acc.merge(batch)
    return _report_from_stats(acc, cfg, master_seed)


@dataclass(frozen=True)
class BudgetCheck:
    """Outcome of the error-budget audit, with one message per failure."""

    passed: bool
    p_e_ok: bool
    aliasing_ok: bool
    pam_ok: bool
    failures: tuple


def error_budget_check(report: MonteCarloReport, cfg: CodingConfig,
                       schedule: Schedule) -> BudgetCheck:
    """Audit a campaign against the design targets: total error within
    epsilon, each per-step aliasing rate within 1.5x its budget p_m, and the
    clean final-step PAM error rate within its analytic bound."""
    failures = []

    p_e_ok = report.p_e_upper_95 <= cfg.epsilon
    if not p_e_ok:
        failures.append(
            f"p_e upper bound {report.p_e_upper_95:.3e} exceeds epsilon {cfg.epsilon:.3e}")

    limit = 1.5 * schedule.p_m
    alias_uppers = [clopper_pearson_upper(int(k), report.trials)
                    for k in report.aliasing_counts]
    aliasing_ok = all(u <= limit for u in alias_uppers)
    if not aliasing_ok:
        worst = int(np.argmax(alias_uppers))
        failures.append(
            f"aliasing rate upper bound {alias_uppers[worst]:.3e} at step "
            f"{worst + 1} exceeds 1.5*p_m = {limit:.3e}")

    # Observed rate, not its CP upper bound: the analytic bound can sit far
    # below 1/trials (e.g. noiseless runs), where any finite-sample upper
    # confidence bound would fail vacuously.
    var_n = float(schedule.sigma_sq_H[-1])
    if var_n > 0.0:
        arg = math.sqrt(3.0 / (var_n * (cfg.M ** 2 - 1.0)))
        pam_bound = 2.0 * q_function(arg) if math.isfinite(arg) else 0.0
    else:
        pam_bound = 0.0  # planned variance underflowed: essentially noiseless
    pam_ok = report.pam_error_rate <= pam_bound
    if not pam_ok:
        failures.append(
            f"PAM error rate {report.pam_error_rate:.3e} exceeds analytic "
            f"bound {pam_bound:.3e}")

    return BudgetCheck(passed=not failures, p_e_ok=p_e_ok,
                       aliasing_ok=aliasing_ok, pam_ok=pam_ok,
                       failures=tuple(failures))
