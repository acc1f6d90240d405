"""Modulo-free coupled reference system for per-path verification.

Running the estimation-error recursion without any modulo wrap, on the same
noise path as a real trial, gives a linear-Gaussian shadow system (primed
quantities) whose error events can be analyzed in closed form:

    eps'_1     = W_1 / (h sqrt(P))
    eps'_{i+1} = eps'_i - beta_i * (h alpha gamma_i eps'_i + W_{i+1})

The two systems coincide exactly until the first aliasing event, and the
union of error events fires on a path in one system iff it fires in the
other, which is what makes the shadow system a valid analysis proxy.  The
event flags reuse the real trial's recorded quantizer residuals Z_i.
"""

from dataclasses import dataclass

import math
import numpy as np

from .channel import NoiseRealization
from .errors import ProtocolError
from .params import ChannelParams, Schedule, sigma_sq_h_closed_form

__all__ = [
    "CoupledTrace",
    "EventIndicators",
    "run_coupled",
    "run_coupled_batch",
    "check_lemma1",
    "variance_recursion_oracle",
]


@dataclass
class CoupledTrace:
    """Shadow-system outputs for one noise path."""

    eps_prime: np.ndarray                # eps'_1 .. eps'_N
    aliasing_events_prime: np.ndarray    # bool, length N-1
    pam_error_prime: bool


@dataclass
class EventIndicators:
    """Error events observed in the real (modulo) system on one path:
    aliasing[i]: gamma_{i+1} eps_{i+1} + Z_{i+1} left the feedback cell;
    pam_error: eps_N left the PAM decision half-cell."""

    aliasing: np.ndarray
    pam_error: bool


def _events(eps, z, schedule: Schedule):
    """Event flags for one path: eps is the 1-D estimation-error trace."""
    assert eps.ndim == 1
    half_d = schedule.d_tilde / 2.0
    u = schedule.gamma[: len(z)] * eps[: len(z)] + z
    aliasing = (u < -half_d) | (u >= half_d)
    half_c = schedule.d_min / 2.0
    pam = (eps[-1] < -half_c) | (eps[-1] >= half_c)
    return aliasing, pam


def run_coupled(noise: NoiseRealization, schedule: Schedule, ch: ChannelParams) -> CoupledTrace:
    """Propagate the shadow recursion along one recorded noise path.

    Requires the trial's feedback residuals to be filled in; Z only enters
    the event flags, never the recursion itself.
    """
    n = len(schedule.gamma)
    w = np.asarray(noise.forward_noise, dtype=np.float64)
    z = np.asarray(noise.feedback_residuals, dtype=np.float64)
    if len(w) != n or len(z) != n - 1:
        raise ProtocolError(
            f"noise lengths ({len(w)}, {len(z)}) do not match blocklength {n}")
    if np.any(np.isnan(z)):
        raise ProtocolError("feedback residuals not filled; run the real trial first")

    eps = np.empty(n)
    eps[0] = w[0] / (ch.h * math.sqrt(ch.P))
    for i in range(n - 1):
        ydot = ch.h * schedule.alpha * schedule.gamma[i] * eps[i] + w[i + 1]
        eps[i + 1] = eps[i] - schedule.beta[i] * ydot
    aliasing, pam = _events(eps, z, schedule)
    return CoupledTrace(eps_prime=eps, aliasing_events_prime=aliasing,
                        pam_error_prime=bool(pam))


def run_coupled_batch(forward_noise: np.ndarray, residuals: np.ndarray,
                      schedule: Schedule, ch: ChannelParams):
    """Vectorized shadow run over many paths.

    forward_noise is (T, N), residuals (T, N-1).  Returns
    (eps_prime (T, N), aliasing (T, N-1), pam_error (T,)).
    """
    n = len(schedule.gamma)
    w = np.asarray(forward_noise, dtype=np.float64)
    z = np.asarray(residuals, dtype=np.float64)
    if w.shape[1] != n or z.shape[1] != n - 1:
        raise ProtocolError("noise shapes do not match the schedule blocklength")
    t = w.shape[0]
    eps = np.empty((t, n))
    eps[:, 0] = w[:, 0] / (ch.h * math.sqrt(ch.P))
    for i in range(n - 1):
        ydot = ch.h * schedule.alpha * schedule.gamma[i] * eps[:, i] + w[:, i + 1]
        eps[:, i + 1] = eps[:, i] - schedule.beta[i] * ydot
    half_d = schedule.d_tilde / 2.0
    u = schedule.gamma[: n - 1] * eps[:, : n - 1] + z
    aliasing = (u < -half_d) | (u >= half_d)
    half_c = schedule.d_min / 2.0
    pam = (eps[:, -1] < -half_c) | (eps[:, -1] >= half_c)
    return eps, aliasing, pam


def check_lemma1(original: EventIndicators, coupled: CoupledTrace) -> bool:
    """Per-path identity: the union of error events fires in the real system
    iff it fires in the shadow system.  Must hold on every path, not just in
    distribution."""
    union_orig = bool(np.any(original.aliasing)) or bool(original.pam_error)
    union_coup = (bool(np.any(coupled.aliasing_events_prime))
                  or bool(coupled.pam_error_prime))
    return union_orig == union_coup


def variance_recursion_oracle(schedule: Schedule, ch: ChannelParams) -> np.ndarray:
    """Shadow-error variances sigma_i^2 = E[eps'_i^2] from the literal
    variance recursion, with gamma_i^2 taken from the closed-form planned
    schedule.  Independent cross-check of Schedule.sigma_sq_true."""
    n = len(schedule.gamma)
    ssq_h = sigma_sq_h_closed_form(schedule.H, ch.snr, schedule.A / schedule.B, n)
    g_sq = schedule.A / ssq_h
    h_sq = ch.h * ch.h
    a_sq = schedule.alpha ** 2
    v = np.empty(n)
    v[0] = ch.sigma_sq / (ch.P * h_sq)
    for i in range(n - 1):
        v[i + 1] = v[i] / (1.0 + h_sq * a_sq * g_sq[i] * v[i] / ch.sigma_sq)
    return v
