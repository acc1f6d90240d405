"""Transmitter and receiver state machines for one transmission block.

Round 1: the transmitter scales the PAM point, X_1 = sqrt(P) * Theta, and the
receiver forms Theta_hat_1 = Y_1 / (h sqrt(P)).

Rounds i >= 2: the receiver feeds back a dithered, modulo-wrapped version of
its scaled estimate; the transmitter wraps out its own contribution, leaving
only the (scaled) estimation error plus the quantizer residual:

    X_i = alpha * M[Y_tilde_{i-1} - gamma_{i-1} Theta - V_{i-1}]
        = alpha * M[gamma_{i-1} eps_{i-1} + Z_{i-1}]          (modulo identity)

The receiver removes the known residual through the auxiliary signal
Ydot_i = Y_i - h alpha Z_{i-1} and applies the MMSE update
Theta_hat_i = Theta_hat_{i-1} - beta_{i-1} Ydot_i.  After round N the message
is recovered by minimum-distance PAM decoding.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannel, InvalidMessage, ProtocolError
from .lattice import Lattice, modulo
from .params import Schedule

__all__ = [
    "TransmitterState",
    "ReceiverState",
    "EpsilonTrace",
    "map_message",
    "tx_init",
    "tx_step",
    "rx_init",
    "rx_step",
    "rx_feedback",
    "decode",
]


@dataclass
class TransmitterState:
    """Single-trial transmitter: message point, schedule, shared dithers."""

    theta: float
    schedule: Schedule
    dithers: np.ndarray
    step: int = 2  # index of the next transmission

    def __post_init__(self):
        if not np.any(self.schedule.constellation == self.theta):
            raise InvalidMessage(f"theta {self.theta} is not a constellation point")


@dataclass
class ReceiverState:
    """Single-trial receiver: running estimate, true h, recorded residuals."""

    theta_hat: float
    h: float
    schedule: Schedule
    dithers: np.ndarray
    step: int = 1  # index of the latest estimate
    z_history: list = field(default_factory=list)


@dataclass
class EpsilonTrace:
    """Per-step estimation errors eps_i = Theta_hat_i - Theta (diagnostics)."""

    eps: np.ndarray


def map_message(w: int, constellation: np.ndarray) -> float:
    """PAM point of message w (1-indexed into the ascending constellation)."""
    if int(w) != w or not (1 <= w <= len(constellation)):
        raise InvalidMessage(f"message must lie in 1..{len(constellation)}, got {w}")
    return float(constellation[int(w) - 1])


def tx_init(theta: float, P: float) -> float:
    """First transmission X_1 = sqrt(P) * theta."""
    return math.sqrt(P) * theta


def tx_step(y_tilde_prev: float, state: TransmitterState) -> float:
    """Transmission i >= 2 from the feedback received for round i-1."""
    i = state.step
    n = len(state.schedule.gamma)
    if not (2 <= i <= n):
        raise ProtocolError(f"transmitter step {i} outside 2..{n}")
    g = state.schedule.gamma[i - 2]
    v = state.dithers[i - 2]
    lat = Lattice(state.schedule.d_tilde)
    x = state.schedule.alpha * modulo(y_tilde_prev - g * state.theta - v, lat)
    state.step = i + 1
    return x


def rx_init(y1: float, h: float, P: float) -> float:
    """First estimate Theta_hat_1 = Y_1 / (h sqrt(P))."""
    if h == 0:
        raise DegenerateChannel("receiver requires h != 0")
    return y1 / (h * math.sqrt(P))


def rx_step(y_i: float, state: ReceiverState) -> float:
    """Estimate update for round i: subtract the known residual, apply MMSE."""
    i = state.step + 1
    n = len(state.schedule.gamma)
    if i > n:
        raise ProtocolError(f"receiver already at final step {state.step}")
    if len(state.z_history) < i - 1:
        raise ProtocolError(f"feedback residual Z_{i - 1} not recorded")
    z = state.z_history[i - 2]
    ydot = y_i - state.h * state.schedule.alpha * z
    state.theta_hat = state.theta_hat - state.schedule.beta[i - 2] * ydot
    state.step = i
    return state.theta_hat


def rx_feedback(state: ReceiverState) -> float:
    """Feedback signal for the current estimate: M[gamma_i Theta_hat_i + V_i].

    Output lies in [-d_tilde/2, d_tilde/2), so instantaneous feedback power is
    at most 3*P_tilde and, under uniform dither, averages exactly P_tilde.
    """
    i = state.step
    n = len(state.schedule.gamma)
    if not (1 <= i <= n - 1):
        raise ProtocolError(f"feedback step {i} outside 1..{n - 1}")
    g = state.schedule.gamma[i - 1]
    v = state.dithers[i - 1]
    return modulo(g * state.theta_hat + v, Lattice(state.schedule.d_tilde))


def decode(theta_hat_n: float, constellation: np.ndarray) -> int:
    """Minimum-distance PAM decoding; ties resolve to the smaller index."""
    return int(np.argmin(np.abs(np.asarray(constellation) - theta_hat_n))) + 1


def _decode_indices(theta_hat: np.ndarray, constellation: np.ndarray, d_min: float) -> np.ndarray:
    """Vectorized decode, identical to `decode` (including tie direction).

    Rounds to the nearest grid index, then settles against both neighbors so
    floating-point near-ties resolve exactly as the argmin scan would.
    """
    m = len(constellation)
    j = np.rint((theta_hat - constellation[0]) / d_min).astype(np.int64)
    np.clip(j, 0, m - 1, out=j)
    best = j.copy()
    bd = np.abs(theta_hat - constellation[best])
    for off in (-1, 1):
        k = j + off
        valid = (k >= 0) & (k < m)
        kc = np.clip(k, 0, m - 1)
        d = np.abs(theta_hat - constellation[kc])
        better = valid & ((d <= bd) if off == -1 else (d < bd))
        best[better] = k[better]
        bd = np.minimum(bd, np.where(valid, d, np.inf))
    return best + 1
