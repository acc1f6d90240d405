"""Scheme constants and schedules for the iterative feedback coding scheme.

Given the channel (fading gain h, noise variance, power limits, quantizer
bound) and the transmitter's channel estimate (h_hat with distortion bound D),
this module derives everything the transceiver needs ahead of time:

* the pessimistic gain H = max(|h_hat| - D, 0) the transmitter must plan for,
* the per-step aliasing probability budget p_m and the induced feedback
  scaling constants A, B (A/B is the rate penalty paid for quantization),
* the feedback gains gamma_i, the MMSE update coefficients beta_i, and the
  estimation-error variance schedules sigma_i^2(H) (planned) and sigma_i^2
  (actual, known to the receiver),
* the unit-average-power PAM constellation, and
* the finite-blocklength achievable rate.

The variance schedules are evolved in standard-deviation / ratio space; this
is algebraically identical to the variance recursions but survives extreme
SNR (sigma -> 0) where the variances themselves underflow double precision.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    DegenerateChannel,
    DegenerateCsi,
    DomainError,
    InvalidConfig,
    InvalidInput,
    QuantizerTooCoarse,
)

__all__ = [
    "ChannelParams",
    "CsiEstimate",
    "CodingConfig",
    "Schedule",
    "RatePoint",
    "q_function",
    "q_inverse",
    "compute_H",
    "pam_constellation",
    "build_schedule",
    "sigma_sq_h_closed_form",
    "achievable_rate",
    "select_alphabet",
    "validate_pair",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _require_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInput(f"{name} must be finite, got {v}")


@dataclass(frozen=True)
class ChannelParams:
    """True channel: Y = h*X + W with W ~ N(0, sigma_sq).

    P and P_tilde are the forward and feedback average power limits; sigma_z
    bounds the quantized-feedback residual, |Z| <= sigma_z almost surely.
    """

    h: float
    sigma_sq: float
    P: float
    P_tilde: float
    sigma_z: float

    def __post_init__(self):
        _require_finite("ChannelParams", self.h, self.sigma_sq, self.P,
                        self.P_tilde, self.sigma_z)
        if self.h == 0:
            raise DegenerateChannel("fading coefficient h must be non-zero")
        if self.sigma_sq <= 0 or self.P <= 0 or self.P_tilde <= 0:
            raise InvalidConfig("sigma_sq, P and P_tilde must be > 0")
        if self.sigma_z < 0:
            raise InvalidConfig("sigma_z must be >= 0")
        if math.sqrt(3.0 * self.P_tilde) <= self.sigma_z:
            raise QuantizerTooCoarse(
                "sqrt(3*P_tilde) must exceed sigma_z; the aliasing budget "
                "cannot be met by any feedback gain")

    @property
    def snr(self) -> float:
        return self.P / self.sigma_sq


@dataclass(frozen=True)
class CsiEstimate:
    """Transmitter-side knowledge: estimate h_hat and distortion bound D."""

    h_hat: float
    D: float

    def __post_init__(self):
        _require_finite("CsiEstimate", self.h_hat, self.D)
        if self.D < 0:
            raise InvalidConfig("distortion bound D must be >= 0")


def validate_pair(ch: ChannelParams, est: CsiEstimate) -> None:
    """Check the simulation contract |h - h_hat| <= D."""
    if abs(ch.h - est.h_hat) > est.D:
        raise InvalidConfig(
            f"|h - h_hat| = {abs(ch.h - est.h_hat)} exceeds the distortion "
            f"bound D = {est.D}")


@dataclass(frozen=True)
class CodingConfig:
    """Blocklength N, target error probability epsilon, PAM alphabet size M."""

    N: int
    epsilon: float
    M: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidConfig(f"blocklength N must be an integer >= 2, got {self.N}")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidConfig(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.M) != self.M or self.M < 2:
            raise InvalidConfig(f"alphabet size M must be an integer >= 2, got {self.M}")


@dataclass(frozen=True)
class Schedule:
    """Everything precomputed before a transmission block.

    gamma has length N (gamma[N-1] exists for completeness but the last
    feedback round uses gamma[N-2]); beta has length N-1.  sigma_sq_H is the
    planned error-variance schedule built from H; sigma_sq_true is the actual
    one driven by h, always <= sigma_sq_H elementwise.
    """

    H: float
    p_m: float
    A: float
    B: float
    L: float
    alpha: float
    d_tilde: float
    gamma: np.ndarray
    beta: np.ndarray
    sigma_sq_H: np.ndarray
    sigma_sq_true: np.ndarray
    constellation: np.ndarray
    d_min: float


@dataclass(frozen=True)
class RatePoint:
    """Achievable rate (bits per channel use) at one (N, epsilon, D) point."""

    N: int
    epsilon: float
    D: float
    rate: float


def q_function(x):
    """Gaussian tail probability Pr{N(0,1) > x}.  Accepts arrays."""
    _require_finite("q_function argument", x)
    out = 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / _SQRT2)
    return out if out.ndim else float(out)


def q_inverse(p: float) -> float:
    """Inverse Gaussian tail on (0, 0.5]: the x >= 0 with q_function(x) = p.

    Bisection on [0, 40] down to machine width, then Newton polish.  Robust
    for the p ~ 1e-9 tails the scheme evaluates.
    """
    if not (0.0 < p <= 0.5):
        raise DomainError(f"q_inverse requires p in (0, 0.5], got {p}")
    if p == 0.5:
        return 0.0
    lo, hi = 0.0, 40.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if q_function(mid) > p:
            lo = mid
        else:
            hi = mid
    x = hi
    for _ in range(3):
        pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
        if pdf == 0.0:
            break
        x_next = x + (q_function(x) - p) / pdf
        if not math.isfinite(x_next) or x_next == x:
            break
        x = x_next
    return x


def compute_H(est: CsiEstimate) -> float:
    """Pessimistic gain magnitude max(|h_hat| - D, 0); |h| >= H whenever
    |h - h_hat| <= D."""
    return max(abs(est.h_hat) - est.D, 0.0)


def pam_constellation(M: int):
    """Unit-average-power M-PAM: points (2w - 1 - M) * d/2 for w = 1..M,
    spacing d = sqrt(12 / (M^2 - 1)).  Returns (points, d)."""
    if int(M) != M or M < 2:
        raise InvalidConfig(f"PAM size must be an integer >= 2, got {M}")
    d = math.sqrt(12.0 / (M * M - 1.0))
    w = np.arange(1, M + 1, dtype=np.float64)
    points = (2.0 * w - 1.0 - M) * (d / 2.0)
    points.setflags(write=False)
    return points, d


def _feedback_constants(ch: ChannelParams, p_m: float):
    """A and B of the aliasing budget: the feedback gain headroom and the
    worst-case transmit amplitude it implies."""
    qinv = q_inverse(p_m / 2.0)
    root3p = math.sqrt(3.0 * ch.P_tilde)
    base = (root3p - ch.sigma_z) / qinv
    A = base * base
    B = (abs(root3p - ch.sigma_z) / qinv + ch.sigma_z) ** 2
    return A, B


def build_schedule(ch: ChannelParams, est: CsiEstimate, cfg: CodingConfig) -> Schedule:
    """Derive all per-block constants and per-step schedules.

    Raises DegenerateCsi when H = 0 (no schedule exists; the rate is zero),
    and InvalidConfig when |h - h_hat| > D.
    """
    validate_pair(ch, est)
    H = compute_H(est)
    if H == 0.0:
        raise DegenerateCsi(
            "H = max(|h_hat| - D, 0) is zero; the feedback gains are undefined")

    N = int(cfg.N)
    p_m = cfg.epsilon / (2.0 * (N - 1))
    A, B = _feedback_constants(ch, p_m)
    L = q_inverse(cfg.epsilon / 4.0) ** 2 / 3.0
    alpha = math.sqrt(ch.P / B)
    d_tilde = math.sqrt(12.0 * ch.P_tilde)

    snr = ch.snr
    h = ch.h
    sqrt_A = math.sqrt(A)
    c_H = H * H * snr * (A / B)   # per-step SNR gain planned from H
    c_h = h * h * snr * (A / B)   # actual per-step SNR gain
    shrink = math.sqrt(1.0 + c_H)

    sig_h = ch.sigma_sq ** 0.5 / (math.sqrt(ch.P) * H)  # sigma_1(H)
    s = (H * H) / (h * h)                               # sigma_i^2 / sigma_i^2(H)

    gamma = np.empty(N)
    sigma_sq_H = np.empty(N)
    sigma_sq_true = np.empty(N)
    beta = np.empty(N - 1)
    for i in range(N):
        sigma_sq_H[i] = sig_h * sig_h
        sigma_sq_true[i] = (sig_h * sig_h) * s
        gamma[i] = sqrt_A / sig_h
        if i < N - 1:
            t = c_h * s
            beta[i] = (sig_h / (h * alpha * sqrt_A)) * (t / (1.0 + t))
            sig_h = sig_h / shrink
            s = s * (1.0 + c_H) / (1.0 + c_h * s)

    constellation, d_min = pam_constellation(cfg.M)
    for arr in (gamma, beta, sigma_sq_H, sigma_sq_true):
        arr.setflags(write=False)
    return Schedule(H=H, p_m=p_m, A=A, B=B, L=L, alpha=alpha, d_tilde=d_tilde,
                    gamma=gamma, beta=beta, sigma_sq_H=sigma_sq_H,
                    sigma_sq_true=sigma_sq_true, constellation=constellation,
                    d_min=d_min)


def sigma_sq_h_closed_form(H: float, snr: float, a_over_b: float, N: int) -> np.ndarray:
    """Closed form of the planned variance schedule:
    sigma_i^2(H) = (1 / (H^2 snr)) * (1 / (1 + H^2 snr A/B))^(i-1).

    Dual of the recursion used by build_schedule; the two must agree to
    floating-point accuracy.
    """
    c = H * H * snr
    q = 1.0 / (1.0 + c * a_over_b)
    return (1.0 / c) * q ** np.arange(N, dtype=np.float64)


def achievable_rate(ch: ChannelParams, est: CsiEstimate, N: int, epsilon: float) -> RatePoint:
    """Finite-blocklength achievable rate in bits per channel use:

        R = 1/(2N) * log2(1 + H^2 snr (1 + H^2 snr A/B)^(N-1) / L).

    Returns rate 0 when H = 0.  Evaluated in log space so large N cannot
    overflow.
    """
    if int(N) != N or N < 2:
        raise InvalidConfig(f"blocklength N must be an integer >= 2, got {N}")
    if not (0.0 < epsilon < 1.0):
        raise InvalidConfig(f"epsilon must lie in (0, 1), got {epsilon}")
    H = compute_H(est)
    if H == 0.0:
        return RatePoint(N=int(N), epsilon=epsilon, D=est.D, rate=0.0)
    p_m = epsilon / (2.0 * (N - 1))
    A, B = _feedback_constants(ch, p_m)
    L = q_inverse(epsilon / 4.0) ** 2 / 3.0
    c = H * H * ch.snr
    log2_snr_n = math.log2(c) + (N - 1) * math.log2(1.0 + c * (A / B))
    rate = float(np.logaddexp2(0.0, log2_snr_n - math.log2(L))) / (2.0 * N)
    return RatePoint(N=int(N), epsilon=epsilon, D=est.D, rate=rate)


def select_alphabet(R: float, N: int) -> int:
    """Largest PAM size whose rate stays within the target: max(2, floor(2^(N R))).

    Guarantees M^2 - 1 <= 2^(2 N R) - 1, keeping the PAM detection-error
    budget valid.
    """
    if not np.isfinite(R) or R < 0:
        raise DomainError(f"rate must be finite and >= 0, got {R}")
    if int(N) != N or N < 2:
        raise InvalidConfig(f"blocklength N must be an integer >= 2, got {N}")
    if N * R > 53:
        raise InvalidConfig(
            f"derived alphabet 2^{N * R:.1f} exceeds 2^53; not simulatable")
    return max(2, math.floor(2.0 ** (N * R)))
