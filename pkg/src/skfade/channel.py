"""Forward fading channel and quantized feedback channel.

Forward link:   Y = h*X + W,  W ~ N(0, sigma_sq) i.i.d.
Feedback link:  Y_tilde = X_tilde + Z, where Z is the residual of the
receiver's own lattice quantizer (spacing 2*sigma_z), so |Z| <= sigma_z with
probability one and the receiver knows Z exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .errors import InvalidConfig
from .lattice import Lattice, modulo
from .params import ChannelParams, CodingConfig

__all__ = ["NoiseRealization", "forward", "feedback", "draw_noise"]

QFC_SIGNS = ("quantizer", "paper_literal")


@dataclass
class NoiseRealization:
    """All randomness of one trial.

    forward_noise holds W_1..W_N and dithers V_1..V_{N-1}; both are drawn up
    front.  feedback_residuals (Z_1..Z_{N-1}) start as NaN and are filled
    during the run, because each Z_i depends on the transmitted X_tilde_i.
    """

    forward_noise: np.ndarray
    dithers: np.ndarray
    feedback_residuals: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.feedback_residuals is None:
            self.feedback_residuals = np.full(len(self.dithers), np.nan)


def forward(x, ch: ChannelParams, w):
    """One forward-channel use: h*x + w."""
    return ch.h * x + w


def feedback(x_tilde, ch: ChannelParams, qfc_sign: str = "quantizer"):
    """One feedback-channel use; returns (y_tilde, z).

    Default convention ("quantizer"): z = -modulo(x_tilde), so the transmitter
    receives the nearest lattice point, i.e. the quantized value.
    "paper_literal" keeps z = +modulo(x_tilde) instead.  Either way
    y_tilde = x_tilde + z, |z| <= sigma_z, and the receiver records z.
    sigma_z = 0 is the perfect-feedback limit: z = 0.
    """
    if qfc_sign not in QFC_SIGNS:
        raise InvalidConfig(f"qfc_sign must be one of {QFC_SIGNS}, got {qfc_sign!r}")
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    scalar = x_tilde.ndim == 0
    if ch.sigma_z == 0.0:
        z = np.zeros_like(x_tilde)
    else:
        m = modulo(x_tilde, Lattice(2.0 * ch.sigma_z))
        z = np.negative(m) if qfc_sign == "quantizer" else np.asarray(m)
        assert np.all(np.abs(z) <= ch.sigma_z)
    y_tilde = x_tilde + z
    if scalar:
        return float(y_tilde), float(z)
    return y_tilde, z


def _draw_noise_with_rng(ch: ChannelParams, cfg: CodingConfig, trial_seed: int):
    """Noise realization plus the trial's stream, positioned after the draws.

    Canonical order: forward noise W (N values), then dithers V (N-1 values).
    The caller may keep drawing from the returned stream (the message draw).
    """
    rng = _rng.stream(trial_seed)
    w = rng.normal(0.0, ch.sigma_sq ** 0.5, size=cfg.N)
    half = np.sqrt(12.0 * ch.P_tilde) / 2.0
    v = rng.uniform(-half, half, size=cfg.N - 1)
    return NoiseRealization(forward_noise=w, dithers=v), rng


def draw_noise(ch: ChannelParams, cfg: CodingConfig, trial_seed: int) -> NoiseRealization:
    """Deterministic per-trial noise: i.i.d. N(0, sigma_sq) forward noise and
    uniform dithers on the feedback lattice cell."""
    noise, _ = _draw_noise_with_rng(ch, cfg, trial_seed)
    return noise
