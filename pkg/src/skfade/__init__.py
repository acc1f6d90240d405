"""Iterative feedback coding for quasi-static fading channels with imperfect
transmitter CSI and quantized feedback.

The package splits into:

* lattice      -- scalar lattice quantizer, centered modulo, dither streams
* params       -- scheme constants, variance schedules, achievable rate
* channel      -- forward fading channel and quantized feedback channel
* transceiver  -- transmitter/receiver state machines and PAM decoding
* coupled      -- modulo-free shadow system for path-level verification
* montecarlo   -- vectorized error-rate campaigns and budget audits
* cli          -- rate sweeps, simulation campaigns, lemma verification
"""

from .channel import NoiseRealization, draw_noise, feedback, forward
from .coupled import (
    CoupledTrace,
    EventIndicators,
    check_lemma1,
    run_coupled,
    run_coupled_batch,
    variance_recursion_oracle,
)
from .errors import (
    DegenerateChannel,
    DegenerateCsi,
    DomainError,
    InvalidConfig,
    InvalidInput,
    InvalidMessage,
    ProtocolError,
    QuantizerTooCoarse,
    SkfadeError,
)
from .lattice import Lattice, dither_sequence, modulo, nearest_point
from .montecarlo import (
    BudgetCheck,
    MonteCarloReport,
    TrialOutcome,
    TrialRecord,
    clopper_pearson_upper,
    error_budget_check,
    estimate,
    run_trial,
    run_trial_full,
)
from .params import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    RatePoint,
    Schedule,
    achievable_rate,
    build_schedule,
    compute_H,
    pam_constellation,
    q_function,
    q_inverse,
    select_alphabet,
    sigma_sq_h_closed_form,
    validate_pair,
)
from .transceiver import (
    EpsilonTrace,
    ReceiverState,
    TransmitterState,
    decode,
    map_message,
    rx_feedback,
    rx_init,
    rx_step,
    tx_init,
    tx_step,
)

__version__ = "0.1.0"
