"""Exception types raised by the simulator.

All validation failures derive from SkfadeError so callers (and the CLI)
can distinguish bad inputs from genuine bugs.
"""


class SkfadeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SkfadeError, ValueError):
    """A numeric argument is non-finite or otherwise unusable."""


class DomainError(SkfadeError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class InvalidConfig(SkfadeError, ValueError):
    """A configuration value violates a structural constraint (e.g. N < 2)."""


class DegenerateCsi(SkfadeError, ValueError):
    """The pessimistic channel gain H = max(|h_hat| - D, 0) is zero."""


class QuantizerTooCoarse(SkfadeError, ValueError):
    """sqrt(3 * P_tilde) <= sigma_z: the feedback quantizer bound is vacuous."""


class DegenerateChannel(SkfadeError, ValueError):
    """The fading coefficient h is zero."""


class InvalidMessage(SkfadeError, ValueError):
    """Message index outside 1..M."""


class ProtocolError(SkfadeError, RuntimeError):
    """Transceiver state machine driven out of order."""
