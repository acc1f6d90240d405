"""Scalar lattice arithmetic: nearest-point quantizer, centered modulo, dither.

The one-dimensional lattice with spacing G is {G*a : a integer}.  The centered
modulo maps any real onto the fundamental cell [-G/2, G/2); it is the shared
primitive behind the quantized feedback link and the modulo encoder/decoder.

All functions accept scalars or numpy arrays and are pure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, InvalidInput

__all__ = ["Lattice", "nearest_point", "modulo", "dither_sequence"]


@dataclass(frozen=True)
class Lattice:
    """One-dimensional lattice {spacing * a : a integer}."""

    spacing: float

    def __post_init__(self):
        g = self.spacing
        if not (np.isfinite(g) and g > 0):
            raise InvalidConfig(f"lattice spacing must be finite and > 0, got {g}")

    @property
    def half(self) -> float:
        return self.spacing / 2.0


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise InvalidInput("lattice operations require finite input")


def modulo(x, lat: Lattice):
    """Centered modulo: x minus its nearest lattice point, in [-G/2, G/2).

    Built on fmod, which is exact for all magnitudes, so the reduction stays
    correct even when |x| is astronomically larger than the spacing (the
    G*floor(x/G + 1/2) form loses whole cells to rounding there).  Points
    exactly halfway between lattice points reduce to -G/2, which makes the
    output interval exactly half-open.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x)
    g = lat.spacing
    half = lat.half
    m = np.fmod(x, g)  # exact, same sign as x, |m| < G
    # Sterbenz: m -+ G is exact for G/2 <= |m| < G.
    m = np.where(m >= half, m - g, m)
    m = np.where(m < -half, m + g, m)
    return m if m.ndim else float(m)


def nearest_point(x, lat: Lattice):
    """Nearest lattice point of x; ties resolve so x - t lands in [-G/2, G/2)."""
    x = np.asarray(x, dtype=np.float64)
    r = x - modulo(x, lat)
    return r if r.ndim else float(r)


def dither_sequence(seed: int, count: int, lat: Lattice) -> np.ndarray:
    """`count` i.i.d. draws uniform on [-G/2, G/2), reproducible from `seed`.

    Transmitter and receiver regenerate the identical sequence from the shared
    seed (common randomness).
    """
    if count < 0:
        raise InvalidConfig(f"count must be >= 0, got {count}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return rng.uniform(-lat.half, lat.half, size=int(count))
