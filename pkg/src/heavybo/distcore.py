"""Generalized normal distribution: density, sampling, scale calibration.

The density with location ``x0``, scale ``sigma`` and shape ``gamma`` is

    f(x) = gamma / (2 sigma Gamma(1/gamma)) * exp(-|(x - x0) / sigma|**gamma)

``gamma`` doubles as the tail parameter: a variable with this law is alpha
sub-exponential exactly for alpha <= gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError
from .rng import stream

# math.gamma overflows a double just above 171.62
GAMMA_MAX_ARG = 171.0


def gamma_fn(x: float) -> float:
    """Gamma function on ``(0, 171]``.

    Raises DomainError for non-positive, non-finite or overflowing arguments.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    if x > GAMMA_MAX_ARG:
        raise DomainError(f"gamma_fn({x!r}) overflows double precision")
    return math.gamma(x)


@dataclass(frozen=True)
class GenNormalParams:
    location: float = 0.0
    scale: float = 1.0
    shape: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.location)):
            raise DomainError(f"location must be finite, got {self.location!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"scale must be positive, got {self.scale!r}")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise DomainError(f"shape must be positive, got {self.shape!r}")

    @property
    def variance(self) -> float:
        g = self.shape
        return self.scale**2 * math.exp(math.lgamma(3.0 / g) - math.lgamma(1.0 / g))


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray = field(repr=False)
    seed: int
    params: GenNormalParams

    def __len__(self):
        return len(self.values)


def gennormal_pdf(x, params: GenNormalParams):
    """Density of the generalized normal law; accepts scalars or arrays."""
    g, s = params.shape, params.scale
    norm = g / (2.0 * s * gamma_fn(1.0 / g))
    u = np.abs((np.asarray(x, dtype=float) - params.location) / s)
    out = norm * np.exp(-(u**g))
    return float(out) if np.ndim(out) == 0 else out


def draw_gennormal(rng: np.random.Generator, params: GenNormalParams, size):
    """Draw from an existing generator.

    Uses the exact inversion |X - x0| = sigma * G**(1/gamma) with
    G ~ Gamma(1/gamma, 1) and an independent uniform sign.
    """
    g = params.shape
    mag = rng.standard_gamma(1.0 / g, size=size) ** (1.0 / g)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return params.location + params.scale * sign * mag


def gennormal_sample(params: GenNormalParams, count: int, seed: int) -> SampleBatch:
    if count < 1:
        raise DataError("gennormal_sample needs count >= 1")
    values = draw_gennormal(stream(seed, "gennormal"), params, int(count))
    return SampleBatch(values=values, seed=int(seed), params=params)


def orlicz_norm_gennormal(scale: float, shape: float) -> float:
    """Exponential Orlicz norm ``||X||_{psi_gamma}`` of a centred generalized normal."""
    if scale <= 0 or shape <= 0:
        raise DomainError("scale and shape must be positive")
    return scale / (1.0 - 2.0 ** (-shape)) ** (1.0 / shape)


def unit_variance_scale(shape: float) -> float:
    """Scale giving unit variance: sqrt(Gamma(1/g) / Gamma(3/g))."""
    if shape <= 0:
        raise DomainError(f"shape must be positive, got {shape!r}")
    # log-gamma keeps tiny shapes (huge Gamma arguments) finite
    return math.exp(0.5 * (math.lgamma(1.0 / shape) - math.lgamma(3.0 / shape)))


def unit_orlicz_scale(shape: float) -> float:
    """Scale giving exponential Orlicz norm exactly 1."""
    if shape <= 0:
        raise DomainError(f"shape must be positive, got {shape!r}")
    return (1.0 - 2.0 ** (-shape)) ** (1.0 / shape)


def calibrated_params(shape: float, calibration: str = "variance") -> GenNormalParams:
    """Centred parameters with unit variance or unit Orlicz norm."""
    if calibration == "variance":
        return GenNormalParams(0.0, unit_variance_scale(shape), shape)
    if calibration == "orlicz":
        return GenNormalParams(0.0, unit_orlicz_scale(shape), shape)
    raise DomainError(f"unknown calibration {calibration!r}")
