"""Pixelated SLM placed in the down-converted beams.

The parametric phase ``phi_offset + alpha theta_+ + beta theta_-`` is split
into one linear ramp per arm and written pixel by pixel. A beam at angle
``theta`` hits the mask at ``x = z theta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaskMode",
    "SlmConfig",
    "PhaseParams",
    "OffMaskError",
    "per_arm_decomposition",
    "pixelated_arm_phase",
    "staircase_phase",
    "pixel_edges",
    "gap_visibility_factor",
]


class OffMaskError(ValueError):
    pass


class MaskMode(enum.Enum):
    IDEAL = "ideal"
    PIXELATED = "pixelated"


@dataclass(frozen=True)
class SlmConfig:
    pixel_pitch: float = 100e-6
    gap_width: float = 3e-6
    pixel_count: int = 640
    distance: float = 0.310
    phase_levels: int | None = None  # None: continuous phase

    def __post_init__(self):
        if not 0 <= self.gap_width < self.pixel_pitch:
            raise ValueError("need 0 <= gap_width < pixel_pitch")
        if self.pixel_count < 1:
            raise ValueError("pixel_count must be >= 1")
        if not self.distance > 0:
            raise ValueError("SLM distance must be > 0")
        if self.phase_levels is not None and self.phase_levels < 2:
            raise ValueError("phase_levels must be >= 2 or None")

    @property
    def half_width(self) -> float:
        return 0.5 * self.pixel_count * self.pixel_pitch

    @property
    def pixel_angle(self) -> float:
        """Angular width of one pixel seen from the crystals [rad]."""
        return self.pixel_pitch / self.distance


@dataclass(frozen=True)
class PhaseParams:
    """SLM phase ``phi_offset + alpha theta_+ + beta theta_-``."""

    phi_offset: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.phi_offset, self.alpha, self.beta)):
            raise ValueError("phase parameters must be finite")


def per_arm_decomposition(params: PhaseParams):
    """Return ``(signal_slope, idler_slope, per_arm_offset)``.

    ``signal_slope*ts + idler_slope*ti + 2*offset`` reproduces the parametric
    phase for every ``(ts, ti)``.
    """
    return (
        params.alpha + params.beta,
        params.alpha - params.beta,
        0.5 * params.phi_offset,
    )


def _pixel_geometry(config, theta):
    x = config.distance * np.asarray(theta, dtype=float)
    if np.any(np.abs(x) > config.half_width):
        raise OffMaskError("beam position falls outside the SLM")
    u = x / config.pixel_pitch + 0.5 * config.pixel_count
    j = np.minimum(np.floor(u), config.pixel_count - 1)
    center = (j + 0.5 - 0.5 * config.pixel_count) * config.pixel_pitch / config.distance
    return u - j, center


def _quantize(config, phase):
    if config.phase_levels is None:
        return phase
    step = 2 * math.pi / config.phase_levels
    return np.round(np.mod(phase, 2 * math.pi) / step) * step


def staircase_phase(config: SlmConfig, slope: float, offset: float, theta):
    """Phase written on the pixel containing ``theta``, ignoring gaps."""
    _, center = _pixel_geometry(config, theta)
    return _quantize(config, slope * center + offset)


def pixelated_arm_phase(config: SlmConfig, slope: float, offset: float, theta):
    """Phase seen by a beam at ``theta`` and whether it crosses an inter-pixel gap.

    The pixel imposes ``slope * theta_c + offset`` with ``theta_c`` its centre
    angle; gaps are half a gap wide on each side of every pixel and impose no
    phase.
    """
    frac, center = _pixel_geometry(config, theta)
    g = config.gap_width / config.pixel_pitch
    in_gap = (frac < 0.5 * g) | (frac > 1 - 0.5 * g)
    phase = np.where(in_gap, 0.0, _quantize(config, slope * center + offset))
    if np.ndim(phase) == 0:
        return float(phase), bool(in_gap)
    return phase, in_gap


def pixel_edges(config: SlmConfig) -> np.ndarray:
    """Angles of all pixel boundaries [rad]."""
    j = np.arange(config.pixel_count + 1) - 0.5 * config.pixel_count
    return j * config.pixel_pitch / config.distance


def gap_visibility_factor(config: SlmConfig) -> float:
    """Coherence surviving the uncompensated gaps, ``(1 - gap/pitch)^2``."""
    g = config.gap_width / config.pixel_pitch
    return (1.0 - g) ** 2
