"""Transverse pump amplitude, its angular spectrum and spatial autocorrelation.

Fourier convention: ``F(dk) = sum_j A(x_j) exp(+i dk x_j) dx``. With this sign the
coherence at SLM slope ``beta`` equals the autocorrelation
``<A*(x + beta/k) A(x)>_x``.
"""

from __future__ import annotations

import enum
import functools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SpotConvention",
    "GridSpec",
    "PumpProfile",
    "AngularSpectrum",
    "GridTooNarrowError",
    "DegenerateGridError",
    "PumpFileError",
    "field_waist",
    "gaussian_pump",
    "grid_pump",
    "load_pump",
    "dump_pump",
    "angular_spectrum",
    "autocorrelation",
    "far_field_divergence",
]

EDGE_RATIO = 1e-6
MIN_FILE_SAMPLES = 4


class GridTooNarrowError(ValueError):
    pass


class DegenerateGridError(ValueError):
    pass


class PumpFileError(ValueError):
    pass


class SpotConvention(enum.Enum):
    FIELD_WAIST = "field_waist"
    INTENSITY_FWHM = "intensity_fwhm"


def field_waist(spot: float, convention: SpotConvention) -> float:
    """1/e^2 intensity radius ``w`` of a Gaussian field ``exp(-x^2/w^2)``."""
    convention = SpotConvention(convention)
    if convention is SpotConvention.FIELD_WAIST:
        return spot
    return spot / math.sqrt(2 * math.log(2))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``points`` samples centred on ``center``."""

    points: int = 4096
    dx: float = 2e-6
    center: float = 0.0

    def __post_init__(self):
        n = self.points
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid points must be a power of two >= 16, got {n}")
        if not self.dx > 0:
            raise ValueError("grid spacing must be > 0")

    @property
    def x0(self) -> float:
        return self.center - (self.points // 2) * self.dx

    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.points)


@dataclass(frozen=True, eq=False)
class PumpProfile:
    """Complex transverse amplitude ``A_p(x0 + j dx)`` normalized to unit power.

    Instances are immutable and are normalized on construction so that
    ``sum |A|^2 dx = 1``.
    """

    x0: float
    dx: float
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.amplitude, dtype=complex)
        n = a.size
        if a.ndim != 1 or n < 16 or n & (n - 1):
            raise ValueError(f"pump sample count must be a power of two >= 16, got {a.shape}")
        if not self.dx > 0:
            raise ValueError("pump dx must be > 0")
        power = np.sum(np.abs(a) ** 2) * self.dx
        if not power > 0:
            raise ValueError("pump amplitude is identically zero")
        a /= math.sqrt(power)
        peak = np.max(np.abs(a))
        if abs(a[0]) >= EDGE_RATIO * peak or abs(a[-1]) >= EDGE_RATIO * peak:
            raise GridTooNarrowError(
                "pump amplitude does not decay at the grid edges; widen the grid"
            )
        a.flags.writeable = False
        object.__setattr__(self, "amplitude", a)

    @property
    def n(self) -> int:
        return self.amplitude.size

    @property
    def span(self) -> float:
        return self.n * self.dx

    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    def power(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.dx)


def gaussian_pump(
    spot: float,
    spot_convention=SpotConvention.INTENSITY_FWHM,
    curvature: float = 0.0,
    grid: GridSpec = GridSpec(),
    pump_wavenumber: float | None = None,
) -> PumpProfile:
    """Gaussian pump, optionally divergent through a quadratic phase.

    Parameters
    ----------
    spot : float
        Beam size [m], read according to ``spot_convention``.
    curvature : float
        Wavefront curvature ``1/R`` [1/m]; the field gets
        ``exp(i k_p x^2 / (2R))``. Zero gives a collimated beam.
    pump_wavenumber : float
        ``k_p`` [1/m], required when ``curvature`` is non-zero.
    """
    if not spot > 0:
        raise ValueError("spot must be > 0")
    w = field_waist(spot, spot_convention)
    x = grid.x() - grid.center
    amp = np.exp(-(x**2) / w**2).astype(complex)
    if curvature:
        if pump_wavenumber is None:
            raise ValueError("pump_wavenumber is required for a divergent beam")
        amp *= np.exp(0.5j * pump_wavenumber * curvature * x**2)
    return PumpProfile(grid.x0, grid.dx, amp)


def _open_length(x, period, open_width):
    # measure of the open set on [0, x]; slits are centred on (n + 1/2) * period
    q, r = np.divmod(x, period)
    bar = 0.5 * (period - open_width)
    return q * open_width + np.clip(r - bar, 0.0, open_width)


def grid_pump(
    period: float,
    slit_fraction: float,
    envelope_spot: float,
    grid: GridSpec = GridSpec(),
    spot_convention=SpotConvention.INTENSITY_FWHM,
    min_slit_amplitude: float = 0.1,
) -> PumpProfile:
    """Gaussian envelope behind a binary grid (comb of slits).

    A bar is centred on the beam axis, so the two strongest slits sit at
    ``+-period/2``. Each sample takes the open fraction of its own cell,
    which smooths slit edges over one sample. ``slit_fraction = 1`` is a
    fully open grid.
    """
    if not period > 0:
        raise ValueError("grid period must be > 0")
    if not 0 < slit_fraction <= 1:
        raise ValueError("slit_fraction must lie in (0, 1]")
    w = field_waist(envelope_spot, spot_convention)
    x = grid.x() - grid.center
    open_width = slit_fraction * period
    cover = (
        _open_length(x + 0.5 * grid.dx, period, open_width)
        - _open_length(x - 0.5 * grid.dx, period, open_width)
    ) / grid.dx
    envelope = np.exp(-(x**2) / w**2)
    if slit_fraction < 1:
        centers = (np.arange(-64, 64) + 0.5) * period
        strong = np.exp(-(centers**2) / w**2) >= min_slit_amplitude
        if np.count_nonzero(strong) < 2:
            raise DegenerateGridError("fewer than two slits survive the envelope")
    return PumpProfile(grid.x0, grid.dx, (envelope * cover).astype(complex))


def dump_pump(pump: PumpProfile, path) -> None:
    """Write ``x_m,re,im`` columns with full float precision."""
    lines = ["x_m,re,im"]
    for x, re_, im in zip(pump.x().tolist(), pump.amplitude.real.tolist(), pump.amplitude.imag.tolist()):
        lines.append(f"{x!r},{re_!r},{im!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _split(line):
    return [t for t in re.split(r"[,\s]+", line.strip()) if t]


def load_pump(path, grid: GridSpec | None = None) -> PumpProfile:
    """Read a pump profile from a delimited text file.

    Accepted headers are ``x_m,re,im``, ``x_m,intensity,phase_rad`` and
    ``x_m,intensity``. Without ``grid`` the samples are zero-padded to the
    next power of two at their native spacing; with ``grid`` they are
    resampled by band-limited (sinc) interpolation.
    """
    text = Path(path).read_text().splitlines()
    rows = [(i + 1, ln) for i, ln in enumerate(text) if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise PumpFileError(f"{path}: empty file")
    header = [h.lower() for h in _split(rows[0][1])]
    layouts = (["x_m", "re", "im"], ["x_m", "intensity", "phase_rad"], ["x_m", "intensity"])
    if header not in layouts:
        raise PumpFileError(f"{path}:{rows[0][0]}: unrecognized header {header}")
    data = []
    for lineno, ln in rows[1:]:
        tok = _split(ln)
        try:
            vals = [float(t) for t in tok]
        except ValueError:
            raise PumpFileError(f"{path}:{lineno}: unparseable row {ln!r}") from None
        if len(vals) != len(header):
            raise PumpFileError(f"{path}:{lineno}: expected {len(header)} columns")
        data.append(vals)
    if len(data) < MIN_FILE_SAMPLES:
        raise PumpFileError(f"{path}: need at least {MIN_FILE_SAMPLES} samples, got {len(data)}")
    arr = np.array(data)
    x = arr[:, 0]
    steps = np.diff(x)
    dx = (x[-1] - x[0]) / (len(x) - 1)
    if not dx > 0 or np.max(np.abs(steps - dx)) > 1e-6 * dx:
        raise PumpFileError(f"{path}: x column is not uniformly increasing")
    if header[1] == "re":
        amp = arr[:, 1] + 1j * arr[:, 2]
    else:
        intensity = arr[:, 1]
        if np.any(intensity < 0):
            raise PumpFileError(f"{path}: negative intensity")
        phase = arr[:, 2] if len(header) == 3 else np.zeros_like(intensity)
        amp = np.sqrt(intensity) * np.exp(1j * phase)

    if grid is None:
        n = max(16, 1 << (len(x) - 1).bit_length())
        pad_left = (n - len(x)) // 2
        full = np.zeros(n, dtype=complex)
        full[pad_left : pad_left + len(x)] = amp
        return PumpProfile(x[0] - pad_left * dx, dx, full)
    xs = grid.x()
    kernel = np.sinc((xs[:, None] - x[None, :]) / dx)
    return PumpProfile(grid.x0, grid.dx, kernel @ amp)


@dataclass(frozen=True, eq=False)
class AngularSpectrum:
    """``|F(k theta_-)|^2`` sampled on a uniform ``theta_-`` grid.

    ``weights`` are the quadrature weights (``dtheta``, halved on the two
    band-edge samples), and ``sum(intensity * weights) == 1``.
    ``raw_norm`` is the integral before normalization, equal to
    ``2 pi / k`` times the pump power (Parseval).
    """

    theta: np.ndarray = field(repr=False)
    intensity: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dtheta: float
    k: float
    pad: int
    raw_norm: float
    pump: PumpProfile | None = field(default=None, repr=False)

    def moments(self):
        """Mean and standard deviation of ``theta_-`` under the spectrum."""
        p = self.intensity * self.weights
        mean = float(np.sum(p * self.theta))
        std = float(np.sqrt(np.sum(p * (self.theta - mean) ** 2)))
        return mean, std

    def support_points(self, n_sigma: float = 4.0) -> int:
        mean, std = self.moments()
        return int(np.count_nonzero(np.abs(self.theta - mean) <= n_sigma * std))

    def trimmed(self, tail_mass: float) -> "AngularSpectrum":
        """Drop symmetric outer bins holding at most ``tail_mass`` of the spectrum."""
        p = self.intensity * self.weights
        n = p.size
        c = n // 2
        cum = np.concatenate(([0.0], np.cumsum(p)))
        h = np.arange(c + 1)
        outer = cum[c - h] + (cum[-1] - cum[np.minimum(c + h + 1, n)])
        h = int(np.nonzero(outer <= tail_mass)[0][0])
        lo, hi = c - h, min(c + h + 1, n)
        return AngularSpectrum(
            self.theta[lo:hi], self.intensity[lo:hi], self.weights[lo:hi],
            self.dtheta, self.k, self.pad, self.raw_norm, self.pump,
        )


def _spectrum(pump: PumpProfile, k: float, pad: int) -> AngularSpectrum:
    n = pump.n * pad
    a = np.zeros(n, dtype=complex)
    a[: pump.n] = pump.amplitude
    # sum_j a_j exp(+i kappa_q j dx); the x0 offset only adds a phase
    f = np.fft.fftshift(np.fft.ifft(a) * n * pump.dx)
    kappa = np.fft.fftshift(np.fft.fftfreq(n, pump.dx)) * 2 * np.pi
    # Nyquist bin is split evenly between -pi/dx and +pi/dx
    f = np.append(f, f[0])
    kappa = np.append(kappa, -kappa[0])
    dtheta = 2 * np.pi / (n * pump.dx * k)
    weights = np.full(n + 1, dtheta)
    weights[0] = weights[-1] = 0.5 * dtheta
    intensity = np.abs(f) ** 2
    raw = float(np.sum(intensity * weights))
    return AngularSpectrum(
        theta=kappa / k,
        intensity=intensity / raw,
        weights=weights,
        dtheta=dtheta,
        k=k,
        pad=pad,
        raw_norm=raw,
        pump=pump,
    )


def angular_spectrum(
    pump: PumpProfile, k: float, pad: int | None = None, min_support_points: int = 64
) -> AngularSpectrum:
    """Normalized ``|F(k theta_-)|^2`` of ``pump``.

    With ``pad=None`` the pump is zero-padded by successive doubling until
    +-4 standard deviations of the spectrum hold ``min_support_points`` bins.
    """
    if pad is not None:
        return _spectrum(pump, k, int(pad))
    pad = 1
    while True:
        spec = _spectrum(pump, k, pad)
        if spec.support_points() >= min_support_points or pad >= 64:
            return spec
        pad *= 2


@functools.lru_cache(maxsize=64)
def refined_spectrum(spectrum: AngularSpectrum) -> AngularSpectrum:
    """Same spectrum at twice the ``theta_-`` resolution."""
    if spectrum.pump is None:
        raise ValueError("spectrum has no source pump to refine")
    return _spectrum(spectrum.pump, spectrum.k, spectrum.pad * 2)


def _shift_multiplier(n, dx, delta):
    kappa = 2 * np.pi * np.fft.fftfreq(n, dx)
    mult = np.exp(1j * np.multiply.outer(delta, kappa))
    # keep the Nyquist term real so that real pumps have real autocorrelations
    mult[..., n // 2] = np.cos(np.multiply.outer(delta, kappa[n // 2]))
    return mult


def autocorrelation(pump: PumpProfile, delta):
    """Spatial autocorrelation ``sum_j A*(x_j + delta) A(x_j) dx``.

    Off-grid shifts use band-limited (Fourier) interpolation of the samples.
    ``delta`` may be a scalar or an array [m].
    """
    d = np.asarray(delta, dtype=float)
    if np.any(np.abs(d) >= 0.5 * pump.span):
        raise ValueError("autocorrelation lag must be smaller than half the grid span")
    a = pump.amplitude
    shifted = np.fft.ifft(np.fft.fft(a) * _shift_multiplier(pump.n, pump.dx, d), axis=-1)
    out = np.sum(np.conj(shifted) * a, axis=-1) * pump.dx
    return out if np.ndim(out) else complex(out)


def far_field_divergence(pump: PumpProfile, pump_wavenumber: float) -> float:
    """1/e^2 half-angle equivalent (twice the rms angle) of the pump far field [rad]."""
    spec = angular_spectrum(pump, pump_wavenumber, pad=1)
    return 2 * spec.moments()[1]
