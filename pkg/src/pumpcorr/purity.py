"""Coherence and purity of the polarization state.

The HH-VV coherence is

    D = N^-1 * integral dtheta_+ dtheta_-  W(ts, ti) sinc^2(gamma theta_+)
                                           |F(k theta_-)|^2 exp(i Phi)

with ``Phi = phi0 + alpha0 theta_+ + Phi_a`` and ``N`` the same integral at
``Phi = 0``. The visibility (purity) is ``Re D``; the measured value is
``m Re D``.

Quadrature: composite midpoint rule in ``theta_+`` on ``[-T, T]`` and the
pump's discrete angular spectrum in ``theta_-``. With a flat window ``T``
sits on a zero of the sinc and the sinc^2 tails beyond it are added in
closed form, so the rule converges to the infinite-range integral.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.special import sici

from .crystal import CrystalSetup, PhaseCoefficients, phase_coefficients
from .pump import AngularSpectrum, PumpProfile, angular_spectrum, autocorrelation, refined_spectrum
from .slm import MaskMode, PhaseParams, SlmConfig, per_arm_decomposition, pixel_edges, staircase_phase

__all__ = [
    "WindowShape",
    "CouplingWindow",
    "MixingModel",
    "Numerics",
    "VisibilityCurve",
    "Scenario",
    "UnresolvedIntegrandError",
    "NotApplicableError",
    "coherence_term",
    "purity_via_wk",
    "density_matrix",
    "state_purity",
    "scan_alpha",
    "scan_beta",
]


class UnresolvedIntegrandError(RuntimeError):
    """Doubling the quadrature grids moved the result by more than the tolerance."""


class NotApplicableError(ValueError):
    pass


class WindowShape(enum.Enum):
    GAUSSIAN = "gaussian"
    TOPHAT = "tophat"


@dataclass(frozen=True)
class CouplingWindow:
    """Angular acceptance of one detection arm, peak weight 1.

    ``None`` is used throughout for a flat (unit) window.
    """

    fwhm_at_detector: float = 5e-3
    detector_distance: float = 0.310
    shape: WindowShape = WindowShape.GAUSSIAN

    def __post_init__(self):
        if not (self.fwhm_at_detector > 0 and self.detector_distance > 0):
            raise ValueError("window fwhm and distance must be > 0")
        if not isinstance(self.shape, WindowShape):
            object.__setattr__(self, "shape", WindowShape(self.shape))

    @property
    def angular_fwhm(self) -> float:
        return self.fwhm_at_detector / self.detector_distance

    @property
    def sigma(self) -> float:
        return self.angular_fwhm / (2 * math.sqrt(2 * math.log(2)))

    def weight(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.shape is WindowShape.GAUSSIAN:
            return np.exp(-(theta**2) / (2 * self.sigma**2))
        return (np.abs(theta) <= 0.5 * self.angular_fwhm).astype(float)


@dataclass(frozen=True)
class MixingModel:
    """``rho_tot = m rho + (1 - m) rho_mix``."""

    m: float = 1.0

    def __post_init__(self):
        if not 0 <= self.m <= 1:
            raise ValueError(f"mixing parameter must lie in [0, 1], got {self.m}")


@dataclass(frozen=True)
class Numerics:
    theta_plus_points: int = 2048
    sinc_lobes: int = 6
    window_sigmas: float = 10.0
    panel_nodes: int = 4
    spectrum_tail_mass: float = 1e-13
    min_lobe_points: int = 32
    min_spectrum_points: int = 64
    convergence_tol: float = 1e-4
    check_convergence: bool = True
    spectrum_refinements: int = 0  # extra halvings of the theta_- step

    def doubled(self) -> "Numerics":
        """Every quadrature grid at twice the resolution."""
        return replace(
            self,
            theta_plus_points=2 * self.theta_plus_points,
            panel_nodes=2 * self.panel_nodes,
            spectrum_refinements=self.spectrum_refinements + 1,
        )


@dataclass(frozen=True)
class VisibilityCurve:
    parameter_name: str
    parameter_values: np.ndarray
    purity_values: np.ndarray
    metadata: dict = field(default_factory=dict)
    abs_coherence: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.parameter_values, dtype=float)
        p = np.asarray(self.purity_values, dtype=float)
        if x.ndim != 1 or x.shape != p.shape or x.size < 2:
            raise ValueError("curve needs two equal-length arrays of at least 2 samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("parameter values must be strictly increasing")
        if np.any(np.abs(p) > 1 + 1e-12):
            raise ValueError("purity values must satisfy |p| <= 1")
        object.__setattr__(self, "parameter_values", x)
        object.__setattr__(self, "purity_values", p)


# -- quadrature pieces ------------------------------------------------------


def _plus_range(gamma, window, numerics):
    if window is None:
        if not gamma > 0:
            raise NotApplicableError("a flat window needs a crystal of finite length")
        return numerics.sinc_lobes * math.pi / gamma
    if window.shape is WindowShape.GAUSSIAN:
        # W = exp(-(theta_+^2 + theta_-^2) / (4 sigma^2))
        return numerics.window_sigmas * math.sqrt(2) * window.sigma
    return window.angular_fwhm


def _check_resolution(gamma, half_range, numerics):
    if gamma > 0:
        lobe = min(math.pi / gamma, half_range)
        if numerics.theta_plus_points * lobe / half_range < numerics.min_lobe_points:
            raise UnresolvedIntegrandError("theta_+ grid does not resolve the sinc main lobe")


def _sinc2(gamma, theta):
    return np.sinc(gamma * theta / math.pi) ** 2


def _sinc2_tail(a, gamma, lobes):
    """Integral of ``sinc^2(gamma t) cos(a t)`` over ``|t| > lobes pi / gamma``."""
    u0 = lobes * math.pi

    def j(c):
        c = np.abs(c)
        si, _ = sici(c * u0)
        return np.cos(c * u0) / u0 - c * (0.5 * math.pi - si)

    b = np.asarray(a, dtype=float) / gamma
    return (2 / gamma) * (0.5 * j(b) - 0.25 * j(b + 2) - 0.25 * j(b - 2))


def _plus_factor(a, gamma, window, numerics):
    """Normalized theta_+ integral ``<exp(i a theta_+)>`` for separable cases."""
    t = _plus_range(gamma, window, numerics)
    _check_resolution(gamma, t, numerics)
    m = numerics.theta_plus_points
    h = 2 * t / m
    theta = -t + h * (np.arange(m) + 0.5)
    base = _sinc2(gamma, theta) * h
    if window is not None:
        base = base * np.exp(-(theta**2) / (4 * window.sigma**2))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    # nodes and weights are symmetric, so the sine part vanishes
    num = np.cos(np.multiply.outer(a, theta)) @ base
    den = np.sum(base)
    if window is None:
        num = num + _sinc2_tail(a, gamma, numerics.sinc_lobes)
        den = den + _sinc2_tail(0.0, gamma, numerics.sinc_lobes)
    return num / den


def _row_weights(spectrum, window):
    w = spectrum.intensity * spectrum.weights
    if window is not None and window.shape is WindowShape.GAUSSIAN:
        w = w * np.exp(-(spectrum.theta**2) / (4 * window.sigma**2))
    return w


def _minus_factor(b, spectrum, window):
    w = _row_weights(spectrum, window)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return np.exp(1j * np.multiply.outer(b, spectrum.theta)) @ w / np.sum(w)


def _separable(window, mask):
    return mask is MaskMode.IDEAL and (window is None or window.shape is WindowShape.GAUSSIAN)


def _coherence_separable(setup, coeffs, spectrum, alpha, beta, offset, window, numerics, walkoff):
    plus = _plus_factor(coeffs.alpha0 + np.asarray(alpha), coeffs.gamma, window, numerics)
    minus = _minus_factor(np.asarray(beta) + setup.k * walkoff, spectrum, window)
    return np.exp(1j * (coeffs.phi0 + np.asarray(offset))) * plus * minus


@functools.lru_cache(maxsize=16)
def _pixel_rows(spectrum, half_range, pixel_angle, nodes):
    """theta_- nodes on Gauss-Legendre panels between multiples of the pixel angle.

    Row integrals over theta_+ have kinks wherever a signal and an idler
    pixel edge cross, i.e. at integer multiples of the pixel angle.
    """
    n = max(1, math.ceil(half_range / pixel_angle))
    edges = np.arange(-n, n + 1) * pixel_angle
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * pixel_angle
    theta = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half * x[None, :]
    weights = np.broadcast_to(half * w, theta.shape)
    theta, weights = theta.ravel(), weights.ravel()
    pump = spectrum.pump
    xs = pump.x()
    f = np.empty(theta.size, dtype=complex)
    for lo in range(0, theta.size, 256):
        phase = np.exp(1j * spectrum.k * np.multiply.outer(theta[lo : lo + 256], xs))
        f[lo : lo + 256] = phase @ pump.amplitude * pump.dx
    return theta, np.abs(f) ** 2 * weights


def _rows(spectrum, window, mask, slm, numerics, half_range):
    if mask is MaskMode.PIXELATED:
        q = min(float(np.max(np.abs(spectrum.theta))), half_range)
        theta, w = _pixel_rows(spectrum, q, slm.pixel_angle, numerics.panel_nodes)
    else:
        theta, w = spectrum.theta, spectrum.intensity * spectrum.weights
    if window is not None and window.shape is WindowShape.GAUSSIAN:
        w = w * np.exp(-(theta**2) / (4 * window.sigma**2))
    return theta, w


def _coherence_rows(setup, coeffs, spectrum, params, window, mask, slm, numerics, walkoff):
    """Row-by-row quadrature for non-separable windows or pixelated masks.

    Each row is one theta_- node. Along theta_+ a pixelated mask splits the
    grid at every pixel edge and uses Gauss-Legendre nodes on each piece, so
    the staircase phase is constant on every sub-interval; otherwise the
    composite midpoint rule is used.
    """
    gamma = coeffs.gamma
    t = _plus_range(gamma, window, numerics)
    _check_resolution(gamma, t, numerics)
    m = numerics.theta_plus_points
    flat = window is None
    tophat = window is not None and window.shape is WindowShape.TOPHAT
    pixelated = mask is MaskMode.PIXELATED
    if pixelated:
        if slm is None:
            raise ValueError("a pixelated mask needs an SlmConfig")
        s_slope, i_slope, arm_offset = per_arm_decomposition(params)
        edges = pixel_edges(slm)
        gl_x, gl_w = np.polynomial.legendre.leggauss(numerics.panel_nodes)
    rows, row_w = _rows(spectrum, window, mask, slm, numerics, t)
    kwo = setup.k * walkoff
    const = coeffs.phi0 + params.phi_offset
    num = 0j
    den = 0.0
    if flat:
        tail_a = float(_sinc2_tail(coeffs.alpha0 + params.alpha, gamma, numerics.sinc_lobes))
        tail_0 = float(_sinc2_tail(0.0, gamma, numerics.sinc_lobes))
    for tm, wq in zip(rows, row_w):
        if wq == 0:
            continue
        r = min(t, window.angular_fwhm - abs(tm)) if tophat else t
        if r <= 0:
            continue
        grid = np.linspace(-r, r, m + 1)
        if pixelated:
            bp = np.concatenate((2 * edges - tm, 2 * edges + tm))
            grid = np.unique(np.concatenate((grid, bp[(bp > -r) & (bp < r)])))
            half = 0.5 * np.diff(grid)
            mid = ((0.5 * (grid[1:] + grid[:-1]))[:, None] + half[:, None] * gl_x).ravel()
            wts = (half[:, None] * gl_w).ravel()
        else:
            mid = 0.5 * (grid[1:] + grid[:-1])
            wts = np.diff(grid)
        wts = _sinc2(gamma, mid) * wts
        if window is not None and window.shape is WindowShape.GAUSSIAN:
            wts = wts * np.exp(-(mid**2) / (4 * window.sigma**2))
        if pixelated:
            ts = 0.5 * (mid + tm)
            ti = 0.5 * (mid - tm)
            slm_phase = staircase_phase(slm, s_slope, arm_offset, ts) + staircase_phase(slm, i_slope, arm_offset, ti)
            phase = coeffs.phi0 + coeffs.alpha0 * mid + slm_phase + kwo * tm
        else:
            phase = const + (coeffs.alpha0 + params.alpha) * mid + (params.beta + kwo) * tm
        num += wq * np.sum(wts * np.exp(1j * phase))
        den += wq * np.sum(wts)
        if flat:
            # beyond the last sinc zero the SLM phase is taken as its ideal ramp
            num += wq * tail_a * np.exp(1j * (const + (params.beta + kwo) * tm))
            den += wq * tail_0
    return num / den


def _evaluate(setup, coeffs, spectrum, alpha, beta, offset, window, mask, slm, numerics, walkoff, workers=None):
    trimmed = spectrum.trimmed(numerics.spectrum_tail_mass)
    if _separable(window, mask):
        return _coherence_separable(setup, coeffs, trimmed, alpha, beta, offset, window, numerics, walkoff)
    params = [PhaseParams(o, a, b) for o, a, b in zip(*np.broadcast_arrays(offset, alpha, beta))]

    def one(p):
        return _coherence_rows(setup, coeffs, trimmed, p, window, mask, slm, numerics, walkoff)

    if workers and workers > 1 and len(params) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return np.array(list(ex.map(one, params)))
    return np.array([one(p) for p in params])


def _coherence_checked(setup, coeffs, spectrum, alpha, beta, offset, window, mask, slm, numerics, walkoff, workers=None):
    alpha, beta, offset = np.broadcast_arrays(
        np.atleast_1d(np.asarray(alpha, dtype=float)),
        np.atleast_1d(np.asarray(beta, dtype=float)),
        np.atleast_1d(np.asarray(offset, dtype=float)),
    )
    d = _evaluate(setup, coeffs, spectrum, alpha, beta, offset, window, mask, slm, numerics, walkoff, workers)
    if numerics.check_convergence:
        fine = _evaluate(
            setup, coeffs, refined_spectrum(spectrum), alpha, beta, offset,
            window, mask, slm, numerics.doubled(), walkoff, workers,
        )
        worst = float(np.max(np.abs(fine - d)))
        if worst > numerics.convergence_tol:
            raise UnresolvedIntegrandError(
                f"grid doubling changed the coherence by {worst:.3g} > {numerics.convergence_tol:g}"
            )
    return d


def coherence_term(
    setup: CrystalSetup,
    coefficients: PhaseCoefficients,
    spectrum: AngularSpectrum,
    params: PhaseParams,
    window: CouplingWindow | None = None,
    mask: MaskMode = MaskMode.IDEAL,
    slm: SlmConfig | None = None,
    numerics: Numerics = Numerics(),
    walkoff: float = 0.0,
) -> complex:
    """Normalized HH-VV coherence ``D``; the purity is ``D.real``.

    ``walkoff`` [m] displaces the pump correlation, adding
    ``k * walkoff * theta_-`` to the phase.
    """
    d = _coherence_checked(
        setup, coefficients, spectrum, params.alpha, params.beta, params.phi_offset,
        window, MaskMode(mask), slm, numerics, walkoff,
    )
    return complex(d[0])


def purity_via_wk(pump: PumpProfile, k: float, beta, window: CouplingWindow | None = None, walkoff: float = 0.0):
    """Purity at residual phase ``beta theta_-`` from the pump autocorrelation.

    Only valid for a flat coupling window.
    """
    if window is not None:
        raise NotApplicableError("the autocorrelation route requires a flat coupling window")
    beta = np.asarray(beta, dtype=float)
    c = autocorrelation(pump, beta / k + walkoff)
    out = np.real(c) / np.real(autocorrelation(pump, 0.0))
    return out if np.ndim(out) else float(out)


def density_matrix(d: complex, mixing: MixingModel = MixingModel()) -> np.ndarray:
    """Polarization state ``m rho(D) + (1 - m) rho_mix`` in the basis (HH, HV, VH, VV).

    ``rho(D)`` keeps the coherence ``D`` between HH and VV; ``rho_mix`` is the
    incoherent equal mixture of the two.
    """
    if abs(d) > 1 + 1e-12:
        raise ValueError(f"|D| must not exceed 1, got {abs(d)}")
    pure = np.zeros((4, 4), dtype=complex)
    pure[0, 0] = pure[3, 3] = 0.5
    pure[3, 0] = 0.5 * d
    pure[0, 3] = np.conj(pure[3, 0])
    mixed = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)
    return mixing.m * pure + (1.0 - mixing.m) * mixed


def state_purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


# -- scenarios and scans ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to evaluate the visibility of one configuration."""

    setup: CrystalSetup
    pump: PumpProfile
    window: CouplingWindow | None = None
    slm: SlmConfig = SlmConfig()
    mask: MaskMode = MaskMode.IDEAL
    mixing: MixingModel = MixingModel()
    walkoff: float = 0.0
    numerics: Numerics = Numerics()
    name: str = "scenario"

    @cached_property
    def coefficients(self) -> PhaseCoefficients:
        return phase_coefficients(self.setup)

    @cached_property
    def spectrum(self) -> AngularSpectrum:
        spec = angular_spectrum(self.pump, self.setup.k, min_support_points=self.numerics.min_spectrum_points)
        for _ in range(self.numerics.spectrum_refinements):
            spec = refined_spectrum(spec)
        return spec

    @property
    def k(self) -> float:
        return self.setup.k

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def coherence(self, alpha, beta, phi_offset, workers=None) -> np.ndarray:
        return _coherence_checked(
            self.setup, self.coefficients, self.spectrum, alpha, beta, phi_offset,
            self.window, self.mask, self.slm, self.numerics, self.walkoff, workers,
        )

    def coherence_alpha(self, alpha, workers=None) -> np.ndarray:
        """``D`` for the SLM phase ``-phi0 - alpha theta_+``."""
        c = self.coefficients
        return self.coherence(-np.asarray(alpha, dtype=float), 0.0, -c.phi0, workers)

    def coherence_beta(self, beta, workers=None) -> np.ndarray:
        """``D`` for the SLM phase ``-phi0 - alpha0 theta_+ + beta theta_-``."""
        c = self.coefficients
        return self.coherence(-c.alpha0, beta, -c.phi0, workers)

    def metadata(self) -> dict:
        c = self.coefficients
        return {
            "scenario": self.name,
            "k_per_m": self.k,
            "phi0_rad": c.phi0,
            "alpha0_rad_per_rad": c.alpha0,
            "gamma_rad_per_rad": c.gamma,
            "m": self.mixing.m,
            "mask": self.mask.value,
            "window": "flat" if self.window is None else self.window.shape.value,
            "walkoff_m": self.walkoff,
        }


def _curve(scenario, name, values, d):
    p = scenario.mixing.m * np.real(d)
    return VisibilityCurve(name, values, p, scenario.metadata(), np.abs(d))


def scan_alpha(scenario: Scenario, alpha_range, n_points: int, workers=None) -> VisibilityCurve:
    """Visibility versus ``alpha`` with ``beta = 0``."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    values = np.linspace(alpha_range[0], alpha_range[1], n_points)
    return _curve(scenario, "alpha", values, scenario.coherence_alpha(values, workers))


def scan_beta(scenario: Scenario, beta_range, n_points: int, workers=None) -> VisibilityCurve:
    """Visibility versus ``beta`` with ``alpha`` pinned to ``alpha0``."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    values = np.linspace(beta_range[0], beta_range[1], n_points)
    return _curve(scenario, "beta", values, scenario.coherence_beta(values, workers))
