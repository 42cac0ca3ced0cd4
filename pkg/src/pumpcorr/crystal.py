"""Two-crystal type-I source: geometry, decoherence phase and phase-matching shifts.

All angles are external emission angles in radians. Internal angles are
obtained by dividing by the relevant refractive index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KConvention",
    "CrystalSetup",
    "PhaseCoefficients",
    "phase_profile",
    "phase_difference",
    "phase_coefficients",
    "delta_k",
    "longitudinal_weight",
]

#: step of the central difference used for the linear phase coefficient
ALPHA_STEP = 1e-6


class KConvention(enum.Enum):
    """Which wavelength defines ``k = 2 pi / lambda`` in the small-angle formulas."""

    PUMP = "pump"
    DOWNCONVERTED = "downconverted"


@dataclass(frozen=True)
class CrystalSetup:
    """Geometry and refractive parameters of the crystal pair.

    Parameters
    ----------
    crystal_length : float
        Length of each crystal [m]. Zero is accepted and yields a null phase.
    central_angle : float
        External emission angle of the down-converted cone [rad].
    n_ordinary, n_extraordinary : float
        Refractive indices seen by the down-converted photons.
    pump_wavelength, dc_wavelength : float
        Vacuum wavelengths [m].
    k_convention : KConvention
        Selects the wavenumber used as ``k``.
    """

    crystal_length: float = 1e-3
    central_angle: float = math.radians(3.0)
    n_ordinary: float = 1.6603
    n_extraordinary: float = 1.5442
    pump_wavelength: float = 405e-9
    dc_wavelength: float = 810e-9
    k_convention: KConvention = KConvention.DOWNCONVERTED

    def __post_init__(self):
        if not self.crystal_length >= 0:
            raise ValueError(f"crystal_length must be >= 0, got {self.crystal_length}")
        if not self.central_angle > 0:
            raise ValueError(f"central_angle must be > 0, got {self.central_angle}")
        if not (self.n_ordinary >= 1 and self.n_extraordinary >= 1):
            raise ValueError("refractive indices must be >= 1")
        if not (self.pump_wavelength > 0 and self.dc_wavelength > 0):
            raise ValueError("wavelengths must be > 0")
        if not isinstance(self.k_convention, KConvention):
            object.__setattr__(self, "k_convention", KConvention(self.k_convention))

    @property
    def k_pump(self) -> float:
        return 2 * math.pi / self.pump_wavelength

    @property
    def k_dc(self) -> float:
        return 2 * math.pi / self.dc_wavelength

    @property
    def k(self) -> float:
        """Wavenumber entering the small-angle formulas [1/m]."""
        if self.k_convention is KConvention.PUMP:
            return self.k_pump
        return self.k_dc

    @property
    def gamma(self) -> float:
        """Sinc argument scale ``k theta0 L / 2`` [rad/rad]."""
        return 0.5 * self.k * self.central_angle * self.crystal_length


@dataclass(frozen=True)
class PhaseCoefficients:
    """First-order expansion ``phi(theta) ~ phi0/2 + alpha0 * theta``."""

    phi0: float
    alpha0: float
    gamma: float


def _check_domain(setup, theta):
    u = (setup.central_angle + np.asarray(theta, dtype=float)) / setup.n_extraordinary
    if np.any(np.cos(u) <= 0) or np.any(np.abs(setup.central_angle + theta) >= math.pi / 2):
        raise ValueError("phase_profile: (theta0 + theta) outside the admissible range")
    return u


def phase_profile(setup: CrystalSetup, theta):
    """Exact phase picked up in the second crystal by a photon emitted at ``theta``.

    ``n_e k L / cos[(t0 + t)/n_e] + k L tan[(t0 + t)/n_e] sin(t0 + t)``
    """
    u = _check_domain(setup, theta)
    kl = setup.k * setup.crystal_length
    out = kl * (setup.n_extraordinary / np.cos(u) + np.tan(u) * np.sin(setup.central_angle + np.asarray(theta)))
    return out if np.ndim(out) else float(out)


def phase_difference(setup: CrystalSetup, theta_a, theta_b):
    """``phase_profile(a) - phase_profile(b)`` without catastrophic cancellation.

    The phase is ~1e4 rad while differences over microradians are ~1e-3 rad,
    so the subtraction is rewritten with product-to-sum identities.
    """
    ua = _check_domain(setup, theta_a)
    ub = _check_domain(setup, theta_b)
    ne = setup.n_extraordinary
    t0 = setup.central_angle
    ta = np.asarray(theta_a, dtype=float)
    tb = np.asarray(theta_b, dtype=float)
    half_sum = 0.5 * (ua + ub)
    half_diff = 0.5 * (ua - ub)
    cc = np.cos(ua) * np.cos(ub)
    # 1/cos(ua) - 1/cos(ub)
    d_sec = 2 * np.sin(half_sum) * np.sin(half_diff) / cc
    # tan(ua) - tan(ub)
    d_tan = np.sin(ua - ub) / cc
    # sin(t0+ta) - sin(t0+tb)
    d_sin = 2 * np.cos(t0 + 0.5 * (ta + tb)) * np.sin(0.5 * (ta - tb))
    d_prod = d_tan * np.sin(t0 + ta) + np.tan(ub) * d_sin
    out = setup.k * setup.crystal_length * (ne * d_sec + d_prod)
    return out if np.ndim(out) else float(out)


def _central_difference(setup, h):
    return phase_difference(setup, h, -h) / (2 * h)


def phase_coefficients(setup: CrystalSetup) -> PhaseCoefficients:
    """Constant, linear and sinc coefficients of the crystal phase.

    ``alpha0`` is a central difference at step ``ALPHA_STEP`` refined by one
    Richardson step (h and h/2), which cancels the O(h^2) truncation term.
    """
    d_h = _central_difference(setup, ALPHA_STEP)
    d_h2 = _central_difference(setup, ALPHA_STEP / 2)
    alpha0 = (4 * d_h2 - d_h) / 3
    return PhaseCoefficients(
        phi0=2 * phase_profile(setup, 0.0),
        alpha0=float(alpha0),
        gamma=setup.gamma,
    )


def delta_k(setup: CrystalSetup, theta_s, theta_i, exact: bool = False):
    """Longitudinal and transverse phase-matching shifts ``(dk_par, dk_perp)`` [1/m].

    The linearized forms are ``k theta0 theta_+`` and ``k theta_-``. The exact
    forms use in-crystal wavenumbers ``k_s = k_i = 2 pi n_o / lambda_dc`` and a
    pump wavenumber fixed so the central angle is phase matched.
    """
    ts = np.asarray(theta_s, dtype=float)
    ti = np.asarray(theta_i, dtype=float)
    if np.any(np.abs(ts) >= 0.2) or np.any(np.abs(ti) >= 0.2):
        raise ValueError("delta_k is only defined for |theta| < 0.2 rad")
    if not exact:
        dk_par = setup.k * setup.central_angle * (ts + ti)
        dk_perp = setup.k * (ts - ti)
    else:
        no = setup.n_ordinary
        t0 = setup.central_angle
        k_si = no * setup.k_dc
        k_p = 2 * k_si * math.cos(t0 / no)
        dk_par = k_p - k_si * np.cos((t0 + ts) / no) - k_si * np.cos((t0 + ti) / no)
        dk_perp = k_si * np.sin((t0 + ts) / no) - k_si * np.sin((t0 + ti) / no)
    if np.ndim(dk_par) == 0:
        return float(dk_par), float(dk_perp)
    return dk_par, dk_perp


def longitudinal_weight(setup: CrystalSetup, theta_plus):
    """``sinc(gamma theta_+)`` with the unnormalized convention ``sin(x)/x``."""
    out = np.sinc(setup.gamma * np.asarray(theta_plus, dtype=float) / math.pi)
    return out if np.ndim(out) else float(out)
