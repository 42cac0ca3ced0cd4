import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pumpcorr.crystal import (
    CrystalSetup,
    KConvention,
    delta_k,
    longitudinal_weight,
    phase_coefficients,
    phase_profile,
)

# 50-digit evaluations of the closed-form phase for the default setup
# (L = 1 mm, theta0 = 3 deg, n_e = 1.5442, lambda = 810 nm), computed with
# mpmath; alpha0 from a 7-point stencil at h = 1e-4.
K_DC = 7757018.8977525758974
PHI0 = 23998.096930773984042
PHI_1MRAD = 11999.845242291415554
ALPHA0 = 789.23684067104979751
GAMMA = 203.0782798578057329


def _mp_phi(setup, t):
    mp.mp.dps = 50
    L, th0, ne = mp.mpf(setup.crystal_length), mp.mpf(setup.central_angle), mp.mpf(setup.n_extraordinary)
    k = 2 * mp.pi / mp.mpf(setup.dc_wavelength)
    a = (th0 + t) / ne
    return ne * k * L / mp.cos(a) + k * L * mp.tan(a) * mp.sin(th0 + t)


def test_default_wavenumber(setup):
    assert setup.k == pytest.approx(K_DC, rel=1e-14)
    assert setup.gamma == pytest.approx(GAMMA, rel=1e-13)


def test_pump_convention_uses_pump_wavelength():
    s = CrystalSetup(k_convention=KConvention.PUMP)
    assert s.k == pytest.approx(2 * math.pi / 405e-9)


def test_zero_length_crystal_has_no_phase():
    s = CrystalSetup(crystal_length=0.0)
    assert np.all(phase_profile(s, np.linspace(-0.01, 0.01, 11)) == 0)
    c = phase_coefficients(s)
    assert (c.phi0, c.alpha0, c.gamma) == (0.0, 0.0, 0.0)


def test_phase_profile_against_frozen_oracle(setup):
    assert 2 * phase_profile(setup, 0.0) == pytest.approx(PHI0, rel=1e-13)
    assert phase_profile(setup, 1e-3) == pytest.approx(PHI_1MRAD, rel=1e-13)


def test_alpha0_against_frozen_oracle(setup):
    c = phase_coefficients(setup)
    assert c.phi0 == pytest.approx(PHI0, rel=1e-13)
    assert abs(c.alpha0 / ALPHA0 - 1) < 1e-9
    assert c.gamma == pytest.approx(GAMMA, rel=1e-13)


def test_alpha0_against_live_mpmath_stencil():
    s = CrystalSetup(crystal_length=2.5e-3, central_angle=math.radians(4.0))
    h = mp.mpf("1e-4")
    w = [mp.mpf(-1) / 60, mp.mpf(3) / 20, mp.mpf(-3) / 4, 0, mp.mpf(3) / 4, mp.mpf(-3) / 20, mp.mpf(1) / 60]
    oracle = sum(c * _mp_phi(s, (i - 3) * h) for i, c in enumerate(w)) / h
    assert abs(phase_coefficients(s).alpha0 / float(oracle) - 1) < 1e-9


def test_first_order_residual_is_quadratic(setup):
    c = phase_coefficients(setup)

    def rel(t):
        r = phase_profile(setup, t) - phase_profile(setup, 0.0) - c.alpha0 * t
        return abs(r) / abs(c.alpha0 * t)

    # second-order term: phi''/(2 phi') * t, with phi''/phi' = 19.1 here (mpmath)
    assert rel(1e-3) == pytest.approx(9.55e-3, rel=2e-3)
    assert rel(1e-4) < 1e-3
    assert rel(1e-4) / rel(1e-3) == pytest.approx(0.1, rel=1e-2)


def test_coefficients_scale_linearly_with_length(setup):
    a = phase_coefficients(setup)
    b = phase_coefficients(CrystalSetup(crystal_length=2 * setup.crystal_length))
    assert b.phi0 == pytest.approx(2 * a.phi0, rel=1e-15)
    assert b.alpha0 == pytest.approx(2 * a.alpha0, rel=1e-12)
    assert b.gamma == pytest.approx(2 * a.gamma, rel=1e-15)


def test_second_derivative_is_finite_near_axis(setup):
    h = 1e-4
    t = np.linspace(-0.01, 0.01, 41)
    d2 = (phase_profile(setup, t + h) - 2 * phase_profile(setup, t) + phase_profile(setup, t - h)) / h**2
    assert np.all(np.isfinite(d2))


def test_phase_profile_domain_error(setup):
    with pytest.raises(ValueError):
        phase_profile(setup, 2.4)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"crystal_length": -1e-3},
        {"central_angle": 0.0},
        {"n_ordinary": 0.9},
        {"n_extraordinary": 0.5},
        {"pump_wavelength": 0.0},
        {"dc_wavelength": -1.0},
    ],
)
def test_invalid_setup_rejected(kwargs):
    with pytest.raises(ValueError):
        CrystalSetup(**kwargs)


def test_delta_k_phase_matched_center(setup):
    assert delta_k(setup, 0.0, 0.0) == (0.0, 0.0)
    par, _ = delta_k(setup, 2e-3, -2e-3)
    assert par == 0.0


def test_delta_k_linear_matches_exact(setup):
    _, lin = delta_k(setup, 1e-3, 0.0)
    _, ex = delta_k(setup, 1e-3, 0.0, exact=True)
    assert lin == pytest.approx(setup.k * 1e-3, rel=1e-14)
    assert abs(ex / lin - 1) < 0.01


def test_delta_k_exact_vanishes_at_center(setup):
    par, perp = delta_k(setup, 0.0, 0.0, exact=True)
    assert abs(par) < 1e-6 * setup.k and perp == 0.0


def test_delta_k_domain(setup):
    with pytest.raises(ValueError):
        delta_k(setup, 0.25, 0.0)


@given(st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_delta_k_antisymmetry(ts, ti):
    s = CrystalSetup()
    assert delta_k(s, ts, ti)[1] == -delta_k(s, ti, ts)[1]


def test_longitudinal_weight_values(setup):
    assert longitudinal_weight(setup, 0.0) == 1.0
    assert abs(longitudinal_weight(setup, math.pi / setup.gamma)) < 1e-15


@given(st.floats(-1.0, 1.0))
def test_longitudinal_weight_is_even(x):
    s = CrystalSetup()
    assert longitudinal_weight(s, -x) == longitudinal_weight(s, x)
