import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pumpcorr.analysis import (
    CurveFileError,
    curve_features,
    fit_visibility,
    load_curve,
    nonmonotonicity,
    write_curve,
)
from pumpcorr.pump import gaussian_pump, grid_pump
from pumpcorr.purity import CouplingWindow, MixingModel, Scenario, VisibilityCurve, scan_alpha, scan_beta


@pytest.fixture(scope="module")
def collimated(setup):
    return Scenario(setup, gaussian_pump(220e-6), window=CouplingWindow())


@pytest.fixture(scope="module")
def two_peak(setup):
    return Scenario(setup, grid_pump(100e-6, 0.3, 150e-6), window=CouplingWindow())


@pytest.fixture(scope="module")
def grid_curve(two_peak):
    return scan_beta(two_peak, (-1300, 1300), 401)


def _curve(x, p, name="beta"):
    return VisibilityCurve(name, np.asarray(x, float), np.asarray(p, float))


def test_monotone_curve_has_no_revivals():
    x = np.linspace(0, 5, 50)
    f = curve_features(_curve(x, np.exp(-x)))
    assert f.revivals == [] and f.argmax == 0.0 and f.max_value == 1.0


def test_gaussian_fwhm():
    sigma = 1.3
    x = np.linspace(-5, 5, 101)
    f = curve_features(_curve(x, np.exp(-(x**2) / (2 * sigma**2))))
    assert abs(f.fwhm / (2 * sigma * math.sqrt(2 * math.log(2))) - 1) < 5e-3
    assert abs(f.argmax) < 1e-12


def test_fwhm_absent_when_curve_stays_high():
    x = np.linspace(-1, 1, 21)
    assert curve_features(_curve(x, 1 - 0.1 * x**2)).fwhm is None


def test_parabolic_argmax_between_samples():
    x = np.linspace(-1, 1, 21)
    f = curve_features(_curve(x, 1 - (x - 0.033) ** 2))
    assert f.argmax == pytest.approx(0.033, abs=1e-12)


@settings(max_examples=40)
@given(st.floats(1e-3, 1e3))
def test_argmax_invariant_under_rescaling(scale):
    x = np.linspace(-3, 3, 61)
    p = 0.9 * np.exp(-((x - 0.37) ** 2)) * (1 + 0.3 * np.cos(4 * x)) / 1.3
    a = curve_features(_curve(x, p)).argmax
    p2 = p * min(scale, 1 / p.max())
    assert curve_features(_curve(x, p2)).argmax == pytest.approx(a, abs=1e-12)


def test_revival_requires_deep_dip():
    x = np.linspace(0, 10, 201)
    shallow = 1 - 0.1 * np.sin(x) ** 2
    assert curve_features(_curve(x, shallow)).revivals == []
    deep = np.exp(-x) + 0.5 * np.exp(-((x - 6) ** 2))
    rev = curve_features(_curve(x, deep)).revivals
    assert len(rev) == 1 and rev[0][0] == pytest.approx(6.0, abs=0.05)


def test_two_peak_scenario_revival(two_peak, grid_curve):
    f = curve_features(grid_curve)
    assert len(f.revivals) == 1
    pos, height = f.revivals[0]
    assert abs(pos / (two_peak.k * 100e-6) - 1) < 0.02
    assert height <= f.max_value
    assert grid_curve.parameter_values[0] <= pos <= grid_curve.parameter_values[-1]


def test_nonmonotonicity_examples(collimated, grid_curve):
    gauss = scan_beta(collimated, (-4000, 4000), 161)
    assert nonmonotonicity(gauss) < 1e-6
    p = grid_curve.purity_values
    i = int(np.argmax(p))
    f = curve_features(grid_curve)
    rev_idx = int(np.argmin(np.abs(grid_curve.parameter_values - f.revivals[0][0])))
    dip = p[i:rev_idx].min()
    assert nonmonotonicity(grid_curve) > 0
    # up to the trough before the next (200 um) revival starts to rise
    keep = grid_curve.parameter_values <= 1100
    head = _curve(grid_curve.parameter_values[keep], p[keep])
    assert nonmonotonicity(head) == pytest.approx(p[rev_idx] - dip, rel=0.05)
    assert nonmonotonicity(grid_curve) >= nonmonotonicity(head)


def test_nonmonotonicity_scales_and_translates(grid_curve):
    x, p = grid_curve.parameter_values, grid_curve.purity_values
    nm = nonmonotonicity(grid_curve)
    assert nonmonotonicity(_curve(x, 0.7 * p)) == pytest.approx(0.7 * nm, rel=1e-12)
    assert nonmonotonicity(_curve(x + 123.4, p)) == nm


def test_fit_round_trip_noiseless(collimated):
    shift = 200.0
    synthetic = scan_beta(collimated.replace(mixing=MixingModel(0.9), walkoff=shift / collimated.k), (-4000, 4000), 161)
    fit = fit_visibility(synthetic, collimated)
    assert fit.converged
    assert abs(fit.m - 0.9) < 1e-3
    assert abs(fit.beta_shift - shift) * 1e-3 < 1e-3


def test_fit_exact_model_residual(collimated):
    fit = fit_visibility(scan_beta(collimated, (-4000, 4000), 81), collimated)
    assert fit.residual_rms < 1e-8 and fit.m == pytest.approx(1.0, abs=1e-9)


def test_fit_alpha_curve_recovers_alpha0(collimated):
    c = collimated.coefficients
    curve = scan_alpha(collimated.replace(mixing=MixingModel(0.85)), (200, 1400), 121)
    fit = fit_visibility(curve, collimated)
    assert fit.alpha0_est == pytest.approx(c.alpha0, abs=1e-3)
    assert fit.m == pytest.approx(0.85, abs=1e-6)


def test_fit_needs_points(collimated):
    with pytest.raises(ValueError):
        fit_visibility(_curve([0, 1, 2], [1, 0.9, 0.8]), collimated)


def test_shift_to_displacement(setup):
    # 0.2 rad/mrad over k = 2 pi / 810 nm
    assert 200.0 / setup.k == pytest.approx(25.78e-6, rel=1e-3)


def test_curve_file_round_trip(tmp_path, grid_curve):
    f = tmp_path / "c.csv"
    write_curve(grid_curve, f)
    back = load_curve(f)
    assert back.parameter_name == "beta"
    assert np.array_equal(back.parameter_values, grid_curve.parameter_values)
    assert np.array_equal(back.purity_values, grid_curve.purity_values)


def test_curve_in_mrad_units(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("param_rad_per_mrad,visibility\n-1,0.5\n0,0.9\n1,0.5\n")
    c = load_curve(f, "beta")
    assert np.array_equal(c.parameter_values, [-1000.0, 0.0, 1000.0])


@pytest.mark.parametrize(
    "body",
    ["param_rad_per_rad,foo\n0,1\n1,1\n", "x,visibility\n0,1\n1,1\n", "param_rad_per_rad,visibility\n0,a\n1,1\n"],
)
def test_bad_curve_files(tmp_path, body):
    f = tmp_path / "b.csv"
    f.write_text(body)
    with pytest.raises(CurveFileError):
        load_curve(f)
