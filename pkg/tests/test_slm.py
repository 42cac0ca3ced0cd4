import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pumpcorr.slm import (
    OffMaskError,
    PhaseParams,
    SlmConfig,
    gap_visibility_factor,
    per_arm_decomposition,
    pixel_edges,
    pixelated_arm_phase,
    staircase_phase,
)

finite = st.floats(-1e4, 1e4, allow_nan=False)


def test_decomposition_examples():
    assert per_arm_decomposition(PhaseParams()) == (0.0, 0.0, 0.0)
    s, i, _ = per_arm_decomposition(PhaseParams(1.0, 700.0, 0.0))
    assert s == i == 700.0
    assert per_arm_decomposition(PhaseParams(0.0, 0.0, 3.0))[:2] == (3.0, -3.0)


def test_reconstruction_on_random_angles():
    rng = np.random.default_rng(11)
    p = PhaseParams(0.3, 0.0, 250.0)
    s, i, off = per_arm_decomposition(p)
    ts, ti = rng.uniform(-0.05, 0.05, (2, 100))
    lhs = s * ts + i * ti + 2 * off
    rhs = p.phi_offset + p.alpha * (ts + ti) + p.beta * (ts - ti)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


@given(finite, finite, finite, st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_reconstruction_identity(off, a, b, ts, ti):
    s, i, o = per_arm_decomposition(PhaseParams(off, a, b))
    lhs = s * ts + i * ti + 2 * o
    rhs = off + a * (ts + ti) + b * (ts - ti)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_phase_params_must_be_finite():
    with pytest.raises(ValueError):
        PhaseParams(math.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        PhaseParams(0.0, math.inf, 0.0)


@pytest.mark.parametrize(
    "kwargs",
    [{"gap_width": 100e-6}, {"gap_width": -1e-6}, {"pixel_count": 0}, {"distance": 0.0}, {"phase_levels": 1}],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        SlmConfig(**kwargs)


def test_zero_slope_gives_offset_everywhere():
    cfg = SlmConfig()
    theta = np.linspace(-0.1, 0.1, 2001)
    phase, gap = pixelated_arm_phase(cfg, 0.0, 0.7, theta)
    assert np.all(phase[~gap] == 0.7) and np.all(phase[gap] == 0.0)
    # gaps flagged purely from geometry
    x = cfg.distance * theta / cfg.pixel_pitch + 0.5 * cfg.pixel_count
    frac = x - np.floor(x)
    g = cfg.gap_width / cfg.pixel_pitch
    assert np.array_equal(gap, (frac < g / 2) | (frac > 1 - g / 2))


def test_pixel_centre_matches_ideal():
    cfg = SlmConfig()
    centres = 0.5 * (pixel_edges(cfg)[1:] + pixel_edges(cfg)[:-1])
    phase, gap = pixelated_arm_phase(cfg, 789.2, 0.1, centres)
    assert not gap.any()
    assert np.max(np.abs(phase - (789.2 * centres + 0.1))) < 1e-12


def test_scalar_input_returns_scalars():
    phase, gap = pixelated_arm_phase(SlmConfig(), 10.0, 0.0, 1e-4)
    assert isinstance(phase, float) and isinstance(gap, bool)


def test_staircase_error_is_half_pixel():
    cfg = SlmConfig(gap_width=0.0)
    slope = 789.2
    edges = pixel_edges(cfg)
    theta = np.linspace(edges[300], edges[301], 100001)[1:-1]
    err = np.abs(staircase_phase(cfg, slope, 0.0, theta) - slope * theta)
    assert np.max(err) == pytest.approx(slope * cfg.pixel_angle / 2, rel=1e-4)


def test_off_mask():
    cfg = SlmConfig()
    with pytest.raises(OffMaskError):
        pixelated_arm_phase(cfg, 1.0, 0.0, 1.01 * cfg.half_width / cfg.distance)


def test_quantized_levels():
    cfg = SlmConfig(phase_levels=8)
    centres = 0.5 * (pixel_edges(cfg)[1:] + pixel_edges(cfg)[:-1])
    phase = staircase_phase(cfg, 500.0, 0.0, centres)
    step = 2 * math.pi / 8
    assert np.allclose(phase / step, np.round(phase / step), atol=1e-12)
    assert np.all((phase >= 0) & (phase <= 2 * math.pi))


def test_gap_factor_values():
    assert gap_visibility_factor(SlmConfig(gap_width=0.0)) == 1.0
    assert gap_visibility_factor(SlmConfig()) == pytest.approx(0.9409, abs=1e-15)
    gaps = np.linspace(0, 99.99e-6, 50)
    f = [gap_visibility_factor(SlmConfig(gap_width=g)) for g in gaps]
    assert np.all(np.diff(f) < 0) and f[-1] < 1e-7
