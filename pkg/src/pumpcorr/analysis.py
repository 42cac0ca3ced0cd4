"""Curve features, revival statistics and least-squares fitting of visibility curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .purity import Scenario, VisibilityCurve

__all__ = [
    "CurveFeatures",
    "FitResult",
    "CurveFileError",
    "curve_features",
    "nonmonotonicity",
    "fit_visibility",
    "load_curve",
    "write_curve",
]


class CurveFileError(ValueError):
    pass


@dataclass(frozen=True)
class CurveFeatures:
    argmax: float
    max_value: float
    fwhm: float | None
    revivals: list = field(default_factory=list)  # (position, height) pairs


@dataclass(frozen=True)
class FitResult:
    m: float
    beta_shift: float
    alpha0_est: float | None
    residual_rms: float
    iterations: int
    converged: bool = True


def _vertex(x, p, i):
    """Abscissa of the parabola through samples i-1, i, i+1."""
    if i == 0 or i == len(p) - 1:
        return float(x[i])
    a, b, _ = np.polyfit(x[i - 1 : i + 2] - x[i], p[i - 1 : i + 2], 2)
    if a >= 0:
        return float(x[i])
    return float(x[i] - b / (2 * a))


def _crossing(x, p, i, j, level):
    # linear interpolation between samples i (above) and j (below)
    return float(x[i] + (level - p[i]) * (x[j] - x[i]) / (p[j] - p[i]))


def curve_features(curve: VisibilityCurve, revival_threshold: float = 0.8) -> CurveFeatures:
    """Peak position (parabolic), FWHM and revivals after the peak.

    A revival is a local maximum beyond the peak, in the direction of
    increasing parameter, that follows a dip below
    ``revival_threshold * max_value``.
    """
    x, p = curve.parameter_values, curve.purity_values
    n = len(p)
    i = int(np.argmax(p))
    top = float(p[i])
    half = 0.5 * top

    fwhm = None
    left = next((j for j in range(i, -1, -1) if p[j] < half), None)
    right = next((j for j in range(i, n) if p[j] < half), None)
    if left is not None and right is not None:
        fwhm = _crossing(x, p, right - 1, right, half) - _crossing(x, p, left + 1, left, half)

    revivals = []
    low = top
    for j in range(i + 1, n - 1):
        if p[j] > p[j - 1] and p[j] >= p[j + 1] and low < revival_threshold * top:
            revivals.append((_vertex(x, p, j), float(p[j])))
            low = p[j]
        low = min(low, p[j])
    return CurveFeatures(_vertex(x, p, i), top, fwhm, revivals)


def nonmonotonicity(curve: VisibilityCurve) -> float:
    """Sum of the positive increments of the visibility beyond its peak."""
    p = curve.purity_values
    i = int(np.argmax(p))
    return float(np.sum(np.clip(np.diff(p[i:]), 0.0, None)))


def _model(scenario: Scenario, name: str):
    fast = scenario.replace(numerics=replace(scenario.numerics, check_convergence=False))
    if name == "beta":
        return lambda v: np.real(fast.coherence_beta(v))
    if name == "alpha":
        return lambda v: np.real(fast.coherence_alpha(v))
    raise ValueError(f"cannot fit a curve over {name!r}")


def fit_visibility(
    measured: VisibilityCurve,
    scenario: Scenario,
    n_coarse: int = 41,
    max_iter: int = 100,
    rel_tol: float = 1e-4,
) -> FitResult:
    """Fit ``m * p_model(x + shift)`` to a measured curve.

    A coarse grid over the shift is followed by coordinate descent: ``m`` is
    minimized exactly (the model is linear in it) and the shift by a bounded
    scalar search around the current value. ``p_model`` is the scenario's
    visibility without mixing.
    """
    x, y = measured.parameter_values, measured.purity_values
    if x.size < 5:
        raise ValueError("fitting needs at least 5 measured points")
    model = _model(scenario, measured.parameter_name)
    span = x[-1] - x[0]
    step = span / (n_coarse - 1)

    def best_m(shift):
        p = model(x + shift)
        pp = float(p @ p)
        m = min(max(float(p @ y) / pp, 0.0), 1.0) if pp > 0 else 0.0
        return m, float(np.sum((m * p - y) ** 2))

    def sse(m, shift):
        return float(np.sum((m * model(x + shift) - y) ** 2))

    coarse = np.linspace(-0.5 * span, 0.5 * span, n_coarse)
    shift = float(coarse[int(np.argmin([best_m(s)[1] for s in coarse]))])
    m = best_m(shift)[0]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        m_new = best_m(shift)[0]
        res = minimize_scalar(
            lambda s: sse(m_new, s),
            bounds=(shift - step, shift + step),
            method="bounded",
            options={"xatol": 1e-9 * step},
        )
        shift_new = float(res.x)
        dm, ds = abs(m_new - m), abs(shift_new - shift)
        m, shift = m_new, shift_new
        if dm <= rel_tol * max(abs(m), 1e-3) and ds <= rel_tol * max(abs(shift), step):
            converged = True
            break
    m = best_m(shift)[0]
    rms = math.sqrt(sse(m, shift) / x.size)
    if measured.parameter_name == "alpha":
        return FitResult(m, 0.0, scenario.coefficients.alpha0 - shift, rms, it, converged)
    return FitResult(m, shift, None, rms, it, converged)


_UNITS = {"param_rad_per_rad": 1.0, "param_rad_per_mrad": 1e3}


def write_curve(curve: VisibilityCurve, path) -> None:
    """CSV with the parameter in rad/rad and rad/mrad, the visibility and |D|."""
    absd = curve.abs_coherence if curve.abs_coherence is not None else np.full(curve.purity_values.shape, np.nan)
    lines = [
        f"# parameter: {curve.parameter_name}",
        "param_rad_per_rad,param_rad_per_mrad,visibility,abs_coherence",
    ]
    for v, p, a in zip(curve.parameter_values.tolist(), curve.purity_values.tolist(), np.asarray(absd).tolist()):
        lines.append(f"{v!r},{v * 1e-3!r},{p!r},{a!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_curve(path, parameter_name: str | None = None) -> VisibilityCurve:
    """Read a measured curve (``param_rad_per_rad`` or ``param_rad_per_mrad`` plus ``visibility``)."""
    name = parameter_name
    header = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, val = s[1:].partition(":")
            if key.strip() == "parameter" and name is None:
                name = val.strip()
            continue
        cells = [c.strip() for c in s.split(",")]
        if header is None:
            header = cells
            continue
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise CurveFileError(f"{path}:{lineno}: unparseable row") from None
    if header is None or "visibility" not in header:
        raise CurveFileError(f"{path}: missing 'visibility' column")
    col = next((c for c in _UNITS if c in header), None)
    if col is None:
        raise CurveFileError(f"{path}: need a param_rad_per_rad or param_rad_per_mrad column")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    x = data[:, header.index(col)] * _UNITS[col]
    y = data[:, header.index("visibility")]
    return VisibilityCurve(name or "beta", x, y, {"source": str(path)})
