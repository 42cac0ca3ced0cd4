"""Flat ``key = value`` scenario files.

Keys carry their unit as a suffix (``spot_m``, ``beta_max_rad_per_mrad``);
values are SI unless the suffix says otherwise. ``#`` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import pump as pf
from .crystal import CrystalSetup, KConvention
from .purity import CouplingWindow, MixingModel, Numerics, Scenario, WindowShape
from .slm import MaskMode, SlmConfig, gap_visibility_factor

__all__ = ["ScenarioError", "ScenarioFile", "load_scenario", "bundled_scenarios", "resolve_scenario_path"]


class ScenarioError(ValueError):
    pass


def _bool(s):
    v = s.lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _levels(s):
    return None if s.lower() == "continuous" else int(s)


def _m(s):
    return "fit" if s.lower() == "fit" else float(s)


def _choice(*allowed):
    def conv(s):
        v = s.lower()
        if v not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return v

    return conv


# key -> (converter, default)
KEYS = {
    "name": (str, None),
    "crystal.length_m": (float, 1e-3),
    "crystal.theta0_rad": (float, math.radians(3.0)),
    "crystal.n_ordinary": (float, 1.6603),
    "crystal.n_extraordinary": (float, 1.5442),
    "crystal.pump_wavelength_m": (float, 405e-9),
    "crystal.dc_wavelength_m": (float, 810e-9),
    "crystal.k_convention": (_choice("downconverted", "pump"), "downconverted"),
    "pump.kind": (_choice("gaussian", "grid", "file"), "gaussian"),
    "pump.spot_m": (float, 220e-6),
    "pump.spot_convention": (_choice("intensity_fwhm", "field_waist"), "intensity_fwhm"),
    "pump.curvature_per_m": (float, 0.0),
    "pump.period_m": (float, 100e-6),
    "pump.slit_fraction": (float, 0.5),
    "pump.file": (str, None),
    "pump.grid_points": (int, 4096),
    "pump.grid_dx_m": (float, 2e-6),
    "pump.walkoff_m": (float, 0.0),
    "slm.pixel_pitch_m": (float, 100e-6),
    "slm.gap_width_m": (float, 3e-6),
    "slm.pixel_count": (int, 640),
    "slm.distance_m": (float, 0.310),
    "slm.phase_levels": (_levels, None),
    "slm.mask": (_choice("ideal", "pixelated"), "ideal"),
    "window.shape": (_choice("gaussian", "tophat", "flat"), "gaussian"),
    "window.fwhm_m": (float, 5e-3),
    "window.distance_m": (float, 0.310),
    "mixing.m": (_m, 1.0),
    "mixing.include_gap_factor": (_bool, False),
    "scan.alpha_min_rad_per_mrad": (float, 0.2),
    "scan.alpha_max_rad_per_mrad": (float, 1.4),
    "scan.alpha_points": (int, 201),
    "scan.beta_max_rad_per_mrad": (float, 4.0),
    "scan.beta_points": (int, 161),
    "fit.measured_file": (str, None),
    "numerics.theta_plus_points": (int, 2048),
    "numerics.sinc_lobes": (int, 6),
    "numerics.panel_nodes": (int, 4),
    "numerics.convergence_tol": (float, 1e-4),
    "numerics.check_convergence": (_bool, True),
    "numerics.workers": (int, 1),
    "outputs.dir": (str, "out"),
}


def _parse_line(text, where):
    key, sep, value = text.partition("=")
    key, value = key.strip(), value.strip()
    if not sep or not key:
        raise ScenarioError(f"{where}: expected 'key = value'")
    if key not in KEYS:
        raise ScenarioError(f"{where}: unknown key {key!r}")
    try:
        return key, KEYS[key][0](value)
    except ValueError as exc:
        raise ScenarioError(f"{where}: bad value for {key!r}: {exc}") from None


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    path: Path
    values: dict

    @property
    def name(self) -> str:
        return self.values["name"] or self.path.stem

    def __getitem__(self, key):
        return self.values[key]

    def _base(self):
        return self.path.parent

    def crystal(self) -> CrystalSetup:
        v = self.values
        return CrystalSetup(
            crystal_length=v["crystal.length_m"],
            central_angle=v["crystal.theta0_rad"],
            n_ordinary=v["crystal.n_ordinary"],
            n_extraordinary=v["crystal.n_extraordinary"],
            pump_wavelength=v["crystal.pump_wavelength_m"],
            dc_wavelength=v["crystal.dc_wavelength_m"],
            k_convention=KConvention(v["crystal.k_convention"]),
        )

    def pump(self, setup: CrystalSetup) -> pf.PumpProfile:
        v = self.values
        grid = pf.GridSpec(v["pump.grid_points"], v["pump.grid_dx_m"])
        kind = v["pump.kind"]
        conv = pf.SpotConvention(v["pump.spot_convention"])
        if kind == "gaussian":
            return pf.gaussian_pump(v["pump.spot_m"], conv, v["pump.curvature_per_m"], grid, setup.k_pump)
        if kind == "grid":
            return pf.grid_pump(v["pump.period_m"], v["pump.slit_fraction"], v["pump.spot_m"], grid, conv)
        if not v["pump.file"]:
            raise ScenarioError(f"{self.path}: pump.kind = file needs pump.file")
        return pf.load_pump(self._base() / v["pump.file"])

    def slm(self) -> SlmConfig:
        v = self.values
        return SlmConfig(
            v["slm.pixel_pitch_m"], v["slm.gap_width_m"], v["slm.pixel_count"],
            v["slm.distance_m"], v["slm.phase_levels"],
        )

    def window(self) -> CouplingWindow | None:
        v = self.values
        if v["window.shape"] == "flat":
            return None
        return CouplingWindow(v["window.fwhm_m"], v["window.distance_m"], WindowShape(v["window.shape"]))

    def numerics(self) -> Numerics:
        v = self.values
        return Numerics(
            theta_plus_points=v["numerics.theta_plus_points"],
            sinc_lobes=v["numerics.sinc_lobes"],
            panel_nodes=v["numerics.panel_nodes"],
            convergence_tol=v["numerics.convergence_tol"],
            check_convergence=v["numerics.check_convergence"],
        )

    def mixing(self, m_value: float | None = None) -> MixingModel:
        m = self.values["mixing.m"] if m_value is None else m_value
        if m == "fit":
            raise ScenarioError(f"{self.path}: mixing.m = fit must be resolved by the fit command")
        if self.values["mixing.include_gap_factor"]:
            m *= gap_visibility_factor(self.slm())
        return MixingModel(m)

    def build(self, m_value: float | None = None) -> Scenario:
        """Assemble the physics scenario; constructor errors become ``ScenarioError``."""
        try:
            setup = self.crystal()
            return Scenario(
                setup=setup,
                pump=self.pump(setup),
                window=self.window(),
                slm=self.slm(),
                mask=MaskMode(self.values["slm.mask"]),
                mixing=self.mixing(m_value if m_value is not None else (1.0 if self.values["mixing.m"] == "fit" else None)),
                walkoff=self.values["pump.walkoff_m"],
                numerics=self.numerics(),
                name=self.name,
            )
        except ScenarioError:
            raise
        except (ValueError, OSError) as exc:
            raise ScenarioError(f"{self.path}: {exc}") from exc

    def alpha_range(self):
        v = self.values
        return 1e3 * v["scan.alpha_min_rad_per_mrad"], 1e3 * v["scan.alpha_max_rad_per_mrad"]

    def beta_range(self):
        b = 1e3 * self.values["scan.beta_max_rad_per_mrad"]
        return -b, b

    def measured_file(self) -> Path | None:
        f = self.values["fit.measured_file"]
        return None if not f else self._base() / f


def bundled_scenarios() -> dict:
    root = resources.files("pumpcorr") / "scenarios"
    return {p.name[:-4]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".txt")}


def resolve_scenario_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if str(name_or_path) in bundled:
        return bundled[str(name_or_path)]
    raise ScenarioError(f"scenario not found: {name_or_path}")


def load_scenario(path, overrides=()) -> ScenarioFile:
    """Parse a scenario file; ``overrides`` are ``key=value`` strings applied last."""
    path = resolve_scenario_path(path)
    values = {k: d for k, (_, d) in KEYS.items()}
    seen = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        key, val = _parse_line(text, f"{path}:{lineno}")
        if key in seen:
            raise ScenarioError(f"{path}:{lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        values[key] = val
    for item in overrides:
        key, val = _parse_line(item, f"--set {item}")
        values[key] = val
    if values["scan.alpha_points"] < 2 or values["scan.beta_points"] < 2:
        raise ScenarioError(f"{path}: scan ranges need at least 2 points")
    if values["scan.alpha_max_rad_per_mrad"] <= values["scan.alpha_min_rad_per_mrad"]:
        raise ScenarioError(f"{path}: scan.alpha_max_rad_per_mrad must exceed scan.alpha_min_rad_per_mrad")
    if values["scan.beta_max_rad_per_mrad"] <= 0:
        raise ScenarioError(f"{path}: scan.beta_max_rad_per_mrad must be > 0")
    for key in ("pump.file", "fit.measured_file"):
        if values[key] and not (path.parent / values[key]).exists():
            raise ScenarioError(f"{path}: file for {key!r} not found: {values[key]}")
    return ScenarioFile(path, values)
