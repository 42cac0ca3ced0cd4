"""``pumpcorr`` command-line front end.

Usage::

    pumpcorr <command> --scenario <path|bundled name> [--set key=value]... [--out dir]

Exit codes: 0 success, 1 failed W-K check, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .pump import angular_spectrum, dump_pump, far_field_divergence
from .purity import UnresolvedIntegrandError, purity_via_wk, scan_alpha, scan_beta
from .scenario import ScenarioError, load_scenario
from .slm import gap_visibility_factor

EXIT_OK, EXIT_WK_FAIL, EXIT_CONFIG, EXIT_UNCONVERGED = 0, 1, 2, 3
WK_TOL = 1e-6
WK_POINTS = 101


class FitNotConverged(RuntimeError):
    pass


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _features_json(curve, features, extra=None):
    out = {
        "parameter": curve.parameter_name,
        "argmax_rad_per_rad": features.argmax,
        "argmax_rad_per_mrad": features.argmax * 1e-3,
        "max_visibility": features.max_value,
        "fwhm_rad_per_rad": features.fwhm,
        "fwhm_rad_per_mrad": None if features.fwhm is None else features.fwhm * 1e-3,
        "revival_count": len(features.revivals),
        "revivals": [
            {"position_rad_per_rad": x, "position_rad_per_mrad": x * 1e-3, "visibility": h}
            for x, h in features.revivals
        ],
        "metadata": curve.metadata,
    }
    out.update(extra or {})
    return out


class Runner:
    def __init__(self, args):
        self.args = args
        self.sf = load_scenario(args.scenario, args.set or [])
        self.out = Path(args.out or self.sf["outputs.dir"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.workers = self.sf["numerics.workers"]
        self._fit = None

    def _name(self, suffix):
        return self.out / f"{self.sf.name}_{suffix}"

    def fit_result(self):
        if self._fit is None:
            path = self.sf.measured_file()
            if path is None:
                raise ScenarioError(f"{self.sf.path}: fit needs fit.measured_file")
            measured = analysis.load_curve(path)
            self._fit = analysis.fit_visibility(measured, self.sf.build(1.0))
        return self._fit

    def scenario(self):
        if self.sf["mixing.m"] == "fit":
            return self.sf.build(self.fit_result().m)
        return self.sf.build()

    def scan(self, which):
        sc = self.scenario()
        if which == "alpha":
            curve = scan_alpha(sc, self.sf.alpha_range(), self.sf["scan.alpha_points"], self.workers)
            extra = {"alpha0_rad_per_rad": sc.coefficients.alpha0, "alpha0_rad_per_mrad": sc.coefficients.alpha0 * 1e-3}
        else:
            curve = scan_beta(sc, self.sf.beta_range(), self.sf["scan.beta_points"], self.workers)
            extra = {"nonmonotonicity": analysis.nonmonotonicity(curve)}
        return curve, analysis.curve_features(curve), extra

    # -- commands ----------------------------------------------------------

    def cmd_scan(self, which):
        curve, feats, extra = self.scan(which)
        analysis.write_curve(curve, self._name(f"{which}.csv"))
        _write_json(self._name(f"{which}_features.json"), _features_json(curve, feats, extra))
        print(
            f"{self.sf.name}: {which} peak at {feats.argmax * 1e-3:.6f} rad/mrad, "
            f"{len(feats.revivals)} revival(s); wrote {self._name(which + '.csv')}"
        )
        return EXIT_OK

    def cmd_scan_alpha(self):
        return self.cmd_scan("alpha")

    def cmd_scan_beta(self):
        return self.cmd_scan("beta")

    def cmd_pump_show(self):
        sc = self.scenario()
        pump = sc.pump
        x = pump.x()
        inten = np.abs(pump.amplitude) ** 2
        phase = np.angle(pump.amplitude)
        lines = ["x_m,intensity_per_m,phase_rad"] + [f"{a!r},{b!r},{c!r}" for a, b, c in zip(x.tolist(), inten.tolist(), phase.tolist())]
        self._name("pump.csv").write_text("\n".join(lines) + "\n")
        spec = angular_spectrum(pump, sc.k)
        lines = ["theta_minus_rad,intensity_per_rad"] + [f"{a!r},{b!r}" for a, b in zip(spec.theta.tolist(), spec.intensity.tolist())]
        self._name("fourier.csv").write_text("\n".join(lines) + "\n")
        mean, std = spec.moments()
        info = {
            "scenario": self.sf.name,
            "samples": int(pump.amplitude.size),
            "dx_m": pump.dx,
            "rms_width_m": float(np.sqrt(np.sum(inten * (x - np.sum(inten * x) * pump.dx) ** 2) * pump.dx)),
            "far_field_divergence_rad": far_field_divergence(pump, sc.setup.k_pump),
            "theta_minus_mean_rad": mean,
            "theta_minus_std_rad": std,
        }
        _write_json(self._name("pump.json"), info)
        if self.args.dump:
            dump_pump(pump, self.args.dump)
        print(f"{self.sf.name}: far-field divergence {info['far_field_divergence_rad'] * 1e3:.4f} mrad")
        return EXIT_OK

    def cmd_wk_check(self):
        # the autocorrelation route only holds for a flat window
        sc = self.scenario().replace(window=None)
        beta = np.linspace(*self.sf.beta_range(), WK_POINTS)
        quad = np.real(sc.coherence_beta(beta, self.workers))
        wk = purity_via_wk(sc.pump, sc.k, beta, walkoff=sc.walkoff)
        diff = float(np.max(np.abs(quad - wk)))
        ok = diff < WK_TOL
        _write_json(
            self._name("wk_check.json"),
            {
                "scenario": self.sf.name,
                "window": "flat",
                "points": WK_POINTS,
                "max_abs_difference": diff,
                "tolerance": WK_TOL,
                "passed": ok,
            },
        )
        print(f"{self.sf.name}: max |p_quad - p_wk| = {diff:.3e} ({'ok' if ok else 'FAILED'})")
        return EXIT_OK if ok else EXIT_WK_FAIL

    def _fit_json(self, fit):
        return {
            "m": fit.m,
            "shift_rad_per_rad": fit.beta_shift,
            "shift_rad_per_mrad": fit.beta_shift * 1e-3,
            "implied_displacement_m": fit.beta_shift / self.sf.build(1.0).k,
            "alpha0_estimate_rad_per_rad": fit.alpha0_est,
            "residual_rms": fit.residual_rms,
            "iterations": fit.iterations,
            "converged": fit.converged,
        }

    def cmd_fit(self):
        fit = self.fit_result()
        _write_json(self._name("fit.json"), self._fit_json(fit))
        if not fit.converged:
            raise FitNotConverged(f"fit did not converge in {fit.iterations} iterations")
        print(f"{self.sf.name}: m = {fit.m:.6f}, shift = {fit.beta_shift * 1e-3:.6f} rad/mrad")
        return EXIT_OK

    def cmd_report(self):
        sc = self.scenario()
        c = sc.coefficients
        a_curve, a_feats, a_extra = self.scan("alpha")
        b_curve, b_feats, b_extra = self.scan("beta")
        report = {
            "scenario": self.sf.name,
            "k_per_m": sc.k,
            "phi0_rad": c.phi0,
            "alpha0_rad_per_rad": c.alpha0,
            "alpha0_rad_per_mrad": c.alpha0 * 1e-3,
            "gamma_rad_per_rad": c.gamma,
            "m": sc.mixing.m,
            "gap_visibility_factor": gap_visibility_factor(sc.slm),
            "far_field_divergence_rad": far_field_divergence(sc.pump, sc.setup.k_pump),
            "walkoff_m": sc.walkoff,
            "walkoff_shift_rad_per_mrad": sc.k * sc.walkoff * 1e-3,
            "alpha_scan": _features_json(a_curve, a_feats, a_extra),
            "beta_scan": _features_json(b_curve, b_feats, b_extra),
        }
        if self.sf.measured_file() is not None:
            report["fit"] = self._fit_json(self.fit_result())
        _write_json(self._name("report.json"), report)
        print(
            f"{self.sf.name}: alpha0 = {c.alpha0 * 1e-3:.6f} rad/mrad, "
            f"beta FWHM = {'n/a' if b_feats.fwhm is None else f'{b_feats.fwhm * 1e-3:.6f}'} rad/mrad, "
            f"{len(b_feats.revivals)} revival(s)"
        )
        return EXIT_OK


COMMANDS = {
    "scan-alpha": Runner.cmd_scan_alpha,
    "scan-beta": Runner.cmd_scan_beta,
    "pump-show": Runner.cmd_pump_show,
    "wk-check": Runner.cmd_wk_check,
    "fit": Runner.cmd_fit,
    "report": Runner.cmd_report,
}


def build_parser():
    p = argparse.ArgumentParser(prog="pumpcorr", description="Visibility scans of a two-crystal SPDC source.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario key")
    p.add_argument("--out", help="output directory (default: outputs.dir)")
    p.add_argument("--dump", help="pump-show: also write the pump in loadable form to this path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        runner = Runner(args)
        return COMMANDS[args.command](runner)
    except (UnresolvedIntegrandError, FitNotConverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
