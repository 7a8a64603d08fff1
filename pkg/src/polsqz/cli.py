"""Command-line front end: steady-state scans, spectra, Stokes reports and figure reproduction."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .model import ConfigError, PhysicsError, SystemParams, load_config
from .records import json_text, write_text

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_ACCEPTANCE = 0, 2, 3, 4
RANGE_FLAGS = ("--range", "--omega")


@dataclass
class RunManifest:
    command: list[str]
    params: SystemParams
    outputs: list[dict] = field(default_factory=list)
    tool_version: str = __version__

    def add(self, path: Path, digest: str):
        self.outputs.append(dict(path=path.name, sha256=digest))

    def to_json(self) -> str:
        return json_text(dict(command=self.command, params=self.params.to_dict(),
                              params_hash=self.params.digest(), outputs=self.outputs,
                              tool_version=self.tool_version))


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like a:b:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from exc
    if n < 1 or (n == 1 and lo != hi) or not (np.isfinite(lo) and np.isfinite(hi)):
        raise ConfigError(f"bad range {text!r}")
    return lo, hi, n


def range_values(text: str) -> np.ndarray:
    lo, hi, n = parse_range(text)
    return np.linspace(lo, hi, n)


def _say(msg: str):
    print(msg, file=sys.stderr)


def _emit(out: Path, files: dict[str, str], manifest: RunManifest):
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        path = out / name
        manifest.add(path, write_text(path, files[name]))
    write_text(out / "manifest.json", manifest.to_json())


def _working_state(params: SystemParams, require_stable: bool):
    from .steady import Stability, linear_branch_states

    states = linear_branch_states(params.delta_c, params.s_max, params)
    if not states:
        raise PhysicsError("no linear steady state at this working point")
    stable = [s for s in states if s.stability is Stability.STABLE]
    if stable:
        return stable[0]
    if require_stable:
        raise PhysicsError(f"linear state at delta_c = {params.delta_c}, s_max = {params.s_max} is unstable")
    _say("warning: working point is not a stable linear state; using the lowest-intensity solution")
    return states[0]


def _spectrum(params, state, mode, engine, omega):
    if engine == "full":
        from .fluct_full import build_drift_diffusion, output_spectrum, stability_eigen

        dd = build_drift_diffusion(state, params)
        if not stability_eigen(dd)[0]:
            raise PhysicsError("working point is unstable (drift matrix has a growing mode)")
        return output_spectrum(dd, mode, omega)
    from .fluct_analytic import analytic_spectrum

    return analytic_spectrum(state, params, mode, engine, omega)


# ------------------------------------------------------------ subcommands

def cmd_steady(args) -> int:
    from .steady import (bistability_curve, elliptical_branch_solve, linear_branch_states,
                         resonance_scan)

    params = load_config(args.config)
    lo, hi, n = parse_range(args.range)
    manifest = RunManifest(sys.argv[1:] if args.argv is None else args.argv, params)
    files = {}

    if n == 1:
        point = params.with_updates(**{args.scan: lo})
        states = (linear_branch_states(point.delta_c, point.s_max, point)
                  + elliptical_branch_solve(point.delta_c, point.s_max, point))
        files["steady_point.json"] = json_text([s.as_row() for s in states])
        _say(f"{args.scan} = {lo:g}: {len(states)} steady state(s)")
        for s in states:
            _say(f"  {s.branch.value}: S = {s.S:.6g}, x_SR = {s.x_sr:.6g}, {s.stability.value}")
    elif args.scan == "delta_c":
        scan = resonance_scan(np.linspace(lo, hi, n), params.s_max, params)
        for name, curve in scan.curves.items():
            files[f"steady_{name}.csv"] = curve.to_csv()
            files[f"steady_{name}.json"] = curve.to_json()
        files["steady_summary.json"] = json_text(scan.summary())
        counts = {}
        for s in scan.curves["linear"].samples:
            counts[s.param] = counts.get(s.param, 0) + 1
        keys = sorted(counts)
        folds = [0.5 * (a + b) for a, b in zip(keys, keys[1:]) if counts[a] != counts[b]]
        _say(f"delta_PS = {scan.delta_ps}, S_PS = {scan.s_ps}")
        _say(f"delta_ex = {scan.delta_ex}")
        _say(f"turning points (delta_c) = {[round(f, 6) for f in folds]}")
        _say(f"tristability window = {scan.window}")
    else:
        curve = bistability_curve(params.delta_c, (lo, hi, n), params)
        files["steady_linear.csv"] = curve.to_csv()
        files["steady_linear.json"] = curve.to_json()
        _say(f"turning points (s_max) = {curve.turning_points}")
        _say(f"turning intensities (S) = {curve.turning_intensities}")
        _say(f"switching threshold (s_max) = {curve.ps_threshold}")
    _emit(Path(args.out), files, manifest)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    params = load_config(args.config)
    state = _working_state(params, require_stable=args.engine == "full")
    omega = None if args.omega is None else range_values(args.omega)
    spec = _spectrum(params, state, args.mode, args.engine, omega)
    manifest = RunManifest(sys.argv[1:] if args.argv is None else args.argv, params)
    stem = f"spectrum_{args.mode}_{args.engine}"
    _emit(Path(args.out), {f"{stem}.csv": spec.to_csv(), f"{stem}.json": spec.to_json()}, manifest)
    value, theta, w = spec.global_minimum()
    _say(f"mode {args.mode}, engine {args.engine}: minimum {value:.6g} at omega = {w:.6g}, "
         f"theta_opt - theta_x = {theta:.6g}")
    return EXIT_OK


def cmd_stokes(args) -> int:
    from .stokes import stokes_noise

    params = load_config(args.config)
    state = _working_state(params, require_stable=args.engine == "full")
    omega = None if args.omega is None else range_values(args.omega)
    ay = _spectrum(params, state, "y", args.engine, omega)
    ax = _spectrum(params, state, "x", args.engine, omega)
    report = stokes_noise(ay, state, params, x_spectrum=ax)
    manifest = RunManifest(sys.argv[1:] if args.argv is None else args.argv, params)
    _emit(Path(args.out), {"stokes_report.json": report.to_json()}, manifest)
    _say(f"min V_Sy/S0 = {report.v_normalized['y'].min():.6g}, "
         f"min V_Sz/S0 = {report.v_normalized['z'].min():.6g}, "
         f"min V_Ssq/S0 = {report.v_sq.min():.6g} at theta_sq = {report.theta_sq:.6g}")
    _say(f"polarization squeezed at {int(report.squeezed.sum())} of {report.squeezed.size} frequencies")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .figures import reproduce

    result = reproduce(args.figure)
    manifest = RunManifest(sys.argv[1:] if args.argv is None else args.argv, result.params)
    files = dict(result.files)
    files[f"fig{args.figure}_checks.json"] = result.checks_json()
    _emit(Path(args.out), files, manifest)
    print(result.table())
    return EXIT_OK if result.passed else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    from .figures import FIGURE_IDS

    parser = argparse.ArgumentParser(prog="polsqz", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="steady states over a cavity-dephasing or drive scan")
    p.add_argument("config")
    p.add_argument("--scan", choices=("delta_c", "s_max"), default="delta_c")
    p.add_argument("--range", default="0:0:1", help="a:b:n (0:0:1 evaluates a single point)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_steady)

    engines = ("full", "kerr", "sr", "combined")
    p = sub.add_parser("spectrum", help="output quadrature noise spectrum")
    p.add_argument("config")
    p.add_argument("--mode", choices=("x", "y"), default="y")
    p.add_argument("--engine", choices=engines, default="full")
    p.add_argument("--omega", help="a:b:n linear frequency grid in units of gamma")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("stokes", help="Stokes-parameter noise report")
    p.add_argument("config")
    p.add_argument("--engine", choices=engines, default="full")
    p.add_argument("--omega", help="a:b:n linear frequency grid in units of gamma")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_stokes)

    p = sub.add_parser("reproduce", help="regenerate a figure's data with pass/fail checks")
    p.add_argument("figure", type=int, choices=FIGURE_IDS)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_reproduce)
    return parser


def _glue_ranges(argv: list[str]) -> list[str]:
    # lets "--range -2:8:100" through without argparse reading -2 as a flag
    out, i = [], 0
    while i < len(argv):
        if argv[i] in RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    raw = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_ranges(raw))
    args.argv = raw
    try:
        return args.func(args)
    except ConfigError as exc:
        _say(f"config error: {exc}")
        return EXIT_CONFIG
    except PhysicsError as exc:
        _say(f"physics error: {exc}")
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
