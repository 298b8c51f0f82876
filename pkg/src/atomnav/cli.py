"""Command-line scenario runner.

Exit codes: 0 ok, 1 I/O failure, 2 configuration/parse error, 3 a check failed.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .alignment import BeamGeometry, check_alignment
from .constants import (
    BEAM_WIDTH, LAMBDA_D2, PZT_MAX_DISPLACEMENT, RB87_MASS, V_Z0, ZONE_SPACING,
)
from .freq_chain import ChainError, check_locks, evaluate, load_bundled, parse_chain
from .interferometer import (
    InertialInput, InterferometerConfig, accel_phase, inertial_phase, pzt_scan,
    rotation_phase, sagnac_area_from_geometry,
)
from .lockin_servo import ServoConfig, demodulate, run_servo, synthesize
from .navigation import (
    dead_reckon, invert_dual_scan, position_sigma_from_accel_noise, sensitivity,
    shot_noise_phase_sigma, NavState,
)

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3

DEFAULT_SCENARIO = {
    "interferometer": {
        "lambda_m": LAMBDA_D2,
        "v_z_mps": V_Z0,
        "d_m": BEAM_WIDTH,
        "L_m": ZONE_SPACING,
        "atom_mass_kg": RB87_MASS,
        "contrast": 1.0,
    },
    "inertial": {
        "accel_mps2": 0.0,
        "rot_rate_radps": 0.0,
        "segments": [],
    },
    "scan": {
        "points": 32,
        "pzt_min_m": 0.0,
        "pzt_max_m": PZT_MAX_DISPLACEMENT,
        "atoms_per_shot": 1_000_000,
        "shot_noise": True,
        "base_phases_rad": [0.0, 0.0],
        "seed": 0,
    },
    "navigation": {
        "dt_s": 0.1,
        "duration_s": 10.0,
        "initial_heading_rad": 0.0,
    },
    "alignment": {
        "tilt_rad": 0.0,
        "safety_factor": 10.0,
    },
    "lockin": {
        "s1": 0.3,
        "s2": 0.7,
        "ref_freq_hz": 100e3,
        "sample_rate_hz": 6.4e6,
        "periods": 100,
        "noise_rms": 0.0,
        "seed": 0,
    },
    "servo": {
        "setpoint_hz": 8e6,
        "initial_offset_hz": 1e6,
        "gain": 0.5,
        "fvc_slope": 1.0,
        "tolerance_hz": 1.0,
        "max_steps": 10_000,
    },
}

REQUIRED_BLOCKS = {
    "fringe": ("interferometer", "inertial", "scan"),
    "navigate": ("interferometer", "inertial", "scan", "navigation"),
    "align": ("interferometer", "alignment"),
    "lockin": ("lockin",),
    "chain": (),
}


class ConfigError(Exception):
    pass


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def resolve_scenario(raw: Optional[dict], command: str) -> dict:
    """Fill defaults into a scenario document, checking required blocks."""
    if raw is None:
        _note("no --config given; using the built-in default scenario")
        return copy.deepcopy(DEFAULT_SCENARIO)
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    for block in REQUIRED_BLOCKS[command]:
        if block not in raw:
            raise ConfigError(f"missing required block '{block}' for '{command}'")
    resolved = copy.deepcopy(DEFAULT_SCENARIO)
    for block, values in raw.items():
        if block not in resolved:
            raise ConfigError(f"unknown block '{block}'")
        if not isinstance(values, dict):
            raise ConfigError(f"block '{block}' must be an object")
        for key in values:
            if key not in resolved[block]:
                raise ConfigError(f"unknown key '{block}.{key}'")
        for key, default in resolved[block].items():
            if key not in values and block in REQUIRED_BLOCKS[command]:
                _note(f"default applied: {block}.{key} = {default!r}")
        resolved[block].update(values)
    return resolved


def build_config(s: dict) -> InterferometerConfig:
    blk = s["interferometer"]
    try:
        return InterferometerConfig.from_geometry(
            lambda_laser=float(blk["lambda_m"]),
            v_z=float(blk["v_z_mps"]),
            d=float(blk["d_m"]),
            L=float(blk["L_m"]),
            atom_mass=float(blk["atom_mass_kg"]),
            n_atoms_per_shot=int(s["scan"]["atoms_per_shot"]),
            contrast=float(blk["contrast"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"interferometer: {exc}") from None


def inertial_at(s: dict, t: float) -> tuple[float, float]:
    """Truth (accel, rot_rate) at time t: base values overridden by segments."""
    blk = s["inertial"]
    a, w = float(blk["accel_mps2"]), float(blk["rot_rate_radps"])
    for seg in sorted(blk["segments"], key=lambda g: g["start_s"]):
        if seg["start_s"] <= t:
            a = float(seg.get("accel_mps2", a))
            w = float(seg.get("rot_rate_radps", w))
    return a, w


def _displacements(s: dict) -> np.ndarray:
    blk = s["scan"]
    points = int(blk["points"])
    if points < 5:
        raise ConfigError("scan.points must be >= 5")
    lo, hi = float(blk["pzt_min_m"]), float(blk["pzt_max_m"])
    if not 0 <= lo < hi <= PZT_MAX_DISPLACEMENT:
        raise ConfigError(f"scan PZT range must satisfy 0 <= min < max <= {PZT_MAX_DISPLACEMENT}")
    disp = np.linspace(lo, hi, points)
    disp[-1] = hi
    return disp


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(out_dir: Path, name: str, text: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")


def cmd_fringe(s: dict, out_dir: Path) -> tuple[int, dict]:
    cfg = build_config(s)
    a, w = inertial_at(s, 0.0)
    inertial = InertialInput(a, w)
    phi1, phi2 = (float(v) for v in s["scan"]["base_phases_rad"])
    scan = pzt_scan(
        cfg, inertial, (phi1, phi2), _displacements(s),
        rng_seed=int(s["scan"]["seed"]), shot_noise=bool(s["scan"]["shot_noise"]),
    )
    area = sagnac_area_from_geometry(cfg)
    summary = {
        "command": "fringe",
        "accel_phase_rad": accel_phase(cfg, a),
        "rotation_phase_rad": rotation_phase(cfg, w, area),
        "sagnac_area_m2": area,
        "total_phase_rad": inertial_phase(cfg, inertial) + phi1 - 2 * phi2,
        "commanded_phase_span_rad": float(scan.phases[-1] - scan.phases[0]),
        "k_eff_radpm": cfg.k_eff,
        "T_s": cfg.T,
        "scenario": s,
    }
    _write(out_dir, "fringe.csv", scan.to_csv())
    _write(out_dir, "fringe_summary.json", _dump(summary))
    return EXIT_OK, summary


def simulate_navigation(s: dict, seed: Optional[int] = None):
    """Per-epoch dual-beam fringe simulation, inversion and dead reckoning.

    Returns (estimated trajectory, truth trajectory, summary dict).
    """
    cfg = build_config(s)
    back = cfg.reversed_beam()
    nav = s["navigation"]
    dt, duration = float(nav["dt_s"]), float(nav["duration_s"])
    if not (dt > 0 and duration > 0):
        raise ConfigError("navigation.dt_s and navigation.duration_s must be > 0")
    n = int(round(duration / dt)) + 1
    disp = _displacements(s)
    noisy = bool(s["scan"]["shot_noise"])
    phi1, phi2 = (float(v) for v in s["scan"]["base_phases_rad"])
    seed = int(s["scan"]["seed"]) if seed is None else seed

    # zero-input calibration of the laser phase combination phi1 - 2 phi2
    cal = invert_dual_scan(
        pzt_scan(cfg, InertialInput(), (phi1, phi2), disp, shot_noise=False),
        pzt_scan(back, InertialInput(), (phi1, phi2), disp, shot_noise=False),
        cfg,
    )
    offset = cal.forward.total_phase

    children = np.random.SeedSequence(seed).spawn(n)
    truth = np.array([inertial_at(s, k * dt) for k in range(n)])
    est = np.empty((n, 2))
    predicted = (0.0, 0.0)
    for k in range(n):
        inp = InertialInput(*truth[k])
        rf, rb = (np.random.default_rng(c) for c in children[k].spawn(2))
        e = invert_dual_scan(
            pzt_scan(cfg, inp, (phi1, phi2), disp, rf, noisy),
            pzt_scan(back, inp, (phi1, phi2), disp, rb, noisy),
            cfg, phase_offset=offset, predicted=predicted,
        )
        est[k] = e.accel, e.rot_rate
        predicted = (e.accel_phase + e.rotation_phase, e.accel_phase - e.rotation_phase)

    init = NavState(0.0, np.zeros(2), np.zeros(2), float(nav["initial_heading_rad"]))
    traj = dead_reckon(est[:, 0], est[:, 1], dt, init)
    true_traj = dead_reckon(truth[:, 0], truth[:, 1], dt, init)

    sens = sensitivity(cfg)
    phase_sigma = shot_noise_phase_sigma(cfg.contrast, len(disp) * cfg.n_atoms_per_shot)
    accel_sigma = sens.accel_res * phase_sigma / math.sqrt(2.0) if noisy else 0.0
    err = traj.final.position - true_traj.final.position
    summary = {
        "command": "navigate",
        "epochs": n,
        "final_position_m": traj.final.position.tolist(),
        "true_final_position_m": true_traj.final.position.tolist(),
        "final_position_error_m": err.tolist(),
        "final_heading_rad": traj.final.heading,
        "true_final_heading_rad": true_traj.final.heading,
        "accel_sigma_per_epoch_mps2": accel_sigma,
        "predicted_position_sigma_m": position_sigma_from_accel_noise(accel_sigma, dt, n),
        "accel_rms_error_mps2": float(np.sqrt(np.mean((est[:, 0] - truth[:, 0]) ** 2))),
        "rot_rms_error_radps": float(np.sqrt(np.mean((est[:, 1] - truth[:, 1]) ** 2))),
        "scenario": s,
    }
    return traj, true_traj, summary


def cmd_navigate(s: dict, out_dir: Path) -> tuple[int, dict]:
    traj, _, summary = simulate_navigation(s)
    _write(out_dir, "trajectory.csv", traj.to_csv())
    _write(out_dir, "navigate_summary.json", _dump(summary))
    return EXIT_OK, summary


def cmd_align(s: dict, out_dir: Path) -> tuple[int, dict]:
    cfg = build_config(s)
    blk = s["alignment"]
    try:
        report = check_alignment(
            BeamGeometry.from_config(cfg, tilt=float(blk["tilt_rad"])),
            safety_factor=float(blk["safety_factor"]),
        )
    except ValueError as exc:
        raise ConfigError(f"alignment: {exc}") from None
    summary = {"command": "align", **report.to_dict(), "scenario": s}
    _write(out_dir, "align_report.json", _dump(summary))
    return (EXIT_OK if report.passed else EXIT_CHECK), summary


def cmd_lockin(s: dict, out_dir: Path) -> tuple[int, dict]:
    blk, sv = s["lockin"], s["servo"]
    ref, fs = float(blk["ref_freq_hz"]), float(blk["sample_rate_hz"])
    periods = int(blk["periods"])
    try:
        sig = synthesize(
            float(blk["s1"]), float(blk["s2"]), ref, float(blk["noise_rms"]),
            duration=periods / ref, sample_rate=fs, rng_seed=int(blk["seed"]),
        )
        estimate = demodulate(sig)
        cfg = ServoConfig(
            gain=float(sv["gain"]), setpoint=float(sv["setpoint_hz"]),
            fvc_slope=float(sv["fvc_slope"]), max_steps=int(sv["max_steps"]),
            tolerance=float(sv["tolerance_hz"]),
        )
    except ValueError as exc:
        raise ConfigError(f"lockin: {exc}") from None
    result = run_servo(cfg.setpoint + float(sv["initial_offset_hz"]), None, cfg)
    summary = {
        "command": "lockin",
        "s1_estimate": estimate,
        "servo_status": result.status,
        "servo_converged": result.converged,
        "servo_converged_at": result.converged_at,
        "servo_final_freq_hz": result.final_freq,
        "servo_loop_gain": result.loop_gain,
        "scenario": s,
    }
    _write(out_dir, "servo.csv", result.to_csv())
    _write(out_dir, "lockin_summary.json", _dump(summary))
    return EXIT_OK, summary


def cmd_chain(path: str, out_dir: Optional[Path]) -> tuple[int, list]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8") if p.exists() else load_bundled(p.name)
    except (OSError, FileNotFoundError) as exc:
        raise OSError(f"cannot read chain file {path!r}: {exc}") from None
    chain = parse_chain(text)
    results = check_locks(chain, evaluate(chain))
    report = [r.to_dict() for r in results]
    if out_dir is not None:
        _write(out_dir, "chain_report.json", _dump(report))
    return (EXIT_OK if all(r.passed for r in results) else EXIT_CHECK), report


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d(None), help="scenario JSON file")
    parser.add_argument("--out", default=d(None), help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=d(None), help="override the scenario seed")
    parser.add_argument("--json", action="store_true", default=d(False),
                        help="print the machine-readable summary to stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomnav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"atomnav {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("fringe", "simulate a PZT fringe scan"),
        ("navigate", "dual-beam inversion and dead reckoning"),
        ("align", "check Raman beam tilt against the Doppler bound"),
    ]:
        _global_flags(sub.add_parser(name, help=help_), suppress=True)
    p = sub.add_parser("chain", help="evaluate a frequency chain and its checks")
    _global_flags(p, suppress=True)
    p.add_argument("file", help="chain file, or the name of a bundled chain")
    p = sub.add_parser("lockin", help="lock-in demodulation and servo demo")
    _global_flags(p, suppress=True)
    p.add_argument("--s1", type=float)
    p.add_argument("--s2", type=float)
    p.add_argument("--ref-freq-hz", type=float)
    p.add_argument("--sample-rate-hz", type=float)
    p.add_argument("--noise-rms", type=float)
    p.add_argument("--periods", type=int)
    p.add_argument("--servo-offset-hz", type=float)
    p.add_argument("--gain", type=float)
    return parser


def _apply_overrides(s: dict, args) -> None:
    if args.seed is not None:
        s["scan"]["seed"] = args.seed
        s["lockin"]["seed"] = args.seed
    if args.command == "lockin":
        for attr, (block, key) in {
            "s1": ("lockin", "s1"), "s2": ("lockin", "s2"),
            "ref_freq_hz": ("lockin", "ref_freq_hz"),
            "sample_rate_hz": ("lockin", "sample_rate_hz"),
            "noise_rms": ("lockin", "noise_rms"), "periods": ("lockin", "periods"),
            "servo_offset_hz": ("servo", "initial_offset_hz"), "gain": ("servo", "gain"),
        }.items():
            value = getattr(args, attr)
            if value is not None:
                s[block][key] = value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out) if args.out else Path("out")
    try:
        if args.command == "chain":
            code, summary = cmd_chain(args.file, Path(args.out) if args.out else None)
            print(_dump(summary), end="")
            return code
        raw = None
        if args.config:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        scenario = resolve_scenario(raw, args.command)
        _apply_overrides(scenario, args)
        handler = {
            "fringe": cmd_fringe, "navigate": cmd_navigate,
            "align": cmd_align, "lockin": cmd_lockin,
        }[args.command]
        code, summary = handler(scenario, out_dir)
    except (ChainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: bad scenario value: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.json:
        print(_dump(summary), end="")
    elif args.command == "lockin":
        print(f"s1 estimate: {summary['s1_estimate']!r}")
        print(f"servo: {summary['servo_status']} (converged={summary['servo_converged']})")
    else:
        status = "ok" if code == EXIT_OK else "check failed"
        print(f"{args.command}: {status}; outputs in {out_dir}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
