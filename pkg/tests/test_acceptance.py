"""Exit criteria. Each test prints one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from atomnav.alignment import BeamGeometry, max_tilt
from atomnav.atom_optics import ground_population
from atomnav.cli import main
from atomnav.freq_chain import check_locks, evaluate, load_bundled, parse_chain
from atomnav.interferometer import (
    InertialInput, InterferometerConfig, accel_phase, default_displacements, fringe_probability,
    pzt_phase, pzt_scan, rotation_phase, sagnac_area_from_geometry,
)
from atomnav.lockin_servo import ServoConfig, demodulate, lockin_integral, run_servo, synthesize
from atomnav.navigation import dead_reckon, fit_fringe, invert_dual_scan, shot_noise_phase_sigma

SEED = 20240517


def test_c1_eq1_oracle_equivalence(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        cfg = InterferometerConfig.from_geometry(
            lambda_laser=rng.uniform(700e-9, 900e-9),
            v_z=rng.choice([-1, 1]) * rng.uniform(5, 30), L=rng.uniform(2e-3, 20e-3),
        )
        a, w = rng.uniform(-0.5, 0.5), rng.uniform(-5e-3, 5e-3)
        x0, v0 = rng.uniform(-1e-3, 1e-3), rng.uniform(-0.05, 0.05)
        phis = rng.uniform(-np.pi, np.pi, 3)
        a_eff = a - 2 * cfg.v_z * w  # Coriolis in the rotating frame
        xs = [x0 + v0 * i * cfg.T + 0.5 * a_eff * (i * cfg.T) ** 2 for i in range(3)]
        pulse_level = ground_population(*(p - cfg.k_eff * x for p, x in zip(phis, xs)))
        total = accel_phase(cfg, a) + rotation_phase(cfg, w, sagnac_area_from_geometry(cfg))
        closed = fringe_probability(total + phis[0] - 2 * phis[1] + phis[2])
        worst = max(worst, abs(pulse_level - closed))
    elapsed = time.perf_counter() - start
    criterion["detail"] = f"max |dP| = {worst:.2e} (tol 1e-10), {elapsed:.3f} s (< 1 s)"
    assert worst < 1e-10
    assert elapsed < 1.0


def test_c2_alignment_bound(criterion):
    g = BeamGeometry(d=1e-3, v_z=15.0, k_eff=4 * math.pi / 780e-9)
    theta = max_tilt(g)
    criterion["detail"] = f"max_tilt = {theta * 1e6:.3f} urad (312 +/- 1%)"
    assert theta == pytest.approx(312e-6, rel=0.01)


def test_c3_cooling_chain_exact(criterion, capsys):
    chain = parse_chain(load_bundled("cooling_chain.fc"))
    values = evaluate(chain)
    exact = {
        "after_double_diff": 6_568_000_000_000,
        "nu_int": 160_000_000_000,
        "filtered": 8_000_000_000,
        "div16": 500_000_000,
        "aom_offset": 78_500_000_000,
    }
    got = {k: values[k].components_mhz for k in exact}
    results = check_locks(chain, values)
    code = main(["chain", "cooling_chain.fc"])
    capsys.readouterr()
    criterion["detail"] = f"{len(results)} checks, exit {code}"
    assert got == {k: (v,) for k, v in exact.items()}
    assert all(r.passed and r.nearest_mhz == r.expected_mhz for r in results)
    assert code == 0


def test_c4_lockin(criterion):
    ref, fs = 100e3, 64 * 100e3
    worst = 0.0
    for s1, s2, periods in [(0.3, 0.7, 100), (1.0, 0.0, 1), (-0.8, 2.0, 37), (0.0, 1.0, 250)]:
        sig = synthesize(s1, s2, ref, 0.0, periods / ref, fs)
        worst = max(worst, abs(lockin_integral(sig) - 0.5 * s1))
    counts, rms = [], []
    for periods in (10, 40, 160, 640, 2560):
        errs = [
            demodulate(synthesize(0.3, 0.7, ref, 0.1, periods / ref, 16 * ref, rng_seed=k)) - 0.3
            for k in range(40)
        ]
        counts.append(16 * periods)
        rms.append(math.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(counts), np.log(rms), 1)[0]
    criterion["detail"] = f"|raw - s1/2| max {worst:.1e} (1e-9); noise slope {slope:.3f} (-0.5 +/- 0.1, 40 seeds)"
    assert worst < 1e-9
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_c5_pzt_mapping(criterion):
    phase = pzt_phase(9e-6)
    criterion["detail"] = f"9 um -> {phase!r} rad"
    assert phase == 30.0


def test_c6_end_to_end_inversion(criterion):
    start = time.perf_counter()
    cfg = InterferometerConfig.from_geometry()
    back = cfg.reversed_beam()
    disp = default_displacements(32)
    area = sagnac_area_from_geometry(cfg)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    done = 0
    while done < 100:
        a = rng.choice([-1, 1]) * rng.uniform(0.01, 0.45)
        w = rng.choice([-1, 1]) * rng.uniform(1e-4, 1e-2)
        pa, pw = accel_phase(cfg, a), rotation_phase(cfg, w, area)
        if abs(pa) + abs(pw) >= math.pi:  # both beam directions inside one fringe
            continue
        inp = InertialInput(a, w)
        est = invert_dual_scan(
            pzt_scan(cfg, inp, (0, 0), disp, shot_noise=False),
            pzt_scan(back, inp, (0, 0), disp, shot_noise=False), cfg,
        )
        worst = max(worst, abs(est.accel / a - 1), abs(est.rot_rate / w - 1))
        done += 1

    inp = InertialInput(0.05, 1e-3)
    truth = accel_phase(cfg, 0.05) + rotation_phase(cfg, 1e-3, area)
    errs = [
        math.remainder(fit_fringe(pzt_scan(cfg, inp, (0, 0), disp, rng_seed=s)).total_phase - truth, 2 * math.pi)
        for s in range(100)
    ]
    scatter = float(np.std(errs))
    expected = shot_noise_phase_sigma(cfg.contrast, len(disp) * cfg.n_atoms_per_shot)
    elapsed = time.perf_counter() - start
    criterion["detail"] = (
        f"max rel err {worst:.1e} (1e-8); phase scatter / (1/(C sqrt N)) = {scatter / expected:.3f}"
        f" (0.5..2, N = 32 x 1e6 atoms); {elapsed:.2f} s (< 30 s)"
    )
    assert worst < 1e-8
    assert 0.5 <= scatter / expected <= 2.0
    assert elapsed < 30.0


def test_c7_dead_reckoning(criterion):
    n = 10_001
    pos = dead_reckon(np.ones(n), np.zeros(n), 1e-3).final.position[0]
    rel = abs(pos - 50.0) / 50.0

    omega, duration = 1.3, 10.0
    dts = [0.1, 0.05, 0.025, 0.0125, 0.00625]
    errs = []
    for dt in dts:
        m = int(round(duration / dt)) + 1
        t = dt * np.arange(m)
        p = dead_reckon(np.sin(omega * t), np.zeros(m), dt).final.position[0]
        errs.append(abs(p - (t[-1] / omega - math.sin(omega * t[-1]) / omega**2)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    criterion["detail"] = f"const-accel rel err {rel:.1e} (1e-6); dt slope {slope:.3f} (2.0 +/- 0.2)"
    assert rel < 1e-6
    assert slope == pytest.approx(2.0, abs=0.2)


def test_c8_servo(criterion):
    setpoint = 8e6
    loop_gains = [0.01, 0.05] + list(np.arange(0.1, 2.0, 0.1)) + [1.95, 1.99]
    failures = []
    for slope in (1.0, 1e-6):
        for lg in loop_gains:
            for offset in (1e6, -1e6):
                cfg = ServoConfig(gain=lg / slope, setpoint=setpoint, fvc_slope=slope,
                                  max_steps=100_000, tolerance=1.0)
                r = run_servo(setpoint + offset, None, cfg)
                if not r.converged or abs(r.final_freq - setpoint) >= 1.0:
                    failures.append((slope, lg, offset))
    unstable = run_servo(setpoint + 1e6, None, ServoConfig(gain=2.5, setpoint=setpoint))
    fixed = run_servo(setpoint, None, ServoConfig(gain=0.5, setpoint=setpoint))
    criterion["detail"] = (
        f"{2 * len(loop_gains) * 2 - len(failures)}/{2 * len(loop_gains) * 2} stable runs converge; "
        f"loop gain 2.5 -> {unstable.status}; fixed point exact={bool(np.all(fixed.freqs == setpoint))}"
    )
    assert not failures
    assert unstable.status == "unstable"
    assert fixed.converged_at == 0 and np.all(fixed.freqs == setpoint) and np.all(fixed.errors == 0.0)


def test_c9_cli_determinism(criterion, tmp_path, capsys):
    commands = [
        ["fringe"], ["navigate"], ["align"], ["lockin", "--noise-rms", "0.05"],
        ["chain", "cooling_chain.fc"], ["chain", "raman_chain.fc"],
    ]
    mismatched = []
    for argv in commands:
        runs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{argv[0]}_{len(runs)}_{tag}"
            code = main(argv + ["--out", str(out), "--seed", "77", "--json"])
            files = {p.name: p.read_bytes() for p in sorted(out.iterdir())} if out.exists() else {}
            runs.append((code, capsys.readouterr().out, files))
        if runs[0] != runs[1]:
            mismatched.append(" ".join(argv))
    criterion["detail"] = f"{len(commands) - len(mismatched)}/{len(commands)} commands byte-identical"
    assert not mismatched
