"""Scan the third-pulse PZT across its range and fit the fringe.

    python scripts/fringe_demo.py --accel 0.05 --rot 1e-3 --points 48
"""

import argparse

from atomnav.interferometer import (
    InertialInput, InterferometerConfig, default_displacements, inertial_phase, pzt_scan,
)
from atomnav.navigation import fit_fringe, wrap_phase


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--accel", type=float, default=0.05)
    ap.add_argument("--rot", type=float, default=1e-3)
    ap.add_argument("--points", type=int, default=32)
    ap.add_argument("--atoms", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = InterferometerConfig.from_geometry(n_atoms_per_shot=args.atoms)
    inp = InertialInput(args.accel, args.rot)
    scan = pzt_scan(cfg, inp, (0.0, 0.0), default_displacements(args.points), rng_seed=args.seed)
    est = fit_fringe(scan)
    truth = inertial_phase(cfg, inp)
    print(f"T = {cfg.T * 1e3:.4f} ms, k_eff = {cfg.k_eff:.6e} 1/m")
    print(f"true phase   {wrap_phase(truth):+.6f} rad")
    print(f"fitted phase {wrap_phase(est.total_phase):+.6f} +/- {est.phase_sigma:.2e} rad")
    print(f"contrast     {est.contrast_est:.5f}, flags {est.flags or 'none'}")


if __name__ == "__main__":
    main()
