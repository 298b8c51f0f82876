"""Fitted-phase scatter versus atom number, against 1/(C sqrt N).

N counts every atom detected across the scan.
"""

import argparse
import math

import numpy as np

from atomnav.interferometer import (
    InertialInput, InterferometerConfig, default_displacements, inertial_phase, pzt_scan,
)
from atomnav.navigation import fit_fringe, shot_noise_phase_sigma


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--points", type=int, default=32)
    ap.add_argument("--contrast", type=float, default=1.0)
    args = ap.parse_args()

    disp = default_displacements(args.points)
    inp = InertialInput(0.05, 1e-3)
    print(f"{'atoms/shot':>12} {'scatter':>12} {'1/(C sqrtN)':>12} {'ratio':>7}")
    ns, scatters = [], []
    for atoms in (10**3, 10**4, 10**5, 10**6, 10**7):
        cfg = InterferometerConfig.from_geometry(n_atoms_per_shot=atoms, contrast=args.contrast)
        truth = inertial_phase(cfg, inp)
        errs = [
            math.remainder(fit_fringe(pzt_scan(cfg, inp, (0, 0), disp, rng_seed=s)).total_phase - truth,
                           2 * math.pi)
            for s in range(args.seeds)
        ]
        sq = shot_noise_phase_sigma(args.contrast, atoms * len(disp))
        sd = float(np.std(errs))
        ns.append(atoms)
        scatters.append(sd)
        print(f"{atoms:>12d} {sd:>12.3e} {sq:>12.3e} {sd / sq:>7.3f}")
    slope = np.polyfit(np.log(ns), np.log(scatters), 1)[0]
    print(f"log-log slope {slope:.3f}")


if __name__ == "__main__":
    main()
