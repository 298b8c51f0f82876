"""Steps to lock versus loop gain for the integral frequency servo."""

import argparse

import numpy as np

from atomnav.lockin_servo import ServoConfig, run_servo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--setpoint", type=float, default=8e6)
    ap.add_argument("--offset", type=float, default=1e6)
    args = ap.parse_args()

    print(f"{'loop gain':>10} {'status':>10} {'steps':>7} {'final - setpoint':>18}")
    for g in np.round(np.concatenate([np.arange(0.1, 2.0, 0.1), [1.99, 2.0, 2.1, 2.5]]), 3):
        r = run_servo(args.setpoint + args.offset, None, ServoConfig(gain=g, setpoint=args.setpoint))
        lock = r.converged_at if r.converged else len(r.steps)
        print(f"{g:>10.2f} {r.status:>10} {lock:>7d} {r.final_freq - args.setpoint:>18.6g}")


if __name__ == "__main__":
    main()
