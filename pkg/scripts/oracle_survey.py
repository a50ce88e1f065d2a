"""Compare the lowest G-roots with the truncated-basis oracle over random parameters.

    python3 scripts/oracle_survey.py --count 20 --levels 8 --max-ratio 0.8
"""

import argparse
import time

import numpy as np

from rabi2.checks import compare_with_oracle
from rabi2.config import RunConfig
from rabi2.model import ModelParams
from rabi2.spectrum import lowest_spectrum


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--levels", type=int, default=8)
    ap.add_argument("--max-ratio", type=float, default=0.8, help="largest 4|g|/omega drawn")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nmax", type=int, default=400)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = RunConfig()
    print("omega0,omega,g,max_dev,spurious,seconds")
    worst = 0.0
    for _ in range(args.count):
        omega = rng.uniform(0.5, 3)
        params = ModelParams(rng.uniform(0, 3), omega, rng.uniform(-1, 1) * args.max_ratio * omega / 4)
        t0 = time.perf_counter()
        res = lowest_spectrum(params, args.levels, cfg)
        dev, spurious = compare_with_oracle(res, args.levels, n_max=args.nmax)
        worst = max(worst, dev)
        print(f"{params.omega0:.6g},{params.omega:.6g},{params.g:.6g},{dev:.3e},{len(spurious)},"
              f"{time.perf_counter() - t0:.1f}")
    print(f"# worst deviation {worst:.3e}")


if __name__ == "__main__":
    main()
