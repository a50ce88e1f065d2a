"""Regenerate the spectrum-vs-g data for the three standard parameter sets.

    python3 scripts/figure_sweeps.py fig2 --out data/fig2.csv

Writes the same CSV schema as ``rabi2 sweep`` and prints, on stderr, how the
detected inter-sector crossings line up with the exactly known points.
"""

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from rabi2.cli import SWEEP_COLUMNS, emit
from rabi2.config import RunConfig
from rabi2.model import ModelParams, Sector
from rabi2.reference import juddian_points
from rabi2.spectrum import sweep

PRESETS = {
    # name: (omega0, omega, g_max, steps, window)
    "fig1": (0.0, 1.0, 0.23, 23, (-0.55, 3.0)),
    "fig2": (1.0, 2.0, 0.45, 45, (-1.5, 7.0)),
    "fig3": (2.0, 1.0, 0.235, 47, (-1.6, 3.5)),
}


def rows_of(base, res):
    rows = []
    for p in res.points:
        if p.result is None:
            continue
        for r in p.result.records():
            rows.append({"kind": "level", "omega0": base.omega0, "omega": base.omega, "g": p.g,
                         "sector": r.sector, "index": r.index, "curve": p.curve_ids[(r.sector, r.index)],
                         "energy": r.energy, "residual": r.residual, "order_used": r.order_used})
    for ev in res.crossings:
        rows.append({"kind": "crossing", "omega0": base.omega0, "omega": base.omega, "g": ev.g,
                     "sector": ev.sectors[0], "curve": ev.curves[0], "energy": ev.energy,
                     "sector_b": ev.sectors[1], "curve_b": ev.curves[1]})
    return rows


def juddian_report(base, res, window):
    if base.omega0 == 0:
        print("omega0 = 0: every level is doubly degenerate, so there are no isolated crossings", file=sys.stderr)
        return
    for N in (2, 3, 4):
        pair = {Sector.PLUS, Sector.MINUS} if N % 2 == 0 else {Sector.PLUS_I, Sector.MINUS_I}
        for pt in juddian_points(base.omega0, base.omega, N):
            if not (window[0] < pt.energy < window[1]) or pt.g > res.points[-1].g:
                print(f"N={N} g={pt.g:.6f} E={pt.energy:.6f}: outside the sweep", file=sys.stderr)
                continue
            hits = [ev for ev in res.crossings if set(ev.sectors) == pair]
            if not hits:
                print(f"N={N} g={pt.g:.6f} E={pt.energy:.6f}: not detected", file=sys.stderr)
                continue
            ev = min(hits, key=lambda e: math.hypot(e.g - pt.g, e.energy - pt.energy))
            print(f"N={N} g={pt.g:.6f} E={pt.energy:.6f}: crossing at g={ev.g:.6f} E={ev.energy:.6f} "
                  f"(dg={abs(ev.g - pt.g):.1e}, dE={abs(ev.energy - pt.energy):.1e})", file=sys.stderr)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("preset", choices=sorted(PRESETS))
    ap.add_argument("--out", type=Path)
    ap.add_argument("--steps", type=int, help="override the number of g intervals")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    omega0, omega, g_max, steps, window = PRESETS[args.preset]
    steps = args.steps or steps
    config = RunConfig(jobs=args.jobs)
    base = ModelParams(omega0, omega, 0.0)
    t0 = time.perf_counter()
    res = sweep(base, np.linspace(0.0, g_max, steps + 1), window, config)
    print(f"{args.preset}: {len(res.points)} points in {time.perf_counter() - t0:.0f} s, "
          f"{len(res.crossings)} crossings", file=sys.stderr)
    for p in res.points:
        if p.error:
            print(f"g={p.g:.6g}: {p.error}", file=sys.stderr)
    juddian_report(base, res, window)

    meta = {"preset": args.preset, "window": list(window), "config": config.as_dict()}
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            emit(rows_of(base, res), SWEEP_COLUMNS, "csv", meta, out=fh)
    else:
        emit(rows_of(base, res), SWEEP_COLUMNS, "csv", meta)


if __name__ == "__main__":
    main()
