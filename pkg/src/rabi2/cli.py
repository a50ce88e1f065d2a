"""Command-line front end: spectra, sweeps, G traces, Juddian tables, oracle runs, checks.

Exit codes: 0 ok, 1 evaluation failure (or a sweep under 90% success),
2 invalid parameters, 3 collapse-guard refusal, 4 failed invariant.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from rabi2 import __version__, numeric
from rabi2.config import RunConfig
from rabi2.gfunction import eval_G_adaptive
from rabi2.model import CollapseGuardError, DomainError, EvaluationError, ModelParams, Sector, derive
from rabi2.reference import juddian_points, oracle_diagonalize

log = logging.getLogger("rabi2")

EXIT_OK, EXIT_EVAL, EXIT_PARAMS, EXIT_COLLAPSE, EXIT_CHECK = 0, 1, 2, 3, 4

SPECTRUM_COLUMNS = ["omega0", "omega", "g", "sector", "index", "energy", "residual", "order_used"]
SWEEP_COLUMNS = ["kind", "omega0", "omega", "g", "sector", "index", "curve", "energy",
                 "residual", "order_used", "sector_b", "curve_b"]
GTRACE_COLUMNS = ["omega0", "omega", "g", "sector", "z", "energy", "value", "sign", "order", "converged"]
JUDDIAN_COLUMNS = ["omega0", "omega", "N", "omega_big", "g", "energy"]
ORACLE_COLUMNS = ["omega0", "omega", "g", "n_max", "index", "energy", "cutoff_error_estimate"]
CHECK_COLUMNS = ["omega0", "omega", "g", "name", "passed", "applicable", "measured", "threshold", "detail"]


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Sector):
        return x.value
    if isinstance(x, str):
        return x
    return numeric.fmt(x, 15)


def _json_cell(x):
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Sector):
        return x.value
    v = float(numeric.fmt(x, 15)) if math.isfinite(float(x)) else None
    return v


def emit(rows: list[dict], columns: list[str], fmt: str, meta: dict, out=None):
    out = out or sys.stdout
    if fmt == "json":
        doc = {"meta": meta, "rows": [{c: _json_cell(r.get(c)) for c in columns} for r in rows]}
        out.write(json.dumps(doc, indent=1, sort_keys=False) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])


def _echo(params: ModelParams) -> dict:
    return {"omega0": params.omega0, "omega": params.omega, "g": params.g}


def _meta(command: str, config: RunConfig, **extra) -> dict:
    return {"command": command, "version": __version__, "config": config.as_dict(), **extra}


# --- subcommands ------------------------------------------------------------


def _window(args, params: ModelParams):
    from rabi2.spectrum import lower_bound

    lo = args.emin if args.emin is not None else lower_bound(params)
    hi = args.emax if args.emax is not None else lo + 4 * float(params.omega)
    return lo, hi


def cmd_spectrum(args, config):
    from rabi2.spectrum import spectrum

    params = ModelParams(args.omega0, args.omega, args.g)
    window = _window(args, params)
    result = spectrum(params, window, config)
    rows = [
        {**_echo(params), "sector": r.sector, "index": r.index, "energy": r.energy,
         "residual": r.residual, "order_used": r.order_used}
        for r in result.records()
    ]
    emit(rows, SPECTRUM_COLUMNS, config.output_format,
         _meta("spectrum", config, window=list(window), params=_echo(params)))
    for r in result.records():
        if not r.converged:
            log.warning("root %s #%d at %.12g not certified (z_shift=%g, order_shift=%g)",
                        r.sector.value, r.index, r.energy, r.z_shift, r.order_shift)
    return EXIT_OK


def cmd_sweep(args, config):
    from rabi2.spectrum import sweep

    base = ModelParams(args.omega0, args.omega, 0.0)
    g_values = np.linspace(args.gmin, args.gmax, args.steps + 1)
    window = _window(args, base)
    res = sweep(base, g_values, window, config, refine_crossings=not args.no_refine)
    rows = []
    for p in res.points:
        if p.result is None:
            print(f"g={p.g:.15g}: {p.error}", file=sys.stderr)
            continue
        for r in p.result.records():
            rows.append({"kind": "level", "omega0": base.omega0, "omega": base.omega, "g": p.g,
                         "sector": r.sector, "index": r.index, "curve": p.curve_ids[(r.sector, r.index)],
                         "energy": r.energy, "residual": r.residual, "order_used": r.order_used})
    for ev in res.crossings:
        rows.append({"kind": "crossing", "omega0": base.omega0, "omega": base.omega, "g": ev.g,
                     "sector": ev.sectors[0], "curve": ev.curves[0], "energy": ev.energy,
                     "sector_b": ev.sectors[1], "curve_b": ev.curves[1]})
    emit(rows, SWEEP_COLUMNS, config.output_format,
         _meta("sweep", config, window=list(window), g_values=[float(g) for g in g_values],
               success_fraction=res.success_fraction))
    return EXIT_OK if res.success_fraction >= 0.9 else EXIT_EVAL


def cmd_gtrace(args, config):
    params = ModelParams(args.omega0, args.omega, args.g)
    sector = Sector.parse(args.sector)
    lo, hi = _window(args, params)
    z = args.at if args.at is not None else config.z_primary
    rows = []
    with numeric.workprec(config.precision_bits):
        derived = derive(params)
        for e in np.linspace(lo, hi, args.samples):
            ev = eval_G_adaptive(params, derived, sector, float(e), z, config)
            rows.append({**_echo(params), "sector": sector, "z": z, "energy": float(e),
                         "value": numeric.fmt(ev.value), "sign": ev.sign, "order": ev.order,
                         "converged": ev.converged})
    emit(rows, GTRACE_COLUMNS, config.output_format, _meta("gtrace", config, params=_echo(params)))
    return EXIT_OK


def cmd_juddian(args, config):
    rows = []
    for n in (2, 3, 4):
        for pt in juddian_points(args.omega0, args.omega, n):
            rows.append({"omega0": args.omega0, "omega": args.omega, "N": pt.N,
                         "omega_big": pt.omega_big, "g": pt.g, "energy": pt.energy})
    emit(rows, JUDDIAN_COLUMNS, config.output_format, _meta("juddian", config))
    return EXIT_OK


def cmd_oracle(args, config):
    params = ModelParams(args.omega0, args.omega, args.g)
    oracle = oracle_diagonalize(params, n_max=args.nmax)
    rows = [
        {**_echo(params), "n_max": oracle.n_max, "index": i + 1, "energy": e,
         "cutoff_error_estimate": oracle.cutoff_error_estimate}
        for i, e in enumerate(oracle.lowest(args.count))
    ]
    emit(rows, ORACLE_COLUMNS, config.output_format, _meta("oracle", config, params=_echo(params)))
    return EXIT_OK


def cmd_check(args, config):
    from rabi2.checks import run_checks

    params = ModelParams(args.omega0, args.omega, args.g)
    results = run_checks(params, config, count=args.count)
    rows = [
        {**_echo(params), "name": c.name, "passed": c.passed, "applicable": c.applicable,
         "measured": c.measured, "threshold": c.threshold, "detail": c.detail}
        for c in results
    ]
    emit(rows, CHECK_COLUMNS, config.output_format, _meta("check", config, params=_echo(params)))
    failed = [c.name for c in results if not c.passed]
    if failed:
        print("failed invariants: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, coupling=True, window=True):
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    if coupling:
        p.add_argument("--g", type=float, required=True)
    if window:
        p.add_argument("--emin", type=float)
        p.add_argument("--emax", type=float)
    p.add_argument("--precision-bits", type=int)
    p.add_argument("--z", help="comma-separated evaluation points, e.g. 100,1000")
    p.add_argument("--lmax", type=int)
    p.add_argument("--tol-root", type=float)
    p.add_argument("--scan-density", type=int)
    p.add_argument("--collapse-guard", type=float)
    p.add_argument("--extrapolate", action="store_true", default=None,
                   help="Aitken-extrapolate roots in L when order-halving moves them (uncertified)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabi2", description="Exact two-photon Rabi spectra from sector G-functions.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="all sector roots in an energy window")
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="spectra over a g grid with curve labels and crossings")
    _common(p, coupling=False)
    p.add_argument("--gmin", type=float, default=0.0)
    p.add_argument("--gmax", type=float, required=True)
    p.add_argument("--steps", type=int, default=24, help="number of g intervals")
    p.add_argument("--no-refine", action="store_true", help="report crossings by linear interpolation only")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gtrace", help="G(E) samples for one sector")
    _common(p)
    p.add_argument("--sector", required=True, help="plus, minus, plus_i or minus_i")
    p.add_argument("--samples", type=int, default=41)
    p.add_argument("--at", type=float, help="single z for the trace (default: largest --z)")
    p.set_defaults(func=cmd_gtrace)

    p = sub.add_parser("juddian", help="isolated exact crossings for N = 2, 3, 4")
    _common(p, coupling=False, window=False)
    p.set_defaults(func=cmd_juddian)

    p = sub.add_parser("oracle", help="truncated Fock-basis diagonalization")
    _common(p, window=False)
    p.add_argument("--nmax", type=int, default=400)
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="run the invariant suite")
    _common(p, window=False)
    p.add_argument("--count", type=int, default=8)
    p.set_defaults(func=cmd_check)
    return ap


def config_from_args(args, environ=None) -> RunConfig:
    overrides = {
        "precision_bits": args.precision_bits,
        "z_points": tuple(float(x) for x in args.z.split(",")) if args.z else None,
        "l_max": args.lmax,
        "tol_root": args.tol_root,
        "scan_density": args.scan_density,
        "collapse_guard": args.collapse_guard,
        "extrapolate": args.extrapolate,
        "output_format": args.format,
        "jobs": args.jobs,
    }
    return RunConfig.from_sources(overrides, environ)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(args)
        return args.func(args, config)
    except CollapseGuardError as err:
        print(f"collapse guard: {err}", file=sys.stderr)
        return EXIT_COLLAPSE
    except (DomainError, ValueError) as err:
        print(f"invalid parameters: {err}", file=sys.stderr)
        return EXIT_PARAMS
    except EvaluationError as err:
        where = f" at E={err.energy:.15g}" if err.energy is not None else ""
        print(f"evaluation failure{where}: {err}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
