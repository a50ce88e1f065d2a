"""Root finding on the sector G-functions: spectra, ground state and g-sweeps.

Each sector's G(E) is scanned on a uniform energy grid, sign changes are
refined by bisection, and every root is re-located at the other evaluation
points z and at half the truncation order to measure how stable it is.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rabi2 import numeric
from rabi2.config import RunConfig
from rabi2.gfunction import Prepared, g_batch, prepare
from rabi2.model import (
    SECTORS,
    DomainError,
    EvaluationError,
    ModelParams,
    Sector,
    check_collapse_guard,
    derive,
)

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class RootRecord:
    sector: Sector
    index: int
    energy: float
    residual: float
    order_used: int
    z_checked: tuple[float, ...]
    bracket: tuple[float, float]
    z_shift: float = 0.0
    order_shift: float = 0.0
    converged: bool = True
    tangential: bool = False
    extrapolated: bool = False


@dataclass(frozen=True)
class SpectrumResult:
    params: ModelParams
    per_sector: dict
    merged: tuple
    window: tuple[float, float]

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for e, _ in self.merged])

    def lowest(self, count: int) -> list[tuple[float, Sector]]:
        return list(self.merged[:count])

    def records(self) -> list[RootRecord]:
        """All root records ordered by energy (ties by sector order)."""
        rows = [r for s in SECTORS for r in self.per_sector.get(s, ())]
        return sorted(rows, key=lambda r: (r.energy, SECTORS.index(r.sector)))

    @property
    def ground_sector_ok(self) -> bool | None:
        """Whether the lowest merged root is in the minus sector (None if empty)."""
        if not self.merged:
            return None
        return self.merged[0][1] is Sector.MINUS


def scan_step(params: ModelParams, config: RunConfig) -> float:
    omega = float(params.omega)
    big = math.sqrt(1 - 16 * float(params.g) ** 2 / omega**2)
    return min(omega, omega * big) / config.scan_density


def _grid(lo: float, hi: float, step: float):
    n = max(2, math.ceil((hi - lo) / step))
    lo_b, hi_b = numeric.big(lo), numeric.big(hi)
    width = hi_b - lo_b
    return np.array([lo_b + width * i / n for i in range(n + 1)], dtype=object)


def _values(prep: Prepared, sector: Sector, energies, z: float, order: int):
    ((values, scales),) = g_batch(prep, sector, energies, [z], order)
    return values


def _scan_values(prep, sector, grid, z, order):
    try:
        return _values(prep, sector, grid, z, order)
    except EvaluationError as err:
        # locate the first grid energy that fails
        for e in grid:
            try:
                _values(prep, sector, np.array([e], dtype=object), z, order)
            except EvaluationError as inner:
                inner.energy = float(e)
                raise inner from err
        raise


def _bisect(prep, sector, lo, hi, s_lo, z, order, tol):
    lo = np.array(lo, dtype=object)
    hi = np.array(hi, dtype=object)
    s_lo = np.asarray(s_lo)
    if len(lo) == 0:
        return lo, hi
    width = max(float(h - l) for l, h in zip(lo, hi))
    steps = math.ceil(math.log2(width / tol)) if width > tol else 0
    for _ in range(steps):
        mid = (lo + hi) / 2
        s = numeric.signs(_values(prep, sector, mid, z, order))
        same = s == s_lo
        zero = s == 0
        lo, hi = np.where(same | zero, mid, lo), np.where(same, hi, mid)
    return lo, hi


def _locate(prep, sector, brackets, z, order, tol):
    """Bisect brackets [(lo, hi)] at (z, order) down to width tol.

    Returns the final (lo, hi) per bracket, or None where the ends do not
    change sign at this (z, order).
    """
    if not brackets:
        return []
    lo = np.array([b[0] for b in brackets], dtype=object)
    hi = np.array([b[1] for b in brackets], dtype=object)
    s_lo = numeric.signs(_values(prep, sector, lo, z, order))
    s_hi = numeric.signs(_values(prep, sector, hi, z, order))
    ok = (s_lo * s_hi) < 0
    out = [None] * len(brackets)
    idx = np.nonzero(ok)[0]
    if len(idx):
        blo, bhi = _bisect(prep, sector, lo[idx], hi[idx], s_lo[idx], z, order, tol)
        for j, i in enumerate(idx):
            out[i] = (blo[j], bhi[j])
    for i in np.nonzero((s_lo == 0) | (s_hi == 0))[0]:
        e = lo[i] if s_lo[i] == 0 else hi[i]
        out[i] = (e, e)
    return out


def _mid(pair):
    return None if pair is None else (pair[0] + pair[1]) / 2


def _golden_split(prep, sector, a, b, sign_ref, z, order, iterations=60):
    """Minimize |G| on [a, b]; return ('split', E) on a sign flip, else ('min', E, |G|)."""
    def f(e):
        v = _values(prep, sector, np.array([e], dtype=object), z, order)[0]
        return v
    c = b - (b - a) * GOLDEN
    d = a + (b - a) * GOLDEN
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        for e, v in ((c, fc), (d, fd)):
            if numeric.sign(v) != sign_ref:
                return ("split", e)
        if abs(fc) < abs(fd):
            b, d, fd = d, c, fc
            c = b - (b - a) * GOLDEN
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * GOLDEN
            fd = f(d)
    best = (c, fc) if abs(fc) < abs(fd) else (d, fd)
    return ("min", best[0], abs(best[1]))


def _aitken(e0, e1, e2):
    denom = (e2 - e1) - (e1 - e0)
    if denom == 0:
        return e2
    return e2 - (e2 - e1) ** 2 / denom


def find_roots(params: ModelParams, sector: Sector, window, config: RunConfig | None = None) -> list[RootRecord]:
    """All roots of one sector's G in [E_min, E_max], lowest first."""
    config = config or RunConfig()
    e_min, e_max = float(window[0]), float(window[1])
    if not e_min < e_max:
        raise DomainError(f"empty energy window ({e_min}, {e_max})")
    if params.g == 0:
        raise DomainError("find_roots needs g != 0; use rabi2.reference.reference_g0")
    check_collapse_guard(params, config.collapse_guard)

    z_main = config.z_primary
    order = config.l_max
    tol = config.tol_root
    with numeric.workprec(config.precision_bits):
        prep = prepare(params, derive(params))
        grid = _grid(e_min, e_max, scan_step(params, config))
        values = _scan_values(prep, sector, grid, z_main, order)
        s = numeric.signs(values)
        mags = [abs(v) for v in values]

        brackets = []  # (lo, hi, grid index lo, grid index hi)
        exact = []
        for i in range(len(grid) - 1):
            if s[i] * s[i + 1] < 0:
                brackets.append((grid[i], grid[i + 1], i, i + 1))
        for i in np.nonzero(s == 0)[0]:
            exact.append(i)

        tangential = []
        for i in range(1, len(grid) - 1):
            if s[i] == 0 or not (s[i - 1] == s[i] == s[i + 1]):
                continue
            if not (mags[i] < mags[i - 1] and mags[i] < mags[i + 1]):
                continue
            found = _golden_split(prep, sector, grid[i - 1], grid[i + 1], s[i], z_main, order)
            if found[0] == "split":
                brackets.append((grid[i - 1], found[1], i - 1, i + 1))
                brackets.append((found[1], grid[i + 1], i - 1, i + 1))
            else:
                ref = max(mags[i - 1], mags[i + 1])
                if found[2] < config.residual_floor * ref:
                    tangential.append((found[1], float(found[2] / ref), i))

        spans = [(b[0], b[1]) for b in brackets]
        main = _locate(prep, sector, spans, z_main, order, tol)
        others = {z: _locate(prep, sector, spans, z, order, tol) for z in config.z_points if z != z_main}
        half = _locate(prep, sector, spans, z_main, order // 2, tol)

        raw = []
        final = main
        main = [_mid(m) for m in main]
        half = [_mid(h) for h in half]
        others = {z: [_mid(x) for x in located] for z, located in others.items()}
        mids = np.array([m for m in main if m is not None], dtype=object)
        mid_values = _values(prep, sector, mids, z_main, order) if len(mids) else []
        j = 0
        for pos, (b, m, h) in enumerate(zip(brackets, main, half)):
            if m is None:
                continue
            ref = max(mags[b[2]], mags[b[3]])
            residual = float(abs(mid_values[j]) / ref) if ref else 0.0
            j += 1
            z_shift = 0.0
            for located in others.values():
                other = located[pos]
                z_shift = max(z_shift, math.inf if other is None else abs(float(other - m)))
            order_shift = abs(float(h - m)) if h is not None else math.inf
            energy = m
            extrapolated = False
            if config.extrapolate and order_shift > config.tol_order:
                l1, l0 = order - config.delta_l, order - 2 * config.delta_l
                e1 = _mid(_locate(prep, sector, [(b[0], b[1])], z_main, l1, tol)[0])
                e0 = _mid(_locate(prep, sector, [(b[0], b[1])], z_main, l0, tol)[0])
                if e0 is not None and e1 is not None:
                    energy = _aitken(e0, e1, m)
                    extrapolated = True
            converged = (z_shift <= tol) and (order_shift <= config.tol_order) and not extrapolated
            raw.append(dict(
                energy=float(energy), residual=residual,
                bracket=(float(final[pos][0]), float(final[pos][1])),
                z_shift=z_shift, order_shift=order_shift, converged=converged,
                tangential=False, extrapolated=extrapolated,
            ))
        for i in exact:
            raw.append(dict(
                energy=float(grid[i]), residual=0.0, bracket=(float(grid[i]), float(grid[i])),
                z_shift=0.0, order_shift=0.0, converged=True, tangential=False, extrapolated=False,
            ))
        for e, res, i in tangential:
            raw.append(dict(
                energy=float(e), residual=res, bracket=(float(grid[i - 1]), float(grid[i + 1])),
                z_shift=math.nan, order_shift=math.nan, converged=False, tangential=True, extrapolated=False,
            ))

    raw.sort(key=lambda r: r["energy"])
    deduped = []
    for r in raw:
        if deduped and abs(r["energy"] - deduped[-1]["energy"]) <= tol:
            continue
        deduped.append(r)
    if any(r["tangential"] for r in deduped):
        log.warning("sector %s: tangential root candidate(s) flagged", sector.value)
    return [
        RootRecord(sector=sector, index=i + 1, order_used=order, z_checked=tuple(config.z_points), **r)
        for i, r in enumerate(deduped)
    ]


def _assemble(params, per_sector, window) -> SpectrumResult:
    merged = sorted(
        ((r.energy, r.sector) for s in SECTORS for r in per_sector[s]),
        key=lambda t: (t[0], SECTORS.index(t[1])),
    )
    result = SpectrumResult(params, per_sector, tuple(merged), (float(window[0]), float(window[1])))
    return result


def spectrum(params: ModelParams, window, config: RunConfig | None = None) -> SpectrumResult:
    """Roots of all four G-functions in the window, merged into one ordered spectrum."""
    config = config or RunConfig()
    per = {s: tuple(find_roots(params, s, window, config)) for s in SECTORS}
    result = _assemble(params, per, window)
    if result.ground_sector_ok is False and window[0] <= lower_bound(params):
        log.warning("lowest root is in sector %s, not minus", result.merged[0][1].value)
    return result


def lower_bound(params: ModelParams) -> float:
    """Rigorous lower bound -|omega0|/2 - omega/2 on the whole spectrum."""
    return -abs(float(params.omega0)) / 2 - float(params.omega) / 2


def lowest_spectrum(params: ModelParams, count: int, config: RunConfig | None = None) -> SpectrumResult:
    """Spectrum on a window grown upward from the rigorous lower bound until it holds >= count roots."""
    config = config or RunConfig()
    omega = float(params.omega)
    big = math.sqrt(1 - 16 * float(params.g) ** 2 / omega**2)
    lo = lower_bound(params)
    hi = lo + (count / 2 + 1) * omega * big
    per = {s: list(find_roots(params, s, (lo, hi), config)) for s in SECTORS}
    while sum(len(v) for v in per.values()) < count:
        new_hi = hi + 2 * omega * big
        for s in SECTORS:
            extra = find_roots(params, s, (hi, new_hi), config)
            per[s].extend(extra)
        hi = new_hi
    per = {s: tuple(_reindex(v)) for s, v in per.items()}
    return _assemble(params, per, (lo, hi))


def _reindex(records):
    out = []
    for r in sorted(records, key=lambda r: r.energy):
        if out and abs(r.energy - out[-1].energy) <= 0:
            continue
        out.append(RootRecord(**{**r.__dict__, "index": len(out) + 1}))
    return out


def ground_state(params: ModelParams, config: RunConfig | None = None) -> RootRecord:
    """Lowest root of G_minus.

    The search window starts at [-|omega0|/2 - omega, -|omega0|/2 + margin] and
    is pushed downward until a root is bracketed. For omega0 < 0 the minus
    sector need not hold the global ground state.
    """
    config = config or RunConfig()
    step = scan_step(params, config)
    top = -abs(float(params.omega0)) / 2 + 10 * step
    lo = -abs(float(params.omega0)) / 2 - float(params.omega)
    width = float(params.omega)
    for _ in range(12):
        roots = find_roots(params, Sector.MINUS, (lo, top), config)
        if roots:
            return roots[0]
        width *= 2
        top, lo = lo, lo - width
    raise EvaluationError("no root of G_minus found below -|omega0|/2")


# --- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class CrossingEvent:
    g: float
    energy: float
    sectors: tuple[Sector, Sector]
    curves: tuple[int, int]
    refined: bool


@dataclass
class SweepPoint:
    g: float
    result: SpectrumResult | None = None
    error: str | None = None
    curve_ids: dict = field(default_factory=dict)  # (sector, index) -> curve id


@dataclass
class SweepResult:
    params_base: ModelParams
    window: tuple[float, float]
    points: list
    crossings: list

    @property
    def success_fraction(self) -> float:
        return sum(p.result is not None for p in self.points) / max(1, len(self.points))

    def curve_energy(self, curve: int) -> list[tuple[float, float]]:
        out = []
        for p in self.points:
            for (sector, index), cid in p.curve_ids.items():
                if cid == curve:
                    out.append((p.g, p.result.per_sector[sector][index - 1].energy))
        return out


def zero_coupling_spectrum(params: ModelParams, window) -> SpectrumResult:
    """Exact g = 0 spectrum in the window, built from the per-sector ladders."""
    from rabi2.reference import reference_g0

    lo, hi = float(window[0]), float(window[1])
    count = 4 + 2 * math.ceil((hi + abs(float(params.omega0))) / float(params.omega))
    per = {}
    for sector, levels in reference_g0(params, max(count, 2)).items():
        inside = [e for e in levels if lo <= e <= hi]
        per[sector] = tuple(
            RootRecord(sector=sector, index=i + 1, energy=e, residual=0.0, order_used=0,
                       z_checked=(), bracket=(e, e))
            for i, e in enumerate(inside)
        )
    return _assemble(params, per, window)


def _sweep_point(args):
    params, window, config = args
    try:
        if params.g == 0:
            return zero_coupling_spectrum(params, window), None
        return spectrum(params, window, config), None
    except (DomainError, EvaluationError) as err:
        return None, f"{type(err).__name__}: {err}"


def _match(prev: list[tuple[float, int]], cur: list[float], threshold: float) -> list[int | None]:
    """Order-preserving match of sorted current energies onto previous (energy, curve) pairs."""
    if not prev or not cur:
        return [None] * len(cur)
    best = None
    for offset in range(-min(3, len(prev)), min(3, len(cur)) + 1):
        pairs = [(i, i + offset) for i in range(len(prev)) if 0 <= i + offset < len(cur)]
        if not pairs:
            continue
        cost = sum(abs(prev[i][0] - cur[j]) for i, j in pairs) / len(pairs)
        key = (cost, -len(pairs))
        if best is None or key < best[0]:
            best = (key, pairs)
    out = [None] * len(cur)
    for i, j in best[1]:
        if abs(prev[i][0] - cur[j]) <= threshold:
            out[j] = prev[i][1]
    return out


def _min_gap(energies) -> float:
    # coincident levels (accidental g = 0 degeneracy) do not define a scale
    return min((b - a for a, b in zip(energies, energies[1:]) if b - a > 1e-12), default=math.inf)


def _track(points: list[SweepPoint]) -> None:
    next_id = 0
    previous = {s: [] for s in SECTORS}
    for p in points:
        if p.result is None:
            continue
        for s in SECTORS:
            energies = [r.energy for r in p.result.per_sector[s]]
            spacing = _min_gap(energies)
            prev_spacing = _min_gap([e for e, _ in previous[s]])
            threshold = 0.5 * min(spacing, prev_spacing)
            if not math.isfinite(threshold):
                threshold = float(p.result.params.omega)
            ids = _match(previous[s], energies, threshold)
            current = []
            for k, (e, cid) in enumerate(zip(energies, ids)):
                if cid is None:
                    cid = next_id
                    next_id += 1
                p.curve_ids[(s, k + 1)] = cid
                current.append((e, cid))
            previous[s] = current


def _curve_table(point: SweepPoint) -> dict[int, tuple[Sector, float]]:
    return {
        cid: (sector, point.result.per_sector[sector][index - 1].energy)
        for (sector, index), cid in point.curve_ids.items()
    }


def _nearest_root(params, sector, guess, halfwidth, config):
    """Root of one sector closest to ``guess`` within guess +- halfwidth (primary z only)."""
    with numeric.workprec(config.precision_bits):
        prep = prepare(params, derive(params))
        n = 24
        grid = _grid(guess - halfwidth, guess + halfwidth, 2 * halfwidth / n)
        s = numeric.signs(_values(prep, sector, grid, config.z_primary, config.l_max))
        spans = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if s[i] * s[i + 1] < 0]
        located = _locate(prep, sector, spans, config.z_primary, config.l_max, config.tol_root)
        roots = [float(_mid(r)) for r in located if r is not None]
    if not roots:
        return None
    return min(roots, key=lambda e: abs(e - guess))


def _refine_crossing(base, g0, g1, a0, a1, b0, b1, sa, sb, config, tol_g=1e-9, max_iter=40):
    """Bisection in g on E_a(g) - E_b(g) between two sweep points."""
    lo, hi = g0, g1
    ea_lo, eb_lo, ea_hi, eb_hi = a0, b0, a1, b1
    d_lo = ea_lo - eb_lo
    for _ in range(max_iter):
        if hi - lo <= tol_g:
            break
        g = (lo + hi) / 2
        t = (g - lo) / (hi - lo)
        guess_a = ea_lo + t * (ea_hi - ea_lo)
        guess_b = eb_lo + t * (eb_hi - eb_lo)
        width_a = 2 * abs(ea_hi - ea_lo) + 20 * scan_step(base.with_g(g), config)
        width_b = 2 * abs(eb_hi - eb_lo) + 20 * scan_step(base.with_g(g), config)
        ea = _nearest_root(base.with_g(g), sa, guess_a, width_a, config)
        eb = _nearest_root(base.with_g(g), sb, guess_b, width_b, config)
        if ea is None or eb is None:
            return None
        d = ea - eb
        if d == 0:
            return g, ea
        if (d > 0) == (d_lo > 0):
            lo, ea_lo, eb_lo, d_lo = g, ea, eb, d
        else:
            hi, ea_hi, eb_hi = g, ea, eb
    t = 0.5
    return (lo + hi) / 2, ((ea_lo + ea_hi) / 2 + (eb_lo + eb_hi) / 2) / 2


def _crossings(base, points, config, refine, min_gap) -> list[CrossingEvent]:
    events = []
    good = [p for p in points if p.result is not None]
    for p0, p1 in zip(good, good[1:]):
        t0, t1 = _curve_table(p0), _curve_table(p1)
        common = sorted(set(t0) & set(t1))
        for i, ca in enumerate(common):
            for cb in common[i + 1:]:
                sa, a0 = t0[ca]
                sb, b0 = t0[cb]
                if sa is sb:
                    continue
                a1, b1 = t1[ca][1], t1[cb][1]
                d0, d1 = a0 - b0, a1 - b1
                if abs(d0) <= min_gap or abs(d1) <= min_gap or (d0 > 0) == (d1 > 0):
                    continue
                t = d0 / (d0 - d1)
                g_star = p0.g + t * (p1.g - p0.g)
                e_star = a0 + t * (a1 - a0)
                refined = False
                if refine:
                    better = _refine_crossing(base, p0.g, p1.g, a0, a1, b0, b1, sa, sb, config)
                    if better is not None:
                        g_star, e_star = better
                        refined = True
                pair = sorted([(sa, ca), (sb, cb)], key=lambda x: SECTORS.index(x[0]))
                events.append(CrossingEvent(
                    g=g_star, energy=e_star,
                    sectors=(pair[0][0], pair[1][0]), curves=(pair[0][1], pair[1][1]),
                    refined=refined,
                ))
    events.sort(key=lambda ev: (ev.g, ev.energy))
    return events


def sweep(
    params_base: ModelParams,
    g_values,
    window,
    config: RunConfig | None = None,
    refine_crossings: bool = True,
) -> SweepResult:
    """Spectra over a list of couplings with curve labels and inter-sector crossings.

    Points that fail (collapse guard, g = 0, evaluation errors) are recorded
    with their error message and skipped by the tracking.
    """
    config = config or RunConfig()
    points = []
    jobs = []
    for g in g_values:
        try:
            params = params_base.with_g(float(g))
        except DomainError as err:
            points.append(SweepPoint(g=float(g), error=f"DomainError: {err}"))
            continue
        points.append(SweepPoint(g=float(g)))
        jobs.append((len(points) - 1, (params, window, config)))

    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_sweep_point, [a for _, a in jobs]))
    else:
        outcomes = [_sweep_point(a) for _, a in jobs]
    for (pos, _), (result, error) in zip(jobs, outcomes):
        points[pos].result = result
        points[pos].error = error
        if error:
            log.warning("sweep point g=%s failed: %s", points[pos].g, error)

    _track(points)
    crossings = _crossings(params_base, points, config, refine_crossings, min_gap=10 * config.tol_root)
    return SweepResult(params_base, (float(window[0]), float(window[1])), points, crossings)
