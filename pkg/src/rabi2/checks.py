"""Cross-module invariant suite behind ``rabi2 check``.

Each check returns a CheckResult carrying the measured margin next to its
threshold, so a report is meaningful even when everything passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rabi2 import numeric
from rabi2.config import RunConfig
from rabi2.gfunction import g_batch, prepare
from rabi2.model import SECTORS, ModelParams, Sector, check_collapse_guard, derive
from rabi2.reference import oracle_diagonalize, smallg_ground_state
from rabi2.series import coefficient_ratio_diagnostic, compute_coefficients
from rabi2.spectrum import SpectrumResult, ground_state, lowest_spectrum


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""
    applicable: bool = True


def _skip(name, why):
    return CheckResult(name, True, math.nan, math.nan, why, applicable=False)


def _probe_energies(params: ModelParams, count=3):
    # generic trial energies, away from the reference ladders
    base = -abs(float(params.omega0)) / 2
    return [base + (0.37 + 1.13 * j) * float(params.omega) for j in range(count)]


def check_parity(params: ModelParams, config: RunConfig) -> CheckResult:
    bad = 0
    total = 0
    with numeric.workprec(config.precision_bits):
        derived = derive(params)
        for sector in SECTORS:
            for e in _probe_energies(params):
                c = compute_coefficients(params, derived, sector, e, 40)
                s = sector.seed_index
                total += 1
                if c.q[s] != sector.seed_q or c.k[s] != sector.seed_k:
                    bad += 1
                    continue
                off = [n for n in range(41) if n % 2 != s and (c.q[n] != 0 or c.k[n] != 0)]
                bad += bool(off)
    return CheckResult("parity_purity", bad == 0, bad, 0, f"{total} coefficient runs, {bad} impure")


# the fitted exponent carries O(E / (omega Omega n)) corrections; a long tail keeps them small
DIAGNOSTIC_ORDER = 800


def check_ratio_decay(params: ModelParams, config: RunConfig, lo=0.8, hi=1.2) -> CheckResult:
    exponents = []
    order = max(config.l_max, DIAGNOSTIC_ORDER)
    with numeric.workprec(config.precision_bits):
        derived = derive(params)
        for sector in SECTORS:
            e = _probe_energies(params, 1)[0]
            diag = coefficient_ratio_diagnostic(compute_coefficients(params, derived, sector, e, order))
            for which in ("q", "k"):
                try:
                    exponents.append(diag.fitted_exponent(which, n_min=20))
                except ValueError:
                    pass  # terminated series: nothing to fit
    worst = max(exponents, key=lambda p: abs(p - 1))
    ok = all(lo <= p <= hi for p in exponents)
    return CheckResult("ratio_decay", ok, worst, hi if worst > 1 else lo,
                       f"fitted exponents in [{min(exponents):.4f}, {max(exponents):.4f}], n in [20, {order}]")


def check_z_independence(result: SpectrumResult, config: RunConfig) -> CheckResult:
    if len(config.z_points) < 2:
        return _skip("z_independence", "only one evaluation point configured")
    shifts = [r.z_shift for r in result.records()]
    worst = max(shifts, default=0.0)
    return CheckResult("z_independence", worst < config.tol_root, worst, config.tol_root,
                       f"{len(shifts)} roots compared at z = {config.z_points}")


def check_order_stability(result: SpectrumResult, config: RunConfig) -> CheckResult:
    shifts = [r.order_shift for r in result.records()]
    worst = max(shifts, default=0.0)
    return CheckResult("order_stability", worst < config.tol_order, worst, config.tol_order,
                       f"L = {config.l_max} vs {config.l_max // 2}")


def check_mirror(params: ModelParams, result: SpectrumResult, config: RunConfig) -> CheckResult:
    mirrored = lowest_spectrum(params.with_g(-params.g), len(result.merged), config)
    a, b = result.energies, mirrored.energies[: len(result.energies)]
    if len(a) != len(b):
        return CheckResult("mirror_symmetry", False, math.inf, config.tol_root, "root counts differ")
    worst = float(np.max(np.abs(a - b)))
    return CheckResult("mirror_symmetry", worst <= config.tol_root, worst, config.tol_root, f"{len(a)} levels")


def compare_with_oracle(result: SpectrumResult, count: int, n_max: int = 400, tol: float = 1e-6):
    """(max deviation of the lowest ``count`` roots, list of unmatched G-roots).

    A G-root in the window interior (margin omega/2) with no oracle
    eigenvalue within ``tol`` is spurious.
    """
    oracle = oracle_diagonalize(result.params, n_max=n_max).eigenvalues
    got = result.energies[:count]
    worst = float(np.max(np.abs(got - oracle[: len(got)]))) if len(got) else math.inf
    if len(got) < count:
        worst = math.inf
    margin = float(result.params.omega) / 2
    lo, hi = result.window[0] + margin, result.window[1] - margin
    spurious = [e for e in result.energies if lo <= e <= hi and np.min(np.abs(oracle - e)) > tol]
    return worst, spurious


def check_oracle(result: SpectrumResult, count: int = 8, tol: float = 1e-6) -> CheckResult:
    worst, spurious = compare_with_oracle(result, count, tol=tol)
    ok = worst < tol and not spurious
    detail = f"lowest {count} vs oracle(n_max=400); spurious roots: {len(spurious)}"
    return CheckResult("oracle_equivalence", ok, worst, tol, detail)


def check_ground_sector(params: ModelParams, result: SpectrumResult) -> CheckResult:
    if params.omega0 < 0:
        return _skip("ground_state_sector", "omega0 < 0 moves the ground state out of the minus sector")
    lowest = result.merged[0]
    ok = lowest[1] is Sector.MINUS
    # at omega0 = 0 the minus and plus levels coincide, either label is the ground state
    if not ok and params.omega0 == 0:
        ok = any(abs(e - lowest[0]) <= 1e-9 and s is Sector.MINUS for e, s in result.merged[:2])
    return CheckResult("ground_state_sector", ok, float(ok), 1.0, f"lowest root {lowest[0]:.12g} in {lowest[1].value}")


def small_g_fit(omega0: float, omega: float, config: RunConfig, fractions=(0.01, 0.02, 0.03, 0.04)):
    """Fit E0(g) = a + b g^2 + c g^4 to ground-state energies; returns (a, b, pure_fit).

    pure_fit is (a, b) from the two-term model a + b g^2 alone.
    """
    gs = np.array([f * omega for f in fractions])
    energies = np.array([ground_state(ModelParams(omega0, omega, g), config).energy for g in gs])
    design = np.vstack([np.ones_like(gs), gs**2, gs**4]).T
    a, b, _ = np.linalg.lstsq(design, energies, rcond=None)[0]
    pure = np.linalg.lstsq(design[:, :2], energies, rcond=None)[0]
    return float(a), float(b), (float(pure[0]), float(pure[1]))


def check_small_g(params: ModelParams, config: RunConfig) -> CheckResult:
    if params.omega0 < 0:
        return _skip("small_g_law", "weak-coupling law is for the minus-sector ground state (omega0 >= 0)")
    a, b, _ = small_g_fit(float(params.omega0), float(params.omega), config)
    a_ref, b_ref = smallg_ground_state(params)
    da, db = abs(a - a_ref), abs(b - b_ref) / abs(b_ref)
    ok = da <= 1e-6 and db <= 0.01
    return CheckResult("small_g_law", ok, max(da / 1e-6, db / 0.01), 1.0,
                       f"intercept {a:.10g} (ref {a_ref:.10g}), curvature {b:.6g} (ref {b_ref:.6g})")


def check_degeneracy(params: ModelParams, config: RunConfig) -> CheckResult:
    """omega0 = 0: G_plus = -G_minus and G_i = -G_minus_i identically."""
    if params.omega0 != 0:
        return _skip("sector_degeneracy", "only defined at omega0 = 0")
    worst = 0.0
    with numeric.workprec(config.precision_bits):
        prep = prepare(params, derive(params))
        energies = np.array([numeric.big(e) for e in _probe_energies(params, 4)], dtype=object)
        for a, b in ((Sector.PLUS, Sector.MINUS), (Sector.PLUS_I, Sector.MINUS_I)):
            va = g_batch(prep, a, energies, config.z_points, config.l_max)
            vb = g_batch(prep, b, energies, config.z_points, config.l_max)
            for (xa, sa), (xb, _) in zip(va, vb):
                for x, y, s in zip(xa, xb, sa):
                    worst = max(worst, float(abs(x + y) / s))
    threshold = 2.0 ** (-config.precision_bits // 2)
    return CheckResult("sector_degeneracy", worst <= threshold, worst, threshold,
                       "G_plus + G_minus and G_i + G_minus_i relative to term scale")


def run_checks(params: ModelParams, config: RunConfig | None = None, count: int = 8) -> list[CheckResult]:
    """The full invariant suite for one parameter point (g != 0)."""
    config = config or RunConfig()
    check_collapse_guard(params, config.collapse_guard)
    result = lowest_spectrum(params, count, config)
    return [
        check_parity(params, config),
        check_ratio_decay(params, config),
        check_z_independence(result, config),
        check_order_stability(result, config),
        check_mirror(params, result, config),
        check_oracle(result, count),
        check_ground_sector(params, result),
        check_small_g(params, config),
        check_degeneracy(params, config),
    ]
