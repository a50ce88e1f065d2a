import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabi2.checks import compare_with_oracle
from rabi2.config import RunConfig
from rabi2.gfunction import eval_G
from rabi2.model import SECTORS, CollapseGuardError, DomainError, EvaluationError, ModelParams, Sector
from rabi2.reference import juddian_points, oracle_diagonalize, reference_g0, reference_omega0_zero
from rabi2.spectrum import (
    _aitken,
    _match,
    find_roots,
    ground_state,
    lowest_spectrum,
    spectrum,
    sweep,
    zero_coupling_spectrum,
)

CFG = RunConfig()


def energies(records):
    return [r.energy for r in records]


def test_minus_roots_at_zero_splitting():
    got = energies(find_roots(ModelParams(0, 1, 0.2), Sector.MINUS, (-0.45, 2.0)))
    assert got == pytest.approx([-0.2, 1.0], abs=1e-9)


def test_plus_i_roots_at_zero_splitting():
    got = energies(find_roots(ModelParams(0, 1, 0.2), Sector.PLUS_I, (-0.45, 2.0)))
    assert got == pytest.approx([0.4, 1.6], abs=1e-9)


def test_weak_coupling_sector_layout():
    params = ModelParams(1, 2, 1e-3)
    res = spectrum(params, (-1, 9))
    expected = {
        Sector.MINUS: [-0.5, 4.5, 7.5],
        Sector.PLUS: [0.5, 3.5, 8.5],
        Sector.MINUS_I: [1.5, 6.5],
        Sector.PLUS_I: [2.5, 5.5],
    }
    for sector, levels in expected.items():
        assert energies(res.per_sector[sector]) == pytest.approx(levels, abs=1e-4)


def test_record_invariants():
    params = ModelParams(1, 2, 0.3)
    for r in find_roots(params, Sector.PLUS, (-1.2, 6), CFG):
        lo, hi = r.bracket
        assert hi - lo <= CFG.tol_root
        assert lo <= r.energy <= hi
        assert r.converged and not r.tangential
        assert r.order_used == CFG.l_max and r.z_checked == CFG.z_points
        for z in CFG.z_points:
            s_lo = eval_G(params, None, Sector.PLUS, lo, z, CFG.l_max).sign
            s_hi = eval_G(params, None, Sector.PLUS, hi, z, CFG.l_max).sign
            assert s_lo * s_hi == -1


def test_spectrum_matches_oracle():
    res = spectrum(ModelParams(1, 2, 0.3), (-1.2, 6))
    oracle = oracle_diagonalize(ModelParams(1, 2, 0.3), n_max=300).eigenvalues
    got = res.energies
    assert np.max(np.abs(got - oracle[: len(got)])) < 1e-8
    assert oracle[len(got)] > 6  # nothing missed inside the window


def test_zero_splitting_double_degeneracy():
    res = spectrum(ModelParams(0, 1, 0.2), (-0.45, 2.5))
    assert res.energies == pytest.approx([-0.2, -0.2, 0.4, 0.4, 1.0, 1.0, 1.6, 1.6, 2.2, 2.2], abs=1e-9)
    assert res.ground_sector_ok in (True, False)  # minus and plus tie at the ground level


def test_large_splitting_against_oracle():
    params = ModelParams(2, 1, 0.15)
    res = spectrum(params, (-1.5, 4))
    oracle = oracle_diagonalize(params).eigenvalues
    assert np.max(np.abs(res.energies - oracle[: len(res.energies)])) < 1e-8
    assert res.merged[0][1] is Sector.MINUS


def test_monotone_indexing():
    res = spectrum(ModelParams(2, 1, 0.2), (-1.6, 4))
    for sector in SECTORS:
        recs = res.per_sector[sector]
        assert [r.index for r in recs] == list(range(1, len(recs) + 1))
        assert all(a.energy < b.energy for a, b in zip(recs, recs[1:]))


def test_merged_is_sorted_and_complete():
    res = spectrum(ModelParams(1, 2, 0.2), (-1.2, 5))
    assert list(res.energies) == sorted(res.energies)
    assert len(res.merged) == sum(len(v) for v in res.per_sector.values())


def test_ground_state_weak_coupling():
    gs = ground_state(ModelParams(1, 2, 0.05))
    assert gs.sector is Sector.MINUS and gs.index == 1
    assert gs.energy == pytest.approx(-0.5 - 8 * 0.05**2 / 5, abs=2e-5)


def test_ground_state_zero_splitting():
    assert ground_state(ModelParams(0, 1, 0.2)).energy == pytest.approx(-0.2, abs=1e-9)


def test_ground_state_against_oracle():
    params = ModelParams(2, 1, 0.1)
    assert ground_state(params).energy == pytest.approx(oracle_diagonalize(params).eigenvalues[0], abs=1e-8)


def test_lowest_spectrum_counts_from_bound():
    res = lowest_spectrum(ModelParams(1, 2, 0.3), 12)
    assert len(res.merged) >= 12
    oracle = oracle_diagonalize(ModelParams(1, 2, 0.3)).eigenvalues
    assert np.max(np.abs(res.energies[:12] - oracle[:12])) < 1e-8


def test_mirror_symmetry():
    a = spectrum(ModelParams(1, 2, 0.3), (-1.2, 5))
    b = spectrum(ModelParams(1, 2, -0.3), (-1.2, 5))
    for sector in SECTORS:
        assert energies(a.per_sector[sector]) == pytest.approx(energies(b.per_sector[sector]), abs=CFG.tol_root)


def test_roots_are_z_and_order_stable():
    for r in spectrum(ModelParams(1, 2, 0.3), (-1.2, 6)).records():
        assert r.z_shift < 1e-10
        assert r.order_shift < 1e-8


def test_rejects_zero_coupling_and_empty_window():
    with pytest.raises(DomainError):
        find_roots(ModelParams(1, 2, 0), Sector.PLUS, (0, 1))
    with pytest.raises(DomainError):
        find_roots(ModelParams(1, 2, 0.1), Sector.PLUS, (1, 1))


def test_collapse_guard_refusal():
    with pytest.raises(CollapseGuardError):
        find_roots(ModelParams(1, 1, 0.249), Sector.MINUS, (-1, 1))
    # the guard is a knob
    loose = CFG.replace(collapse_guard=0.0, z_points=(100.0,), scan_density=20)
    find_roots(ModelParams(0, 1, 0.2375), Sector.MINUS, (-0.5, 0.0), loose)


def test_evaluation_failure_carries_grid_energy():
    cfg = CFG.replace(z_points=(1e10,))
    with pytest.raises(EvaluationError) as info:
        find_roots(ModelParams(1, 2, 0.1), Sector.PLUS, (0.0, 1.0), cfg)
    assert info.value.energy == 0.0


def test_extrapolation_is_flagged():
    cfg = CFG.replace(l_max=40, l_start=8, tol_order=1e-30, extrapolate=True)
    roots = find_roots(ModelParams(1, 2, 0.3), Sector.MINUS, (-1.2, 1.0), cfg)
    assert roots and all(r.extrapolated and not r.converged for r in roots)
    exact = oracle_diagonalize(ModelParams(1, 2, 0.3)).eigenvalues[0]
    assert roots[0].energy == pytest.approx(exact, abs=1e-6)


def test_aitken_recovers_geometric_limit():
    assert _aitken(1 + 0.5, 1 + 0.25, 1 + 0.125) == pytest.approx(1.0)


def test_match_is_order_preserving_with_shift():
    prev = [(0.0, 7), (1.0, 8), (2.0, 9)]
    assert _match(prev, [1.01, 2.02, 3.0], threshold=0.3) == [8, 9, None]
    assert _match(prev, [-1.0, 0.01, 1.01, 2.01], threshold=0.3) == [None, 7, 8, 9]


def test_zero_coupling_spectrum_uses_ladders():
    res = zero_coupling_spectrum(ModelParams(2, 1, 0), (-1.5, 3.5))
    assert energies(res.per_sector[Sector.MINUS]) == [-1, 3, 3]
    ladders = reference_g0(ModelParams(2, 1, 0), 8)
    assert energies(res.per_sector[Sector.PLUS]) == [e for e in ladders[Sector.PLUS] if e <= 3.5]


def test_sweep_follows_zero_splitting_levels():
    base = ModelParams(0, 1, 0)
    res = sweep(base, [0.0, 0.05, 0.1, 0.15], (-0.55, 1.2), CFG)
    assert res.success_fraction == 1
    for p in res.points:
        exact = reference_omega0_zero(ModelParams(0, 1, p.g), 6)
        exact = [e for e in exact if e <= 1.2]
        assert p.result.energies == pytest.approx(exact, abs=1e-8)
    # ground curve keeps one label per sector across the sweep
    labels = {p.curve_ids[(Sector.MINUS, 1)] for p in res.points}
    assert len(labels) == 1


def test_sweep_records_failures_and_continues():
    base = ModelParams(1, 1, 0)
    res = sweep(base, [0.1, 0.245, 0.3], (-1.0, 1.0), CFG, refine_crossings=False)
    assert res.points[0].result is not None
    assert "CollapseGuardError" in res.points[1].error
    assert "DomainError" in res.points[2].error
    assert res.success_fraction == pytest.approx(1 / 3)


def test_sweep_finds_n2_crossing():
    base = ModelParams(1, 2, 0)
    res = sweep(base, np.linspace(0.39, 0.42, 4), (1.5, 2.4), CFG)
    (pt,) = juddian_points(1, 2, 2)
    hits = [ev for ev in res.crossings if set(ev.sectors) == {Sector.PLUS, Sector.MINUS}]
    assert hits
    best = min(hits, key=lambda ev: abs(ev.g - pt.g))
    assert best.refined
    assert best.g == pytest.approx(pt.g, abs=1e-6)
    assert best.energy == pytest.approx(pt.energy, abs=1e-6)


def test_sweep_parallel_matches_serial():
    base = ModelParams(1, 2, 0)
    gs = [0.1, 0.2]
    a = sweep(base, gs, (-1.2, 2.0), CFG, refine_crossings=False)
    b = sweep(base, gs, (-1.2, 2.0), CFG.replace(jobs=2), refine_crossings=False)
    for pa, pb in zip(a.points, b.points):
        assert list(pa.result.energies) == list(pb.result.energies)


@pytest.mark.slow
@settings(max_examples=4)
@given(st.floats(0, 3), st.floats(0.5, 3), st.floats(0.02, 0.8), st.sampled_from([1, -1]))
def test_completeness_against_oracle(omega0, omega, ratio, sign):
    params = ModelParams(omega0, omega, sign * ratio * omega / 4)
    res = lowest_spectrum(params, 8)
    worst, spurious = compare_with_oracle(res, 8)
    assert worst < 1e-6
    assert spurious == []
