from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabi2 import numeric
from rabi2.model import SECTORS, DomainError, ModelParams, Sector, derive, derive_exact
from rabi2.series import (
    coefficient_ratio_diagnostic,
    compute_coefficients,
    omega0_zero_level,
    q_closed_form_check,
)

F = Fraction


def brute_force(omega0, omega, g, kappa, E, sector, L):
    """Straight transcription of the iteration on full 0..L index arrays."""
    Q = {n: F(0) for n in range(-2, L + 1)}
    K = dict(Q)
    s = sector.seed_index
    Q[s] = F(sector.seed_q)
    K[s] = F(sector.seed_k)
    for n in range(s, L - 1, 2):
        d = 2 * g * (n + 2) * (n + 1)
        Q[n + 2] = -(((omega - 8 * g * kappa) * n - 4 * g * kappa - E) * Q[n] + omega0 / 2 * K[n]) / d
        K[n + 2] = (((omega + 8 * g * kappa) * n + 4 * g * kappa - E) * K[n]
                    - 4 * omega * kappa * K[n - 2] + omega0 / 2 * Q[n]) / d
    return [Q[n] for n in range(L + 1)], [K[n] for n in range(L + 1)]


# omega = 2, g = 3/10: omega^2 - 16 g^2 = 64/25, kappa = 1/6
EXACT = ModelParams(F(1), F(2), F(3, 10))


def test_exact_mode_matches_brute_force():
    kappa = derive_exact(EXACT).kappa
    assert kappa == F(1, 6)
    q_ref, k_ref = brute_force(F(1), F(2), F(3, 10), kappa, F(3, 2), Sector.PLUS_I, 40)
    c = compute_coefficients(EXACT, None, Sector.PLUS_I, F(3, 2), 40, exact=True)
    assert list(c.q) == q_ref
    assert list(c.k) == k_ref


def test_float_mode_matches_exact_to_working_precision():
    exact = compute_coefficients(EXACT, None, Sector.PLUS_I, F(3, 2), 40, exact=True)
    with numeric.workprec(256):
        approx = compute_coefficients(EXACT, derive(EXACT), Sector.PLUS_I, F(3, 2), 40)
        for a, b in zip(approx.q + approx.k, exact.q + exact.k):
            if b == 0:
                assert a == 0
            else:
                assert abs(a - numeric.big(b)) <= abs(numeric.big(b)) * numeric.big(2) ** -240


def test_q2_closed_form_value():
    # omega0 = 0, omega = 1, g = 1/5: Q_2 = (E + 1/5) / (4/5)
    p = ModelParams(F(0), F(1), F(1, 5))
    E = F(7, 3)
    c = compute_coefficients(p, None, Sector.PLUS, E, 4, exact=True)
    assert c.q[2] == (E + F(1, 5)) / F(4, 5)


def test_minus_seed_only():
    c = compute_coefficients(ModelParams(1, 2, 0.3), None, Sector.MINUS, 0.5, 2)
    assert (c.q[0], c.k[0], c.q[1], c.k[1]) == (1, -1, 0, 0)


def test_order_too_small_for_sector():
    with pytest.raises(DomainError):
        compute_coefficients(ModelParams(1, 2, 0.3), None, Sector.PLUS_I, 0.5, 2)


def test_zero_coupling_rejected():
    with pytest.raises(DomainError):
        compute_coefficients(ModelParams(1, 2, 0), None, Sector.PLUS, 0.5, 10)


def test_closed_form_agreement_at_level():
    assert q_closed_form_check(ModelParams(0, 1, 0.2), 0.4, 10) < 1e-30


def test_closed_form_agreement_weaker_coupling():
    assert q_closed_form_check(ModelParams(0, 1, 0.1), 0.0, 5) < 1e-30


def test_closed_form_needs_zero_splitting():
    with pytest.raises(DomainError):
        q_closed_form_check(ModelParams(1, 1, 0.1), 0.0, 5)


def test_termination_at_second_even_level():
    p = ModelParams(F(0), F(1), F(1, 5))
    e2 = omega0_zero_level(p, 2, exact=True)
    assert e2 == 1
    c = compute_coefficients(p, None, Sector.PLUS, e2, 30, exact=True)
    # Q_4 carries the factor (E - eps_2): the series stops right after Q_2
    assert c.q[2] == F(3, 2)
    assert all(c.q[m] == 0 for m in range(3, 31))
    assert q_closed_form_check(p, e2, 10, exact=True) == 0


# Pythagorean triples give rational Omega = b/c, 4g/omega = a/c
TRIPLES = [(3, 4, 5), (4, 3, 5), (5, 12, 13), (12, 5, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29)]


@st.composite
def exact_params(draw, omega0=None):
    a, b, c = draw(st.sampled_from(TRIPLES))
    omega = F(draw(st.integers(1, 6)), draw(st.integers(1, 4)))
    sign = draw(st.sampled_from([1, -1]))
    if omega0 is None:
        omega0 = F(draw(st.integers(-6, 6)), draw(st.integers(1, 4)))
    return ModelParams(omega0, omega, sign * omega * F(a, 4 * c))


@settings(max_examples=60)
@given(exact_params(omega0=F(0)), st.integers(0, 6), st.sampled_from(SECTORS))
def test_termination_property(params, half_n, sector):
    n = 2 * half_n
    E = omega0_zero_level(params, n, exact=True)
    order = n + 12 + sector.seed_index
    c = compute_coefficients(params, None, sector, E, order, exact=True)
    if sector.seed_index == 0:
        assert all(c.q[m] == 0 for m in range(n + 1, order + 1))
        assert c.q[n] != 0


@settings(max_examples=60)
@given(exact_params(), st.fractions(-5, 10, max_denominator=50), st.sampled_from(SECTORS))
def test_linearity_in_seeds(params, E, sector):
    order = 16 + sector.seed_index
    full = compute_coefficients(params, None, sector, E, order, exact=True)
    only_q = compute_coefficients(params, None, sector, E, order, exact=True, seeds=(1, 0))
    only_k = compute_coefficients(params, None, sector, E, order, exact=True, seeds=(0, 1))
    for n in range(order + 1):
        assert full.q[n] == sector.seed_q * only_q.q[n] + sector.seed_k * only_k.q[n]
        assert full.k[n] == sector.seed_q * only_q.k[n] + sector.seed_k * only_k.k[n]


@st.composite
def float_params(draw, max_ratio=0.95):
    omega = draw(st.floats(0.5, 3.0))
    g = draw(st.floats(0.01, max_ratio)) * omega / 4 * draw(st.sampled_from([1, -1]))
    return ModelParams(draw(st.floats(-3.0, 3.0)), omega, g)


@given(float_params(), st.floats(-5, 10), st.sampled_from(SECTORS), st.integers(2, 60))
def test_parity_purity_and_seeds(params, E, sector, order):
    order = max(order, sector.seed_index + 2)
    c = compute_coefficients(params, None, sector, E, order)
    s = sector.seed_index
    assert (c.q[s], c.k[s]) == (sector.seed_q, sector.seed_k)
    for n in range(order + 1):
        if n % 2 != s:
            assert c.q[n] == 0 and c.k[n] == 0
    assert list(c.indices()) == list(range(s, order + 1, 2))


# A tiny nonzero omega0 lets the faster-growing K leak into Q late in the tail, so the
# 1/n constant of Q switches mid-range and bends a log-log fit. omega0 is drawn as
# exactly 0 (no leakage) or |omega0| >= 1e-3 (switch happens near the start of the fit).
splittings = st.one_of(st.just(0.0), st.floats(1e-3, 3.0), st.floats(-3.0, -1e-3))


@settings(max_examples=150)
@given(float_params(), splittings, st.floats(0, 3), st.sampled_from(SECTORS))
def test_ratio_decay_exponent(params, omega0, offset, sector):
    params = ModelParams(omega0, params.omega, params.g)
    E = -abs(omega0) / 2 - params.omega / 2 + offset * params.omega
    diag = coefficient_ratio_diagnostic(compute_coefficients(params, None, sector, E, 800))
    for which in ("q", "k"):
        assert 0.8 <= diag.fitted_exponent(which, n_min=20) <= 1.2


def test_ratio_diagnostic_records_terminated_tail():
    p = ModelParams(F(0), F(1), F(1, 5))
    c = compute_coefficients(p, None, Sector.MINUS, F(-1, 5), 60, exact=True)
    diag = coefficient_ratio_diagnostic(c)
    assert diag.q_index == (0,)  # Q_2 = 0 already: only Q_2/Q_0 survives
    assert diag.omitted["q"][0] == 2
    assert len(diag.k_ratios) == 30


def test_ratio_diagnostic_needs_length():
    c = compute_coefficients(ModelParams(0, 1, 0.2), None, Sector.PLUS, 0.1, 6)
    with pytest.raises(DomainError):
        coefficient_ratio_diagnostic(c)


# Decay constants actually realised by the coefficients at omega0 = 0, omega = 1, g = 1/5.
# Q is asymptotically -(omega Omega / 2g) / n but approaches it only like 1 - c/n; K follows
# (omega / 2g) / n at generic E, and 2 kappa / (k + 1) exactly at the ground level.

def test_q_ratio_asymptotic_constant():
    p = ModelParams(0, 1, 0.2)
    diag = coefficient_ratio_diagnostic(compute_coefficients(p, None, Sector.PLUS, 0.1234, 2000))
    ratios = dict(zip(diag.q_index, diag.q_ratios))
    assert float(ratios[1600] * 1600 / -1.5) == pytest.approx(1, abs=0.005)
    assert float(ratios[80] * 80 / -1.5) == pytest.approx(1, abs=0.05)


def test_k_ratio_generic_constant():
    p = ModelParams(0, 1, 0.2)
    diag = coefficient_ratio_diagnostic(compute_coefficients(p, None, Sector.PLUS, 0.1234, 2000))
    ratios = dict(zip(diag.k_index, diag.k_ratios))
    assert float(ratios[1600] * 1600 / 2.5) == pytest.approx(1, abs=0.005)


def test_k_ratio_at_ground_level_is_exact():
    p = ModelParams(F(0), F(1), F(1, 5))
    c = compute_coefficients(p, None, Sector.MINUS, F(-1, 5), 80, exact=True)
    kappa = F(1, 4)
    for k in range(0, 40):
        assert c.k[2 * k + 2] / c.k[2 * k] == 2 * kappa / (k + 1)
