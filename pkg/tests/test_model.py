from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rabi2 import numeric
from rabi2.model import (
    SECTORS,
    CollapseGuardError,
    DomainError,
    ModelParams,
    Parity,
    Sector,
    check_collapse_guard,
    derive,
    derive_exact,
    sector_seeds,
)


@st.composite
def valid_params(draw, max_ratio=0.999):
    omega = draw(st.floats(0.1, 10.0))
    g = draw(st.floats(-max_ratio, max_ratio)) * omega / 4
    omega0 = draw(st.floats(-5.0, 5.0))
    return ModelParams(omega0, omega, g)


def test_kappa_and_omega_big_example():
    d = derive(ModelParams(0, 1, 0.2))
    assert float(d.kappa) == pytest.approx(0.25, abs=1e-15)
    assert float(d.omega_big) == pytest.approx(0.6, abs=1e-15)


def test_zero_coupling_is_exact():
    d = derive(ModelParams(0.7, 1, 0))
    assert d.kappa == 0
    assert d.omega_big == 1


def test_omega_big_at_n2_crossing_coupling():
    d = derive(ModelParams(1, 2, 0.405046))
    assert float(d.omega_big) ** 2 == pytest.approx(0.34375, abs=1e-5)


def test_exact_derivation_with_rational_square():
    # omega^2 - 16 g^2 = 1 - 0.64 = 0.36
    d = derive_exact(ModelParams(Fraction(0), Fraction(1), Fraction(1, 5)))
    assert d.kappa == Fraction(1, 4)
    assert d.omega_big == Fraction(3, 5)


def test_exact_derivation_refuses_irrational_root():
    with pytest.raises(DomainError):
        derive_exact(ModelParams(Fraction(0), Fraction(1), Fraction(1, 10)))


@pytest.mark.parametrize("omega, g", [(0, 0.0), (-1, 0.1), (1, 0.25), (1, -0.3), (2, 0.5)])
def test_invalid_params_rejected(omega, g):
    with pytest.raises(DomainError):
        ModelParams(1.0, omega, g)


def test_bound_is_strict_just_inside():
    ModelParams(0, 1, 0.2499999)


@pytest.mark.parametrize(
    "sector, seeds",
    [
        (Sector.PLUS, (1, 1, 0)),
        (Sector.MINUS, (1, -1, 0)),
        (Sector.PLUS_I, (1, 1, 1)),
        (Sector.MINUS_I, (1, -1, 1)),
    ],
)
def test_sector_seeds(sector, seeds):
    assert sector_seeds(sector) == seeds


def test_parity_assignment():
    even = {s for s in SECTORS if s.parity is Parity.EVEN}
    assert even == {Sector.PLUS, Sector.MINUS}


def test_sector_parse_aliases():
    assert Sector.parse("Minus") is Sector.MINUS
    assert Sector.parse("-i") is Sector.MINUS_I
    assert Sector.parse("i") is Sector.PLUS_I
    assert Sector.parse("+1") is Sector.PLUS
    with pytest.raises(ValueError):
        Sector.parse("sideways")


def test_collapse_guard():
    check_collapse_guard(ModelParams(1, 1, 0.2375), 0.05)  # ratio 0.95 exactly
    with pytest.raises(CollapseGuardError):
        check_collapse_guard(ModelParams(1, 1, 0.249), 0.05)
    check_collapse_guard(ModelParams(1, 1, 0.249), 0.0)


@given(valid_params())
def test_two_omega_formulas_agree(params):
    with numeric.workprec(256):
        d = derive(params)
        alt = 1 - 8 * numeric.big(params.g) * d.kappa / numeric.big(params.omega)
        ulp = gmpy2.mpfr(2) ** (gmpy2.get_exp(d.omega_big) - 256)
        assert abs(d.omega_big - alt) <= 10 * ulp
        assert 0 < d.omega_big <= 1


@given(valid_params())
def test_kappa_odd_and_omega_even_in_g(params):
    plus = derive(params)
    minus = derive(params.with_g(-params.g))
    assert minus.kappa == -plus.kappa
    assert minus.omega_big == plus.omega_big


@given(st.floats(1e-12, 1e-3))
def test_approach_to_collapse_stays_finite(eps):
    omega = 1.0
    g = omega / 4 * (1 - eps)
    d = derive(ModelParams(0, omega, g))
    assert 0 < d.omega_big < 0.05
    assert float(d.kappa) == pytest.approx(omega / (8 * g), rel=0.1)


@given(st.floats(-1e-6, 1e-6).filter(lambda g: g != 0))
def test_small_coupling_kappa_is_g_over_omega(g):
    d = derive(ModelParams(0, 2.0, g))
    assert float(d.kappa) == pytest.approx(g / 2.0, rel=1e-10)
