"""Hamiltonian parameters, symmetry sectors and the derived squeezing quantities.

The model is

    H = (omega0/2) sigma_z + omega b^dag b + g (sigma^+ + sigma^-) (b^dag^2 + b^2)

with sigma^+ + sigma^- = 2 sigma_x, so the spin-boson coupling strength on the
sigma_x (b^2 + b^dag^2) term is 2g. Eigenstates are normalizable only for
4|g| < omega.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from rabi2 import numeric


class DomainError(ValueError):
    """Parameters or arguments outside an operation's domain."""


class CollapseGuardError(DomainError):
    """Coupling too close to spectral collapse (4|g| -> omega) for certified roots."""


class EvaluationError(ArithmeticError):
    """A series or G-function evaluation produced a non-finite number."""

    def __init__(self, message: str, term_index: int | None = None, energy=None):
        super().__init__(message)
        self.term_index = term_index
        self.energy = energy


class Parity(enum.Enum):
    EVEN = 0
    ODD = 1


class Sector(enum.Enum):
    """Symmetry class c of phi_1(iz) = c phi_2(z), phi_2(iz) = c phi_1(z)."""

    PLUS = "plus"
    MINUS = "minus"
    PLUS_I = "plus_i"
    MINUS_I = "minus_i"

    @property
    def c(self) -> complex:
        return {"plus": 1, "minus": -1, "plus_i": 1j, "minus_i": -1j}[self.value]

    @property
    def parity(self) -> Parity:
        return Parity.EVEN if self in (Sector.PLUS, Sector.MINUS) else Parity.ODD

    @property
    def seed_q(self) -> int:
        return 1

    @property
    def seed_k(self) -> int:
        return 1 if self in (Sector.PLUS, Sector.PLUS_I) else -1

    @property
    def seed_index(self) -> int:
        return self.parity.value

    @classmethod
    def parse(cls, text: str) -> "Sector":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "+": "plus", "+1": "plus", "1": "plus",
            "_": "minus", "_1": "minus",
            "i": "plus_i", "+i": "plus_i", "plusi": "plus_i",
            "_i": "minus_i", "minusi": "minus_i",
        }
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown sector {text!r}") from None


SECTORS = (Sector.MINUS, Sector.PLUS, Sector.MINUS_I, Sector.PLUS_I)


@dataclass(frozen=True)
class ModelParams:
    """(omega0, omega, g). Numbers may be floats/ints or Fractions (exact mode)."""

    omega0: float
    omega: float
    g: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be > 0, got omega={self.omega}")
        if not 4 * abs(self.g) < self.omega:
            raise DomainError(
                f"normalizability bound violated: 4|g| = {4 * abs(self.g)} >= omega = {self.omega}"
            )

    @property
    def coupling_ratio(self) -> float:
        """4|g|/omega, in [0, 1)."""
        return float(4 * abs(self.g) / self.omega)

    def with_g(self, g) -> "ModelParams":
        return ModelParams(self.omega0, self.omega, g)


@dataclass(frozen=True)
class DerivedParams:
    kappa: object
    omega_big: object


def derive(params: ModelParams) -> DerivedParams:
    """kappa and Omega at the current working precision (mpfr values).

    kappa is the small branch of 8 g k^2 - 2 omega k + 2 g = 0, written as
    2g / (omega + sqrt(omega^2 - 16 g^2)) to avoid cancellation at small g.
    It is odd in g and exactly 0 at g = 0.
    """
    omega = numeric.big(params.omega)
    g = numeric.big(params.g)
    root = gmpy2.sqrt(omega * omega - 16 * g * g)
    kappa = 2 * g / (omega + root)
    return DerivedParams(kappa=kappa, omega_big=root / omega)


def derive_exact(params: ModelParams) -> DerivedParams:
    """Rational kappa and Omega; requires omega^2 - 16 g^2 to be a rational square."""
    omega = Fraction(params.omega)
    g = Fraction(params.g)
    radicand = omega * omega - 16 * g * g
    root = _rational_sqrt(radicand)
    if root is None:
        raise DomainError(f"omega^2 - 16 g^2 = {radicand} is not a rational square")
    return DerivedParams(kappa=2 * g / (omega + root), omega_big=root / omega)


def _rational_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    num, den = x.numerator, x.denominator
    rn, rd = gmpy2.isqrt(num), gmpy2.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(int(rn), int(rd))


def sector_seeds(sector: Sector) -> tuple[int, int, int]:
    """(Q seed, K seed, index of the seed) for the series of a sector."""
    return sector.seed_q, sector.seed_k, sector.seed_index


def check_collapse_guard(params: ModelParams, collapse_guard: float) -> None:
    """Refuse couplings with 4|g|/omega above 1 - collapse_guard."""
    if params.coupling_ratio > 1.0 - collapse_guard:
        raise CollapseGuardError(
            f"4|g|/omega = {params.coupling_ratio:.6g} exceeds 1 - collapse_guard = "
            f"{1.0 - collapse_guard:.6g}; roots near spectral collapse are not certified"
        )
