"""Independent ground truth for the G-function solver.

Everything here runs in ordinary double precision and never touches the
series machinery: a truncated Fock-basis diagonalization of the Hamiltonian
plus the closed-form spectra at g = 0 and omega0 = 0, the isolated
exactly-solvable (Juddian) crossings, and the small-g ground-state law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from rabi2.model import DomainError, ModelParams, Sector

DISCRIMINANT_GUARD = 1e-30


@dataclass(frozen=True)
class OracleSpectrum:
    params: ModelParams
    n_max: int
    eigenvalues: np.ndarray
    cutoff_error_estimate: float
    checked_levels: int

    def lowest(self, count: int) -> np.ndarray:
        return self.eigenvalues[:count]


def hamiltonian_matrix(params: ModelParams, n_max: int) -> np.ndarray:
    """Dense H in the basis |s, n>, s in (up, down), n = 0..n_max (up block first).

    The sigma^+ + sigma^- prefactor equals 2 sigma_x, so |s, n> couples to
    |-s, n+2> with strength 2 g sqrt((n+1)(n+2)).
    """
    dim = n_max + 1
    n = np.arange(dim, dtype=float)
    omega0, omega, g = float(params.omega0), float(params.omega), float(params.g)
    h = np.zeros((2 * dim, 2 * dim))
    h[np.arange(dim), np.arange(dim)] = omega0 / 2 + omega * n
    h[dim + np.arange(dim), dim + np.arange(dim)] = -omega0 / 2 + omega * n
    lower = np.arange(dim - 2)
    coupling = 2 * g * np.sqrt((lower + 1) * (lower + 2))
    # up,n <-> down,n+2 and down,n <-> up,n+2
    h[lower, dim + lower + 2] = coupling
    h[dim + lower + 2, lower] = coupling
    h[dim + lower, lower + 2] = coupling
    h[lower + 2, dim + lower] = coupling
    return h


def _eigvalsh(params: ModelParams, n_max: int) -> np.ndarray:
    return linalg.eigh(hamiltonian_matrix(params, n_max), eigvals_only=True)


def oracle_diagonalize(params: ModelParams, n_max: int = 400, checked_levels: int = 10) -> OracleSpectrum:
    """Full spectrum of the truncated matrix plus a cutoff-convergence estimate.

    The estimate is the largest shift of the lowest ``checked_levels``
    eigenvalues between cutoffs n_max and n_max // 2.
    """
    if n_max < 20:
        raise DomainError(f"n_max must be >= 20, got {n_max}")
    full = _eigvalsh(params, n_max)
    half = _eigvalsh(params, n_max // 2)
    m = min(checked_levels, len(half))
    estimate = float(np.max(np.abs(full[:m] - half[:m])))
    return OracleSpectrum(params, n_max, full, estimate, m)


def _ladder(start_a, start_b, step, count):
    """Sorted union of start_a + 4j step and start_b + 4j step, first ``count`` entries."""
    values = []
    j = 0
    while len(values) < 2 * count:
        values.extend((start_a + 4 * j * step, start_b + 4 * j * step))
        j += 1
    return sorted(values)[:count]


def reference_g0(params: ModelParams, count: int = 6) -> dict[Sector, list[float]]:
    """Per-sector spectra at zero coupling: +-omega0/2 + N omega with N mod 4 fixed per sector."""
    if params.g != 0:
        raise DomainError("reference_g0 requires g = 0")
    h, w = float(params.omega0) / 2, float(params.omega)
    return {
        Sector.MINUS: _ladder(-h, h + 2 * w, w, count),
        Sector.PLUS: _ladder(h, -h + 2 * w, w, count),
        Sector.MINUS_I: _ladder(-h + w, h + 3 * w, w, count),
        Sector.PLUS_I: _ladder(h + w, -h + 3 * w, w, count),
    }


def reference_omega0_zero(params: ModelParams, count: int) -> list[float]:
    """-omega/2 + (n + 1/2) Omega omega, n < count, each listed twice."""
    if params.omega0 != 0:
        raise DomainError("reference_omega0_zero requires omega0 = 0")
    omega, g = float(params.omega), float(params.g)
    big = math.sqrt(1 - 16 * g * g / (omega * omega))
    if big == 0:
        raise DomainError("spectral collapse: the spectrum is infinitely degenerate at 4|g| = omega")
    out = []
    for n in range(count):
        level = -omega / 2 + (n + 0.5) * big * omega
        out.extend((level, level))
    return out


@dataclass(frozen=True)
class JuddianPoint:
    N: int
    omega_big: float
    g: float
    energy: float


def _constraint_roots(N: int, r: float) -> list[float]:
    """Admissible Omega^2 roots of the N-th isolated-solution condition, r = omega0^2/(4 omega^2)."""
    if N == 2:
        roots = [(2 + r) / 6]
    elif N == 3:
        roots = [(6 + r) / 10]
    elif N == 4:
        # 8(3 - 30x + 35x^2) + 2(7 - 17x) r + r^2 = 0, x = Omega^2
        a, b, c = 280.0, -240.0 - 34.0 * r, 24.0 + 14.0 * r + r * r
        disc = b * b - 4 * a * c
        if disc < -DISCRIMINANT_GUARD:
            return []
        sq = math.sqrt(max(disc, 0.0))
        roots = [(-b - sq) / (2 * a)] if abs(disc) <= DISCRIMINANT_GUARD else [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
    else:
        raise DomainError(f"constraint polynomials are known for N in (2, 3, 4), got {N}")
    return sorted(x for x in roots if 0 < x < 1)


def juddian_points(omega0: float, omega: float, N: int) -> list[JuddianPoint]:
    """Isolated exact eigenpairs (g > 0 branch) for the given N."""
    if not omega > 0:
        raise DomainError("omega must be > 0")
    r = omega0 * omega0 / (4 * omega * omega)
    points = []
    for x in _constraint_roots(N, r):
        big = math.sqrt(x)
        g = omega / 4 * math.sqrt(1 - x)
        points.append(JuddianPoint(N=N, omega_big=big, g=g, energy=-omega / 2 + (N + 0.5) * big * omega))
    return points


def smallg_ground_state(params: ModelParams) -> tuple[float, float]:
    """(E0 at g = 0, coefficient of g^2) of the weak-coupling ground state."""
    omega0, omega = float(params.omega0), float(params.omega)
    return -omega0 / 2, -8 / (2 * omega + omega0)
