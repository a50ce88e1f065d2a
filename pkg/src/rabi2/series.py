"""Power-series coefficients of the transformed Bargmann functions.

With phi_{1,2}(z) = exp(-kappa z^2) psibar_{1,2}(z) and
psibar_1 = sum Q_n z^n, psibar_2 = sum K_n z^n, the coefficients obey

    2g(n+2)(n+1) Q_{n+2} + [(omega - 8 g kappa) n - 4 g kappa - E] Q_n + (omega0/2) K_n = 0
   -2g(n+2)(n+1) K_{n+2} + [(omega + 8 g kappa) n + 4 g kappa - E] K_n
                          - 4 omega kappa K_{n-2} + (omega0/2) Q_n = 0

started from the sector seeds at n = 0 (even sectors) or n = 1 (odd sectors).
Only indices of the sector parity are ever non-zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2

from rabi2 import numeric
from rabi2.model import DerivedParams, DomainError, EvaluationError, ModelParams, Sector, derive, derive_exact


@dataclass(frozen=True)
class SeriesCoeffs:
    sector: Sector
    energy: object
    order: int
    q: tuple
    k: tuple

    def indices(self) -> range:
        """Indices carrying the sector parity."""
        return range(self.sector.seed_index, self.order + 1, 2)


def iterate(omega0, omega, g, kappa, sector: Sector, energy, order: int, seeds=None):
    """Run the recurrence, returning same-parity coefficient lists.

    Entry j of the returned lists is the coefficient of z^(s + 2j), s the
    sector seed index. Arithmetic is generic: mpfr scalars, Fractions and
    NumPy object arrays of mpfr (one lane per trial energy) all work.
    """
    if g == 0:
        raise DomainError("the series recurrence divides by 2g; use the g = 0 reference spectrum")
    s = sector.seed_index
    q_seed, k_seed = (sector.seed_q, sector.seed_k) if seeds is None else seeds
    zero = energy * 0
    q = [zero + q_seed]
    k = [zero + k_seed]
    k_prev = zero  # K_{n-2}, zero below the seed

    slope_q = omega - 8 * g * kappa
    slope_k = omega + 8 * g * kappa
    shift = 4 * g * kappa
    squeeze = 4 * omega * kappa
    half = omega0 / 2

    n = s
    while n + 2 <= order:
        inv = 1 / (2 * g * (n + 2) * (n + 1))
        qn, kn = q[-1], k[-1]
        q_next = -((slope_q * n - shift - energy) * qn + half * kn) * inv
        k_next = ((slope_k * n + shift - energy) * kn - squeeze * k_prev + half * qn) * inv
        q.append(q_next)
        k.append(k_next)
        k_prev = kn
        n += 2
    return q, k


def _first_nonfinite(values) -> int | None:
    for j, v in enumerate(values):
        items = v if hasattr(v, "__len__") else (v,)
        if not all(gmpy2.is_finite(x) for x in items):
            return j
    return None


def check_finite(sector: Sector, q, k, energy=None) -> None:
    """Raise EvaluationError naming the first overflowing coefficient index."""
    s = sector.seed_index
    for name, arr in (("Q", q), ("K", k)):
        j = _first_nonfinite(arr)
        if j is not None:
            raise EvaluationError(
                f"non-finite {name}_{s + 2 * j} in the series recurrence",
                term_index=s + 2 * j,
                energy=energy,
            )


def compute_coefficients(
    params: ModelParams,
    derived: DerivedParams | None,
    sector: Sector,
    energy,
    order: int,
    exact: bool = False,
    seeds=None,
) -> SeriesCoeffs:
    """Coefficients Q_0..Q_L, K_0..K_L with exact zeros off parity.

    exact=True runs in rational arithmetic; params and energy are converted
    with Fraction() and kappa must be rational (see derive_exact).
    """
    s = sector.seed_index
    if order < s + 2:
        raise DomainError(f"order must be >= {s + 2} for sector {sector.value}, got {order}")
    if exact:
        derived = derived if derived is not None else derive_exact(params)
        omega0, omega, g = (Fraction(params.omega0), Fraction(params.omega), Fraction(params.g))
        kappa = Fraction(derived.kappa)
        energy = Fraction(energy)
        zero = Fraction(0)
    else:
        derived = derived if derived is not None else derive(params)
        omega0, omega, g = (numeric.big(params.omega0), numeric.big(params.omega), numeric.big(params.g))
        kappa = numeric.big(derived.kappa)
        energy = numeric.big(energy)
        zero = numeric.big(0)
    if seeds is not None:
        seeds = tuple(Fraction(x) if exact else numeric.big(x) for x in seeds)
    q_packed, k_packed = iterate(omega0, omega, g, kappa, sector, energy, order, seeds)
    if not exact:
        check_finite(sector, q_packed, k_packed, energy)
    q = [zero] * (order + 1)
    k = [zero] * (order + 1)
    for j, (qv, kv) in enumerate(zip(q_packed, k_packed)):
        q[s + 2 * j] = qv
        k[s + 2 * j] = kv
    return SeriesCoeffs(sector=sector, energy=energy, order=order, q=tuple(q), k=tuple(k))


@dataclass(frozen=True)
class RatioDiagnostic:
    """Same-parity ratios C_{n+2}/C_n, keyed by n."""

    q_index: tuple[int, ...]
    q_ratios: tuple
    k_index: tuple[int, ...]
    k_ratios: tuple
    omitted: dict = field(default_factory=dict)

    def fitted_exponent(self, which: str = "k", n_min: int = 20) -> float:
        """Least-squares p in |ratio| ~ A n^(-p) over n >= n_min."""
        idx, vals = (self.k_index, self.k_ratios) if which == "k" else (self.q_index, self.q_ratios)
        pts = [(math.log(n), math.log(abs(float(r)))) for n, r in zip(idx, vals) if n >= n_min and r != 0]
        if len(pts) < 3:
            raise ValueError(f"not enough {which}-ratios with n >= {n_min} to fit an exponent")
        xs, ys = zip(*pts)
        xm, ym = sum(xs) / len(xs), sum(ys) / len(ys)
        slope = sum((x - xm) * (y - ym) for x, y in zip(xs, ys)) / sum((x - xm) ** 2 for x in xs)
        return -slope


def underflow_floor(precision_bits: int | None = None):
    bits = numeric.get_precision() if precision_bits is None else precision_bits
    return Fraction(1, 10 ** (bits // 4))


def coefficient_ratio_diagnostic(coeffs: SeriesCoeffs, floor=None) -> RatioDiagnostic:
    """Consecutive same-parity ratios Q_{n+2}/Q_n and K_{n+2}/K_n.

    A coefficient is below the floor when it is exactly zero or smaller than
    floor * |C_{n-2}| (a collapse relative to its predecessor, e.g. a
    terminated series). Every ratio from the first such coefficient onwards
    is omitted and its index recorded in ``omitted``.
    """
    s = coeffs.sector.seed_index
    if coeffs.order < s + 8:
        raise DomainError(f"ratio diagnostic needs order >= {s + 8}, got {coeffs.order}")
    floor = underflow_floor() if floor is None else floor
    out = {}
    omitted = {}
    for name, arr in (("q", coeffs.q), ("k", coeffs.k)):
        idx, ratios, skipped = [], [], []
        collapsed = False
        for n in range(s, coeffs.order - 1, 2):
            cur, nxt = arr[n], arr[n + 2]
            prev = arr[n - 2] if n - 2 >= s else None
            if not collapsed and (cur == 0 or (prev is not None and abs(cur) < floor * abs(prev))):
                collapsed = True
            if collapsed:
                skipped.append(n)
                continue
            idx.append(n)
            ratios.append(nxt / cur)
        out[name] = (tuple(idx), tuple(ratios))
        omitted[name] = tuple(skipped)
    return RatioDiagnostic(
        q_index=out["q"][0], q_ratios=out["q"][1],
        k_index=out["k"][0], k_ratios=out["k"][1],
        omitted=omitted,
    )


def omega0_zero_level(params: ModelParams, n: int, derived: DerivedParams | None = None, exact: bool = False):
    """-omega/2 + (n + 1/2) Omega omega."""
    if exact:
        derived = derived if derived is not None else derive_exact(params)
        omega = Fraction(params.omega)
        return -omega / 2 + (n + Fraction(1, 2)) * Fraction(derived.omega_big) * omega
    derived = derived if derived is not None else derive(params)
    omega = numeric.big(params.omega)
    return -omega / 2 + (n + numeric.big(0.5)) * derived.omega_big * omega


def q_closed_form(params: ModelParams, energy, k: int, derived=None, exact: bool = False):
    """Q_{2k} = prod_{j<k} (E - eps_{2j}) / ((2g)^k (2k)!) for omega0 = 0."""
    if exact:
        g, energy = Fraction(params.g), Fraction(energy)
        prod = Fraction(1)
    else:
        g, energy = numeric.big(params.g), numeric.big(energy)
        prod = numeric.big(1)
    for j in range(k):
        prod *= energy - omega0_zero_level(params, 2 * j, derived, exact)
    return prod / ((2 * g) ** k * math.factorial(2 * k))


def q_closed_form_check(params: ModelParams, energy, k_max: int, exact: bool = False):
    """Max relative error between recurrence Q_{2k} and the closed product, k <= k_max.

    Where the closed form vanishes (terminated series) the computed value is
    measured against the largest closed-form magnitude at lower k instead.
    """
    if params.omega0 != 0:
        raise DomainError("the closed-form Q_{2k} product holds only for omega0 = 0")
    derived = derive_exact(params) if exact else derive(params)
    coeffs = compute_coefficients(params, derived, Sector.PLUS, energy, 2 * k_max, exact=exact)
    worst = 0
    scale = 0
    for k in range(k_max + 1):
        closed = q_closed_form(params, energy, k, derived, exact)
        got = coeffs.q[2 * k]
        if closed != 0:
            err = abs(got - closed) / abs(closed)
            scale = max(scale, abs(closed))
        else:
            err = abs(got) / scale if scale else abs(got)
        worst = max(worst, err)
    return worst
