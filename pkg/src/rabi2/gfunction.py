"""Real-valued sector G-functions and Bargmann eigenfunction reconstruction.

For z on the positive real axis the i-powers reduce to signs:

  even sectors   phi_2(iz)   = exp(+kappa z^2) sum_n K_n (-1)^(n/2) z^n
  odd sectors  i phi_2(iz)   = exp(+kappa z^2) sum_n K_n (-1)^((n+1)/2) z^n
                 phi_1(z)    = exp(-kappa z^2) sum_n Q_n z^n

  G_plus  = phi_2(iz) - phi_1(z)        G_minus   = phi_2(iz) + phi_1(z)
  G_i     = i phi_2(iz) + phi_1(z)      G_minus_i = i phi_2(iz) - phi_1(z)

The truncated series are evaluated at large z (z^2 >> L), where each G is
dominated by its top coefficients; its sign changes in E locate the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np

from rabi2 import numeric
from rabi2.config import RunConfig
from rabi2.model import DerivedParams, DomainError, EvaluationError, ModelParams, Sector, derive
from rabi2.series import check_finite, iterate

# sign in front of phi_1 in each G
_PHI1_SIGN = {Sector.PLUS: -1, Sector.MINUS: 1, Sector.PLUS_I: 1, Sector.MINUS_I: -1}


@dataclass(frozen=True)
class GEvaluation:
    sector: Sector
    energy: object
    z: float
    order: int
    value: object
    scale: object
    converged: bool = True

    @property
    def residual(self) -> float:
        """|G| relative to the sum of absolute term magnitudes, in [0, 1]."""
        return float(abs(self.value) / self.scale) if self.scale else 0.0

    @property
    def sign(self) -> int:
        return numeric.sign(self.value)


@dataclass(frozen=True)
class Prepared:
    """Model constants converted to mpfr once per evaluation batch."""

    omega0: object
    omega: object
    g: object
    kappa: object


def prepare(params: ModelParams, derived: DerivedParams | None = None) -> Prepared:
    if params.g == 0:
        raise DomainError("G-functions need g != 0; the g = 0 spectrum comes from rabi2.reference")
    derived = derive(params) if derived is None else derived
    return Prepared(
        omega0=numeric.big(params.omega0),
        omega=numeric.big(params.omega),
        g=numeric.big(params.g),
        kappa=numeric.big(derived.kappa),
    )


def _k_signs(sector: Sector, count: int) -> list[int]:
    s = sector.seed_index
    if s == 0:
        return [(-1) ** j for j in range(count)]  # (-1)^(n/2), n = 2j
    return [(-1) ** (j + 1) for j in range(count)]  # (-1)^((n+1)/2), n = 2j + 1


def _sums(coeffs, signs, z2, upto: int):
    """Horner sums of sum_j sign_j c_j (z^2)^j and sum_j |c_j| (z^2)^j over j < upto."""
    signed = coeffs[upto - 1] * signs[upto - 1]
    absolute = abs(coeffs[upto - 1])
    for j in range(upto - 2, -1, -1):
        signed = signed * z2 + coeffs[j] * signs[j]
        absolute = absolute * z2 + abs(coeffs[j])
    return signed, absolute


def assemble(prep: Prepared, sector: Sector, q, k, z, upto: int | None = None):
    """G value and absolute scale from packed coefficient lists at one z."""
    upto = len(q) if upto is None else upto
    z = numeric.big(z)
    z2 = z * z
    ones = [1] * upto
    sq, aq = _sums(q, ones, z2, upto)
    sk, ak = _sums(k, _k_signs(sector, upto), z2, upto)
    if sector.seed_index == 1:
        sq, aq, sk, ak = sq * z, aq * z, sk * z, ak * z
    grow = gmpy2.exp(prep.kappa * z2)
    phi1 = sq / grow
    phi2_rot = sk * grow
    value = phi2_rot + _PHI1_SIGN[sector] * phi1
    scale = ak * grow + aq / grow
    return value, scale


def packed_count(sector: Sector, order: int) -> int:
    return (order - sector.seed_index) // 2 + 1


def g_batch(prep: Prepared, sector: Sector, energies, z_points, order: int):
    """G values and scales for an object array of energies at several z.

    Returns a list (one entry per z) of (values, scales) object arrays.
    Coefficients are shared across z.
    """
    if order < 4:
        raise DomainError(f"order must be >= 4, got {order}")
    q, k = iterate(prep.omega0, prep.omega, prep.g, prep.kappa, sector, energies, order)
    out = []
    for z in z_points:
        if not z > 0:
            raise DomainError(f"evaluation point z must be > 0, got {z}")
        values, scales = assemble(prep, sector, q, k, z)
        if not _all_finite(values) or not _all_finite(scales):
            check_finite(sector, q, k)
            raise EvaluationError(
                f"non-finite G at z={z}: exponent overflow in the top term z^{order}",
                term_index=order,
            )
        out.append((values, scales))
    return out


def _all_finite(values) -> bool:
    items = values if hasattr(values, "__len__") else (values,)
    return all(gmpy2.is_finite(v) for v in items)


def eval_G(
    params: ModelParams,
    derived: DerivedParams | None,
    sector: Sector,
    energy,
    z: float,
    order: int,
    prec: int | None = None,
) -> GEvaluation:
    """Evaluate one sector G-function at (E, z) with the series truncated at z^order."""
    with numeric.workprec(prec):
        prep = prepare(params, derived)
        e = numeric.big(energy)
        try:
            ((value, scale),) = g_batch(prep, sector, e, [z], order)
        except EvaluationError as err:
            err.energy = float(e)
            raise
    return GEvaluation(sector, e, float(z), order, value, scale)


def order_ladder(config: RunConfig) -> list[int]:
    ladder = list(range(config.l_start, config.l_max + 1, config.delta_l))
    if not ladder or ladder[-1] != config.l_max:
        ladder.append(config.l_max)
    return ladder


def eval_G_adaptive(
    params: ModelParams,
    derived: DerivedParams | None,
    sector: Sector,
    energy,
    z: float,
    config: RunConfig | None = None,
) -> GEvaluation:
    """Evaluate G on the order ladder l_start, l_start + delta_l, ..., l_max.

    At z^2 >> L the raw value grows like z^L, so convergence is judged on the
    sign: the ladder stops once ``stable_rungs`` consecutive orders agree in
    sign. Hitting l_max without that leaves ``converged`` False.
    """
    config = config or RunConfig()
    with numeric.workprec(config.precision_bits):
        prep = prepare(params, derived)
        e = numeric.big(energy)
        q, k = iterate(prep.omega0, prep.omega, prep.g, prep.kappa, sector, e, config.l_max)
        check_finite(sector, q, k, float(e))
        history = []
        result = None
        for order in order_ladder(config):
            upto = packed_count(sector, order)
            value, scale = assemble(prep, sector, q, k, z, upto)
            if not gmpy2.is_finite(value):
                raise EvaluationError(f"non-finite G at z={z}, order {order}", term_index=order, energy=float(e))
            history.append(numeric.sign(value))
            tail = history[-config.stable_rungs:]
            converged = len(tail) == config.stable_rungs and len(set(tail)) == 1 and tail[0] != 0
            result = GEvaluation(sector, e, float(z), order, value, scale, converged)
            if converged:
                break
    return result


def reconstruct_psi(
    params: ModelParams,
    derived: DerivedParams | None,
    sector: Sector,
    energy,
    z_grid,
    config: RunConfig | None = None,
):
    """Unnormalized Bargmann eigenfunction (psi_1, psi_2) sampled on real z.

    psi_1 = (phi_1 + phi_2)/2, psi_2 = (phi_1 - phi_2)/2 with
    phi_2(z) = exp(-kappa z^2) sum K_n z^n. The truncation order grows in
    steps of delta_l until every sample changes by less than tol_series
    (relative), or l_max is reached. Returns two object arrays of mpfr.
    """
    config = config or RunConfig()
    with numeric.workprec(config.precision_bits):
        prep = prepare(params, derived)
        e = numeric.big(energy)
        zs = [numeric.big(z) for z in z_grid]
        q, k = iterate(prep.omega0, prep.omega, prep.g, prep.kappa, sector, e, config.l_max)
        check_finite(sector, q, k, float(e))
        plus = [1] * len(q)
        previous = None
        for order in order_ladder(config):
            upto = packed_count(sector, order)
            phi1, phi2 = [], []
            for z in zs:
                damp = gmpy2.exp(-prep.kappa * z * z)
                power = z if sector.seed_index == 1 else 1
                sq, _ = _sums(q, plus, z * z, upto)
                sk, _ = _sums(k, plus, z * z, upto)
                phi1.append(damp * sq * power)
                phi2.append(damp * sk * power)
            current = (phi1, phi2)
            if previous is not None and _settled(previous, current, config.tol_series):
                break
            previous = current
    phi1 = np.array(current[0], dtype=object)
    phi2 = np.array(current[1], dtype=object)
    return (phi1 + phi2) / 2, (phi1 - phi2) / 2


def _settled(previous, current, tol) -> bool:
    for old_row, new_row in zip(previous, current):
        for old, new in zip(old_row, new_row):
            ref = max(abs(new), abs(old))
            if ref and abs(new - old) > tol * ref:
                return False
    return True
