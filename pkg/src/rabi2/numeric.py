"""Big-float backend.

All series work runs on MPFR numbers through gmpy2. The working precision is a
process-wide setting (``set_precision``) that can be overridden locally with
``workprec``. The exponent range is always widened to the MPFR maximum, so
factors such as exp(kappa z^2) at z = 1e4 stay finite.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction

import gmpy2
import numpy as np

DEFAULT_PRECISION = 256
MIN_PRECISION = 64

_precision = DEFAULT_PRECISION


def _context(bits: int):
    return gmpy2.context(precision=bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min())


def set_precision(bits: int) -> None:
    """Set the global mantissa width (also installed as the gmpy2 thread context)."""
    global _precision
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION} bits, got {bits}")
    _precision = int(bits)
    gmpy2.set_context(_context(_precision))


def get_precision() -> int:
    return _precision


@contextlib.contextmanager
def workprec(bits: int | None = None):
    """Run a block at ``bits`` of mantissa (default: the global setting)."""
    bits = _precision if bits is None else int(bits)
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION} bits, got {bits}")
    ctx = _context(bits)
    with ctx:
        yield ctx


set_precision(DEFAULT_PRECISION)


def big(x):
    """Convert a Python/NumPy/Fraction number to an mpfr at the current precision."""
    if isinstance(x, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
    if isinstance(x, np.floating):
        x = float(x)
    elif isinstance(x, np.integer):
        x = int(x)
    return gmpy2.mpfr(x)


def big_array(values) -> np.ndarray:
    return np.array([big(v) for v in values], dtype=object)


def is_finite(x) -> bool:
    return bool(gmpy2.is_finite(x))


def sign(x) -> int:
    return (x > 0) - (x < 0)


def signs(values: np.ndarray) -> np.ndarray:
    return np.fromiter((sign(v) for v in values), dtype=np.int8, count=len(values))


def fmt(x, digits: int = 15) -> str:
    """Format any real (including huge mpfr values) with ``digits`` significant digits."""
    if isinstance(x, (float, int, np.floating, np.integer)):
        return format(float(x), f".{digits}g")
    as_float = float(x)
    if x == 0 or (np.isfinite(as_float) and 1e-300 < abs(as_float) < 1e300):
        return format(as_float, f".{digits}g")
    return format(x, f".{digits}g")
