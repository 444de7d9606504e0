"""Real-argument special functions and combinatorial primitives.

Every combinatorial quantity is computed in log space and exponentiated once.
Integer inputs take an exact path so that, e.g., C(3, 1) is exactly 3.0.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Sequence
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import ContractViolation, DomainError

_LOGGER = logging.getLogger(__name__)

Partition = tuple[int, ...]


class LogValue(NamedTuple):
    """A positive quantity carried both as its natural log and its value."""

    log: float
    value: float


def _is_integral(x: float) -> bool:
    return float(x).is_integer()


def log_gamma(x):
    """Return ln Γ(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"log_gamma requires positive finite x, got {x!r}")
    result = special.gammaln(arr)
    return float(result) if result.ndim == 0 else result


def log_binom_real(upper: float, lower: int) -> float:
    """ln C(upper, lower) via Γ-ratios. Requires upper - lower > -1."""
    if lower < 0 or not _is_integral(lower):
        raise DomainError(f"Binomial lower index must be a non-negative integer, got {lower!r}")
    lower = int(lower)
    if _is_integral(upper) and upper >= 0:
        value = math.comb(int(upper), lower)
        if value == 0:
            return -math.inf
        return math.log(value)
    if not upper - lower > -1:
        raise DomainError(
            f"Binomial C({upper}, {lower}) hits a pole of Γ (upper - lower must exceed -1)"
        )
    return float(
        special.gammaln(upper + 1.0)
        - special.gammaln(lower + 1.0)
        - special.gammaln(upper - lower + 1.0)
    )


def binom_real(upper: float, lower: int) -> float:
    """Real binomial Γ(upper+1)/(Γ(lower+1)Γ(upper-lower+1)).

    Integer ``upper >= 0`` uses exact integer arithmetic, so ``lower > upper``
    gives 0.
    """
    if _is_integral(upper) and upper >= 0 and _is_integral(lower) and lower >= 0:
        return float(math.comb(int(upper), int(lower)))
    return math.exp(log_binom_real(upper, lower))


def log_multinomial_real(total: float, parts: Sequence[float]) -> float:
    """ln Γ(total+1)/∏Γ(parts_j+1) with real parts (no sum check)."""
    if any(p <= -1 for p in parts) or total <= -1:
        raise DomainError(f"Multinomial arguments must exceed -1, got {total!r}, {parts!r}")
    return float(special.gammaln(total + 1.0) - np.sum(special.gammaln(np.asarray(parts, dtype=float) + 1.0)))


def multinomial(total: int, parts: Sequence[int]) -> LogValue:
    """Multinomial coefficient total!/∏ parts_j!, as (log, value)."""
    if any(p < 0 for p in parts):
        raise ContractViolation(f"Partition has negative parts: {tuple(parts)}")
    if sum(parts) != total:
        raise ContractViolation(
            f"Partition {tuple(parts)} sums to {sum(parts)}, expected {total}"
        )
    if all(_is_integral(p) for p in parts):
        exact = math.factorial(int(total))
        for p in parts:
            exact //= math.factorial(int(p))
        return LogValue(math.log(exact), float(exact))
    log_value = log_multinomial_real(total, parts)
    return LogValue(log_value, math.exp(log_value))


def _partitions(total: int, d: int) -> Iterator[Partition]:
    if d == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _partitions(total - head, d - 1):
            yield (head, *rest)


def partitions(total: int, d: int) -> list[Partition]:
    """All ways to write ``total`` as an ordered sum of ``d`` non-negative integers.

    The order is lexicographic with the first part descending, so
    ``partitions(2, 2) == [(2, 0), (1, 1), (0, 2)]``.
    """
    if total < 0 or d < 1:
        raise DomainError(f"partitions requires total >= 0 and d >= 1, got ({total}, {d})")
    return list(_partitions(total, d))


def bessel_i0(x):
    """Modified Bessel function of the first kind, order 0."""
    result = special.i0(np.asarray(x, dtype=float))
    return float(result) if np.ndim(result) == 0 else result


def log_bessel_i0(x):
    """ln I0(x), stable for large x."""
    arr = np.abs(np.asarray(x, dtype=float))
    result = np.log(special.i0e(arr)) + arr
    return float(result) if np.ndim(result) == 0 else result
