"""Asymptotic constants, growth-law predictions, and fluctuation residuals.

Closed-form constants are evaluated from their defining series/formulas at
arbitrary precision (mpmath). Three constants are fed by moment
recurrences and are tail-bound limited: the two sorting limits (series
over mean increments, truncated at ``l_max`` with a fitted 1/l tail) and
the max-finding variance slope (series over exact second factorial
moments, truncated at ``i_max``). Requests beyond their achievable
precision raise :class:`~splitree.model.PrecisionUnachievable`.

The published growth laws also carry bounded log-periodic fluctuations
with no closed form; ``residual_profile`` exposes them empirically as
(exact mean - leading asymptotic prediction).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf

from . import exact, kernels
from .model import (
    DEFAULT_PRECISION,
    ExactLimitExceeded,
    PrecisionUnachievable,
    UnsupportedVariant,
    Variant,
)

__all__ = [
    "ConstantId",
    "ResidualProfile",
    "constant",
    "asymptotic_prediction",
    "residual_profile",
    "mean_large_n",
    "DEFAULT_SERIES_LMAX",
    "DEFAULT_VAR_SERIES_IMAX",
    "DEFAULT_PROFILE_LIMIT",
]

DEFAULT_SERIES_LMAX = 10**4      # sorting-limit series truncation
DEFAULT_VAR_SERIES_IMAX = 120    # max-finding variance series truncation
DEFAULT_PROFILE_LIMIT = 1 << 14  # residual profiles use the O(n^2) float path


class ConstantId(enum.Enum):
    CONFLICT_MEAN_SLOPE = "CONFLICT_MEAN_SLOPE"
    CONFLICT_VAR_SLOPE = "CONFLICT_VAR_SLOPE"
    CONFLICT_VAR_QUARTER = "CONFLICT_VAR_QUARTER"
    HEIGHT_MEAN_OFFSET = "HEIGHT_MEAN_OFFSET"
    HEIGHT_VAR_CONST = "HEIGHT_VAR_CONST"
    SIZE_MEAN_OFFSET = "SIZE_MEAN_OFFSET"
    DRAW_HEIGHT_OFFSET = "DRAW_HEIGHT_OFFSET"
    DRAW_SIZE_OFFSET = "DRAW_SIZE_OFFSET"
    COIN_MEAN_OFFSET = "COIN_MEAN_OFFSET"
    COIN_VAR_CONST = "COIN_VAR_CONST"
    MAX_MEAN_SLOPE = "MAX_MEAN_SLOPE"
    MAX_VAR_SLOPE = "MAX_VAR_SLOPE"
    SORT_MEAN_LIMIT = "SORT_MEAN_LIMIT"
    SORT_ALT_MEAN_LIMIT = "SORT_ALT_MEAN_LIMIT"
    NAIVE_SORT_CONST = "NAIVE_SORT_CONST"
    RESEMBLANCE_CONST = "RESEMBLANCE_CONST"


# significant digits the tail bounds can guarantee for recurrence-fed ids
ACHIEVABLE_DIGITS = {
    ConstantId.SORT_MEAN_LIMIT: 7,
    ConstantId.SORT_ALT_MEAN_LIMIT: 7,
    ConstantId.MAX_VAR_SLOPE: 30,
}


def _conflict_var_slope():
    s = mpf(0)
    k = 1
    while True:
        term = 1 / (mpf(2) ** k + 1) ** 2
        s += term
        if term < mpf(10) ** (-mp.dps - 5):
            break
        k += 1
    return (1 + 8 * s) / mp.ln(2)


def _naive_sort_const():
    # inner tail sum_{m >= M} 1/m^2 is the trigamma value psi'(M)
    total = mpf(2)
    l = 1
    while True:
        term = 1 - mpf(2) ** l * mp.psi(1, mpf(2) ** l)
        total += term
        if abs(term) < mpf(10) ** (-mp.dps - 5):
            break
        l += 1
    return total


def _resemblance_const():
    # sum_{m<=M} ln(m/M) = lnGamma(M+1) - M ln M, M = 2^l
    total = mpf(0)
    l = 0
    ln2 = mp.ln(2)
    while True:
        M = mpf(2) ** l
        term = 1 + mp.loggamma(M + 1) / M - l * ln2
        total += term
        if abs(term) < mpf(10) ** (-mp.dps - 5):
            break
        l += 1
    return 2 * total


_CLOSED_FORMS = {
    ConstantId.CONFLICT_MEAN_SLOPE: lambda: 2 / mp.ln(2),
    ConstantId.CONFLICT_VAR_SLOPE: _conflict_var_slope,
    ConstantId.CONFLICT_VAR_QUARTER: lambda: _conflict_var_slope() / 4,
    ConstantId.HEIGHT_MEAN_OFFSET: lambda: mpf(1) / 2,
    ConstantId.HEIGHT_VAR_CONST: lambda: (
        mpf(1) / 12
        + mp.pi**2 / (6 * mp.ln(2) ** 2)
        - (mp.euler**2 + 2 * mp.stieltjes(1)) / mp.ln(2) ** 2
    ),
    ConstantId.SIZE_MEAN_OFFSET: lambda: 2 - (mp.ln(mp.pi) - mp.euler) / mp.ln(2),
    ConstantId.DRAW_HEIGHT_OFFSET: lambda: mpf(1) / 2 - mp.pi**2 / (12 * mp.ln(2)),
    ConstantId.DRAW_SIZE_OFFSET: lambda: 2
    - (mp.ln(mp.pi) - mp.euler + mp.pi**2 / 8) / mp.ln(2),
    ConstantId.COIN_MEAN_OFFSET: lambda: mpf(1) / 2 + mp.euler / mp.ln(2),
    ConstantId.COIN_VAR_CONST: lambda: mpf(1) / 12 + mp.pi**2 / (6 * mp.ln(2) ** 2),
    ConstantId.MAX_MEAN_SLOPE: lambda: mp.pi**2 / (3 * mp.ln(2)),
    ConstantId.NAIVE_SORT_CONST: _naive_sort_const,
    ConstantId.RESEMBLANCE_CONST: _resemblance_const,
}


def _max_var_slope(i_max: int):
    h = [rec.h for rec in exact.moment_table(Variant.MAX_FIND, i_max)]
    s = mpf(0)
    for i, hi in enumerate(h):
        s += mpf(hi.numerator) / hi.denominator / mpf(2) ** (i + 1)
    return (mp.pi**2 - 2 - mp.pi**4 / 9 + s) / mp.ln(2)


def sort_limit_series(alt: bool, l_max: int) -> Tuple[float, float]:
    """Partial sum and fitted tail of sum (g_l - g_{l-1}) / (l + 1), l >= 3.

    g comes from the float64 recurrence path (election-height means, or
    max-finding means for the alternate sort). Increment means behave like
    a/l, so the tail beyond l_max is a_hat / (l_max + 1) with a_hat fitted
    on the last 200 terms; the log-periodic wobble averages out.
    """
    code = kernels.MEAN_CODES["max" if alt else "height"]
    g = kernels.mean_table_f64(code, l_max)
    l = np.arange(3, l_max + 1, dtype=np.float64)
    terms = (g[3:] - g[2:-1]) / (l + 1.0)
    partial = float(np.sum(terms))
    window = terms[-200:]
    lw = l[-200:]
    a_hat = float(np.mean(window * lw * (lw + 1.0)))
    tail = a_hat / (l_max + 1)
    return partial, tail


def _sort_limit(alt: bool, l_max: int):
    partial, tail = sort_limit_series(alt, l_max)
    series = mpf(partial) + mpf(tail)
    if alt:
        return mpf(13) / 6 + series
    return mpf(8) / 3 + 2 * series


@lru_cache(maxsize=None)
def _constant_cached(cid: ConstantId, dps: int, l_max: int, i_max: int):
    with mp.workdps(dps):
        if cid is ConstantId.MAX_VAR_SLOPE:
            return _max_var_slope(i_max)
        if cid is ConstantId.SORT_MEAN_LIMIT:
            return _sort_limit(False, l_max)
        if cid is ConstantId.SORT_ALT_MEAN_LIMIT:
            return _sort_limit(True, l_max)
        return _CLOSED_FORMS[cid]()


def constant(
    cid: ConstantId,
    precision: int = DEFAULT_PRECISION,
    l_max: int = DEFAULT_SERIES_LMAX,
    i_max: int = DEFAULT_VAR_SERIES_IMAX,
):
    """Evaluate one named constant from its defining formula.

    ``precision`` is in significant decimal digits. The recurrence-fed
    constants raise PrecisionUnachievable past their tail-bound limit.
    """
    if precision < 1:
        raise ValueError("precision must be positive")
    limit = ACHIEVABLE_DIGITS.get(cid)
    if limit is not None and precision > limit:
        raise PrecisionUnachievable(
            f"{cid.value} is tail-bound limited to ~{limit} significant digits "
            f"(requested {precision})"
        )
    return _constant_cached(cid, precision + 10, l_max, i_max)


# ---------------------------------------------------------------------------
# growth-law predictions and fluctuation residuals
# ---------------------------------------------------------------------------

_OFFSET_IDS = {
    Variant.ELECTION_HEIGHT: ConstantId.HEIGHT_MEAN_OFFSET,
    Variant.ELECTION_SIZE: ConstantId.SIZE_MEAN_OFFSET,
    Variant.DRAW_HEIGHT: ConstantId.DRAW_HEIGHT_OFFSET,
    Variant.DRAW_SIZE: ConstantId.DRAW_SIZE_OFFSET,
    Variant.COIN_TOSS: ConstantId.COIN_MEAN_OFFSET,
}

_LOG_FACTOR = {
    Variant.ELECTION_HEIGHT: 1,
    Variant.DRAW_HEIGHT: 1,
    Variant.COIN_TOSS: 1,
    Variant.ELECTION_SIZE: 2,
    Variant.DRAW_SIZE: 2,
}


def asymptotic_prediction(variant: Variant, n: int, precision: int = DEFAULT_PRECISION):
    """Leading mean growth term plus printed constant offset (no fluctuation).

    Max-finding has a published slope but no published offset, so its
    prediction is the pure slope term.
    """
    if n < 1:
        raise ValueError("n must be positive")
    with mp.workdps(precision + 10):
        if variant is Variant.CONFLICT:
            return n * 2 / mp.ln(2)
        if variant is Variant.SORT:
            lim = ACHIEVABLE_DIGITS[ConstantId.SORT_MEAN_LIMIT]
            return n * constant(ConstantId.SORT_MEAN_LIMIT, min(precision, lim))
        if variant is Variant.MAX_FIND:
            return constant(ConstantId.MAX_MEAN_SLOPE, precision) * mp.ln(n)
        if variant in _OFFSET_IDS:
            off = constant(_OFFSET_IDS[variant], precision)
            return _LOG_FACTOR[variant] * mp.log(n, 2) + off
    raise UnsupportedVariant(f"no printed asymptotic mean for {variant}")


@dataclass(frozen=True)
class ResidualProfile:
    """Empirical fluctuation record: (n, exact mean - prediction) points.

    Linear-growth variants (conflict, sort) are normalized by n. The
    residuals hold the bounded, period-1-in-log2(n), zero-ish-mean
    fluctuation the growth laws omit, plus any unprinted offset.
    """

    variant: Variant
    points: Tuple[Tuple[int, float], ...]

    def bound(self) -> float:
        return max(abs(r) for _, r in self.points)


def mean_large_n(variant: Variant, n_max: int, limit: int = DEFAULT_PROFILE_LIMIT) -> np.ndarray:
    """Float64 mean table g_0..g_n_max via the kernel recurrence path."""
    if variant is Variant.MAX_FIND_REVISED:
        raise UnsupportedVariant("no exact recurrence for the revised maximum variant")
    if n_max > limit:
        raise ExactLimitExceeded(
            f"n_max={n_max} beyond the O(n^2) float recurrence budget ({limit})"
        )
    return kernels.mean_table_f64(kernels.MEAN_CODES[variant.value], n_max)


def residual_profile(
    variant: Variant,
    n_list: Sequence[int],
    precision: int = DEFAULT_PRECISION,
    limit: int = DEFAULT_PROFILE_LIMIT,
) -> ResidualProfile:
    """Exact-minus-asymptotic residuals at the requested n values."""
    ns: List[int] = sorted(set(int(n) for n in n_list))
    if not ns or ns[0] < 2:
        raise ValueError("n values must be >= 2")
    g = mean_large_n(variant, ns[-1], limit=limit)
    pts = []
    with mp.workdps(precision + 10):
        for n in ns:
            pred = asymptotic_prediction(variant, n, precision)
            resid = mpf(g[n]) - pred
            if variant in (Variant.CONFLICT, Variant.SORT):
                resid /= n
            pts.append((n, float(resid)))
    return ResidualProfile(variant, tuple(pts))
