"""Exact rational moment tables and probability generating functions.

Every recurrence is evaluated in ``Fraction`` arithmetic, so results are
exact. Tables are bottom-up; the self-referential terms of each pgf
functional equation are isolated algebraically and the equation solved
linearly at each n, which keeps evaluation exact for rational arguments.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import List

from mpmath import mp, mpf

from .model import (
    DomainError,
    ExactLimitExceeded,
    MomentRecord,
    UnsupportedVariant,
    Variant,
)

__all__ = [
    "DEFAULT_EXACT_LIMIT",
    "SortMoments",
    "moment_table",
    "mean_table_exact",
    "sort_moments",
    "pgf_eval",
    "conflict_mean_series",
]

DEFAULT_EXACT_LIMIT = 512

_HALF = Fraction(1, 2)


def _check_limit(n_max: int, limit: int) -> None:
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_max > limit:
        raise ExactLimitExceeded(
            f"n_max={n_max} exceeds exact limit {limit}; "
            "use the float recurrence path for large n"
        )


def _gh_conflict(n_max: int):
    g = [Fraction(1), Fraction(1)]
    h = [Fraction(0), Fraction(0)]
    for n in range(2, n_max + 1):
        w = Fraction(2, 2**n)
        denom = 1 - w
        g.append((1 + w * sum(comb(n, k) * g[k] for k in range(n))) / denom)
        gg = sum(comb(n, k) * g[k] * g[n - k] for k in range(n + 1))
        hs = sum(comb(n, k) * h[k] for k in range(n))
        h.append((-2 + 2 * g[n] + w * gg + w * hs) / denom)
    return g, h


def _gh_election_height(n_max: int, draws: bool = False):
    base = 3 if draws else 2
    g = [Fraction(0)] * min(base, n_max + 1)
    h = [Fraction(0)] * min(base, n_max + 1)
    for n in range(base, n_max + 1):
        w = Fraction(1, 2**n)
        denom = 1 - 2 * w
        g.append((1 + w * sum(comb(n, k) * g[k] for k in range(n))) / denom)
        h.append((-2 + 2 * g[n] + w * sum(comb(n, k) * h[k] for k in range(n))) / denom)
    return g, h


def _gh_election_size(n_max: int, draws: bool = False):
    base = 3 if draws else 2
    g = [Fraction(0), Fraction(1), Fraction(1)] if draws else [Fraction(0), Fraction(1)]
    g = g[: n_max + 1]
    h = [Fraction(0)] * min(base, n_max + 1)
    for n in range(base, n_max + 1):
        w = Fraction(1, 2**n)
        denom = 1 - 2 * w
        g.append(1 + (1 + w * sum(comb(n, k) * g[k] for k in range(n))) / denom)
        gs = sum(comb(n, k) * g[k] for k in range(n + 1))
        hs = sum(comb(n, k) * h[k] for k in range(n))
        h.append(2 + (4 * w * gs + w * hs) / denom)
    return g, h


def _gh_coin(n_max: int):
    g = [Fraction(0)]
    h = [Fraction(0)]
    for n in range(1, n_max + 1):
        w = Fraction(1, 2**n)
        denom = 1 - w
        g.append((1 + w * sum(comb(n, k) * g[k] for k in range(n))) / denom)
        h.append((-2 + 2 * g[n] + w * sum(comb(n, k) * h[k] for k in range(n))) / denom)
    return g, h


def _gh_maxfind(n_max: int):
    g = [Fraction(1), Fraction(1)]
    h = [Fraction(0), Fraction(0)]
    inner: List[Fraction] = [Fraction(0)]  # inner[k] = sum_j C(k-1,j-1) g_j, filled lazily
    for n in range(2, n_max + 1):
        w = Fraction(1, 2**n)
        denom = 1 - 2 * w
        coef = [w * comb(n, i) + _HALF**(i + 1) for i in range(n)]
        g.append((1 + sum(c * g[i] for i, c in enumerate(coef))) / denom)
        while len(inner) <= n:
            k = len(inner)
            inner.append(sum(comb(k - 1, j - 1) * g[j] for j in range(1, k + 1)))
        dbl = sum(inner[k] * g[n - k] for k in range(1, n + 1))
        h.append(
            (-2 + 2 * (1 + w) * g[n] + sum(c * h[i] for i, c in enumerate(coef)) + 2 * w * dbl)
            / denom
        )
    return g, h


_GH_BUILDERS = {
    Variant.CONFLICT: _gh_conflict,
    Variant.ELECTION_HEIGHT: _gh_election_height,
    Variant.ELECTION_SIZE: _gh_election_size,
    Variant.DRAW_HEIGHT: lambda n: _gh_election_height(n, draws=True),
    Variant.DRAW_SIZE: lambda n: _gh_election_size(n, draws=True),
    Variant.COIN_TOSS: _gh_coin,
    Variant.MAX_FIND: _gh_maxfind,
}


@lru_cache(maxsize=None)
def _gh_cached(variant: Variant, n_max: int):
    g, h = _GH_BUILDERS[variant](n_max)
    return tuple(g), tuple(h)


@lru_cache(maxsize=None)
def _mean_cached(variant: Variant, n_max: int):
    """Means only; avoids the expensive second-moment convolutions."""
    if variant is Variant.CONFLICT:
        g = [Fraction(1), Fraction(1)][: n_max + 1]
        for n in range(2, n_max + 1):
            w = Fraction(1, 2**n)
            g.append((1 + 2 * w * sum(comb(n, k) * g[k] for k in range(n))) / (1 - 2 * w))
        return tuple(g)
    if variant in (Variant.ELECTION_HEIGHT, Variant.DRAW_HEIGHT):
        base = 3 if variant is Variant.DRAW_HEIGHT else 2
        g = [Fraction(0)] * min(base, n_max + 1)
        for n in range(base, n_max + 1):
            w = Fraction(1, 2**n)
            g.append((1 + w * sum(comb(n, k) * g[k] for k in range(n))) / (1 - 2 * w))
        return tuple(g)
    if variant is Variant.COIN_TOSS:
        g = [Fraction(0)][: n_max + 1]
        for n in range(1, n_max + 1):
            w = Fraction(1, 2**n)
            g.append((1 + w * sum(comb(n, k) * g[k] for k in range(n))) / (1 - w))
        return tuple(g)
    if variant in (Variant.ELECTION_SIZE, Variant.DRAW_SIZE):
        base = 3 if variant is Variant.DRAW_SIZE else 2
        g = [Fraction(0)] + [Fraction(1)] * (base - 1)
        g = g[: n_max + 1]
        for n in range(base, n_max + 1):
            w = Fraction(1, 2**n)
            g.append(1 + (1 + w * sum(comb(n, k) * g[k] for k in range(n))) / (1 - 2 * w))
        return tuple(g)
    if variant is Variant.MAX_FIND:
        g = [Fraction(1), Fraction(1)][: n_max + 1]
        for n in range(2, n_max + 1):
            w = Fraction(1, 2**n)
            s = sum((w * comb(n, i) + _HALF**(i + 1)) * g[i] for i in range(n))
            g.append((1 + s) / (1 - 2 * w))
        return tuple(g)
    if variant is Variant.SORT:
        gh = _mean_cached(Variant.ELECTION_HEIGHT, n_max)
        xi = [Fraction(1), Fraction(1)][: n_max + 1]
        for n in range(2, n_max + 1):
            xi.append(1 + gh[n] + Fraction(2, n) * sum(xi))
        return tuple(xi)
    raise UnsupportedVariant(f"no exact mean recurrence for {variant}")


def mean_table_exact(variant: Variant, n_max: int, limit: int = DEFAULT_EXACT_LIMIT):
    """Exact means g_0..g_n_max (ξ for sort), without second moments."""
    if variant is Variant.MAX_FIND_REVISED:
        raise UnsupportedVariant("no exact recurrence for the revised maximum variant; use the simulator")
    _check_limit(n_max, limit)
    return list(_mean_cached(variant, n_max))


def moment_table(variant: Variant, n_max: int, limit: int = DEFAULT_EXACT_LIMIT):
    """Exact mean g, second factorial moment h and variance for n = 0..n_max.

    Sort is served through :func:`sort_moments` (ξ/η play the role of g/h).
    ``MAX_FIND_REVISED`` has no published recurrence and is rejected.
    """
    if variant is Variant.MAX_FIND_REVISED:
        raise UnsupportedVariant("no exact recurrence for the revised maximum variant; use the simulator")
    _check_limit(n_max, limit)
    if variant is Variant.SORT:
        return [
            MomentRecord(variant, s.n, s.xi, s.eta, s.var)
            for s in sort_moments(n_max, limit=limit)
        ]
    g, h = _gh_cached(variant, n_max)
    return [
        MomentRecord(variant, n, g[n], h[n], h[n] - g[n] * g[n] + g[n])
        for n in range(n_max + 1)
    ]


class SortMoments:
    """Exact sorting-cost moments: mean ξ, second factorial moment η."""

    __slots__ = ("n", "xi", "eta", "var")

    def __init__(self, n: int, xi: Fraction, eta: Fraction):
        self.n = n
        self.xi = xi
        self.eta = eta
        self.var = eta - xi * xi + xi

    def __repr__(self):
        return f"SortMoments(n={self.n}, xi={self.xi}, eta={self.eta})"


def sort_moments(n_max: int, limit: int = DEFAULT_EXACT_LIMIT) -> List[SortMoments]:
    """ξ/η table for the recursive pivot sort; feeds on election-height moments."""
    _check_limit(n_max, limit)
    g, h = _gh_cached(Variant.ELECTION_HEIGHT, n_max)
    xi = [Fraction(1), Fraction(1)][: n_max + 1]
    eta = [Fraction(0), Fraction(0)][: n_max + 1]
    for n in range(2, n_max + 1):
        two_over_n = Fraction(2, n)
        xi.append(1 + g[n] + two_over_n * sum(xi))
        cross = sum(eta[k] + xi[k] * xi[n - k - 1] for k in range(n))
        eta.append(
            2 * g[n] + h[n] - 2 * (1 + g[n]) * (1 + g[n] - xi[n]) + two_over_n * cross
        )
    return [SortMoments(n, xi[n], eta[n]) for n in range(n_max + 1)]


# ---------------------------------------------------------------------------
# Probability generating functions
# ---------------------------------------------------------------------------

def _pgf_values(variant: Variant, n_max: int, z: Fraction) -> List[Fraction]:
    """f_0(z)..f_{n_max}(z), exact; no domain guard (callers decide)."""
    z = Fraction(z)
    if variant is Variant.CONFLICT:
        f = [z, z][: n_max + 1]
        for n in range(2, n_max + 1):
            w = Fraction(1, 2**n)
            rhs = z * w * sum(comb(n, k) * f[k] * f[n - k] for k in range(1, n))
            f.append(rhs / (1 - 2 * w * z * z))
        return f

    if variant in (Variant.ELECTION_HEIGHT, Variant.DRAW_HEIGHT):
        base = [Fraction(1)] * (3 if variant is Variant.DRAW_HEIGHT else 2)
        f = base[: n_max + 1]
        for n in range(len(base), n_max + 1):
            w = Fraction(1, 2**n)
            rhs = -z * w + z * w * sum(comb(n, k) * f[k] for k in range(n))
            f.append(rhs / (1 - 2 * w * z))
        return f

    if variant in (Variant.ELECTION_SIZE, Variant.DRAW_SIZE):
        base = [Fraction(1), z, z] if variant is Variant.DRAW_SIZE else [Fraction(1), z]
        f = base[: n_max + 1]
        for n in range(len(base), n_max + 1):
            w = Fraction(1, 2**n)
            rhs = -z * z * w + z * z * w * sum(comb(n, k) * f[k] for k in range(n))
            f.append(rhs / (1 - 2 * w * z))
        return f

    if variant is Variant.COIN_TOSS:
        f = [Fraction(1)][: n_max + 1]
        for n in range(1, n_max + 1):
            w = Fraction(1, 2**n)
            rhs = z * w * sum(comb(n, k) * f[k] for k in range(n))
            f.append(rhs / (1 - w * z))
        return f

    if variant is Variant.MAX_FIND:
        f = [z, z][: n_max + 1]
        for n in range(2, n_max + 1):
            w = Fraction(1, 2**n)
            inner = [Fraction(0)]
            for k in range(1, n + 1):
                inner.append(sum(comb(k - 1, j - 1) * f[j] for j in range(1, min(k, n - 1) + 1)))
            rhs = sum(f[n - k] * inner[k] for k in range(1, n))
            rhs += f[0] * inner[n]          # k = n term, minus its j = n self-part
            f.append(z * w * rhs / (1 - 2 * w * z * z))
        return f

    if variant is Variant.SORT:
        fh = _pgf_values(Variant.ELECTION_HEIGHT, n_max, z)
        psi = [z, z][: n_max + 1]
        for n in range(2, n_max + 1):
            conv = sum(psi[k] * psi[n - k - 1] for k in range(n))
            psi.append(z * fh[n] * conv / n)
        return psi

    raise UnsupportedVariant(f"no pgf for {variant}")


def pgf_eval(variant: Variant, n: int, z: Fraction) -> Fraction:
    """Evaluate the statistic's pgf f_n(z) exactly at rational z in [0, 1]."""
    if variant is Variant.MAX_FIND_REVISED:
        raise UnsupportedVariant("no pgf for the revised maximum variant")
    z = Fraction(z)
    if not 0 <= z <= 1:
        raise DomainError(f"z={z} outside [0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _pgf_values(variant, n, z)[n]


# ---------------------------------------------------------------------------
# Infinite-series mean for the conflict statistic
# ---------------------------------------------------------------------------

def conflict_mean_series(n: int, tol) -> mpf:
    """Conflict mean via its infinite series: 1 + 2 Σ 2^m P[Bin(n, 2^-m) ≥ 2].

    Each term is 2^m [1 - (1-x)^n - n x (1-x)^(n-1)] with x = 2^-m, bounded
    by C(n,2) 2^-m, so the geometric tail gives a hard stopping rule; the
    result is within ``tol`` of the true sum.
    """
    if n < 1:
        raise ValueError("n must be positive")
    tol = mpf(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    # the bracket cancels ~m bits at depth m and is then scaled by 2^m, so
    # the working precision must cover the truncation depth as well
    bound = mpf(n * (n - 1)) / 2
    depth = 1
    while 4 * bound * mpf(2) ** (1 - depth) >= tol:
        depth += 1
    digits = max(30, int(-mp.log10(tol)) + int(0.302 * depth) + 15)
    with mp.workdps(digits):
        total = mpf(0)
        for m in range(depth):
            x = mpf(2) ** (-m)
            one_minus = (1 - x) ** (n - 1)
            total += mpf(2) ** m * (1 - one_minus * (1 - x) - n * x * one_minus)
        return 1 + 2 * total
