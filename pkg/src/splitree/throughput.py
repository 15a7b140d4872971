"""Maximum stable throughput of q-ary splitting under Poisson arrivals.

Free access: the critical arrival rate λ_c solves a transcendental
equation balancing [q(1-λ)-1]/(λq²)·exp(qλ/(q-1)) against a factorially
convergent power series in λ. Blocked access has the closed form ln(q)/q.
The equation's root structure is not documented, so the solver scans the
whole admissible interval and reports every sign-change bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from mpmath import mp, mpf

from .model import DEFAULT_PRECISION, DomainError, NoRootFound, NonConvergence

__all__ = [
    "equation_residual",
    "lambda_critical",
    "blocked_lambda",
    "critical_report",
    "ThroughputRoot",
    "DEFAULT_K_MAX",
]

DEFAULT_K_MAX = 200
_SCAN_STEP = mpf(1) / 100


def equation_residual(q: int, lam, tol=mpf(10) ** -30, k_max: int = DEFAULT_K_MAX):
    """LHS - RHS of the throughput equation at arrival rate ``lam``.

    The series is truncated once |term| < tol/10; (q/(q-1))^k λ^k / k!
    decays factorially, so termination within ``k_max`` signals nothing
    pathological for any sane (tol, λ).
    """
    if q < 2:
        raise DomainError("q must be an integer >= 2")
    lam = mpf(lam)
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    q = mpf(q)
    lhs = (q * (1 - lam) - 1) / (lam * q * q) * mp.exp(q * lam / (q - 1))
    rhs = mpf(0)
    ratio = q / (q - 1)
    power = mpf(1)
    fact = mpf(1)
    for k in range(1, k_max + 1):
        power *= ratio * lam
        fact *= k
        coeff = (mpf(k) / (k + 1)) * (k * (1 - 1 / q) / (1 - q ** (-k)) - 1 / q)
        term = coeff * power / fact
        rhs += term
        if abs(term) < tol / 10:
            return lhs - rhs
    raise NonConvergence(
        f"series term bound not reached within k_max={k_max}"
    )


def _scan_brackets(q: int, tol, k_max: int) -> List[Tuple[mpf, mpf]]:
    hi = 1 - mpf(1) / q
    xs = []
    x = _SCAN_STEP / 10  # stay off the λ=0 pole
    while x < hi:
        xs.append(x)
        x += _SCAN_STEP
    brackets = []
    prev_x, prev_f = xs[0], equation_residual(q, xs[0], tol, k_max)
    for x in xs[1:]:
        f = equation_residual(q, x, tol, k_max)
        if prev_f * f < 0:
            brackets.append((prev_x, x))
        prev_x, prev_f = x, f
    return brackets


def _bisect(q, a, b, tol, k_max):
    fa = equation_residual(q, a, tol, k_max)
    while b - a > tol:
        c = (a + b) / 2
        fc = equation_residual(q, c, tol, k_max)
        if fa * fc <= 0:
            b = c
        else:
            a, fa = c, fc
    return (a + b) / 2


@dataclass(frozen=True)
class ThroughputRoot:
    """Solver result plus diagnostics for the bracket scan."""

    q: int
    value: mpf
    residual: mpf
    brackets: Tuple[Tuple[float, float], ...]


def critical_report(
    q: int,
    tol=mpf(10) ** -30,
    k_max: int = DEFAULT_K_MAX,
    precision: int = DEFAULT_PRECISION,
) -> ThroughputRoot:
    """Locate λ_c in (0, 1 - 1/q) and keep every scanned bracket visible."""
    if q < 2:
        raise DomainError("q must be an integer >= 2")
    tol = mpf(tol)
    with mp.workdps(precision + 10):
        brackets = _scan_brackets(q, tol, k_max)
        if not brackets:
            raise NoRootFound(f"no sign change in (0, 1 - 1/{q})")
        root = _bisect(q, brackets[0][0], brackets[0][1], tol, k_max)
        return ThroughputRoot(
            q=q,
            value=root,
            residual=equation_residual(q, root, tol, k_max),
            brackets=tuple((float(a), float(b)) for a, b in brackets),
        )


def lambda_critical(
    q: int,
    tol=mpf(10) ** -30,
    k_max: int = DEFAULT_K_MAX,
    precision: int = DEFAULT_PRECISION,
):
    """The maximum stable throughput λ_c for splitting arity q."""
    return critical_report(q, tol, k_max, precision).value


def blocked_lambda(q: int, precision: int = DEFAULT_PRECISION):
    """Blocked-access throughput ln(q)/q (largest at the integer q = 3)."""
    if q < 2:
        raise DomainError("q must be an integer >= 2")
    with mp.workdps(precision + 10):
        return mp.ln(q) / q
