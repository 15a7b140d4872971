"""Shared domain types: algorithm variants, moment records, coin sources, traces.

All exact values are carried as ``fractions.Fraction`` (arbitrary precision,
always in lowest terms, positive denominator). High-precision decimals are
mpmath ``mpf`` values created under an explicit working precision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Variant",
    "MomentRecord",
    "TraceNode",
    "TreeTrace",
    "TrialOutcome",
    "SeededSource",
    "ScriptedSource",
    "next_bits",
    "trial_stream",
    "ScriptExhausted",
    "ScriptLengthMismatch",
    "UnsupportedVariant",
    "ExactLimitExceeded",
    "DomainError",
    "PrecisionUnachievable",
    "NonConvergence",
    "NoRootFound",
    "DepthCapExceeded",
    "DEFAULT_PRECISION",
    "DEFAULT_DEPTH_CAP",
]

DEFAULT_PRECISION = 50          # decimal digits for high-precision results
DEFAULT_DEPTH_CAP = 10**6       # work-stack safety cap for simulations


class ScriptExhausted(RuntimeError):
    """A scripted coin source ran out of vectors."""


class ScriptLengthMismatch(ValueError):
    """A scripted vector does not match the group size being split."""


class UnsupportedVariant(ValueError):
    """The requested operation is not defined for this variant."""


class ExactLimitExceeded(ValueError):
    """n exceeds the configured exact-rational table limit."""


class DomainError(ValueError):
    """Argument outside the mathematically valid domain."""


class PrecisionUnachievable(ValueError):
    """Requested precision exceeds what the tail bound can guarantee."""


class NonConvergence(RuntimeError):
    """A series failed to meet its term bound within the term cap."""


class NoRootFound(RuntimeError):
    """No sign change found in the root-search domain."""


class DepthCapExceeded(RuntimeError):
    """A simulated tree exceeded the work-stack safety cap."""


class Variant(enum.Enum):
    """The nine splitting-tree algorithm variants.

    Values double as the command-line spellings. ``MAX_FIND_REVISED`` is
    simulation-only: there is no published recurrence for its moments.
    """

    CONFLICT = "conflict"
    ELECTION_HEIGHT = "height"
    ELECTION_SIZE = "size"
    DRAW_HEIGHT = "draw-height"
    DRAW_SIZE = "draw-size"
    COIN_TOSS = "coin"
    MAX_FIND = "max"
    MAX_FIND_REVISED = "maxrev"
    SORT = "sort"

    @property
    def has_exact_moments(self) -> bool:
        return self is not Variant.MAX_FIND_REVISED

    @classmethod
    def from_cli(cls, name: str) -> "Variant":
        for v in cls:
            if v.value == name:
                return v
        raise UnsupportedVariant(f"unknown variant {name!r}")


@dataclass(frozen=True)
class MomentRecord:
    """Exact mean, second factorial moment and variance for one (variant, n)."""

    variant: Variant
    n: int
    g: Fraction
    h: Fraction
    var: Fraction

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if self.var != self.h - self.g * self.g + self.g:
            raise ValueError(
                f"inconsistent record for n={self.n}: var != h - g^2 + g"
            )
        if self.var < 0:
            raise ValueError(f"negative variance at n={self.n}")


@dataclass(frozen=True)
class TraceNode:
    """One vertex of a recorded split tree."""

    id: int
    parent: Optional[int]
    items: tuple
    label: int


@dataclass(frozen=True)
class TreeTrace:
    """Full vertex list of one simulated tree, root first.

    Children appear tails-child before heads-child. Election traces omit
    empty vertices (they are neither drawn nor counted); conflict and
    maximum-finding traces keep them.
    """

    nodes: tuple

    def children_of(self, node_id: int) -> list:
        return [nd for nd in self.nodes if nd.parent == node_id]

    def root(self) -> TraceNode:
        return self.nodes[0]


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one simulated run."""

    variant: Variant
    n: int
    statistic: int
    joint: Optional[tuple] = None        # (height, size) for joint runs
    trace: Optional[TreeTrace] = None


def trial_stream(seed: int, index: int) -> np.random.Generator:
    """Independent substream for trial/chunk ``index`` under ``seed``.

    Philox is counter-based: stream ``index`` starts at counter
    ``index * 2**128``, so distinct indices can never collide and results
    do not depend on execution order.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    key = int(seed) & (2**64 - 1)
    return np.random.Generator(np.random.Philox(key=key, counter=index << 128))


class SeededSource:
    """Deterministic fair-coin source backed by a Philox substream.

    Bit convention: 0 = tail (stays / goes left), 1 = head (steps out /
    goes right). One uniform draw per coin keeps the stream layout
    identical to the batched simulation kernels.
    """

    def __init__(self, seed: int, index: int = 0):
        self.seed = int(seed)
        self.index = int(index)
        self._rng = trial_stream(seed, index)

    def take(self, m: int) -> np.ndarray:
        if m < 0:
            raise ValueError("m must be nonnegative")
        return (self._rng.random(m) < 0.5).astype(np.uint8)


class ScriptedSource:
    """Replays a fixed list of bit vectors, one vector per split."""

    def __init__(self, script: Sequence[Sequence[int]]):
        self._script = [np.asarray(v, dtype=np.uint8) for v in script]
        for v in self._script:
            if v.ndim != 1 or not np.all((v == 0) | (v == 1)):
                raise ValueError("script vectors must be flat 0/1 sequences")
        self._pos = 0

    def take(self, m: int) -> np.ndarray:
        if self._pos >= len(self._script):
            raise ScriptExhausted(
                f"script exhausted after {self._pos} vectors (need one of length {m})"
            )
        v = self._script[self._pos]
        if len(v) != m:
            raise ScriptLengthMismatch(
                f"script vector {self._pos} has length {len(v)}, split needs {m}"
            )
        self._pos += 1
        return v


def next_bits(source, m: int) -> np.ndarray:
    """Draw the next ``m`` coin bits (0 = tail, 1 = head) from a source."""
    return source.take(m)
