"""Trial execution: scripted/traced reference runs and batched Monte Carlo.

``run_trial`` is the single-trial reference path. It consumes coins through
a :class:`~splitree.model.SeededSource` or
:class:`~splitree.model.ScriptedSource`, one vector per split in the exact
recursion order of the underlying algorithms, and can record the full split
tree. ``estimate`` runs batches through the compiled kernels; both paths
draw coins in the same order, so a seeded reference trial reproduces the
kernel outcome bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Optional

import numpy as np

from . import kernels
from .model import (
    DEFAULT_DEPTH_CAP,
    DepthCapExceeded,
    TraceNode,
    TreeTrace,
    TrialOutcome,
    Variant,
    next_bits,
    trial_stream,
)

__all__ = [
    "SimulationSummary",
    "run_trial",
    "estimate",
    "estimate_joint_election",
    "paired_conflict_maxfind",
    "CHUNK_TRIALS",
]

# Trials are simulated in chunks; chunk c draws from the Philox substream
# with counter c * 2**128, so chunk results are independent of execution
# order and of how many chunks run.
CHUNK_TRIALS = 1 << 14


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregate of independent seeded trials.

    ``mean``/``sample_variance`` describe the main statistic (the height,
    for joint election runs). Joint runs add the size moments and the
    height/size sample covariance.
    """

    variant: Variant
    n: int
    trials: int
    mean: float
    sample_variance: float
    std_error: float
    covariance: Optional[float] = None
    covariance_std_error: Optional[float] = None
    size_mean: Optional[float] = None
    size_variance: Optional[float] = None


# ---------------------------------------------------------------------------
# single-trial reference path
# ---------------------------------------------------------------------------

class _Tracer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.nodes = []

    def add(self, parent: Optional[int], items) -> int:
        if not self.enabled:
            return -1
        nid = len(self.nodes)
        self.nodes.append(TraceNode(nid, parent, tuple(items), nid + 1))
        return nid

    def build(self) -> Optional[TreeTrace]:
        return TreeTrace(tuple(self.nodes)) if self.enabled else None


def _split(items, bits):
    tails = tuple(x for x, b in zip(items, bits) if b == 0)
    heads = tuple(x for x, b in zip(items, bits) if b == 1)
    return tails, heads


def _run_conflict(n, source, tracer, depth_cap):
    # DFS, tails subtree first; every vertex (empty ones included) counts
    root = tuple(range(1, n + 1))
    stack = [(None, root)]
    count = 0
    while stack:
        if len(stack) > depth_cap:
            raise DepthCapExceeded("conflict recursion exceeded depth cap")
        parent, items = stack.pop()
        nid = tracer.add(parent, items)
        count += 1
        if len(items) <= 1:
            continue
        bits = next_bits(source, len(items))
        tails, heads = _split(items, bits)
        stack.append((nid, heads))
        stack.append((nid, tails))
    return count


def _run_election(n, source, tracer, stop, measure, depth_cap):
    # single explored path; nonempty siblings are recorded as leaves
    cur = tuple(range(1, n + 1))
    nid = tracer.add(None, cur)
    height = 0
    size = 1
    while len(cur) > stop:
        if height > depth_cap:
            raise DepthCapExceeded("election exceeded depth cap")
        bits = next_bits(source, len(cur))
        tails, heads = _split(cur, bits)
        height += 1
        size += (len(tails) > 0) + (len(heads) > 0)
        tid = tracer.add(nid, tails) if tails else None
        hid = tracer.add(nid, heads) if heads else None
        if tails:
            cur, nid = tails, tid
        else:
            cur, nid = heads, hid
    return height if measure == "height" else size


def _run_coin(n, source, tracer, depth_cap):
    # tails keep tossing; heads leave (recorded as sibling leaves)
    cur = tuple(range(1, n + 1))
    nid = tracer.add(None, cur)
    rounds = 0
    while len(cur) > 0:
        if rounds > depth_cap:
            raise DepthCapExceeded("coin tossing exceeded depth cap")
        bits = next_bits(source, len(cur))
        tails, heads = _split(cur, bits)
        rounds += 1
        tid = tracer.add(nid, tails)
        if heads:
            tracer.add(nid, heads)
        cur, nid = tails, tid
    return rounds


def _run_maxfind(n, source, tracer, revised, depth_cap):
    # heads groups deferred, pruned by the running maximum when resumed
    cur = tuple(range(1, n + 1))
    nid = tracer.add(None, cur)
    stack = []          # (parent id, deferred heads, tails_nonempty)
    r = 0
    count = 1
    while True:
        if len(stack) > depth_cap:
            raise DepthCapExceeded("max-finding recursion exceeded depth cap")
        if len(cur) >= 2:
            bits = next_bits(source, len(cur))
            tails, heads = _split(cur, bits)
            stack.append((nid, heads, len(tails) >= 1))
            count += 1
            cur = tails
            nid = tracer.add(nid, tails)
            continue
        if len(cur) == 1 and cur[0] > r:
            r = cur[0]
        if not stack:
            break
        parent, heads, tails_nonempty = stack.pop()
        cur = tuple(v for v in heads if v > r)
        # revised rule: the pruned child shares the empty tails child's
        # label, so it adds no vertex; the trace keeps the structure
        if not revised or tails_nonempty:
            count += 1
        nid = tracer.add(parent, cur)
    return count


def _run_sort(n, source, depth_cap):
    # contiguous value ranges; election leader is the pivot
    stack = [(1, n)]
    k = 0
    while stack:
        if len(stack) > depth_cap:
            raise DepthCapExceeded("sort recursion exceeded depth cap")
        lo, hi = stack.pop()
        m = hi - lo + 1
        if m <= 1:
            k += 1
            continue
        cur = tuple(range(lo, hi + 1))
        height = 0
        while len(cur) > 1:
            if height > depth_cap:
                raise DepthCapExceeded("sort election exceeded depth cap")
            bits = next_bits(source, len(cur))
            tails, _ = _split(cur, bits)
            height += 1
            if tails:
                cur = tails
        pivot = cur[0]
        k += 1 + height
        stack.append((pivot + 1, hi))
        stack.append((lo, pivot - 1))
    return k


def run_trial(
    variant: Variant,
    n: int,
    source,
    keep_trace: bool = False,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> TrialOutcome:
    """Run one trial against a coin source; optionally record the tree.

    Scripted sources must supply one vector per split, in depth-first
    order (tails subtree before heads subtree). Traces are supported for
    every variant except Sort, whose cost aggregates many nested trees.
    """
    if n < 1:
        raise ValueError("n must be positive")
    tracer = _Tracer(keep_trace)
    joint = None
    if variant is Variant.CONFLICT:
        stat = _run_conflict(n, source, tracer, depth_cap)
    elif variant in (Variant.ELECTION_HEIGHT, Variant.DRAW_HEIGHT,
                     Variant.ELECTION_SIZE, Variant.DRAW_SIZE):
        stop = 2 if variant in (Variant.DRAW_HEIGHT, Variant.DRAW_SIZE) else 1
        measure = "height" if variant in (Variant.ELECTION_HEIGHT, Variant.DRAW_HEIGHT) else "size"
        stat = _run_election(n, source, tracer, stop, measure, depth_cap)
    elif variant is Variant.COIN_TOSS:
        stat = _run_coin(n, source, tracer, depth_cap)
    elif variant in (Variant.MAX_FIND, Variant.MAX_FIND_REVISED):
        stat = _run_maxfind(n, source, tracer, variant is Variant.MAX_FIND_REVISED, depth_cap)
    elif variant is Variant.SORT:
        if keep_trace:
            tracer = _Tracer(False)
        stat = _run_sort(n, source, depth_cap)
    else:  # pragma: no cover
        raise AssertionError(variant)
    return TrialOutcome(variant, n, stat, joint, tracer.build())


# ---------------------------------------------------------------------------
# batched Monte Carlo
# ---------------------------------------------------------------------------

def _sample_stats(values: np.ndarray):
    """Mean / sample variance from exact integer sums."""
    t = len(values)
    s1 = int(values.sum())
    s2 = int((values * values).sum())
    mean = Fraction(s1, t)
    if t > 1:
        var = (Fraction(s2) - Fraction(s1 * s1, t)) / (t - 1)
    else:
        var = Fraction(0)
    return float(mean), float(var)


def _run_chunks(kernel_call, trials: int, seed: int):
    outs = []
    done = 0
    chunk_index = 0
    while done < trials:
        batch = min(CHUNK_TRIALS, trials - done)
        rng = trial_stream(seed, chunk_index)
        outs.append(kernel_call(rng, batch))
        done += batch
        chunk_index += 1
    return outs


def simulate_statistics(
    variant: Variant,
    n: int,
    trials: int,
    seed: int,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> np.ndarray:
    """Raw per-trial statistics from the batched kernels (int64 array)."""
    if n < 1:
        raise ValueError("n must be positive")
    if trials < 1:
        raise ValueError("trials must be positive")
    if variant is Variant.CONFLICT:
        call = lambda rng, b: kernels.conflict_trials(rng, n, b, depth_cap)
    elif variant is Variant.ELECTION_HEIGHT:
        call = lambda rng, b: kernels.path_trials(rng, n, b, 1, depth_cap)[0]
    elif variant is Variant.ELECTION_SIZE:
        call = lambda rng, b: kernels.path_trials(rng, n, b, 1, depth_cap)[1]
    elif variant is Variant.DRAW_HEIGHT:
        call = lambda rng, b: kernels.path_trials(rng, n, b, 2, depth_cap)[0]
    elif variant is Variant.DRAW_SIZE:
        call = lambda rng, b: kernels.path_trials(rng, n, b, 2, depth_cap)[1]
    elif variant is Variant.COIN_TOSS:
        call = lambda rng, b: kernels.coin_trials(rng, n, b, depth_cap)
    elif variant is Variant.MAX_FIND:
        call = lambda rng, b: kernels.maxfind_trials(rng, n, b, False, depth_cap)
    elif variant is Variant.MAX_FIND_REVISED:
        call = lambda rng, b: kernels.maxfind_trials(rng, n, b, True, depth_cap)
    elif variant is Variant.SORT:
        call = lambda rng, b: kernels.sort_trials(rng, n, b, depth_cap)
    else:  # pragma: no cover
        raise AssertionError(variant)
    return np.concatenate(_run_chunks(call, trials, seed))


def estimate(
    variant: Variant,
    n: int,
    trials: int,
    seed: int,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> SimulationSummary:
    """Monte Carlo summary over independent seeded trials.

    Deterministic for fixed (variant, n, trials, seed): trials are laid
    out in fixed-size chunks, each on its own counter-based substream.
    """
    if trials < 2:
        raise ValueError("trials must be at least 2")
    values = simulate_statistics(variant, n, trials, seed, depth_cap)
    mean, var = _sample_stats(values)
    return SimulationSummary(
        variant=variant,
        n=n,
        trials=trials,
        mean=mean,
        sample_variance=var,
        std_error=sqrt(var / trials),
    )


def estimate_joint_election(
    n: int, trials: int, seed: int
) -> SimulationSummary:
    """Height and size measured on the same election tree, with covariance.

    The cross-covariance of the two election statistics has no known
    closed form, so it is estimated empirically here. The covariance
    standard error is the usual large-sample delta-method estimate
    sqrt((m22 - cov^2) / trials).
    """
    if n < 2:
        raise ValueError("joint election needs n >= 2")
    if trials < 2:
        raise ValueError("trials must be at least 2")
    hs = []
    ys = []
    for pair in _run_chunks(lambda rng, b: kernels.path_trials(rng, n, b, 1, DEFAULT_DEPTH_CAP), trials, seed):
        hs.append(pair[0])
        ys.append(pair[1])
    h = np.concatenate(hs)
    y = np.concatenate(ys)
    mean_h, var_h = _sample_stats(h)
    mean_y, var_y = _sample_stats(y)
    t = trials
    dh = h - h.mean()
    dy = y - y.mean()
    cov = float(np.dot(dh, dy) / (t - 1))
    m22 = float(np.mean(dh * dh * dy * dy))
    cov_se = sqrt(max(m22 - cov * cov, 0.0) / t)
    return SimulationSummary(
        variant=Variant.ELECTION_HEIGHT,
        n=n,
        trials=trials,
        mean=mean_h,
        sample_variance=var_h,
        std_error=sqrt(var_h / t),
        covariance=cov,
        covariance_std_error=cov_se,
        size_mean=mean_y,
        size_variance=var_y,
    )


def paired_conflict_maxfind(
    n: int, trials: int, seed: int, depth_cap: int = DEFAULT_DEPTH_CAP
):
    """Conflict and max-finding vertex counts coupled on shared item coins.

    Returns (conflict, maxfind) int64 arrays; pruning can only remove
    vertices, so maxfind <= conflict holds per trial.
    """
    outs_c = []
    outs_m = []
    for oc, om in _run_chunks(
        lambda rng, b: kernels.paired_conflict_maxfind(rng, n, b, depth_cap), trials, seed
    ):
        outs_c.append(oc)
        outs_m.append(om)
    return np.concatenate(outs_c), np.concatenate(outs_m)
