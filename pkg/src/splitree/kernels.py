"""Hot numeric kernels: batched trial simulation and float64 moment recurrences.

Kernels are written against numpy arrays and a ``numpy.random.Generator``
(Philox substreams, so results are order-independent). By default they are
compiled with numba's ``@njit``; setting the environment variable
``SPLITREE_NO_NUMBA=1`` (or a missing numba install) selects the pure-numpy
interpreted path instead. Both paths draw from the Generator in identical
order, so their outputs are bitwise identical — see ``benchmarks/bench.py``
for the speed comparison.

Coin convention everywhere: one uniform draw per item per split,
head iff u < 0.5; tails keep splitting first.
"""

from __future__ import annotations

import os

import numpy as np

from .model import DepthCapExceeded

__all__ = [
    "JIT_ENABLED",
    "conflict_trials",
    "path_trials",
    "coin_trials",
    "maxfind_trials",
    "sort_trials",
    "paired_conflict_maxfind",
    "mean_table_f64",
    "MEAN_CODES",
]

_flag = os.environ.get("SPLITREE_NO_NUMBA", "")
JIT_ENABLED = _flag in ("", "0")
if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:          # pragma: no cover - numba is a hard dep
        JIT_ENABLED = False

if JIT_ENABLED:
    def _jit(fn):
        return njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn

_DEPTH_MSG = "split tree exceeded the depth safety cap"


@_jit
def _grow(buf):
    out = np.empty(2 * buf.shape[0], dtype=np.int64)
    out[: buf.shape[0]] = buf
    return out


@_jit
def conflict_trials(rng, n, trials, depth_cap):
    """Vertex counts (empty vertices included) of conflict-resolution trees.

    Only group sizes matter for the count, so the work stack holds the
    deferred heads-group sizes along the current path.
    """
    out = np.empty(trials, dtype=np.int64)
    stack = np.empty(256, dtype=np.int64)
    for t in range(trials):
        sp = 0
        count = 1
        m = n
        while True:
            if m <= 1:
                if sp == 0:
                    break
                sp -= 1
                m = stack[sp]
                continue
            tails = 0
            for _ in range(m):
                if rng.random() >= 0.5:
                    tails += 1
            count += 2
            if sp >= depth_cap:
                raise DepthCapExceeded(_DEPTH_MSG)
            if sp == stack.shape[0]:
                stack = _grow(stack)
            stack[sp] = m - tails
            sp += 1
            m = tails
        out[t] = count
    return out


@_jit
def path_trials(rng, n, trials, stop, depth_cap):
    """Heights and sizes of leader-election paths, measured on the same tree.

    ``stop=1`` is the plain election, ``stop=2`` allows a two-person draw.
    Height counts every split round (an all-heads round repeats the group);
    size counts the root plus each nonempty child.
    """
    out_h = np.empty(trials, dtype=np.int64)
    out_y = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        h = 0
        y = 1
        m = n
        while m > stop:
            if h >= depth_cap:
                raise DepthCapExceeded(_DEPTH_MSG)
            tails = 0
            for _ in range(m):
                if rng.random() >= 0.5:
                    tails += 1
            heads = m - tails
            h += 1
            if tails > 0:
                y += 1
            if heads > 0:
                y += 1
            if tails > 0:
                m = tails
            # all heads: repeat the round with the same group
        out_h[t] = h
        out_y[t] = y
    return out_h, out_y


@_jit
def coin_trials(rng, n, trials, depth_cap):
    """Rounds until everyone has tossed heads (tails keep tossing)."""
    out = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        k = 0
        m = n
        while m > 0:
            if k >= depth_cap:
                raise DepthCapExceeded(_DEPTH_MSG)
            tails = 0
            for _ in range(m):
                if rng.random() >= 0.5:
                    tails += 1
            m = tails
            k += 1
        out[t] = k
    return out


@_jit
def maxfind_trials(rng, n, trials, revised, depth_cap):
    """Vertex counts of maximum-finding trees pruned by the running maximum.

    Heads groups are deferred on a segment stack and filtered by the
    running maximum r when resumed. ``revised`` drops the extra vertex for
    the pruned child whenever the tails child was empty.
    """
    out = np.empty(trials, dtype=np.int64)
    cur = np.empty(n, dtype=np.int64)
    buf = np.empty(4 * n + 64, dtype=np.int64)
    seg_start = np.empty(256, dtype=np.int64)
    seg_flag = np.empty(256, dtype=np.int64)
    for t in range(trials):
        for i in range(n):
            cur[i] = i + 1
        mc = n
        bend = 0
        sp = 0
        r = 0
        count = 1
        while True:
            if mc >= 2:
                while bend + mc > buf.shape[0]:
                    buf = _grow(buf)
                tails = 0
                heads = 0
                for i in range(mc):
                    v = cur[i]
                    if rng.random() < 0.5:
                        buf[bend + heads] = v
                        heads += 1
                    else:
                        cur[tails] = v
                        tails += 1
                if sp >= depth_cap:
                    raise DepthCapExceeded(_DEPTH_MSG)
                if sp == seg_start.shape[0]:
                    seg_start = _grow(seg_start)
                    seg_flag = _grow(seg_flag)
                seg_start[sp] = bend
                seg_flag[sp] = 1 if tails >= 1 else 0
                sp += 1
                bend += heads
                count += 1          # tails child vertex
                mc = tails
                continue
            if mc == 1 and cur[0] > r:
                r = cur[0]
            if sp == 0:
                break
            sp -= 1
            s = seg_start[sp]
            if not revised or seg_flag[sp] == 1:
                count += 1          # pruned heads child vertex
            mc = 0
            for idx in range(s, bend):
                v = buf[idx]
                if v > r:
                    cur[mc] = v
                    mc += 1
            bend = s
        out[t] = count
    return out


@_jit
def sort_trials(rng, n, trials, depth_cap):
    """Total sorting cost: one per sublist plus each election's height.

    Sublists of the pivot sort are always contiguous value ranges, so the
    work stack holds (lo, hi) bounds; elections run on a scratch copy.
    """
    out = np.empty(trials, dtype=np.int64)
    scratch = np.empty(n, dtype=np.int64)
    lo_stack = np.empty(2 * n + 8, dtype=np.int64)
    hi_stack = np.empty(2 * n + 8, dtype=np.int64)
    for t in range(trials):
        lo_stack[0] = 1
        hi_stack[0] = n
        sp = 1
        k = 0
        while sp > 0:
            sp -= 1
            lo = lo_stack[sp]
            hi = hi_stack[sp]
            m = hi - lo + 1
            if m <= 1:
                k += 1
                continue
            for i in range(m):
                scratch[i] = lo + i
            em = m
            height = 0
            while em > 1:
                if height >= depth_cap:
                    raise DepthCapExceeded(_DEPTH_MSG)
                tails = 0
                for i in range(em):
                    v = scratch[i]
                    if rng.random() >= 0.5:
                        scratch[tails] = v
                        tails += 1
                height += 1
                if tails > 0:
                    em = tails
                # all heads: same group goes again; scratch prefix intact
            s = scratch[0]
            k += 1 + height
            if sp + 2 > depth_cap:
                raise DepthCapExceeded(_DEPTH_MSG)
            if sp + 2 > lo_stack.shape[0]:
                lo_stack = _grow(lo_stack)
                hi_stack = _grow(hi_stack)
            lo_stack[sp] = s + 1
            hi_stack[sp] = hi
            sp += 1
            lo_stack[sp] = lo
            hi_stack[sp] = s - 1
            sp += 1
        out[t] = k
    return out


@_jit
def paired_conflict_maxfind(rng, n, trials, depth_cap):
    """Conflict and max-finding vertex counts coupled on shared coins.

    Each item i gets one coin per depth level, drawn once per trial; both
    traversals read bits[i, depth], so the max-finding tree is a pruned
    subtree of the conflict tree and its count can never exceed it.
    """
    out_c = np.empty(trials, dtype=np.int64)
    out_m = np.empty(trials, dtype=np.int64)
    depth0 = 64
    bits = np.empty((n, depth0), dtype=np.uint8)
    cur = np.empty(n, dtype=np.int64)
    buf = np.empty(4 * n + 64, dtype=np.int64)
    seg_start = np.empty(256, dtype=np.int64)
    seg_depth = np.empty(256, dtype=np.int64)
    for t in range(trials):
        filled = 0

        # conflict pass
        for i in range(n):
            cur[i] = i + 1
        mc = n
        d = 0
        bend = 0
        sp = 0
        count = 1
        while True:
            if mc <= 1:
                if sp == 0:
                    break
                sp -= 1
                s = seg_start[sp]
                d = seg_depth[sp]
                mc = 0
                for idx in range(s, bend):
                    cur[mc] = buf[idx]
                    mc += 1
                bend = s
                continue
            while filled <= d:
                if filled >= depth_cap:
                    raise DepthCapExceeded(_DEPTH_MSG)
                if filled == bits.shape[1]:
                    nb = np.empty((n, 2 * bits.shape[1]), dtype=np.uint8)
                    nb[:, : bits.shape[1]] = bits
                    bits = nb
                for i in range(n):
                    bits[i, filled] = 1 if rng.random() < 0.5 else 0
                filled += 1
            while bend + mc > buf.shape[0]:
                buf = _grow(buf)
            tails = 0
            heads = 0
            for i in range(mc):
                v = cur[i]
                if bits[v - 1, d] == 1:
                    buf[bend + heads] = v
                    heads += 1
                else:
                    cur[tails] = v
                    tails += 1
            if sp >= depth_cap:
                raise DepthCapExceeded(_DEPTH_MSG)
            if sp == seg_start.shape[0]:
                seg_start = _grow(seg_start)
                seg_depth = _grow(seg_depth)
            seg_start[sp] = bend
            seg_depth[sp] = d + 1
            sp += 1
            bend += heads
            count += 2
            mc = tails
            d += 1
        out_c[t] = count

        # max-finding pass on the same bits
        for i in range(n):
            cur[i] = i + 1
        mc = n
        d = 0
        bend = 0
        sp = 0
        r = 0
        count = 1
        while True:
            if mc >= 2:
                while filled <= d:
                    if filled >= depth_cap:
                        raise DepthCapExceeded(_DEPTH_MSG)
                    if filled == bits.shape[1]:
                        nb = np.empty((n, 2 * bits.shape[1]), dtype=np.uint8)
                        nb[:, : bits.shape[1]] = bits
                        bits = nb
                    for i in range(n):
                        bits[i, filled] = 1 if rng.random() < 0.5 else 0
                    filled += 1
                while bend + mc > buf.shape[0]:
                    buf = _grow(buf)
                tails = 0
                heads = 0
                for i in range(mc):
                    v = cur[i]
                    if bits[v - 1, d] == 1:
                        buf[bend + heads] = v
                        heads += 1
                    else:
                        cur[tails] = v
                        tails += 1
                if sp >= depth_cap:
                    raise DepthCapExceeded(_DEPTH_MSG)
                if sp == seg_start.shape[0]:
                    seg_start = _grow(seg_start)
                    seg_depth = _grow(seg_depth)
                seg_start[sp] = bend
                seg_depth[sp] = d + 1
                sp += 1
                bend += heads
                count += 2
                mc = tails
                d += 1
                continue
            if mc == 1 and cur[0] > r:
                r = cur[0]
            if sp == 0:
                break
            sp -= 1
            s = seg_start[sp]
            d = seg_depth[sp]
            mc = 0
            for idx in range(s, bend):
                v = buf[idx]
                if v > r:
                    cur[mc] = v
                    mc += 1
            bend = s
        out_m[t] = count
    return out_c, out_m


# ---------------------------------------------------------------------------
# float64 recurrence path for large n
# ---------------------------------------------------------------------------

MEAN_CODES = {
    "conflict": 0,
    "height": 1,
    "size": 2,
    "draw-height": 3,
    "draw-size": 4,
    "coin": 5,
    "max": 6,
    "sort": 7,
}


@_jit
def mean_table_f64(code, n_max):
    """Mean table g_0..g_n_max in float64 (ξ for the sort code).

    The binomial weight row C(n, k) 2^-n is maintained by the averaging
    update w'[k] = (w[k-1] + w[k]) / 2, which is stable (all weights
    positive) and O(n) per step. Validated against the exact rational
    tables in the test suite.
    """
    g = np.zeros(n_max + 1)
    aux = np.zeros(n_max + 1)        # election-height means for the sort code
    w = np.zeros(n_max + 2)
    w[0] = 1.0
    halfpow = np.zeros(n_max + 1)
    p = 0.5
    for i in range(n_max + 1):
        halfpow[i] = p
        p *= 0.5

    if code == 0 or code == 6:       # conflict / max-finding
        g[0] = 1.0
        if n_max >= 1:
            g[1] = 1.0
    elif code == 2:                  # election size
        if n_max >= 1:
            g[1] = 1.0
    elif code == 4:                  # draw size
        if n_max >= 1:
            g[1] = 1.0
        if n_max >= 2:
            g[2] = 1.0
    elif code == 7:                  # sort mean
        g[0] = 1.0
        if n_max >= 1:
            g[1] = 1.0
    base = 2
    if code == 3 or code == 4:
        base = 3
    elif code == 5:
        base = 1

    xi_sum = g[0] + (g[1] if n_max >= 1 else 0.0)

    for n in range(1, n_max + 1):
        # advance the weight row to C(n, k) / 2^n; the slice expression is
        # evaluated from the previous row before assignment
        w[n] = w[n - 1] * 0.5
        w[1:n] = (w[0 : n - 1] + w[1:n]) * 0.5
        w[0] *= 0.5
        if n < base:
            continue
        if code == 5:
            denom = 1.0 - 2.0 ** (-n)
        else:
            denom = 1.0 - 2.0 ** (1 - n)

        if code == 7:
            s = np.dot(w[:n], aux[:n])
            aux[n] = (1.0 + s) / denom
            g[n] = 1.0 + aux[n] + 2.0 * xi_sum / n
            xi_sum += g[n]
            continue

        s = np.dot(w[:n], g[:n])
        if code == 0:                # conflict
            g[n] = (1.0 + 2.0 * s) / denom
        elif code == 1 or code == 3:  # height family
            g[n] = (1.0 + s) / denom
        elif code == 2 or code == 4:  # size family
            g[n] = 1.0 + (1.0 + s) / denom
        elif code == 5:              # coin toss
            g[n] = (1.0 + s) / denom
        elif code == 6:              # max-finding
            g[n] = (1.0 + s + np.dot(halfpow[:n], g[:n])) / denom
    return g
