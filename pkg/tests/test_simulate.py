import numpy as np
import pytest

from splitree.exact import moment_table, sort_moments
from splitree.model import (
    DepthCapExceeded,
    ScriptedSource,
    SeededSource,
    Variant,
)
from splitree.simulate import (
    CHUNK_TRIALS,
    estimate,
    estimate_joint_election,
    paired_conflict_maxfind,
    run_trial,
    simulate_statistics,
)

# Coin scripts recovered from the worked n=5 examples; the final level is
# completed with singleton splits, which cannot change the statistic.
CONFLICT_TREE_SCRIPT = [
    (0, 1, 0, 1, 1),   # {1..5} -> {1,3} | {2,4,5}
    (1, 1),            # {1,3}  -> {} | {1,3}
    (0, 1),            # {1,3}  -> {1} | {3}
    (0, 0, 0),         # {2,4,5} -> {2,4,5} | {}
    (0, 0, 1),         # {2,4,5} -> {2,4} | {5}
    (0, 1),            # {2,4}  -> {2} | {4}
]
ELECTION_TREE_SCRIPT = [
    (0, 0, 0, 1, 0),   # {1..5} -> {1,2,3,5} | {4}
    (1, 1, 1, 1),      # {1,2,3,5} -> {} | all heads, repeat
    (1, 0, 0, 0),      # {1,2,3,5} -> {2,3,5} | {1}
    (0, 0, 0),         # {2,3,5} -> {2,3,5} | {}
    (0, 0, 1),         # {2,3,5} -> {2,3} | {5}
    (0, 1),            # {2,3} -> {2} | {3}
]


def _check_partitions(trace):
    for node in trace.nodes:
        kids = trace.children_of(node.id)
        if kids:
            merged = sorted(x for k in kids for x in k.items)
            assert merged == sorted(node.items), node


def test_replay_conflict_tree():
    out = run_trial(Variant.CONFLICT, 5, ScriptedSource(CONFLICT_TREE_SCRIPT),
                    keep_trace=True)
    assert out.statistic == 13
    assert len(out.trace.nodes) == 13
    assert out.trace.root().items == (1, 2, 3, 4, 5)
    _check_partitions(out.trace)
    for node in out.trace.nodes:   # strongly binary: 0 or 2 children
        assert len(out.trace.children_of(node.id)) in (0, 2)


def test_replay_election_height_and_size():
    oh = run_trial(Variant.ELECTION_HEIGHT, 5, ScriptedSource(ELECTION_TREE_SCRIPT),
                   keep_trace=True)
    assert oh.statistic == 6
    oy = run_trial(Variant.ELECTION_SIZE, 5, ScriptedSource(ELECTION_TREE_SCRIPT),
                   keep_trace=True)
    assert oy.statistic == 11
    for trace in (oh.trace, oy.trace):
        _check_partitions(trace)
        assert len(trace.nodes) == 11            # nonempty vertices only
        for node in trace.nodes:                 # weakly binary
            assert len(trace.children_of(node.id)) <= 2
            assert len(node.items) > 0


def test_replay_is_deterministic():
    a = run_trial(Variant.CONFLICT, 5, ScriptedSource(CONFLICT_TREE_SCRIPT), keep_trace=True)
    b = run_trial(Variant.CONFLICT, 5, ScriptedSource(CONFLICT_TREE_SCRIPT), keep_trace=True)
    assert a.trace == b.trace and a.statistic == b.statistic


def test_script_errors_propagate_from_trials():
    from splitree.model import ScriptExhausted, ScriptLengthMismatch

    with pytest.raises(ScriptExhausted):
        run_trial(Variant.CONFLICT, 5, ScriptedSource(CONFLICT_TREE_SCRIPT[:2]))
    with pytest.raises(ScriptLengthMismatch):
        run_trial(Variant.CONFLICT, 5, ScriptedSource([(0, 1)]))


def test_single_vertex_trials():
    out = run_trial(Variant.CONFLICT, 1, SeededSource(9))
    assert out.statistic == 1
    assert run_trial(Variant.ELECTION_HEIGHT, 1, SeededSource(9)).statistic == 0
    assert run_trial(Variant.ELECTION_SIZE, 1, SeededSource(9)).statistic == 1
    assert run_trial(Variant.DRAW_HEIGHT, 2, SeededSource(9)).statistic == 0
    assert run_trial(Variant.SORT, 1, SeededSource(9)).statistic == 1


@pytest.mark.parametrize("n,trials", [(1, 60), (2, 120), (3, 120), (5, 150), (8, 80), (12, 50)])
def test_kernel_matches_reference_trials(n, trials):
    """Batched kernels and the traced reference consume the same stream,
    so their per-trial statistics must agree bit for bit."""
    for variant in Variant:
        kernel_out = simulate_statistics(variant, n, trials, seed=77 + n)
        src = SeededSource(77 + n, 0)
        ref = np.array([run_trial(variant, n, src).statistic for _ in range(trials)])
        assert np.array_equal(kernel_out, ref), (variant, n)


def test_estimate_is_deterministic_and_chunk_stable():
    a = estimate(Variant.SORT, 6, 3000, seed=5)
    b = estimate(Variant.SORT, 6, 3000, seed=5)
    assert a == b
    big = simulate_statistics(Variant.CONFLICT, 4, CHUNK_TRIALS + 500, seed=8)
    small = simulate_statistics(Variant.CONFLICT, 4, CHUNK_TRIALS, seed=8)
    assert np.array_equal(big[:CHUNK_TRIALS], small)


def test_estimate_argument_guards():
    with pytest.raises(ValueError):
        estimate(Variant.CONFLICT, 3, 1, seed=0)
    with pytest.raises(ValueError):
        estimate(Variant.CONFLICT, 0, 100, seed=0)
    with pytest.raises(DepthCapExceeded):
        estimate(Variant.CONFLICT, 64, 100, seed=0, depth_cap=3)


@pytest.mark.parametrize("variant", [v for v in Variant if v.has_exact_moments])
def test_estimate_agrees_with_exact_means(variant):
    if variant is Variant.SORT:
        table = {s.n: s.xi for s in sort_moments(3)}
    else:
        table = {r.n: r.g for r in moment_table(variant, 3)}
    for n in (2, 3):
        s = estimate(variant, n, 20_000, seed=101 + n)
        if s.std_error == 0:       # degenerate: the statistic is constant
            assert s.mean == float(table[n])
            continue
        z = (s.mean - float(table[n])) / s.std_error
        assert abs(z) < 5, (variant, n, z)


def test_revised_maxfind_published_mean():
    s = estimate(Variant.MAX_FIND_REVISED, 2, 100_000, seed=13)
    assert abs(s.mean - 4.5) < 4 * s.std_error


def test_estimate_large_n_tracks_recurrence_path():
    """Kernels at n in the thousands, gated against the float64 recurrence
    means (themselves validated against the exact rationals)."""
    from splitree.asymptotics import mean_large_n

    cases = [
        (Variant.CONFLICT, 4096, 400),
        (Variant.ELECTION_SIZE, 2048, 3000),
        (Variant.MAX_FIND, 1024, 2000),
        (Variant.SORT, 512, 1500),
    ]
    for variant, n, trials in cases:
        target = mean_large_n(variant, n)[n]
        s = estimate(variant, n, trials, seed=777)
        z = (s.mean - target) / s.std_error
        assert abs(z) < 5, (variant, n, z)


def test_estimate_within_five_se_in_most_batches():
    """Coverage: >= 99 of 100 independent seed batches within 5 se."""
    targets = {}
    for variant in Variant:
        if variant is Variant.MAX_FIND_REVISED:
            continue
        if variant is Variant.SORT:
            targets[variant] = {s.n: float(s.xi) for s in sort_moments(3)}
        else:
            targets[variant] = {r.n: float(r.g) for r in moment_table(variant, 3)}
    for variant, tgt in targets.items():
        for n in (2, 3):
            hits = 0
            for batch in range(100):
                s = estimate(variant, n, 1000, seed=7000 + batch)
                if s.std_error == 0:
                    hits += 1 if s.mean == tgt[n] else 0
                    continue
                hits += abs(s.mean - tgt[n]) <= 5 * s.std_error
            assert hits >= 99, (variant, n, hits)


def test_conflict_statistic_is_odd():
    for n in range(2, 21):
        stats = simulate_statistics(Variant.CONFLICT, n, 5500, seed=300 + n)
        assert (stats % 2 == 1).all(), n


def test_election_statistic_lower_bounds():
    # a proper election on n >= 2 makes at least one split: height >= 1,
    # and the size tree holds the root plus at least two vertices
    for n in (2, 3, 5, 8):
        h = simulate_statistics(Variant.ELECTION_HEIGHT, n, 3000, seed=60 + n)
        y = simulate_statistics(Variant.ELECTION_SIZE, n, 3000, seed=60 + n)
        assert (h >= 1).all()
        assert (y >= 3).all()


def test_maxfind_never_exceeds_conflict_under_shared_coins():
    for n in range(2, 9):
        c, m = paired_conflict_maxfind(n, 2000, seed=40 + n)
        assert (m <= c).all(), n
        assert (c % 2 == 1).all()
        assert (m % 2 == 1).all()


def test_joint_election_n2_coupling_and_covariance():
    """At n = 2 the tree is a single path: Y = H + 2 exactly, and both are
    geometric(1/2), so cov(H, Y) = var(G) = 2. The oracle below enumerates
    the round count to depth 60 (mass 1 - 2^-60) instead of trusting the
    estimator under test."""
    ev_h = sum(g * 0.5**g for g in range(1, 61))
    ev_hy = sum(g * (g + 2) * 0.5**g for g in range(1, 61))
    oracle_cov = ev_hy - ev_h * (ev_h + 2)
    assert abs(oracle_cov - 2.0) < 1e-9

    s = estimate_joint_election(2, 150_000, seed=21)
    assert s.size_mean == pytest.approx(s.mean + 2.0)
    assert s.covariance > 0
    assert abs(s.covariance - oracle_cov) < 6 * s.covariance_std_error
    assert abs(s.mean - 2.0) < 4 * s.std_error


def test_joint_election_reports_wellformed_summary():
    s = estimate_joint_election(5, 20_000, seed=3)
    assert np.isfinite(s.covariance)
    assert s.covariance_std_error > 0
    assert s.size_mean > s.mean
    with pytest.raises(ValueError):
        estimate_joint_election(1, 100, seed=0)


class _Recorder:
    """Pass-through coin source that logs every drawn vector."""

    def __init__(self, inner):
        self.inner = inner
        self.log = []

    def take(self, m):
        v = self.inner.take(m)
        self.log.append(tuple(v.tolist()))
        return v


def test_election_size_vs_conflict_same_script():
    """The election explores a prefix of the conflict tree (both descend
    tails-first), so on shared coins the conflict count dominates the
    election size plus the empty vertices along the explored path."""
    for n in range(2, 9):
        for seed in range(12):
            rec = _Recorder(SeededSource(seed * 31 + n))
            c = run_trial(Variant.CONFLICT, n, rec).statistic
            y = run_trial(Variant.ELECTION_SIZE, n, ScriptedSource(rec.log)).statistic
            h = run_trial(Variant.ELECTION_HEIGHT, n, ScriptedSource(rec.log)).statistic
            empties_on_path = (1 + 2 * h) - y
            assert empties_on_path >= 0
            assert y <= c - empties_on_path
