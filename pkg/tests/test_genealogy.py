"""Ancestry tracing and empirical coalescence statistics."""

import math

import numpy as np
import pytest
from scipy import stats

from selcoal.coaltheory import xi_signature_distribution
from selcoal.fitnesswf import ConstantY, ExponentialY, InverseExponential, ParetoTail
from selcoal.frontprop import FrontModel, GumbelNoise
from selcoal.genealogy import (
    AncestryHistory,
    estimate_cN,
    first_merger_signatures,
    merger_statistics,
    one_generation_signatures,
    pairwise_coalescence_time,
    simulate_history,
    trace_partition_path,
)
from selcoal.partition import MergerSignature, make_partition, singleton_partition
from selcoal.seeding import stream


def history(rows):
    rows = np.asarray(rows, dtype=np.int32)
    return AncestryHistory(n_individuals=rows.shape[1], rows=rows)


def test_trace_star_genealogy():
    h = history([[0, 0, 0, 0]])
    path = trace_partition_path(h, [0, 1, 2, 3])
    assert path.states[0] == singleton_partition(4)
    assert path.states[1].block_count == 1


def test_trace_identity_rows():
    h = history([[0, 1, 2]] * 4)
    path = trace_partition_path(h, [0, 1, 2])
    assert all(s == singleton_partition(3) for s in path.states)


def test_trace_hand_example():
    # children (1-indexed in the narrative) [1,1,3,3] -> {{1,2},{3,4}}
    h = history([[0, 0, 2, 2]])
    path = trace_partition_path(h, [0, 1, 2, 3])
    assert path.states[1] == make_partition(4, [[1, 2], [3, 4]])


def test_trace_validation():
    h = history([[0, 0]])
    with pytest.raises(ValueError):
        trace_partition_path(h, [0, 5])
    with pytest.raises(ValueError):
        trace_partition_path(h, [0, 0])


def test_trace_multi_generation():
    rows = [[1, 1, 2, 3], [0, 0, 0, 2], [0, 1, 2, 3]]
    h = history(rows)
    path = trace_partition_path(h, [0, 1, 2, 3])
    # t=1 (last row is identity): all singletons
    assert path.states[1] == singleton_partition(4)
    # t=2 uses the middle row: ancestors 0,0,0,2 -> {1,2,3},{4}
    assert path.states[2] == make_partition(4, [[1, 2, 3], [4]])
    # block counts never increase backward
    counts = [s.block_count for s in path.states]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_pairwise_coalescence_time():
    star = history([[0, 0, 0]])
    assert pairwise_coalescence_time(star, 0, 2) == 1
    identity = history([[0, 1, 2]] * 5)
    assert pairwise_coalescence_time(identity, 0, 1) is None
    rows = [[1, 1, 2, 3], [0, 0, 3, 2], [0, 1, 2, 3]]
    h = history(rows)
    # trace by hand: lineage pairs (0,1) meet at backward time 2 (middle row)
    assert pairwise_coalescence_time(h, 0, 1) == 2
    assert pairwise_coalescence_time(h, 2, 3) is None
    with pytest.raises(ValueError):
        pairwise_coalescence_time(h, 1, 1)


def test_estimate_cN_constant_fitness():
    # classical WF: c_N = 1/N
    stats_ = estimate_cN(ConstantY(), 100, 2 * 10**4, seed=1)
    assert abs(stats_.pair_coalescence_estimate - 0.01) < 3 * stats_.standard_error
    assert abs(stats_.nu_pair_estimate - 0.01) < 3 * stats_.nu_pair_se + 1e-12


def test_estimate_cN_frozen_degenerate():
    weights = np.zeros(10)
    weights[0] = 1.0
    stats_ = estimate_cN(weights, 10, 500, seed=2)
    assert stats_.pair_coalescence_estimate == 1.0
    assert stats_.nu_pair_estimate == 1.0


def test_estimate_cN_estimators_agree():
    for model, n in ((ParetoTail(0.5), 300), (InverseExponential(), 300), (ExponentialY(), 300)):
        s = estimate_cN(model, n, 3 * 10**4, seed=3)
        gap = abs(s.pair_coalescence_estimate - s.nu_pair_estimate)
        budget = 3 * math.sqrt(s.standard_error**2 + s.nu_pair_se**2)
        assert gap <= budget + 1e-12, (model, gap, budget)


def test_estimate_cN_gumbel_front_small():
    # exact c_N for the solvable front equals the inverse-exponential value
    from selcoal.moments import pair_coalescence_quadrature

    n = 24
    target = pair_coalescence_quadrature(InverseExponential(), n)
    model = FrontModel(GumbelNoise(0.0, 1.3), beta=1.3)
    s = estimate_cN(model, n, 6000, seed=4)
    assert abs(s.pair_coalescence_estimate - target) < 4 * s.standard_error
    assert abs(s.nu_pair_estimate - target) < 4 * s.nu_pair_se


def test_estimate_cN_validation():
    with pytest.raises(ValueError):
        estimate_cN(ConstantY(), 1, 10, seed=0)


def test_merger_statistics_star_paths():
    h = history([[0, 0, 0, 0, 0]])
    paths = [trace_partition_path(h, [0, 1, 2]) for _ in range(3)]
    s = merger_statistics(paths)
    assert s.total_merger_opportunities == 3
    assert s.merge_events() == 3
    fractions = s.signature_fractions_given_merge()
    assert fractions[MergerSignature(b=3, group_sizes=(3,), s=0)] == 1.0


def test_merger_statistics_counts_no_merge_steps():
    h = history([[0, 1, 2], [0, 0, 2]])
    path = trace_partition_path(h, [0, 1, 2])
    s = merger_statistics([path])
    assert s.total_merger_opportunities == 2
    assert s.merge_events() == 1


def test_one_generation_signatures_matches_xi_limit_small():
    # ParetoTail(0.5) at moderate N: signature law close to the discrete
    # xi-coalescent prediction (chi-square against exact finite-N tolerance
    # is covered by acceptance; here a sanity window)
    n, reps = 2000, 2 * 10**4
    s = one_generation_signatures(ParetoTail(0.5), n, 3, reps, seed=5)
    dist = xi_signature_distribution(0.5, 3)
    for sizes in ((2,), (3,)):
        sig = MergerSignature(b=3, group_sizes=sizes, s=3 - sum(sizes))
        frac = s.merger_counts.get(sig, 0) / reps
        assert abs(frac - dist[sig]) < 0.02


def test_first_merger_signatures_collects_enough():
    s = first_merger_signatures(ConstantY(), 30, 3, min_events=500, seed=6)
    assert s.merge_events() >= 500
    # Kingman regime: overwhelmingly pairwise mergers
    fracs = s.signature_fractions_given_merge()
    pair = MergerSignature(b=3, group_sizes=(2,), s=1)
    assert fracs[pair] > 0.9


def test_kingman_regime_mergers_become_pairwise():
    # fraction of non-pair signatures among merge events shrinks with N
    fractions = []
    for n in (10, 100, 1000):
        s = one_generation_signatures(ConstantY(), n, 4, 2 * 10**4, seed=7)
        events = s.merge_events()
        non_pair = sum(
            c for sig, c in s.merger_counts.items() if sig.is_merger and sig.group_sizes != (2,)
        )
        fractions.append(non_pair / events)
    assert fractions[0] > fractions[1] > fractions[2]
    assert fractions[2] < 0.02


def test_simulate_history_and_trace_front():
    model = FrontModel(GumbelNoise(0.0, 1.0), beta=1.0)
    h = simulate_history(model, 30, 40, seed=8)
    assert h.rows.shape == (40, 30)
    path = trace_partition_path(h, list(range(6)))
    counts = [s.block_count for s in path.states]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    # selection-driven genealogy coalesces fast: 6 lineages in 40 generations
    assert counts[-1] == 1


def test_simulate_history_wf():
    h = simulate_history(ExponentialY(), 50, 10, seed=9)
    assert h.rows.shape == (10, 50)
    assert h.rows.min() >= 0 and h.rows.max() < 50
