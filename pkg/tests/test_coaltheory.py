"""Coalescent rate identities, closed forms, and reference simulators."""

import math

import numpy as np
import pytest
from scipy import stats

from selcoal.coaltheory import (
    BetaMeasure,
    PointMassAtZero,
    Uniform01,
    asymptotic_cn,
    beta_rate_closed_form,
    bsz_rate,
    build_rate_table,
    check_consistency,
    enumerate_merger_signatures,
    kingman_rate,
    lambda_rate_quadrature,
    signature_multiplicity,
    simulate_discrete_xi,
    simulate_lambda_coalescent,
    xi_discrete_prob,
    xi_recursion_residual,
    xi_signature_distribution,
)
from selcoal.partition import MergerSignature
from selcoal.seeding import stream


def sig(b, sizes, s):
    return MergerSignature(b=b, group_sizes=tuple(sizes), s=s)


def test_lambda_rate_quadrature_examples():
    assert lambda_rate_quadrature(Uniform01(), 2, 2) == pytest.approx(1.0)
    assert lambda_rate_quadrature(Uniform01(), 3, 2) == pytest.approx(0.5)
    assert lambda_rate_quadrature(PointMassAtZero(), 5, 3) == 0.0
    assert lambda_rate_quadrature(PointMassAtZero(), 5, 2) == 1.0
    with pytest.raises(ValueError):
        lambda_rate_quadrature(Uniform01(), 3, 1)


def test_beta_rate_closed_form_examples():
    assert beta_rate_closed_form(1.0, 3, 2) == pytest.approx(0.5)
    target = lambda_rate_quadrature(BetaMeasure(0.5, 1.5), 3, 3)
    assert beta_rate_closed_form(1.5, 3, 3) == pytest.approx(target, rel=1e-8)
    for alpha in (0.3, 1.0, 1.7):
        assert beta_rate_closed_form(alpha, 2, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        beta_rate_closed_form(2.5, 3, 2)


def test_bsz_rate_factorial_form():
    for b in range(2, 11):
        for k in range(2, b + 1):
            expected = math.factorial(k - 2) * math.factorial(b - k) / math.factorial(b - 1)
            assert bsz_rate(b, k) == pytest.approx(expected, rel=1e-12)
            assert beta_rate_closed_form(1.0, b, k) == pytest.approx(expected, rel=1e-12)


def test_kingman_rate():
    assert kingman_rate(2, 2) == 1.0
    assert kingman_rate(7, 2) == 1.0
    assert kingman_rate(7, 3) == 0.0


def test_consistency_reports():
    kingman = build_rate_table(kingman_rate, 10)
    assert check_consistency(kingman).max_residual == 0.0
    bsz = build_rate_table(bsz_rate, 10)
    assert check_consistency(bsz).max_residual < 1e-12
    quad_beta = build_rate_table(
        lambda b, k: lambda_rate_quadrature(BetaMeasure(0.5, 1.5), b, k), 10
    )
    report = check_consistency(quad_beta, tol=1e-8)
    assert report.max_residual < 1e-8
    assert not report.failures


def test_quadrature_matches_closed_form_grid():
    for alpha in (1.0, 1.25, 1.5, 1.75):
        measure = BetaMeasure(2.0 - alpha, alpha)
        for b in range(2, 13):
            for k in range(2, b + 1):
                closed = beta_rate_closed_form(alpha, b, k)
                quadr = lambda_rate_quadrature(measure, b, k)
                assert abs(closed - quadr) <= 1e-8 * closed


def test_xi_discrete_prob_examples():
    assert xi_discrete_prob(0.5, sig(2, [2], 0)) == pytest.approx(0.5, abs=1e-12)
    assert xi_discrete_prob(0.5, sig(3, [3], 0)) == pytest.approx(0.375, abs=1e-12)
    for alpha in np.linspace(0.05, 0.95, 19):
        limit = math.exp(math.lgamma(2 - alpha) - math.lgamma(1 - alpha))
        assert xi_discrete_prob(alpha, sig(2, [2], 0)) == pytest.approx(limit, abs=1e-12)
        assert xi_discrete_prob(alpha, sig(2, [2], 0)) == pytest.approx(1 - alpha, abs=1e-12)
    with pytest.raises(ValueError):
        xi_discrete_prob(1.5, sig(2, [2], 0))
    with pytest.raises(ValueError):
        xi_discrete_prob(0.5, sig(2, [], 2))


def test_xi_recursion_residuals():
    assert xi_recursion_residual(0.5, sig(2, [2], 0)) < 1e-12
    assert xi_recursion_residual(0.5, sig(3, [2], 1)) < 1e-12
    assert xi_recursion_residual(0.3, sig(4, [2, 2], 0)) < 1e-12
    for alpha in (0.2, 0.5, 0.8):
        for b in range(2, 7):
            for signature in enumerate_merger_signatures(b):
                assert xi_recursion_residual(alpha, signature) < 1e-12


def test_signature_multiplicity():
    assert signature_multiplicity(sig(4, [2], 2)) == 6
    assert signature_multiplicity(sig(4, [2, 2], 0)) == 3
    assert signature_multiplicity(sig(4, [3], 1)) == 4
    assert signature_multiplicity(sig(4, [4], 0)) == 1
    assert signature_multiplicity(sig(6, [2, 2], 2)) == 45


def test_enumerate_merger_signatures():
    sigs4 = enumerate_merger_signatures(4)
    expected = {(2,), (3,), (4,), (2, 2)}
    assert {s.group_sizes for s in sigs4} == expected
    # total observed-signature mass is a probability distribution
    for alpha in (0.25, 0.5, 0.75):
        for b in (2, 3, 4, 6, 8):
            dist = xi_signature_distribution(alpha, b)
            assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
            no_merge = dist[sig(b, [], b)]
            assert 0.0 <= no_merge <= 1.0
            # a=0 extension of the closed form
            assert no_merge == pytest.approx(alpha ** (b - 1), abs=1e-10)


def test_simulate_kingman_pair_time():
    times = []
    rng = stream(20)
    for _ in range(2 * 10**4):
        path = simulate_lambda_coalescent(2, kingman_rate, seed=rng)
        times.append(path.times[-1])
    mean = float(np.mean(times))
    assert abs(mean - 1.0) < 0.01 * 3  # Exp(1): se ~ 1/sqrt(2e4) ~ 0.7%


def test_simulate_bsz_triple_fraction():
    rng = stream(21)
    triple = 0
    reps = 2 * 10**4
    for _ in range(reps):
        path = simulate_lambda_coalescent(3, bsz_rate, seed=rng)
        first = path.signatures()[0]
        triple += first.group_sizes == (3,)
    frac = triple / reps
    se = math.sqrt(0.25 * 0.75 / reps)
    assert abs(frac - 0.25) < 3 * se


def test_simulate_block_counts_decrease():
    rng = stream(22)
    for _ in range(50):
        path = simulate_lambda_coalescent(6, bsz_rate, seed=rng)
        counts = [s.block_count for s in path.states]
        assert all(a > b for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 1


def test_simulate_kingman_block_count_expectation():
    # block count is a pure death chain with rate C(k,2); oracle: expm of the
    # generator on states (1,2,3,4)
    from scipy.linalg import expm

    n, t_sample, reps = 4, 0.7, 2 * 10**4
    generator = np.zeros((n, n))
    for k in range(2, n + 1):
        rate = k * (k - 1) / 2.0
        generator[k - 1, k - 1] = -rate
        generator[k - 1, k - 2] = rate
    probs = expm(t_sample * generator.T) @ np.eye(n)[:, n - 1]
    exact_mean = float(np.arange(1, n + 1) @ probs)

    rng = stream(23)
    counts = []
    for _ in range(reps):
        path = simulate_lambda_coalescent(n, kingman_rate, horizon=t_sample, seed=rng)
        counts.append(path.states[-1].block_count)
    mean = float(np.mean(counts))
    se = float(np.std(counts) / math.sqrt(reps))
    assert abs(mean - exact_mean) < 4 * se


def test_simulate_discrete_xi_first_event():
    # one-step signature counts match the exact enumerated distribution
    alpha, n, reps = 0.5, 4, 2 * 10**4
    dist = xi_signature_distribution(alpha, n)
    rng = stream(24)
    counts = {}
    for _ in range(reps):
        path = simulate_discrete_xi(n, alpha, generations=1, seed=rng)
        s = path.signatures()[0]
        counts[s] = counts.get(s, 0) + 1
    keys = sorted(dist.keys(), key=str)
    observed = np.array([counts.get(k, 0) for k in keys])
    expected = reps * np.array([dist[k] for k in keys])
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_asymptotic_cn():
    # pareto(3): EY = 1.5, EY2 = 3 -> c_N ~ (4/3)/N
    assert asymptotic_cn("square_integrable", 1000, ey=1.5, ey2=3.0) == pytest.approx(4.0 / 3.0 / 1000)
    assert asymptotic_cn("alpha1", 10**4) == pytest.approx(1.0 / math.log(10**4))
    for n in (10, 10**6):
        assert asymptotic_cn("alpha_below_1", n, alpha=0.5) == pytest.approx(0.5)
    v = asymptotic_cn("alpha_between_1_2", 10**4, alpha=1.5, ey=3.0)
    assert v == pytest.approx(1.5 * math.gamma(1.5) * math.gamma(0.5) / 3.0**1.5 * 10 ** (4 * -0.5))
    assert asymptotic_cn("alpha2", 100, ey=2.0) == pytest.approx(2 * math.log(100) / 400)
    with pytest.raises(ValueError):
        asymptotic_cn("alpha_below_1", 100, alpha=1.5)
    with pytest.raises(ValueError):
        asymptotic_cn("unknown", 100)
