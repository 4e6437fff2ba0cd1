"""Max-plus front dynamics, the log-sum-exp front position, Gumbel structure."""

import math

import numpy as np
import pytest
from scipy import stats

from selcoal.frontprop import (
    DeterministicNoise,
    GumbelNoise,
    UniformNoise,
    front_position,
    gumbel_fitness,
    gumbel_speed_oracle,
    measure_front_speed,
    recenter,
    run_front,
    sample_invariant_gumbel,
    sample_noise,
    step_front,
    write_trajectory_csv,
)
from selcoal.seeding import stream


def test_step_front_single_particle():
    x, parents = step_front(np.array([1.0]), DeterministicNoise(0.5), seed=0)
    assert x[0] == pytest.approx(1.5)
    assert parents.tolist() == [0]


def test_step_front_dominated_particle():
    # a particle 1e6 below can never win against uniform noise in [0,1]
    x, parents = step_front(np.array([0.0, -1e6]), UniformNoise(0.0, 1.0), seed=1)
    assert parents.tolist() == [0, 0]
    assert np.all(x <= 1.0) and np.all(x >= 0.0)


def test_step_front_brute_force_oracle():
    # recompute the argmax per child from the same noise draws
    rng = stream(2)
    x0 = np.array([0.3, -0.8])
    x1, parents = step_front(x0, GumbelNoise(0.0, 1.0), rng)
    rng_replay = stream(2)
    xi = sample_noise(GumbelNoise(0.0, 1.0), rng_replay, (2, 2))
    for j in range(2):
        cands = [x0[i] + xi[j, i] for i in range(2)]
        best = max(range(2), key=lambda i: cands[i])
        assert parents[j] == best
        assert x1[j] == pytest.approx(cands[best])


def test_front_position_examples():
    n = 7
    assert front_position(np.zeros(n), 1.0) == pytest.approx(math.log(n))
    assert front_position(np.array([4.2]), 3.3) == pytest.approx(4.2)
    x = stream(3).normal(size=9)
    r = 3.7
    assert front_position(x + r, 1.6) == pytest.approx(r + front_position(x, 1.6))


def test_front_position_overflow_safe():
    x = np.array([1e4, 1e4 - 1.0])
    val = front_position(x, 5.0)
    assert np.isfinite(val) and val >= 1e4


def test_recenter():
    beta = 1.7
    x = stream(4).normal(size=12) * 3
    x0 = recenter(x, beta)
    assert np.sum(np.exp(beta * x0)) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(recenter(x0, beta), x0, atol=1e-12)
    assert np.allclose(recenter(np.zeros(2), 1.0), -math.log(2.0))


def test_sample_invariant_gumbel_normalization():
    for seed in range(5):
        x = sample_invariant_gumbel(40, 2.2, seed=seed)
        assert np.sum(np.exp(2.2 * x)) == pytest.approx(1.0, abs=1e-12)
    assert sample_invariant_gumbel(1, 1.0, seed=0)[0] == pytest.approx(0.0)


def test_sample_invariant_gumbel_two_sampler_agreement():
    # max of recentered vector: our inverse-CDF sampler vs numpy's gumbel
    n, reps = 16, 10**5
    beta = 1.0
    rng = stream(5)
    ours = np.empty(reps)
    for r in range(reps):
        ours[r] = sample_invariant_gumbel(n, beta, rng).max()
    rng2 = stream(6)
    v = rng2.gumbel(0.0, 1.0 / beta, size=(reps, n))
    phi = np.log(np.exp(beta * v).sum(axis=1)) / beta
    other = v.max(axis=1) - phi
    assert stats.ks_2samp(ours, other).pvalue > 0.01


def test_gumbel_fitness():
    assert np.allclose(gumbel_fitness(np.zeros(5), 1.3), 0.2)
    w = gumbel_fitness(np.array([math.log(2.0), 0.0]), 1.0)
    assert np.allclose(w, [2.0 / 3.0, 1.0 / 3.0])
    x = stream(7).normal(size=6)
    assert np.allclose(gumbel_fitness(x + 5.5, 2.0), gumbel_fitness(x, 2.0))
    big = np.array([1e4, 0.0])
    assert np.all(np.isfinite(gumbel_fitness(big, 10.0)))


def test_monotonicity_paired_noise():
    # raising one coordinate (same noise) never lowers any child
    rng_a = stream(8)
    rng_b = stream(8)
    x = np.array([0.0, 1.0, -0.5, 0.3])
    x_up = x.copy()
    x_up[2] += 2.0
    out_a, _ = step_front(x, GumbelNoise(0.0, 1.0), rng_a)
    out_b, _ = step_front(x_up, GumbelNoise(0.0, 1.0), rng_b)
    assert np.all(out_b >= out_a - 1e-12)


def test_gumbel_decomposition_exponential():
    # exp(-beta (X_j(t+1) - Phi(X(t)) - rho)) are i.i.d. Exp(1)
    n, reps, beta, rho = 16, 4000, 1.5, 0.7
    rng = stream(9)
    vals = np.empty((reps, n))
    for r in range(reps):
        x0 = sample_invariant_gumbel(n, beta, rng)
        x1, _ = step_front(x0, GumbelNoise(rho, beta), rng)
        vals[r] = np.exp(-beta * (x1 - front_position(x0, beta) - rho))
    assert stats.kstest(vals.ravel(), "expon").pvalue > 0.01


def test_measure_front_speed_deterministic():
    assert measure_front_speed(5, DeterministicNoise(0.25), 1.0, 60, 10, seed=10) == pytest.approx(0.25)


def test_speed_translation_invariant():
    kwargs = dict(generations=80, burn_in=20)
    v1 = measure_front_speed(12, GumbelNoise(0.0, 1.0), 1.0, seed=stream(11), initial=np.zeros(12), **kwargs)
    v2 = measure_front_speed(12, GumbelNoise(0.0, 1.0), 1.0, seed=stream(11), initial=np.zeros(12) + 5.0, **kwargs)
    assert v1 == pytest.approx(v2)


def test_speed_against_oracle_small():
    n = 64
    v = measure_front_speed(n, GumbelNoise(0.0, 1.0), 1.0, 4000, 200, seed=stream(12))
    oracle, se = gumbel_speed_oracle(n, 0.0, 1.0, 10**5, seed=stream(13))
    assert abs(v - oracle) / oracle < 0.02


def test_run_front_and_csv(tmp_path):
    history, final, parents = run_front(6, GumbelNoise(0.0, 1.0), 5, seed=14)
    assert history.shape == (6, 6)
    assert parents.shape == (5, 6)
    assert np.array_equal(history[-1], final)
    out = tmp_path / "traj.csv"
    write_trajectory_csv(out, history, parents)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "generation,particle_index,position,parent_index"
    assert len(lines) == 1 + 6 * 6
    assert lines[1].endswith(",")  # generation 0 has no parent


def test_noise_validation():
    with pytest.raises(ValueError):
        GumbelNoise(0.0, 0.0)
    with pytest.raises(ValueError):
        UniformNoise(1.0, 1.0)
    with pytest.raises(ValueError):
        measure_front_speed(4, DeterministicNoise(0.1), 1.0, 10, 10, seed=0)
