"""Max-plus front propagation: N particles pulled by their leading edge.

One step takes every position X_i(t) to X_j(t+1) = max_i (X_i(t) + xi_ij)
with an independent noise draw per (parent, child) pair -- the zero
temperature directed polymer recursion.  The argmax defines the child's
parent, which is where genealogies come from.

With Gumbel noise the model is exactly solvable: the log-sum-exp functional
is the natural front position, the process seen from the leading edge has an
explicit invariant law (recentered i.i.d. Gumbels), and the one-step fitness
weights are softmax(beta * X).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import logsumexp

from .seeding import as_generator

_TINY = 2.0**-53


@dataclass(frozen=True)
class GumbelNoise:
    """Gumbel G(location, beta): CDF exp(-exp(-beta*(x - location)))."""

    location: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class ExponentialNoise:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class UniformNoise:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class DeterministicNoise:
    value: float = 0.0


NoiseSpec = Union[GumbelNoise, ExponentialNoise, UniformNoise, DeterministicNoise]


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, size) -> np.ndarray:
    """Draw noise of the given shape.  Gumbel uses the exact inverse CDF."""
    if isinstance(spec, GumbelNoise):
        u = rng.random(size)
        np.maximum(u, _TINY, out=u)  # keep -log(-log u) finite
        np.log(u, out=u)
        np.negative(u, out=u)
        np.log(u, out=u)
        u *= -1.0 / spec.beta
        if spec.location != 0.0:
            u += spec.location
        return u
    if isinstance(spec, ExponentialNoise):
        return rng.exponential(scale=1.0 / spec.rate, size=size)
    if isinstance(spec, UniformNoise):
        return rng.uniform(spec.lo, spec.hi, size=size)
    if isinstance(spec, DeterministicNoise):
        return np.full(size, spec.value, dtype=float)
    raise TypeError(f"unknown noise spec {spec!r}")


@dataclass(frozen=True)
class FrontModel:
    """Front dynamics plus the inverse temperature of the position functional."""

    noise: NoiseSpec
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def step_front(positions: np.ndarray, noise: NoiseSpec, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """One max-plus step with N*N fresh noise draws.

    Returns the new positions and the parent (argmax row) of each child
    column.  Ties -- only possible for atomic noise -- break to the lowest
    parent index.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    rng = as_generator(seed)
    candidates = sample_noise(noise, rng, (n, n))  # [j, i]: edge parent i -> child j
    candidates += positions[None, :]
    parents = np.argmax(candidates, axis=1)
    new_positions = candidates[np.arange(n), parents]
    return new_positions, parents


def front_position(positions: np.ndarray, beta: float) -> float:
    """Log-sum-exp location: beta**-1 * log sum_i exp(beta * X_i).

    Increasing in every coordinate and translation-equivariant, computed
    overflow-safe by subtracting the running maximum.
    """
    positions = np.asarray(positions, dtype=float)
    return float(logsumexp(beta * positions)) / beta


def recenter(positions: np.ndarray, beta: float) -> np.ndarray:
    """Positions seen from the leading edge: X - Phi(X).

    The result satisfies sum_i exp(beta * X0_i) = 1 and the map is
    idempotent.
    """
    positions = np.asarray(positions, dtype=float)
    return positions - front_position(positions, beta)


def sample_invariant_gumbel(n: int, beta: float, seed=None) -> np.ndarray:
    """Draw from the invariant law of the recentered Gumbel front.

    An N-sample V of Gumbel G(0, beta) shifted by its own front position:
    V - Phi(V).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = as_generator(seed)
    v = sample_noise(GumbelNoise(0.0, beta), rng, n)
    return recenter(v, beta)


def gumbel_fitness(positions: np.ndarray, beta: float) -> np.ndarray:
    """Exact one-step reproduction weights exp(beta*X_i)/sum_k exp(beta*X_k)."""
    positions = np.asarray(positions, dtype=float)
    z = beta * positions
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def run_front(
    n: int,
    noise: NoiseSpec,
    generations: int,
    seed=None,
    initial: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate ``generations`` steps.

    Returns (positions_history, final_positions, parent_rows):
    positions_history is (generations+1, N) including the start,
    parent_rows is (generations, N) with row t mapping the children of
    generation t+1 to their generation-t parents.
    """
    if generations < 1:
        raise ValueError("generations must be >= 1")
    rng = as_generator(seed)
    x = np.zeros(n) if initial is None else np.asarray(initial, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError(f"initial state must have shape ({n},)")
    history = np.empty((generations + 1, n))
    parents = np.empty((generations, n), dtype=np.int32)
    history[0] = x
    for t in range(generations):
        x, p = step_front(x, noise, rng)
        history[t + 1] = x
        parents[t] = p
    return history, x, parents


def measure_front_speed(
    n: int,
    noise: NoiseSpec,
    beta: float,
    generations: int,
    burn_in: int,
    seed=None,
    initial: np.ndarray | None = None,
) -> float:
    """Empirical front speed (Phi(X_T) - Phi(X_burn_in)) / (T - burn_in)."""
    if not generations > burn_in >= 0:
        raise ValueError("need generations > burn_in >= 0")
    rng = as_generator(seed)
    x = np.zeros(n) if initial is None else np.asarray(initial, dtype=float).copy()
    phi_burn = front_position(x, beta) if burn_in == 0 else None
    for t in range(generations):
        x, _ = step_front(x, noise, rng)
        if t + 1 == burn_in:
            phi_burn = front_position(x, beta)
    phi_end = front_position(x, beta)
    return (phi_end - phi_burn) / (generations - burn_in)


def gumbel_speed_oracle(
    n: int, location: float, beta: float, samples: int, seed=None
) -> tuple[float, float]:
    """Independent prediction of the Gumbel front speed, with standard error.

    One step of the solvable dynamics advances the front by
    location + beta**-1 * log sum_j E_j**-1 with E_j i.i.d. standard
    exponentials, so the speed is the expectation of that increment.
    Estimated by plain Monte Carlo over ``samples`` fresh draws of the sum.
    """
    rng = as_generator(seed)
    chunk = max(1, int(2e7) // n)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        e = rng.exponential(size=(m, n))
        vals = np.log(np.sum(1.0 / e, axis=1))
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    se = np.sqrt(var / samples) / beta
    return location + mean / beta, se


def write_trajectory_csv(path, positions_history: np.ndarray, parent_rows: np.ndarray) -> None:
    """Dump a trajectory as rows (generation, particle_index, position, parent_index).

    Generation 0 has no parent; its parent_index field is empty.
    """
    t_max, n = positions_history.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "particle_index", "position", "parent_index"])
        for t in range(t_max):
            for j in range(n):
                parent = "" if t == 0 else int(parent_rows[t - 1, j])
                writer.writerow([t, j, repr(float(positions_history[t, j])), parent])
