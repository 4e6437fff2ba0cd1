"""Wright-Fisher reproduction with random fitness weights.

Each generation draws N i.i.d. positive fitness values Y_i, normalizes them
to weights eta_i = Y_i / sum(Y), and lets every child pick its parent
independently with probabilities eta.  The offspring counts are then a
multinomial with N trials and random success probabilities (a "doubly
stochastic" multinomial).  Parent assignment, not the count vector, is the
primitive: genealogy tracing needs to know who descends from whom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .seeding import as_generator


@dataclass(frozen=True)
class ParetoTail:
    """Fitness with polynomial tail P(Y >= y) = y**-alpha on [1, inf)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class InverseExponential:
    """Y = 1/E with E standard exponential; tail ~ 1/y (index one)."""


@dataclass(frozen=True)
class ExponentialY:
    """Y standard exponential; all moments finite, closed-form transforms."""


@dataclass(frozen=True)
class ConstantY:
    """Y identically 1: the classical neutral Wright-Fisher model."""


FitnessSpec = Union[ParetoTail, InverseExponential, ExponentialY, ConstantY]


def sample_Y(spec: FitnessSpec, n: int, seed=None) -> np.ndarray:
    """Draw n i.i.d. fitness values for the given family.

    ParetoTail uses the inverse-CDF construction Y = (1-U)**(-1/alpha) with
    U uniform on [0,1), which realizes the tail y**-alpha exactly with
    normalization constant 1 (minimum support 1).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = as_generator(seed)
    if isinstance(spec, ParetoTail):
        u = rng.random(n)
        return (1.0 - u) ** (-1.0 / spec.alpha)
    if isinstance(spec, InverseExponential):
        return 1.0 / rng.exponential(size=n)
    if isinstance(spec, ExponentialY):
        return rng.exponential(size=n)
    if isinstance(spec, ConstantY):
        return np.ones(n)
    raise TypeError(f"unknown fitness spec {spec!r}")


def normalize_fitness(y: np.ndarray) -> np.ndarray:
    """Normalize positive values to weights summing to one."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("y must be a nonempty 1-d array")
    if not np.all(y > 0) or not np.all(np.isfinite(y)):
        raise ValueError("all fitness values must be positive and finite")
    return y / y.sum()


@dataclass(frozen=True)
class GenerationRecord:
    """Parent choice of every child plus the derived offspring counts."""

    parent_of: np.ndarray
    offspring_counts: np.ndarray

    def __post_init__(self):
        n = self.parent_of.shape[0]
        counts = np.bincount(self.parent_of, minlength=n)
        if not np.array_equal(counts, self.offspring_counts):
            raise ValueError("offspring_counts inconsistent with parent_of")
        if self.offspring_counts.sum() != n:
            raise ValueError("offspring counts must sum to the population size")


def draw_categorical(weights: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` i.i.d. draws from the categorical law given by ``weights``.

    Inverse-CDF sampling on the cumulative weights (vectorized searchsorted);
    exact for any weight vector and O(size * log N) in C.
    """
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0  # guard roundoff at the top end
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def sample_parents(fitness: np.ndarray, seed=None) -> GenerationRecord:
    """Assign each of N children an independent parent with probabilities ``fitness``.

    The resulting offspring counts are Multinomial(N; fitness) given the
    weights, i.e. the doubly stochastic construction when the weights are
    themselves random.
    """
    fitness = np.asarray(fitness, dtype=float)
    n = fitness.shape[0]
    if not np.all(fitness >= 0):
        raise ValueError("fitness weights must be nonnegative")
    if abs(fitness.sum() - 1.0) > 1e-12:
        raise ValueError("fitness weights must sum to 1 within 1e-12")
    rng = as_generator(seed)
    parent_of = draw_categorical(fitness, n, rng)
    counts = np.bincount(parent_of, minlength=n)
    return GenerationRecord(parent_of=parent_of, offspring_counts=counts)


def wf_generation(spec: FitnessSpec, n: int, seed=None) -> tuple[np.ndarray, GenerationRecord]:
    """One complete generation: fresh fitness draw, then parent assignment.

    Successive calls with independent seeds produce i.i.d. generations.
    """
    rng = as_generator(seed)
    eta = normalize_fitness(sample_Y(spec, n, rng))
    return eta, sample_parents(eta, rng)


def batch_fitness(spec: FitnessSpec, n: int, rows: int, rng: np.random.Generator) -> np.ndarray:
    """``rows`` independent fitness vectors as a (rows, n) matrix."""
    if isinstance(spec, ParetoTail):
        y = (1.0 - rng.random((rows, n))) ** (-1.0 / spec.alpha)
    elif isinstance(spec, InverseExponential):
        y = 1.0 / rng.exponential(size=(rows, n))
    elif isinstance(spec, ExponentialY):
        y = rng.exponential(size=(rows, n))
    elif isinstance(spec, ConstantY):
        y = np.ones((rows, n))
    else:
        raise TypeError(f"unknown fitness spec {spec!r}")
    return y / y.sum(axis=1, keepdims=True)


def batch_parents(eta_rows: np.ndarray, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Per-row categorical sampling: row r yields ``draws`` parents under eta_rows[r].

    Uses the offset-searchsorted trick so a whole batch is one C call.
    """
    rows, n = eta_rows.shape
    cdf = np.cumsum(eta_rows, axis=1)
    offsets = np.arange(rows, dtype=float)[:, None]
    cdf += offsets
    cdf[:, -1] = np.arange(1, rows + 1, dtype=float)
    u = rng.random((rows, draws)) + offsets
    flat = np.searchsorted(cdf.ravel(), u.ravel(), side="right")
    idx = flat.reshape(rows, draws) - np.arange(rows)[:, None] * n
    return np.minimum(idx, n - 1).astype(np.int64)  # roundoff at the top end
