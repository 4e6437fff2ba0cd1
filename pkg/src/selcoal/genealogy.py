"""Ancestral partition processes and empirical coalescence statistics.

Given a simulated history of parent assignments, a sample of n individuals
from the last generation is traced backward: two sample members sit in the
same block of the ancestral partition at backward time t iff they share an
ancestor t generations ago.  On top of the tracing primitives this module
estimates the pair-coalescence probability c_N (two independent estimators,
cross-checkable) and collects merger-signature statistics that the exact
coalescent predictions are tested against.

Population indices are 0-based arrays throughout; partition blocks label the
sample positions 1..n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .fitnesswf import (
    FitnessSpec,
    batch_fitness,
    batch_parents,
    draw_categorical,
    sample_parents,
    sample_Y,
    normalize_fitness,
)
from .frontprop import FrontModel, GumbelNoise, sample_invariant_gumbel, sample_noise, step_front
from .partition import (
    MergerSignature,
    Partition,
    PartitionPath,
    merger_signature,
    partition_from_labels,
    singleton_partition,
)
from .seeding import as_generator, stream

GenealogyModel = Union[FitnessSpec, FrontModel, np.ndarray]

_BLOCK_BUDGET = 2_000_000  # floats per vectorized replicate block


def _as_weights(model: np.ndarray) -> np.ndarray:
    """Validate a frozen fitness-weight vector (zeros allowed)."""
    weights = np.asarray(model, dtype=float)
    if weights.ndim != 1 or not np.all(weights >= 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("frozen fitness must be nonnegative weights summing to 1")
    return weights


@dataclass(frozen=True)
class AncestryHistory:
    """Parent assignments of a full run: row t sends the children of
    generation t+1 to their generation-t parents (0-based)."""

    n_individuals: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] != self.n_individuals:
            raise ValueError("rows must be a (T, N) integer array with T >= 1")
        if rows.min() < 0 or rows.max() >= self.n_individuals:
            raise ValueError("parent indices out of range")

    @property
    def generations(self) -> int:
        return self.rows.shape[0]


def simulate_history(model: GenealogyModel, n_individuals: int, generations: int, seed=None) -> AncestryHistory:
    """Run the model forward and keep every generation's parent row."""
    if generations < 1:
        raise ValueError("generations must be >= 1")
    rng = as_generator(seed)
    rows = np.empty((generations, n_individuals), dtype=np.int32)
    if isinstance(model, FrontModel):
        x = _front_start(model, n_individuals, rng)
        for t in range(generations):
            x, parents = step_front(x, model.noise, rng)
            rows[t] = parents
    elif isinstance(model, np.ndarray):
        eta = _as_weights(model)
        for t in range(generations):
            rows[t] = sample_parents(eta, rng).parent_of
    else:
        for t in range(generations):
            eta = normalize_fitness(sample_Y(model, n_individuals, rng))
            rows[t] = sample_parents(eta, rng).parent_of
    return AncestryHistory(n_individuals=n_individuals, rows=rows)


def _front_start(model: FrontModel, n_individuals: int, rng: np.random.Generator) -> np.ndarray:
    """Stationary start for the Gumbel front; flat start otherwise."""
    if isinstance(model.noise, GumbelNoise):
        return sample_invariant_gumbel(n_individuals, model.beta, rng)
    return np.zeros(n_individuals)


def trace_partition_path(history: AncestryHistory, sample: Sequence[int]) -> PartitionPath:
    """Ancestral partition of ``sample`` at every backward time 0..T.

    ``sample`` lists n distinct individuals (0-based) of the final
    generation; block labels are the sample positions 1..n.  Backward time t
    groups positions by their ancestor t generations before the end.
    """
    sample = list(sample)
    n = len(sample)
    if n < 1:
        raise ValueError("sample must be nonempty")
    if len(set(sample)) != n:
        raise ValueError("sample indices must be distinct")
    if min(sample) < 0 or max(sample) >= history.n_individuals:
        raise ValueError("sample indices out of range")
    ancestors = np.asarray(sample, dtype=np.int64)
    times = [0.0]
    states: list[Partition] = [singleton_partition(n)]
    total = history.generations
    for t in range(1, total + 1):
        ancestors = history.rows[total - t][ancestors]
        times.append(float(t))
        states.append(partition_from_labels(ancestors.tolist()))
    return PartitionPath(times=tuple(times), states=tuple(states))


def pairwise_coalescence_time(history: AncestryHistory, i: int, j: int) -> int | None:
    """Backward generations until i and j share an ancestor; None if never
    within the recorded history."""
    if i == j:
        raise ValueError("indices must be distinct")
    for idx in (i, j):
        if not 0 <= idx < history.n_individuals:
            raise ValueError(f"index {idx} out of range")
    a, b = i, j
    total = history.generations
    for t in range(1, total + 1):
        row = history.rows[total - t]
        a, b = int(row[a]), int(row[b])
        if a == b:
            return t
    return None


@dataclass(frozen=True)
class CoalescenceStats:
    """Aggregated coalescence observations.

    ``pair_coalescence_estimate`` (with its binomial standard error) is the
    share of trials in which two sampled children had the same parent;
    ``nu_pair_estimate`` is the independent accumulator
    sum_i nu_i (nu_i - 1) / (N (N-1)) averaged over generations when the full
    offspring counts were available.  ``merger_counts`` histograms the
    observed signatures (the no-merge signature included);
    ``total_merger_opportunities`` is the number of trials.
    """

    pair_coalescence_estimate: float | None
    standard_error: float | None
    merger_counts: dict[MergerSignature, int]
    total_merger_opportunities: int
    nu_pair_estimate: float | None = None
    nu_pair_se: float | None = None

    def merge_events(self) -> int:
        return sum(c for sig, c in self.merger_counts.items() if sig.is_merger)

    def signature_fractions_given_merge(self) -> dict[MergerSignature, float]:
        events = self.merge_events()
        if events == 0:
            return {}
        return {
            sig: c / events for sig, c in self.merger_counts.items() if sig.is_merger
        }


def _mean_se(total: float, total_sq: float, count: int) -> tuple[float, float]:
    mean = total / count
    var = max(total_sq / count - mean**2, 0.0)
    return mean, float(np.sqrt(var / count))


def estimate_cN(model: GenealogyModel, n_individuals: int, replicates: int, seed=None) -> CoalescenceStats:
    """Pair-coalescence probability from independent single generations.

    Each replicate simulates one generation of the model and contributes
    (a) whether two sampled children share a parent -- children are
    exchangeable, so the first two stand in for a uniform pair -- and
    (b) the all-pairs accumulator sum_i nu_i(nu_i - 1)/(N(N-1)).  Both
    estimators are returned; they target the same c_N and should agree
    within combined errors.
    """
    if n_individuals < 2:
        raise ValueError("n_individuals must be >= 2")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n = n_individuals
    pair_sig = MergerSignature(b=2, group_sizes=(2,), s=0)
    none_sig = MergerSignature(b=2, group_sizes=(), s=2)
    hits = 0
    nu_total = 0.0
    nu_total_sq = 0.0
    if isinstance(model, (FrontModel, np.ndarray)):
        rng = as_generator(seed)
        for _ in range(replicates):
            if isinstance(model, FrontModel):
                x = _front_start(model, n, rng)
                _, parents = step_front(x, model.noise, rng)
            else:
                parents = sample_parents(_as_weights(model), rng).parent_of
            hits += int(parents[0] == parents[1])
            counts = np.bincount(parents, minlength=n)
            t_val = float(np.sum(counts * (counts - 1))) / (n * (n - 1))
            nu_total += t_val
            nu_total_sq += t_val**2
    else:
        master = seed if isinstance(seed, int) else None
        base_rng = None if master is not None else as_generator(seed)
        block = max(1, _BLOCK_BUDGET // n)
        done = 0
        block_idx = 0
        while done < replicates:
            m = min(block, replicates - done)
            rng = stream(master, block_idx) if master is not None else base_rng
            eta = batch_fitness(model, n, m, rng)
            counts = rng.multinomial(n, eta)
            t_vals = np.sum(counts * (counts - 1.0), axis=1) / (n * (n - 1))
            # given the counts, a uniform pair of distinct children shares a
            # parent with probability exactly t_val
            hits += int(np.sum(rng.random(m) < t_vals))
            nu_total += float(t_vals.sum())
            nu_total_sq += float((t_vals**2).sum())
            done += m
            block_idx += 1
    p_hat = hits / replicates
    se = float(np.sqrt(p_hat * (1.0 - p_hat) / replicates))
    nu_mean, nu_se = _mean_se(nu_total, nu_total_sq, replicates)
    return CoalescenceStats(
        pair_coalescence_estimate=p_hat,
        standard_error=se,
        merger_counts={pair_sig: hits, none_sig: replicates - hits},
        total_merger_opportunities=replicates,
        nu_pair_estimate=nu_mean,
        nu_pair_se=nu_se,
    )


def _classify_rows(parents: np.ndarray, b: int) -> list[MergerSignature]:
    """Merger signature of each row of sampled-children parent ids."""
    sigs = []
    for row in parents:
        mults = np.unique(row, return_counts=True)[1]
        sizes = sorted((int(c) for c in mults if c >= 2), reverse=True)
        s = b - sum(sizes)
        sigs.append(MergerSignature(b=b, group_sizes=tuple(sizes), s=s))
    return sigs


def one_generation_signatures(
    model: GenealogyModel, n_individuals: int, sample_size: int, replicates: int, seed=None
) -> CoalescenceStats:
    """Signature histogram of one backward step over i.i.d. generations.

    Every replicate draws a fresh generation and records how ``sample_size``
    children (exchangeable, so the first few) collide on parents.  Because
    generations are i.i.d. and children exchangeable, these trials have the
    same law as successive backward steps of a traced sample that is
    restarted after every merger -- so the histogram conditioned on a merge
    is exactly the first-merger signature distribution.
    """
    if not 2 <= sample_size <= n_individuals:
        raise ValueError("need 2 <= sample_size <= n_individuals")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n, k = n_individuals, sample_size
    counts: dict[MergerSignature, int] = {}
    pair_hits = 0
    if isinstance(model, (FrontModel, np.ndarray)):
        rng = as_generator(seed)
        rows = np.empty((replicates, k), dtype=np.int64)
        for r in range(replicates):
            if isinstance(model, FrontModel):
                x = _front_start(model, n, rng)
                xi = sample_noise(model.noise, rng, (n, k))
                rows[r] = np.argmax(x[:, None] + xi, axis=0)
            else:
                rows[r] = draw_categorical(_as_weights(model), k, rng)
        for sig in _classify_rows(rows, k):
            counts[sig] = counts.get(sig, 0) + 1
        pair_hits = int(np.sum(rows[:, 0] == rows[:, 1]))
    else:
        master = seed if isinstance(seed, int) else None
        base_rng = None if master is not None else as_generator(seed)
        block = max(1, _BLOCK_BUDGET // n)
        done = 0
        block_idx = 0
        while done < replicates:
            m = min(block, replicates - done)
            rng = stream(master, block_idx) if master is not None else base_rng
            eta = batch_fitness(model, n, m, rng)
            parents = batch_parents(eta, k, rng)
            for sig in _classify_rows(parents, k):
                counts[sig] = counts.get(sig, 0) + 1
            pair_hits += int(np.sum(parents[:, 0] == parents[:, 1]))
            done += m
            block_idx += 1
    p_hat = pair_hits / replicates
    return CoalescenceStats(
        pair_coalescence_estimate=p_hat,
        standard_error=float(np.sqrt(p_hat * (1.0 - p_hat) / replicates)),
        merger_counts=counts,
        total_merger_opportunities=replicates,
    )


def first_merger_signatures(
    model: GenealogyModel,
    n_individuals: int,
    sample_size: int,
    min_events: int,
    seed=None,
    max_replicates: int | None = None,
) -> CoalescenceStats:
    """Collect at least ``min_events`` first-merger signatures.

    Runs batches of i.i.d. one-generation trials (see
    :func:`one_generation_signatures` for why that is the first-merger law)
    until enough merge events have accumulated.
    """
    if min_events < 1:
        raise ValueError("min_events must be >= 1")
    counts: dict[MergerSignature, int] = {}
    pair_hits = 0
    trials = 0
    events = 0
    round_idx = 0
    batch = max(min_events, 1000)
    while events < min_events:
        if max_replicates is not None and trials >= max_replicates:
            break
        stats = one_generation_signatures(
            model,
            n_individuals,
            sample_size,
            batch,
            seed=stream(seed, 7, round_idx) if isinstance(seed, int) else seed,
        )
        for sig, c in stats.merger_counts.items():
            counts[sig] = counts.get(sig, 0) + c
        pair_hits += round(stats.pair_coalescence_estimate * stats.total_merger_opportunities)
        trials += stats.total_merger_opportunities
        events = sum(c for sig, c in counts.items() if sig.is_merger)
        round_idx += 1
        remaining = min_events - events
        if remaining > 0:
            rate = max(events / trials, 1.0 / trials)
            batch = int(remaining / rate * 1.2) + 1000
    p_hat = pair_hits / trials
    return CoalescenceStats(
        pair_coalescence_estimate=p_hat,
        standard_error=float(np.sqrt(p_hat * (1.0 - p_hat) / trials)),
        merger_counts=counts,
        total_merger_opportunities=trials,
    )


def merger_statistics(paths: Sequence[PartitionPath]) -> CoalescenceStats:
    """Signature histogram over every backward step of the given paths."""
    if not paths:
        raise ValueError("paths must be nonempty")
    counts: dict[MergerSignature, int] = {}
    steps = 0
    for path in paths:
        for before, after in zip(path.states, path.states[1:]):
            sig = merger_signature(before, after)
            counts[sig] = counts.get(sig, 0) + 1
            steps += 1
    return CoalescenceStats(
        pair_coalescence_estimate=None,
        standard_error=None,
        merger_counts=counts,
        total_merger_opportunities=steps,
    )
