"""Exact coalescent-theory references: rates, probabilities, and simulators.

Merger rates of coalescents with multiple collisions are integrals
lambda_{b,k} = int_0^1 u**(k-2) * (1-u)**(b-k) L(du) against a finite
measure L on [0,1]; a unit mass at zero gives Kingman (binary mergers only),
the uniform measure gives the Bolthausen-Sznitman coalescent, and
Beta(2-alpha, alpha) the beta-coalescent family.  For heavy fitness tails
with index below one the limit genealogy is instead a discrete-time chain
with simultaneous multiple collisions whose one-step probabilities are in
closed form.

Everything here is the "theory side" of the package: closed forms evaluated
in log-Gamma space, quadrature cross-checks, and small exact simulators that
empirical genealogy statistics are tested against.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

from .partition import (
    MergerSignature,
    Partition,
    PartitionPath,
    merge_blocks,
    singleton_partition,
)
from .seeding import as_generator


# ---------------------------------------------------------------------------
# measures and Lambda-coalescent rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointMassAtZero:
    """Unit mass at 0: the Kingman coalescent."""


@dataclass(frozen=True)
class Uniform01:
    """Uniform measure on [0,1]: the Bolthausen-Sznitman coalescent."""


@dataclass(frozen=True)
class BetaMeasure:
    """Beta(a, b) probability measure on [0,1]."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"Beta parameters must be positive, got ({self.a}, {self.b})")


MeasureSpec = Union[PointMassAtZero, Uniform01, BetaMeasure]

_QUAD_NODES = 64  # integrands are polynomials times the measure density


def _check_bk(b: int, k: int) -> None:
    if not 2 <= k <= b:
        raise ValueError(f"need 2 <= k <= b, got (b, k) = ({b}, {k})")


def lambda_rate_quadrature(measure: MeasureSpec, b: int, k: int) -> float:
    """Merger rate of k out of b blocks, integrated numerically.

    The point mass at zero is handled analytically; the uniform measure uses
    Gauss-Legendre and the Beta measure Gauss-Jacobi nodes, absorbing the
    (possibly singular) density endpoints into the quadrature weight so the
    remaining factor is a polynomial and the rule is exact at 64 nodes.
    """
    _check_bk(b, k)
    if isinstance(measure, PointMassAtZero):
        return 1.0 if k == 2 else 0.0
    if isinstance(measure, Uniform01):
        x, w = roots_legendre(_QUAD_NODES)
        u = 0.5 * (x + 1.0)
        vals = u ** (k - 2) * (1.0 - u) ** (b - k)
        return float(0.5 * np.sum(w * vals))
    if isinstance(measure, BetaMeasure):
        # weight (1-x)^alpha (1+x)^beta on [-1,1] maps to (1-u)^alpha u^beta du
        alpha_j = measure.b - 1.0
        beta_j = measure.a - 1.0
        x, w = roots_jacobi(_QUAD_NODES, alpha_j, beta_j)
        u = 0.5 * (x + 1.0)
        vals = u ** (k - 2) * (1.0 - u) ** (b - k)
        scale = 0.5 ** (alpha_j + beta_j + 1) / math.exp(betaln(measure.a, measure.b))
        return float(scale * np.sum(w * vals))
    raise TypeError(f"unknown measure {measure!r}")


def beta_rate_closed_form(alpha: float, b: int, k: int) -> float:
    """Beta-coalescent rate B(k-alpha, b-k+alpha) / B(2-alpha, alpha).

    Valid for 0 < alpha < 2; alpha = 1 reduces to the Bolthausen-Sznitman
    rates (k-2)!(b-k)!/(b-1)!.  Evaluated via log-Gamma ratios.
    """
    if not 0 < alpha < 2:
        raise ValueError(f"alpha outside (0,2): {alpha}")
    _check_bk(b, k)
    return math.exp(betaln(k - alpha, b - k + alpha) - betaln(2 - alpha, alpha))


def bsz_rate(b: int, k: int) -> float:
    """Bolthausen-Sznitman rate (k-2)!(b-k)!/(b-1)!."""
    _check_bk(b, k)
    return math.exp(gammaln(k - 1) + gammaln(b - k + 1) - gammaln(b))


def kingman_rate(b: int, k: int) -> float:
    """Kingman rates: every pair at rate one, nothing else."""
    _check_bk(b, k)
    return 1.0 if k == 2 else 0.0


# ---------------------------------------------------------------------------
# rate tables and the consistency identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateTable:
    """Rates lambda_{b,k} for 2 <= k <= b <= max_b."""

    max_b: int
    rates: dict[tuple[int, int], float] = field(repr=False)

    def __post_init__(self):
        for (b, k), rate in self.rates.items():
            _check_bk(b, k)
            if b > self.max_b:
                raise ValueError(f"entry ({b},{k}) beyond max_b={self.max_b}")
            if rate < 0:
                raise ValueError(f"negative rate at ({b},{k})")

    def rate(self, b: int, k: int) -> float:
        return self.rates[(b, k)]


def build_rate_table(source: Callable[[int, int], float], max_b: int) -> RateTable:
    """Tabulate a (b, k) -> rate function up to max_b."""
    if max_b < 2:
        raise ValueError("max_b must be >= 2")
    rates = {(b, k): float(source(b, k)) for b in range(2, max_b + 1) for k in range(2, b + 1)}
    return RateTable(max_b=max_b, rates=rates)


@dataclass(frozen=True)
class ConsistencyReport:
    max_residual: float
    failures: tuple[tuple[int, int, float], ...]


def check_consistency(table: RateTable, tol: float = 1e-9) -> ConsistencyReport:
    """Residuals of lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}.

    The identity must hold for any array of rates that comes from a measure;
    entries violating ``tol`` are listed as (b, k, residual).
    """
    failures = []
    max_res = 0.0
    for b in range(2, table.max_b):
        for k in range(2, b + 1):
            res = abs(table.rate(b, k) - table.rate(b + 1, k) - table.rate(b + 1, k + 1))
            max_res = max(max_res, res)
            if res > tol:
                failures.append((b, k, res))
    return ConsistencyReport(max_residual=max_res, failures=tuple(failures))


def export_rate_table_csv(path, entries: list[tuple[int, int, float, str]]) -> None:
    """Write rows (b, k, rate, source) with source in {closed_form, quadrature}."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["b", "k", "rate", "source"])
        for b, k, rate, source in entries:
            writer.writerow([b, k, repr(float(rate)), source])


# ---------------------------------------------------------------------------
# discrete-time coalescent with simultaneous multiple collisions
# ---------------------------------------------------------------------------


def xi_discrete_prob(alpha: float, signature: MergerSignature) -> float:
    """One-step probability of a specific simultaneous merger, tail index < 1.

    For b blocks collapsing into groups of sizes b_1 >= ... >= b_a >= 2 with
    s untouched blocks:

        alpha**(a+s-1) * (a+s-1)! / (b-1)! * prod_i Gamma(b_i - alpha)/Gamma(1 - alpha)

    This is the probability of one particular set of groups; multiply by the
    number of such groupings (``signature_multiplicity``) for the chance of
    observing the signature.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha outside (0,1): {alpha}")
    if signature.a < 1:
        raise ValueError("signature must contain at least one merged group")
    a, s, b = signature.a, signature.s, signature.b
    log_p = (
        (a + s - 1) * math.log(alpha)
        + gammaln(a + s)
        - gammaln(b)
        + sum(gammaln(bi - alpha) - gammaln(1 - alpha) for bi in signature.group_sizes)
    )
    return math.exp(log_p)


def signature_multiplicity(signature: MergerSignature) -> int:
    """Number of ways b labelled blocks can realize the signature.

    b! divided by the sizes' factorials, the multiplicities of repeated
    sizes, and s! for the untouched singleton slots.
    """
    count = math.factorial(signature.b)
    for size in signature.group_sizes:
        count //= math.factorial(size)
    for times in _size_multiplicities(signature.group_sizes).values():
        count //= math.factorial(times)
    count //= math.factorial(signature.s)
    return count


def _size_multiplicities(sizes: tuple[int, ...]) -> dict[int, int]:
    out: dict[int, int] = {}
    for s in sizes:
        out[s] = out.get(s, 0) + 1
    return out


def enumerate_merger_signatures(b: int) -> list[MergerSignature]:
    """All signatures with at least one merged group, for b blocks."""
    if b < 2:
        raise ValueError("need b >= 2")
    found = []

    def parts(total: int, max_part: int, acc: list[int]):
        if total == 0:
            found.append(tuple(acc))
            return
        for p in range(min(total, max_part), 1, -1):
            parts(total - p, p, acc + [p])

    sigs = []
    for merged_mass in range(2, b + 1):
        found.clear()
        parts(merged_mass, merged_mass, [])
        for sizes in list(found):
            sigs.append(MergerSignature(b=b, group_sizes=sizes, s=b - merged_mass))
    return sigs


def xi_signature_distribution(alpha: float, b: int) -> dict[MergerSignature, float]:
    """Observed-signature law of one step from b blocks, no-merge included.

    Merge signatures get multiplicity * closed-form probability; the
    remaining mass is assigned to the no-merge signature (all-singleton
    groups), which must land in [0,1] -- asserted at runtime.
    """
    dist = {}
    total = 0.0
    for sig in enumerate_merger_signatures(b):
        p = signature_multiplicity(sig) * xi_discrete_prob(alpha, sig)
        dist[sig] = p
        total += p
    no_merge = 1.0 - total
    if not -1e-12 <= no_merge <= 1.0 + 1e-12:
        raise AssertionError(f"no-merge probability {no_merge} outside [0,1]")
    dist[MergerSignature(b=b, group_sizes=(), s=b)] = min(max(no_merge, 0.0), 1.0)
    return dist


def xi_recursion_residual(alpha: float, signature: MergerSignature) -> float:
    """Residual of the simultaneous-merger consistency recursion.

    With p(sizes, s) the closed-form one-step probability, adding one block
    that stays untouched must satisfy

        p(sizes, s+1) = p(sizes, s) - sum_j p(sizes with b_j+1, s) - s * p(sizes+[2], s-1),

    where each term's leading block count is implied by its own signature.
    Returns |lhs - rhs| evaluated on the closed form.
    """
    sizes, s = signature.group_sizes, signature.s
    lhs = xi_discrete_prob(
        alpha, MergerSignature(b=signature.b + 1, group_sizes=sizes, s=s + 1)
    )
    rhs = xi_discrete_prob(alpha, signature)
    for j in range(len(sizes)):
        grown = tuple(sorted((*sizes[:j], sizes[j] + 1, *sizes[j + 1 :]), reverse=True))
        rhs -= xi_discrete_prob(
            alpha, MergerSignature(b=signature.b + 1, group_sizes=grown, s=s)
        )
    if s > 0:
        widened = tuple(sorted((*sizes, 2), reverse=True))
        rhs -= s * xi_discrete_prob(
            alpha, MergerSignature(b=signature.b + 1, group_sizes=widened, s=s - 1)
        )
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# reference simulators
# ---------------------------------------------------------------------------


RateSource = Union[RateTable, Callable[[int, int], float]]


def _rate_fn(source: RateSource) -> Callable[[int, int], float]:
    if isinstance(source, RateTable):
        return source.rate
    return source


def simulate_lambda_coalescent(
    n: int, rate_source: RateSource, horizon: float = math.inf, seed=None
) -> PartitionPath:
    """Continuous-time coalescent on partitions of {1..n}.

    With b blocks alive, every k-subset merges at rate lambda_{b,k}: the
    next event arrives after an Exponential(sum_k C(b,k) lambda_{b,k})
    waiting time, the merger size is chosen proportionally, and the merging
    blocks uniformly.  Stops at a single block or at the horizon.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rates = _rate_fn(rate_source)
    rng = as_generator(seed)
    state = singleton_partition(n)
    times = [0.0]
    states = [state]
    t = 0.0
    while state.block_count > 1:
        b = state.block_count
        weights = np.array([math.comb(b, k) * rates(b, k) for k in range(2, b + 1)])
        total = weights.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        k = 2 + int(rng.choice(b - 1, p=weights / total))
        chosen = rng.choice(b, size=k, replace=False)
        state = merge_blocks(state, [chosen.tolist()])
        times.append(t)
        states.append(state)
    return PartitionPath(times=tuple(times), states=tuple(states))


def simulate_discrete_xi(
    n: int, alpha: float, generations: int, seed=None
) -> PartitionPath:
    """Discrete-time chain with simultaneous multiple collisions.

    One-step signature laws are exact (enumerated and normalized per block
    count, cached); the blocks realizing a signature are chosen uniformly.
    Intended for sample sizes n <= 8 where enumeration is cheap.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = as_generator(seed)
    dists: dict[int, tuple[list[MergerSignature], np.ndarray]] = {}
    state = singleton_partition(n)
    times = [0.0]
    states = [state]
    for t in range(1, generations + 1):
        b = state.block_count
        if b == 1:
            break
        if b not in dists:
            d = xi_signature_distribution(alpha, b)
            sigs = list(d.keys())
            probs = np.array([d[s] for s in sigs])
            dists[b] = (sigs, probs / probs.sum())
        sigs, probs = dists[b]
        sig = sigs[int(rng.choice(len(sigs), p=probs))]
        if sig.is_merger:
            order = rng.permutation(b)
            groups, at = [], 0
            for size in sig.group_sizes:
                groups.append(order[at : at + size].tolist())
                at += size
            state = merge_blocks(state, groups)
        times.append(float(t))
        states.append(state)
    return PartitionPath(times=tuple(times), states=tuple(states))


# ---------------------------------------------------------------------------
# asymptotic pair-coalescence probability
# ---------------------------------------------------------------------------


def asymptotic_cn(
    regime: str,
    n_individuals: int,
    alpha: float | None = None,
    ey: float | None = None,
    ey2: float | None = None,
) -> float:
    """Leading-order pair-coalescence probability c_N for large N.

    Regimes (by fitness-tail index):
      - "square_integrable": c_N ~ (E[Y^2]/E[Y]^2) / N            (needs ey, ey2)
      - "alpha2":            c_N ~ 2 log(N) / (N E[Y]^2)          (needs ey)
      - "alpha_between_1_2": c_N ~ a G(a) G(2-a) / (E[Y]^a N^(a-1))  (needs alpha, ey)
      - "alpha1":            c_N ~ 1 / log(N)
      - "alpha_below_1":     c_N -> Gamma(2-alpha)/Gamma(1-alpha)  (needs alpha)
    """
    if n_individuals < 2:
        raise ValueError("n_individuals must be >= 2")
    if regime == "square_integrable":
        if ey is None or ey2 is None or ey <= 0 or ey2 <= 0:
            raise ValueError("square_integrable regime needs positive ey and ey2")
        return ey2 / (ey**2 * n_individuals)
    if regime == "alpha2":
        if ey is None or ey <= 0:
            raise ValueError("alpha2 regime needs positive ey")
        return 2.0 * math.log(n_individuals) / (n_individuals * ey**2)
    if regime == "alpha_between_1_2":
        if alpha is None or not 1 < alpha < 2:
            raise ValueError(f"alpha must lie in (1,2), got {alpha}")
        if ey is None or ey <= 0:
            raise ValueError("regime needs positive ey")
        lead = alpha * math.gamma(alpha) * math.gamma(2 - alpha) / ey**alpha
        return lead * n_individuals ** (1.0 - alpha)
    if regime == "alpha1":
        return 1.0 / math.log(n_individuals)
    if regime == "alpha_below_1":
        if alpha is None or not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0,1), got {alpha}")
        return math.exp(gammaln(2 - alpha) - gammaln(1 - alpha))
    raise ValueError(f"unknown regime {regime!r}")
