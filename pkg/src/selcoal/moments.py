"""Fitness-weight moments:  quadrature, Monte Carlo, and asymptotics.

The joint moments of the normalized fitness weights eta_i = Y_i / sum(Y)
admit an exact integral representation in terms of the Laplace transform of
Y and its derivative moments

    I_p(u) = E[Y^p * exp(-u Y)],

namely

    E[eta_1^b1 ... eta_a^ba]
        = (1/Gamma(b)) * int_0^inf u^(b-1) I_0(u)^(N-a) I_b1(u) ... I_ba(u) du

with b = b1 + ... + ba.  For large N the integral concentrates below
kappa_N = (log N)^2 / N; this module evaluates the two pieces separately,
certifies the upper piece with the bound I_0(kappa_N)^(N-a), and provides
the closed-form leading-order behavior of both I_p near zero and of the eta
moments for every tail index alpha <= 2, plus Monte Carlo estimators to
check everything against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1 as sc_exp1
from scipy.special import gammaincc as sc_gammaincc
from scipy.special import gammaln
from scipy.special import kv as sc_kv

from .fitnesswf import (
    ConstantY,
    ExponentialY,
    FitnessSpec,
    InverseExponential,
    ParetoTail,
    batch_fitness,
    batch_parents,
)
from .seeding import as_generator

DistSpec = FitnessSpec

_EULER_GAMMA = 0.5772156649015328606
_LOG_CUTOFF = 60.0  # exp(-60) is below double noise for every ratio we form


@dataclass(frozen=True)
class QuadratureSpec:
    """Tuning knobs for the moment integrals.

    ``split_point`` is the boundary between the concentrated part of the
    integral and the certified-negligible tail; "auto" means
    (log N)^2 / N.  ``tail_bound_budget`` is the largest tolerated ratio of
    the certified tail bound to the main value before a warning-level
    failure is raised.
    """

    nodes: int = 200
    split_point: float | str = "auto"
    tail_bound_budget: float = 1e-6

    def __post_init__(self):
        if self.nodes < 16:
            raise ValueError("nodes must be >= 16")
        if not 0 < self.tail_bound_budget < 1:
            raise ValueError("tail_bound_budget must lie in (0,1)")
        if self.split_point != "auto" and not self.split_point > 0:
            raise ValueError("split_point must be positive or 'auto'")

    def split_for(self, n_individuals: int) -> float:
        if self.split_point == "auto":
            return math.log(n_individuals) ** 2 / n_individuals
        return float(self.split_point)


_DEFAULT_QUAD = QuadratureSpec()


def mean_Y(dist: DistSpec) -> float:
    """E[Y], raising when the family has no finite mean."""
    if isinstance(dist, ParetoTail):
        if dist.alpha <= 1:
            raise ValueError(f"Pareto mean diverges for alpha={dist.alpha}")
        return dist.alpha / (dist.alpha - 1.0)
    if isinstance(dist, (ExponentialY, ConstantY)):
        return 1.0
    if isinstance(dist, InverseExponential):
        raise ValueError("inverse-exponential fitness has no finite mean")
    raise TypeError(f"unknown distribution {dist!r}")


def second_moment_Y(dist: DistSpec) -> float:
    """E[Y^2], raising when it diverges."""
    if isinstance(dist, ParetoTail):
        if dist.alpha <= 2:
            raise ValueError(f"Pareto second moment diverges for alpha={dist.alpha}")
        return dist.alpha / (dist.alpha - 2.0)
    if isinstance(dist, ExponentialY):
        return 2.0
    if isinstance(dist, ConstantY):
        return 1.0
    if isinstance(dist, InverseExponential):
        raise ValueError("inverse-exponential fitness has no finite second moment")
    raise TypeError(f"unknown distribution {dist!r}")


def _moment_at_zero(dist: DistSpec, p: int) -> float:
    """E[Y^p] for u = 0, raising on divergence."""
    if p == 0:
        return 1.0
    if isinstance(dist, ParetoTail):
        if dist.alpha <= p:
            raise ValueError(f"E[Y^{p}] diverges for Pareto alpha={dist.alpha}")
        return dist.alpha / (dist.alpha - p)
    if isinstance(dist, ExponentialY):
        return float(math.factorial(p))
    if isinstance(dist, ConstantY):
        return 1.0
    if isinstance(dist, InverseExponential):
        raise ValueError(f"E[Y^{p}] diverges for inverse-exponential fitness")
    raise TypeError(f"unknown distribution {dist!r}")


def laplace_Ip(dist: DistSpec, p: int, u: float, quad_spec: QuadratureSpec | None = None) -> float:
    """I_p(u) = E[Y^p exp(-u Y)] for the fitness families.

    Exponential and constant Y are closed form.  The Pareto family is an
    adaptive quadrature over log y with the analytic first-order remainder
    of the truncated exponential tail added back; the inverse-exponential
    family integrates x -> x^-p exp(-u/x) against the exponential density
    over log x.  At u = 0 the finite moment is returned when it exists.
    """
    if p < 0:
        raise ValueError("p must be a nonnegative integer")
    if u < 0:
        raise ValueError("u must be nonnegative")
    qs = quad_spec or _DEFAULT_QUAD
    if u == 0.0:
        return _moment_at_zero(dist, p)
    if isinstance(dist, ExponentialY):
        return math.factorial(p) / (1.0 + u) ** (p + 1)
    if isinstance(dist, ConstantY):
        return math.exp(-u)
    if isinstance(dist, ParetoTail):
        alpha = dist.alpha
        t_max = math.log1p(_LOG_CUTOFF / u)  # y_max = 1 + 60/u

        def integrand(t: float) -> float:
            # y = e^t: alpha * y^(p-alpha-1) e^(-u y) dy = alpha e^((p-alpha)t - u e^t) dt
            return alpha * math.exp((p - alpha) * t - u * math.exp(t))

        pts = [min(max(math.log(max(p, 1) / u), 1e-12), t_max)] if p >= 1 else None
        main, _ = quad(integrand, 0.0, t_max, points=pts, limit=qs.nodes, epsabs=1e-300, epsrel=1e-12)
        y_max = 1.0 + _LOG_CUTOFF / u
        remainder = alpha * y_max ** (p - alpha - 1.0) * math.exp(-u * y_max) / u
        return main + remainder
    if isinstance(dist, InverseExponential):
        # Y = 1/X with X ~ Exp(1): I_p(u) = int_0^inf x^-p exp(-u/x - x) dx
        t_lo = math.log(u / _LOG_CUTOFF)
        t_hi = math.log(_LOG_CUTOFF)

        def integrand(t: float) -> float:
            return math.exp((1 - p) * t - u * math.exp(-t) - math.exp(t))

        main, _ = quad(integrand, t_lo, t_hi, limit=qs.nodes, epsabs=1e-300, epsrel=1e-12)
        return main
    raise TypeError(f"unknown distribution {dist!r}")


def _upper_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma int_x^inf t^(s-1) e^-t dt for any real s, x > 0.

    Nonpositive s is reduced to the computable range with the downward
    recursion Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x) / s.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if s > 0:
        return math.exp(gammaln(s)) * float(sc_gammaincc(s, x))
    if s == 0.0:
        return float(sc_exp1(x))
    return (_upper_gamma(s + 1.0, x) - x**s * math.exp(-x)) / s


def _I0_deficit(dist: DistSpec, u: float, qs: QuadratureSpec) -> float:
    """1 - I_0(u), from cancellation-free closed forms so tiny values keep
    full relative accuracy (the moment integrals raise I_0 to the N-th
    power, which amplifies absolute errors N-fold)."""
    if u == 0.0:
        return 0.0
    if isinstance(dist, ExponentialY):
        return u / (1.0 + u)
    if isinstance(dist, ConstantY):
        return -math.expm1(-u)
    if isinstance(dist, ParetoTail):
        # parts: 1 - I_0 = (1 - e^-u) + u^alpha Gamma(1-alpha, u), both positive
        alpha = dist.alpha
        return -math.expm1(-u) + u**alpha * _upper_gamma(1.0 - alpha, u)
    if isinstance(dist, InverseExponential):
        # I_0(u) = 2 sqrt(u) K_1(2 sqrt(u)); series below the cancellation zone
        if u < 1e-8:
            return -u * math.log(u) - (2.0 * _EULER_GAMMA - 1.0) * u
        x = 2.0 * math.sqrt(u)
        return 1.0 - x * float(sc_kv(1, x))
    raise TypeError(f"unknown distribution {dist!r}")


def _log_I0(dist: DistSpec, u: float, qs: QuadratureSpec) -> float:
    deficit = _I0_deficit(dist, u, qs)
    if deficit < 0.5:
        return math.log1p(-deficit)
    val = laplace_Ip(dist, 0, u, qs)
    if val <= 0.0:
        return -math.inf
    return math.log(val)


def _check_b_list(b_list) -> tuple[int, ...]:
    b_tuple = tuple(int(b) for b in b_list)
    if not b_tuple:
        raise ValueError("b_list must be nonempty")
    if any(b < 1 for b in b_tuple):
        raise ValueError("entries of b_list must be >= 1")
    if tuple(sorted(b_tuple, reverse=True)) != b_tuple:
        raise ValueError("b_list must be sorted descending")
    return b_tuple


def _eta_moment_pieces(
    dist: DistSpec, n_individuals: int, b_list, qs: QuadratureSpec
) -> tuple[float, float, float]:
    """(main piece, numeric tail piece, certified tail bound) of the moment
    integral, all already divided by Gamma(b)."""
    b_tuple = _check_b_list(b_list)
    a = len(b_tuple)
    b = sum(b_tuple)
    N = n_individuals
    if a > N:
        raise ValueError(f"need len(b_list) <= N, got {a} > {N}")
    if N > 1 and b > N:
        raise ValueError(f"need sum(b_list) <= N, got {b} > {N}")
    kappa = qs.split_for(N) if N > 1 else 1.0
    log_gamma_b = gammaln(b)

    def log_integrand(u: float) -> float:
        if u <= 0.0:
            return -math.inf
        acc = (b - 1) * math.log(u) + (N - a) * _log_I0(dist, u, qs)
        for bi in b_tuple:
            val = laplace_Ip(dist, bi, u, qs)
            if val <= 0.0:
                return -math.inf
            acc += math.log(val)
        return acc

    def integrand(u: float) -> float:
        lg = log_integrand(u)
        return 0.0 if lg < -745.0 else math.exp(lg)

    # locate the concentration scale: u* with (N-a) * deficit(u*) ~ 1
    u_star = kappa
    if N - a > 0:
        lo, hi = 1e-280, kappa
        if (N - a) * _I0_deficit(dist, hi, qs) > 1.0:
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if (N - a) * _I0_deficit(dist, mid, qs) > 1.0:
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1.0001:
                    break
            u_star = hi
    pts = sorted({min(max(c * u_star, 1e-280), kappa) for c in (0.1, 1.0, 10.0, 100.0)})
    main, _ = quad(
        integrand, 0.0, kappa, points=pts, limit=max(qs.nodes, 400), epsabs=1e-300, epsrel=1e-10
    )
    main /= math.exp(log_gamma_b)

    # certified bound on the discarded-tail piece (paper-style estimate):
    # integrand <= I0(kappa)^(N-a) * u^(b-1) prod I_bi(u), whose full
    # integral is Gamma(b) * E[prod Y^bi / (sum_a Y)^b] <= Gamma(b).
    log_bound = (N - a) * _log_I0(dist, kappa, qs)
    tail_bound = math.exp(log_bound) if log_bound > -745.0 else 0.0

    tail_value = 0.0
    if tail_bound > 1e-18 * max(main, 1e-300):
        tail_value, _ = quad(
            integrand,
            kappa,
            np.inf,
            limit=max(qs.nodes, 400),
            epsabs=max(main, 1e-300) * 1e-13,
            epsrel=1e-9,
        )
        tail_value /= math.exp(log_gamma_b)
    return main, tail_value, tail_bound


def eta_moment_quadrature(
    dist: DistSpec, n_individuals: int, b_list, quad_spec: QuadratureSpec | None = None
) -> float:
    """E[eta_1^b1 ... eta_a^ba] by the Laplace-transform integral.

    The integral is split at (log N)^2 / N.  The upper piece carries the
    certified bound I_0(split)^(N-a); whenever that bound is not already
    negligible relative to the requested budget the upper piece is also
    integrated numerically, so small-N values (where the split is not yet
    deep in the tail) remain exact.
    """
    if n_individuals < 1:
        raise ValueError("n_individuals must be >= 1")
    b_tuple = _check_b_list(b_list)
    if n_individuals == 1:
        if len(b_tuple) != 1:
            raise ValueError("N = 1 admits a single coordinate")
        return 1.0  # eta_1 is identically one
    qs = quad_spec or _DEFAULT_QUAD
    main, tail_value, _ = _eta_moment_pieces(dist, n_individuals, b_tuple, qs)
    return main + tail_value


def eta_moment_tail_bound(
    dist: DistSpec, n_individuals: int, b_list, quad_spec: QuadratureSpec | None = None
) -> float:
    """Certified upper bound for the above-split part of the moment integral
    (relative to the same Gamma(b) normalization)."""
    if n_individuals < 2:
        raise ValueError("n_individuals must be >= 2")
    qs = quad_spec or _DEFAULT_QUAD
    b_tuple = _check_b_list(b_list)
    a = len(b_tuple)
    kappa = qs.split_for(n_individuals)
    log_bound = (n_individuals - a) * _log_I0(dist, kappa, qs)
    return math.exp(log_bound) if log_bound > -745.0 else 0.0


def eta_moment_mc(
    dist: DistSpec, n_individuals: int, b_list, samples: int, seed=None
) -> tuple[float, float]:
    """Monte Carlo oracle for the same moment: (estimate, standard error)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    b_tuple = _check_b_list(b_list)
    a = len(b_tuple)
    if a > n_individuals:
        raise ValueError("need len(b_list) <= N")
    rng = as_generator(seed)
    powers = np.array(b_tuple, dtype=float)
    chunk = max(1, int(2e7) // n_individuals)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        eta = batch_fitness(dist, n_individuals, m, rng)
        vals = np.prod(eta[:, :a] ** powers, axis=1)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    return mean, math.sqrt(var / samples)


def falling_factorial_log(n_individuals: int, b: int) -> float:
    """log of (N)_b = N (N-1) ... (N-b+1); b = 0 gives 0."""
    if not 0 <= b <= n_individuals:
        raise ValueError(f"need 0 <= b <= N, got b={b}, N={n_individuals}")
    return float(sum(math.log(n_individuals - i) for i in range(b)))


def nu_factorial_moment(
    dist: DistSpec,
    n_individuals: int,
    b_list,
    method: str = "quadrature",
    samples: int = 10**5,
    seed=None,
) -> float:
    """E[(nu_1)_b1 ... (nu_a)_ba] = (N)_b * E[eta_1^b1 ... eta_a^ba]."""
    b_tuple = _check_b_list(b_list)
    b = sum(b_tuple)
    scale = math.exp(falling_factorial_log(n_individuals, b))
    if method == "quadrature":
        return scale * eta_moment_quadrature(dist, n_individuals, b_tuple)
    if method == "mc":
        estimate, _ = eta_moment_mc(dist, n_individuals, b_tuple, samples, seed)
        return scale * estimate
    raise ValueError(f"method must be 'quadrature' or 'mc', got {method!r}")


def simulate_nu_factorial_moment(
    dist: DistSpec, n_individuals: int, b_list, generations: int, seed=None
) -> tuple[float, float]:
    """Direct-simulation oracle: average prod_i (nu_i)_bi over i.i.d.
    generations of the full reproduction dynamics."""
    b_tuple = _check_b_list(b_list)
    a = len(b_tuple)
    rng = as_generator(seed)
    chunk = max(1, int(2e6) // n_individuals)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < generations:
        m = min(chunk, generations - done)
        eta = batch_fitness(dist, n_individuals, m, rng)
        parents = batch_parents(eta, n_individuals, rng)
        offsets = np.arange(m)[:, None] * n_individuals
        counts = np.bincount(
            (parents + offsets).ravel(), minlength=m * n_individuals
        ).reshape(m, n_individuals)
        vals = np.ones(m)
        for i, bi in enumerate(b_tuple):
            nu = counts[:, i].astype(float)
            for j in range(bi):
                vals *= nu - j
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / generations
    var = max(total_sq / generations - mean**2, 0.0)
    return mean, math.sqrt(var / generations)


# ---------------------------------------------------------------------------
# leading-order expansions
# ---------------------------------------------------------------------------


def asymptotic_Ip(alpha: float, p: int, u: float, ey: float | None = None) -> float:
    """Leading-order I_p(u) as u -> 0+ for tail index alpha (<= 2).

    Covered rows: p = 0 for every alpha; p >= 2 for alpha < 2; p >= 3 for
    alpha = 2 in the power form, with p = 2 carrying the logarithmic form.
    The mean ``ey`` is required exactly when the p = 0 row is linear in u
    (alpha > 1).
    """
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0,2], got {alpha}")
    if u <= 0:
        raise ValueError("u must be positive")
    if p == 0:
        if alpha > 1:
            if ey is None:
                raise ValueError("p=0 with alpha > 1 needs the mean ey")
            return 1.0 - u * ey
        if alpha == 1:
            return 1.0 + u * math.log(u)
        return 1.0 - u**alpha * math.gamma(1.0 - alpha)
    if p == 1:
        raise ValueError("p = 1 is not covered by the small-u expansion rows")
    if alpha == 2:
        if p == 2:
            return -2.0 * math.log(u)
        return u ** (2.0 - p) * 2.0 * math.gamma(p - 2.0)
    if alpha == 1:
        return u ** (1.0 - p) * math.gamma(p - 1.0)
    return u ** (alpha - p) * alpha * math.gamma(p - alpha)


def asymptotic_eta_moment(alpha: float, ey: float | None, n_individuals: int, b_list) -> float:
    """Leading-order joint eta moment at finite N for tail index alpha <= 2.

    ``b_list`` must be sorted descending with entries >= 2; ``ey`` is only
    consulted for alpha > 1 (finite mean).  The alpha = 2 row mixes powers
    and logs through g, the number of exponents that are >= 3.
    """
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0,2], got {alpha}")
    b_tuple = _check_b_list(b_list)
    if any(b < 2 for b in b_tuple):
        raise ValueError("asymptotic rows need every exponent >= 2")
    a = len(b_tuple)
    b = sum(b_tuple)
    N = n_individuals
    if alpha == 2:
        if ey is None or ey <= 0:
            raise ValueError("alpha = 2 needs a positive mean ey")
        g = sum(1 for bi in b_tuple if bi >= 3)
        log_val = (
            gammaln(2 * a)
            + a * math.log(2.0)
            + sum(gammaln(bi - 2) for bi in b_tuple if bi >= 3)
            - gammaln(b)
            - 2 * a * math.log(ey)
            + (a - g) * math.log(math.log(N))
            - 2 * a * math.log(N)
        )
        return math.exp(log_val)
    if alpha > 1:
        if ey is None or ey <= 0:
            raise ValueError("1 < alpha < 2 needs a positive mean ey")
        log_val = (
            gammaln(a * alpha)
            + sum(math.log(alpha) + gammaln(bi - alpha) for bi in b_tuple)
            - gammaln(b)
            - a * alpha * math.log(ey)
            - a * alpha * math.log(N)
        )
        return math.exp(log_val)
    if alpha == 1:
        log_val = (
            gammaln(a)
            + sum(gammaln(bi - 1) for bi in b_tuple)
            - gammaln(b)
            - a * math.log(N * math.log(N))
        )
        return math.exp(log_val)
    log_val = (
        gammaln(a)
        + (a - 1) * math.log(alpha)
        + sum(gammaln(bi - alpha) for bi in b_tuple)
        - a * gammaln(1.0 - alpha)
        - gammaln(b)
        - a * math.log(N)
    )
    return math.exp(log_val)


def mohle_ratio(dist: DistSpec, n_individuals: int, b_list) -> float:
    """E[(nu_1)_b1 ... (nu_a)_ba] / (N^(b-a) c_N), all terms by quadrature.

    c_N = N E[eta_1^2] (the pair-coalescence probability); the ratio is the
    finite-N version of the limit that identifies the coalescent's merger
    rates.
    """
    b_tuple = _check_b_list(b_list)
    a = len(b_tuple)
    b = sum(b_tuple)
    N = n_individuals
    log_numerator = falling_factorial_log(N, b) + math.log(
        eta_moment_quadrature(dist, N, b_tuple)
    )
    log_cn = math.log(N) + math.log(eta_moment_quadrature(dist, N, [2]))
    return math.exp(log_numerator - (b - a) * math.log(N) - log_cn)


def pair_coalescence_quadrature(dist: DistSpec, n_individuals: int) -> float:
    """Exact finite-N pair-coalescence probability c_N = N E[eta_1^2]."""
    return n_individuals * eta_moment_quadrature(dist, n_individuals, [2])


def exp_integral_series(z: float, tol: float = 1e-18, max_terms: int = 200) -> float:
    """int_z^inf exp(-x)/x dx by the small-z series
    -gamma - log z - sum_{m>=1} (-1)^m z^m / (m * m!)."""
    if not z > 0:
        raise ValueError("z must be positive")
    acc = -_EULER_GAMMA - math.log(z)
    term = 1.0
    for m in range(1, max_terms + 1):
        term *= -z / m
        contribution = term / m
        acc -= contribution
        if abs(contribution) < tol:
            break
    return acc
