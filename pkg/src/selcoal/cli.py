"""Config-driven experiment runner.

Usage:  selcoal <subcommand> --config FILE [--seed S] [--out DIR] [--threads K]

The config is flat key-value text with one section per subcommand (INI
syntax); every run needs an explicit master seed, either in the config or
via --seed.  Each run writes a JSON summary (plus command-specific CSV
tables) whose payload is byte-identical across repeats and thread counts;
wall-clock information is quarantined in the summary's "metadata" field.

Exit codes: 0 all checks passed (or nothing to check), 1 a tolerance check
failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import coaltheory, frontprop, genealogy, moments
from .fitnesswf import ConstantY, ExponentialY, InverseExponential, ParetoTail, sample_parents, sample_Y, normalize_fitness
from .frontprop import FrontModel, GumbelNoise
from .seeding import stream

COMMANDS = (
    "simulate-front",
    "simulate-wf",
    "estimate-cn",
    "merger-stats",
    "verify-rates",
    "verify-moments",
    "front-speed",
    "reference-coalescent",
)


class ConfigError(Exception):
    """Carries every violation found while validating a config."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    values: dict
    seed: int


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _parse_str(text: str) -> str:
    return text.strip()


@dataclass(frozen=True)
class _Field:
    parse: callable
    describe: str
    check: callable = None  # value -> error string or None
    required: bool = False
    default: object = None


def _min_check(lo, name):
    def check(v):
        if v < lo:
            return f"{name} must be >= {lo}, got {v}"
        return None

    return check


def _range_check(lo, hi, name, open_interval=False):
    def check(v):
        ok = lo < v < hi if open_interval else lo <= v <= hi
        if not ok:
            bounds = f"({lo},{hi})" if open_interval else f"[{lo},{hi}]"
            return f"{name} outside {bounds}: {v}"
        return None

    return check


def _choice_check(options, name):
    def check(v):
        if v not in options:
            return f"{name} must be one of {sorted(options)}, got {v!r}"
        return None

    return check


_MODEL_CHOICES = {"pareto", "inverse-exponential", "exponential", "constant"}
_MODEL_WITH_FRONT = _MODEL_CHOICES | {"gumbel-front"}

_MODEL_FIELDS = {
    "model": _Field(_parse_str, "fitness family", _choice_check(_MODEL_CHOICES, "model"), required=True),
    "alpha": _Field(_parse_float, "tail index", _min_check(1e-12, "alpha")),
}


def _front_fields():
    return {
        "rho": _Field(_parse_float, "gumbel location", default=0.0),
        "beta": _Field(_parse_float, "inverse temperature", _min_check(1e-12, "beta"), default=1.0),
    }


_SCHEMAS: dict[str, dict[str, _Field]] = {
    "simulate-front": {
        "noise": _Field(
            _parse_str,
            "noise family",
            _choice_check({"gumbel", "exponential", "uniform", "deterministic"}, "noise"),
            default="gumbel",
        ),
        "rho": _Field(_parse_float, "gumbel location", default=0.0),
        "beta": _Field(_parse_float, "inverse temperature", _min_check(1e-12, "beta"), default=1.0),
        "rate": _Field(_parse_float, "exponential rate", _min_check(1e-12, "rate"), default=1.0),
        "lo": _Field(_parse_float, "uniform lower end", default=0.0),
        "hi": _Field(_parse_float, "uniform upper end", default=1.0),
        "value": _Field(_parse_float, "deterministic step", default=0.0),
        "n": _Field(_parse_int, "population size", _min_check(1, "n"), required=True),
        "generations": _Field(_parse_int, "generations", _min_check(1, "generations"), required=True),
    },
    "simulate-wf": {
        **_MODEL_FIELDS,
        "n": _Field(_parse_int, "population size", _min_check(1, "n"), required=True),
        "generations": _Field(_parse_int, "generations", _min_check(1, "generations"), required=True),
    },
    "estimate-cn": {
        "model": _Field(
            _parse_str, "model family", _choice_check(_MODEL_WITH_FRONT, "model"), required=True
        ),
        "alpha": _Field(_parse_float, "tail index", _min_check(1e-12, "alpha")),
        **_front_fields(),
        "n": _Field(_parse_int, "population size", _min_check(2, "n")),
        "n_grid": _Field(_parse_int_list, "population sizes", None),
        "replicates": _Field(_parse_int, "replicates", _min_check(1, "replicates"), required=True),
        "expected": _Field(_parse_float, "expected c_N", None),
        "rel_tol": _Field(_parse_float, "relative tolerance", _range_check(0, 1, "rel_tol", True)),
    },
    "merger-stats": {
        "model": _Field(
            _parse_str, "model family", _choice_check(_MODEL_WITH_FRONT, "model"), required=True
        ),
        "alpha": _Field(_parse_float, "tail index", _min_check(1e-12, "alpha")),
        **_front_fields(),
        "n": _Field(_parse_int, "population size", _min_check(2, "n"), required=True),
        "sample_size": _Field(_parse_int, "sample size", _min_check(2, "sample_size"), required=True),
        "min_events": _Field(_parse_int, "first-merger events", _min_check(1, "min_events"), required=True),
        "expected_triple_fraction": _Field(_parse_float, "expected triple fraction", None),
        "abs_tol": _Field(_parse_float, "absolute tolerance", _range_check(0, 1, "abs_tol", True), default=0.05),
    },
    "verify-rates": {
        "alpha": _Field(
            _parse_float, "tail index", _range_check(0.0, 2.0, "alpha", True), required=True
        ),
        "max_b": _Field(_parse_int, "largest block count", _min_check(2, "max_b"), default=12),
        "rel_tol": _Field(_parse_float, "closed form vs quadrature tolerance", _range_check(0, 1, "rel_tol", True), default=1e-8),
        "consistency_tol": _Field(_parse_float, "consistency residual tolerance", _range_check(0, 1, "consistency_tol", True), default=1e-9),
    },
    "verify-moments": {
        **_MODEL_FIELDS,
        "n": _Field(_parse_int, "population size", _min_check(1, "n"), required=True),
        "b_list": _Field(_parse_int_list, "moment exponents", None, required=True),
        "mc_samples": _Field(_parse_int, "Monte Carlo samples", _min_check(1, "mc_samples"), default=10**5),
        "rel_tol": _Field(_parse_float, "quadrature vs MC tolerance", _range_check(0, 1, "rel_tol", True), default=0.02),
    },
    "front-speed": {
        "rho": _Field(_parse_float, "gumbel location", default=0.0),
        "beta": _Field(_parse_float, "inverse temperature", _min_check(1e-12, "beta"), default=1.0),
        "n": _Field(_parse_int, "population size", _min_check(1, "n"), required=True),
        "generations": _Field(_parse_int, "generations", _min_check(2, "generations"), required=True),
        "burn_in": _Field(_parse_int, "burn-in generations", _min_check(0, "burn_in"), default=0),
        "oracle_samples": _Field(_parse_int, "oracle sample count", _min_check(1, "oracle_samples"), default=10**6),
        "rel_tol": _Field(_parse_float, "speed tolerance", _range_check(0, 1, "rel_tol", True), default=0.01),
    },
    "reference-coalescent": {
        "family": _Field(
            _parse_str,
            "coalescent family",
            _choice_check({"kingman", "bolthausen-sznitman", "beta", "discrete-xi"}, "family"),
            required=True,
        ),
        "alpha": _Field(_parse_float, "tail index", _min_check(1e-12, "alpha")),
        "sample_size": _Field(_parse_int, "sample size", _min_check(2, "sample_size"), required=True),
        "replicates": _Field(_parse_int, "replicates", _min_check(1, "replicates"), required=True),
        "horizon": _Field(_parse_float, "time horizon", _min_check(0.0, "horizon"), default=math.inf),
    },
}

_SEED_FIELD = _Field(_parse_int, "master seed", None)


def _cross_checks(command: str, values: dict, errors: list[str]) -> None:
    model = values.get("model")
    if model == "pareto" and values.get("alpha") is None:
        errors.append("model=pareto requires alpha")
    if command == "estimate-cn":
        if values.get("n") is None and not values.get("n_grid"):
            errors.append("estimate-cn requires n or n_grid")
        if (values.get("expected") is None) != (values.get("rel_tol") is None):
            errors.append("expected and rel_tol must be given together")
    if command == "verify-moments" and values.get("b_list") is not None:
        b_list = values["b_list"]
        if not b_list or any(b < 1 for b in b_list):
            errors.append("b_list entries must be >= 1")
        if sorted(b_list, reverse=True) != b_list:
            errors.append("b_list must be sorted descending")
    if command == "reference-coalescent":
        family = values.get("family")
        if family in ("beta", "discrete-xi") and values.get("alpha") is None:
            errors.append(f"family={family} requires alpha")
        if family == "beta" and values.get("alpha") is not None and not 0 < values["alpha"] < 2:
            errors.append(f"alpha outside (0,2): {values['alpha']}")
        if family == "discrete-xi" and values.get("alpha") is not None and not 0 < values["alpha"] < 1:
            errors.append(f"alpha outside (0,1): {values['alpha']}")
    if command == "front-speed":
        gens, burn = values.get("generations"), values.get("burn_in")
        if gens is not None and burn is not None and not gens > burn:
            errors.append("generations must exceed burn_in")


def parse_config(text: str, command: str, seed_override: int | None = None) -> ExperimentConfig:
    """Parse and validate one command's section of a config file.

    Every violation is collected (unknown keys, missing required keys,
    range failures, missing seed) and raised as a single ConfigError.
    """
    if command not in _SCHEMAS:
        raise ConfigError([f"unknown command {command!r}"])
    parser = configparser.ConfigParser()
    errors: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc
    if not parser.has_section(command):
        raise ConfigError([f"config has no [{command}] section"])
    schema = _SCHEMAS[command]
    raw = dict(parser.items(command))
    seed = seed_override
    if "seed" in raw:
        try:
            parsed = _SEED_FIELD.parse(raw.pop("seed"))
            if seed is None:
                seed = parsed
        except ValueError:
            errors.append("seed must be an integer")
    if seed is None:
        errors.append("master seed is mandatory (config key 'seed' or --seed)")
    values: dict = {}
    for key, field_spec in schema.items():
        if key in raw:
            try:
                value = field_spec.parse(raw.pop(key))
            except ValueError:
                errors.append(f"key {key!r}: cannot parse as {field_spec.describe}")
                continue
            if field_spec.check is not None:
                message = field_spec.check(value)
                if message:
                    errors.append(message)
                    continue
            values[key] = value
        else:
            if field_spec.required:
                errors.append(f"missing required key {key!r} ({field_spec.describe})")
            values[key] = field_spec.default
    for key in raw:
        errors.append(f"unknown key {key!r} for command {command}")
    _cross_checks(command, values, errors)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(command=command, values=values, seed=seed)


# ---------------------------------------------------------------------------
# model construction and serialization helpers
# ---------------------------------------------------------------------------


def _build_model(values: dict):
    name = values["model"]
    if name == "pareto":
        return ParetoTail(values["alpha"])
    if name == "inverse-exponential":
        return InverseExponential()
    if name == "exponential":
        return ExponentialY()
    if name == "constant":
        return ConstantY()
    if name == "gumbel-front":
        return FrontModel(GumbelNoise(values.get("rho", 0.0), values["beta"]), beta=values["beta"])
    raise ValueError(f"unknown model {name!r}")


def _signature_key(sig) -> str:
    sizes = "+".join(str(s) for s in sig.group_sizes) if sig.group_sizes else "-"
    return f"{sig.b}:{sizes}:{sig.s}"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _run_simulate_front(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    noise_name = v["noise"]
    if noise_name == "gumbel":
        noise = GumbelNoise(v["rho"], v["beta"])
    elif noise_name == "exponential":
        noise = frontprop.ExponentialNoise(v["rate"])
    elif noise_name == "uniform":
        noise = frontprop.UniformNoise(v["lo"], v["hi"])
    else:
        noise = frontprop.DeterministicNoise(v["value"])
    history, final, parents = frontprop.run_front(v["n"], noise, v["generations"], seed=stream(cfg.seed, 0))
    frontprop.write_trajectory_csv(out / "trajectory.csv", history, parents)
    results = {
        "final_front_position": frontprop.front_position(final, v["beta"]),
        "front_displacement": frontprop.front_position(final, v["beta"])
        - frontprop.front_position(history[0], v["beta"]),
        "trajectory_csv": "trajectory.csv",
    }
    return results, []


def _run_simulate_wf(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    spec = _build_model(v)
    rng = stream(cfg.seed, 0)
    path = out / "trajectory.csv"
    total_coalescing = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "particle_index", "position", "parent_index"])
        for t in range(v["generations"]):
            y = sample_Y(spec, v["n"], rng)
            record = sample_parents(normalize_fitness(y), rng)
            counts = record.offspring_counts
            total_coalescing += int(np.sum(counts * (counts - 1)))
            for j in range(v["n"]):
                writer.writerow([t + 1, j, repr(float(y[j])), int(record.parent_of[j])])
    pairs = v["generations"] * v["n"] * (v["n"] - 1)
    results = {
        "mean_pair_coalescence": total_coalescing / pairs,
        "trajectory_csv": "trajectory.csv",
    }
    return results, []


def _cn_for_n(cfg: ExperimentConfig, n: int, index: int) -> dict:
    v = cfg.values
    model = _build_model(v)
    stats = genealogy.estimate_cN(model, n, v["replicates"], seed=stream(cfg.seed, 1, index))
    return {
        "n": n,
        "pair_estimate": stats.pair_coalescence_estimate,
        "pair_se": stats.standard_error,
        "nu_estimate": stats.nu_pair_estimate,
        "nu_se": stats.nu_pair_se,
        "replicates": v["replicates"],
    }


def _run_estimate_cn(cfg: ExperimentConfig, out: Path, threads: int) -> tuple[dict, list[dict]]:
    v = cfg.values
    grid = v["n_grid"] if v.get("n_grid") else [v["n"]]
    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda pair: _cn_for_n(cfg, pair[1], pair[0]), enumerate(grid)))
    else:
        rows = [_cn_for_n(cfg, n, i) for i, n in enumerate(grid)]
    with open(out / "cn.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "pair_estimate", "pair_se", "nu_estimate", "nu_se", "replicates"])
        for row in rows:
            writer.writerow(
                [row["n"], repr(row["pair_estimate"]), repr(row["pair_se"]), repr(row["nu_estimate"]), repr(row["nu_se"]), row["replicates"]]
            )
    checks = []
    if v.get("expected") is not None:
        for row in rows:
            observed = row["nu_estimate"]
            ok = abs(observed - v["expected"]) <= v["rel_tol"] * abs(v["expected"])
            checks.append(
                {
                    "name": f"c_N(n={row['n']}) within {v['rel_tol']:.3g} of {v['expected']:.6g}",
                    "observed": observed,
                    "expected": v["expected"],
                    "tolerance": v["rel_tol"],
                    "passed": ok,
                }
            )
    return {"grid": rows, "table_csv": "cn.csv"}, checks


def _run_merger_stats(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    model = _build_model(v)
    stats = genealogy.first_merger_signatures(
        model, v["n"], v["sample_size"], v["min_events"], seed=cfg.seed
    )
    histogram = {_signature_key(sig): count for sig, count in sorted(
        stats.merger_counts.items(), key=lambda kv: _signature_key(kv[0])
    )}
    events = stats.merge_events()
    fractions = {
        _signature_key(sig): frac
        for sig, frac in sorted(
            stats.signature_fractions_given_merge().items(), key=lambda kv: _signature_key(kv[0])
        )
    }
    triple_key = f"{v['sample_size']}:{v['sample_size']}:0"
    triple_fraction = fractions.get(triple_key, 0.0)
    triple_se = math.sqrt(max(triple_fraction * (1 - triple_fraction), 0.0) / max(events, 1))
    results = {
        "model": v["model"],
        "n": v["n"],
        "sample_size": v["sample_size"],
        "replicates": stats.total_merger_opportunities,
        "c_N_estimate": stats.pair_coalescence_estimate,
        "c_N_se": stats.standard_error,
        "merge_events": events,
        "signature_histogram": histogram,
        "signature_fractions_given_merge": fractions,
        "full_merger_fraction": triple_fraction,
        "full_merger_fraction_se": triple_se,
    }
    with open(out / "signatures.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["signature", "count", "fraction_given_merge"])
        for key, count in histogram.items():
            writer.writerow([key, count, repr(fractions.get(key, 0.0))])
    checks = []
    if v.get("expected_triple_fraction") is not None:
        ok = abs(triple_fraction - v["expected_triple_fraction"]) <= v["abs_tol"]
        checks.append(
            {
                "name": f"full-merger fraction within {v['abs_tol']} of {v['expected_triple_fraction']}",
                "observed": triple_fraction,
                "expected": v["expected_triple_fraction"],
                "tolerance": v["abs_tol"],
                "passed": ok,
            }
        )
    return results, checks


def _run_verify_rates(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    alpha, max_b = v["alpha"], v["max_b"]
    measure = coaltheory.BetaMeasure(2.0 - alpha, alpha)
    entries = []
    worst = 0.0
    for b in range(2, max_b + 1):
        for k in range(2, b + 1):
            closed = coaltheory.beta_rate_closed_form(alpha, b, k)
            quadr = coaltheory.lambda_rate_quadrature(measure, b, k)
            entries.append((b, k, closed, "closed_form"))
            entries.append((b, k, quadr, "quadrature"))
            worst = max(worst, abs(closed - quadr) / closed)
    coaltheory.export_rate_table_csv(out / "rates.csv", entries)
    table = coaltheory.build_rate_table(lambda b, k: coaltheory.beta_rate_closed_form(alpha, b, k), max_b)
    report = coaltheory.check_consistency(table, tol=v["consistency_tol"])
    results = {
        "alpha": alpha,
        "max_b": max_b,
        "max_relative_gap": worst,
        "max_consistency_residual": report.max_residual,
        "table_csv": "rates.csv",
    }
    checks = [
        {
            "name": "closed form vs quadrature",
            "observed": worst,
            "expected": 0.0,
            "tolerance": v["rel_tol"],
            "passed": worst <= v["rel_tol"],
        },
        {
            "name": "consistency residuals",
            "observed": report.max_residual,
            "expected": 0.0,
            "tolerance": v["consistency_tol"],
            "passed": report.max_residual <= v["consistency_tol"],
        },
    ]
    return results, checks


def _run_verify_moments(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    dist = _build_model(v)
    n, b_list = v["n"], v["b_list"]
    quadrature_value = moments.eta_moment_quadrature(dist, n, b_list)
    mc_value, mc_se = moments.eta_moment_mc(dist, n, b_list, v["mc_samples"], seed=stream(cfg.seed, 2))
    asymptotic_value = None
    alpha = v.get("alpha")
    if alpha is not None and 0 < alpha <= 2 and all(b >= 2 for b in b_list):
        ey = moments.mean_Y(dist) if alpha > 1 else None
        asymptotic_value = moments.asymptotic_eta_moment(alpha, ey, n, b_list)
    gap = abs(quadrature_value - mc_value)
    tolerance = v["rel_tol"] * quadrature_value + 3.0 * mc_se
    results = {
        "n": n,
        "b_list": b_list,
        "quadrature_value": quadrature_value,
        "mc_value": mc_value,
        "mc_se": mc_se,
        "asymptotic_value": asymptotic_value,
        "ratio_quadrature_to_asymptotic": (
            quadrature_value / asymptotic_value if asymptotic_value else None
        ),
        "table_csv": "moments.csv",
    }
    with open(out / "moments.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "alpha", "b_list", "quadrature_value", "mc_value", "mc_se", "asymptotic_value", "ratio"])
        writer.writerow(
            [
                n,
                alpha if alpha is not None else "",
                "+".join(str(b) for b in b_list),
                repr(quadrature_value),
                repr(mc_value),
                repr(mc_se),
                repr(asymptotic_value) if asymptotic_value else "",
                repr(results["ratio_quadrature_to_asymptotic"]) if asymptotic_value else "",
            ]
        )
    checks = [
        {
            "name": "quadrature vs Monte Carlo",
            "observed": gap,
            "expected": 0.0,
            "tolerance": tolerance,
            "passed": gap <= tolerance,
        }
    ]
    return results, checks


def _run_front_speed(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    noise = GumbelNoise(v["rho"], v["beta"])
    measured = frontprop.measure_front_speed(
        v["n"], noise, v["beta"], v["generations"], v["burn_in"], seed=stream(cfg.seed, 3)
    )
    oracle, oracle_se = frontprop.gumbel_speed_oracle(
        v["n"], v["rho"], v["beta"], v["oracle_samples"], seed=stream(cfg.seed, 4)
    )
    gap = abs(measured - oracle)
    results = {
        "measured_speed": measured,
        "oracle_speed": oracle,
        "oracle_se": oracle_se,
        "relative_gap": gap / abs(oracle),
    }
    checks = [
        {
            "name": f"front speed within {v['rel_tol']:.3g} of oracle",
            "observed": measured,
            "expected": oracle,
            "tolerance": v["rel_tol"],
            "passed": gap <= v["rel_tol"] * abs(oracle),
        }
    ]
    return results, checks


def _run_reference_coalescent(cfg: ExperimentConfig, out: Path) -> tuple[dict, list[dict]]:
    v = cfg.values
    family, n = v["family"], v["sample_size"]
    histogram: dict[str, int] = {}
    times = []
    for r in range(v["replicates"]):
        rng = stream(cfg.seed, 5, r)
        if family == "discrete-xi":
            path = coaltheory.simulate_discrete_xi(n, v["alpha"], generations=10**6, seed=rng)
        else:
            if family == "kingman":
                rates = coaltheory.kingman_rate
            elif family == "bolthausen-sznitman":
                rates = coaltheory.bsz_rate
            else:
                rates = lambda b, k: coaltheory.beta_rate_closed_form(v["alpha"], b, k)
            path = coaltheory.simulate_lambda_coalescent(n, rates, horizon=v["horizon"], seed=rng)
        times.append(path.times[-1])
        for sig in path.signatures():
            if sig.is_merger:
                key = _signature_key(sig)
                histogram[key] = histogram.get(key, 0) + 1
    results = {
        "family": family,
        "sample_size": n,
        "replicates": v["replicates"],
        "mean_absorption_time": float(np.mean(times)),
        "signature_histogram": dict(sorted(histogram.items())),
    }
    return results, []


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run(config: ExperimentConfig, out_dir, threads: int = 1) -> int:
    """Execute a validated config; write reports; return the exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.command == "simulate-front":
        results, checks = _run_simulate_front(config, out)
    elif config.command == "simulate-wf":
        results, checks = _run_simulate_wf(config, out)
    elif config.command == "estimate-cn":
        results, checks = _run_estimate_cn(config, out, threads)
    elif config.command == "merger-stats":
        results, checks = _run_merger_stats(config, out)
    elif config.command == "verify-rates":
        results, checks = _run_verify_rates(config, out)
    elif config.command == "verify-moments":
        results, checks = _run_verify_moments(config, out)
    elif config.command == "front-speed":
        results, checks = _run_front_speed(config, out)
    elif config.command == "reference-coalescent":
        results, checks = _run_reference_coalescent(config, out)
    else:
        raise ValueError(f"unknown command {config.command!r}")
    passed = bool(all(c["passed"] for c in checks))
    summary = {
        "metadata": {"created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat()},
        "artifact": {"name": "selcoal", "version": __version__},
        "command": config.command,
        "config": _json_ready({**config.values, "seed": config.seed}),
        "results": _json_ready(results),
        "checks": _json_ready(checks),
        "passed": passed,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="selcoal", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the key-value config file")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text, args.command, seed_override=args.seed)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    return run(config, args.out, threads=max(1, args.threads))


if __name__ == "__main__":
    sys.exit(main())
