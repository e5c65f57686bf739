"""Reproducible experiment harness.

A sweep runs (budget, trial) cells, each fully determined by the config: the
cell seed is base_seed XOR a hash of (budget, trial), pools and oracles are
drawn from seeds derived from it, and records come back sorted, so serial
and parallel execution produce identical results.  Failed cells are recorded
with NaN risk instead of aborting the sweep.
"""

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from akalls.engine import (
    EmptySupportError,
    PassiveKnnClassifier,
    run_akalls,
)
from akalls.evaluation import (
    ConstantClassifier,
    excess_risk_mc,
    excess_risk_quadrature_1d,
    fit_rate,
    theoretical_rate_exponent,
)
from akalls.problems import Oracle, draw_pool, load_pool_csv, parse_problem
from akalls.stats import StatParams

__all__ = [
    "ConfigError",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "RunRecord",
    "config_from_mapping",
    "config_hash",
    "emit_report",
    "fit_records",
    "load_config",
    "load_records",
    "run_experiment",
    "save_records",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


CSV_COLUMNS = (
    "config_hash",
    "budget",
    "trial",
    "seed",
    "algo",
    "charged_requests",
    "distinct_reveals",
    "s_size",
    "s_nois_size",
    "excess_risk",
    "std_error",
    "wall_ms",
)


@dataclass(frozen=True)
class EngineSettings:
    L: float = 1.0
    C: float = 1.0
    delta: float = 0.3
    epsilon: float = 0.3
    c_scale: float = 1.43e-6


@dataclass(frozen=True)
class BaselineSettings:
    enabled: bool = True
    k_rule: str = "auto"  # "auto" | "sqrt" | integer literal


@dataclass(frozen=True)
class EvalSettings:
    method: str = "auto"  # "auto" | "quadrature" | "monte-carlo"
    m: int = 200_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one seeded sweep."""

    problem: str
    budgets: tuple
    pool_size: Optional[int] = None
    pool_csv: Optional[str] = None
    trials: int = 1
    base_seed: int = 0
    engine: EngineSettings = field(default_factory=EngineSettings)
    baseline: BaselineSettings = field(default_factory=BaselineSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        budgets = tuple(int(b) for b in self.budgets)
        if not budgets or any(b < 1 for b in budgets):
            raise ConfigError("budgets must be a nonempty list of positive integers")
        if any(b >= a for b, a in zip(budgets, budgets[1:])):
            raise ConfigError("budgets must be strictly increasing")
        object.__setattr__(self, "budgets", budgets)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.pool_size is not None and self.pool_size < 1:
            raise ConfigError("pool_size must be >= 1 when given")

    def to_mapping(self) -> dict:
        return asdict(self)


def _settings_from(cls, data: dict, prefix: str):
    known = {f.name: f.type for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        kwargs[key] = value
    return cls(**kwargs)


def config_from_mapping(data: dict) -> ExperimentConfig:
    """Build a config from a flat or nested mapping; unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    nested: dict = {}
    for key, value in data.items():
        if "." in key:
            head, _, tail = key.partition(".")
            nested.setdefault(head, {})
            if not isinstance(nested[head], dict):
                raise ConfigError(f"conflicting values for config key {head!r}")
            nested[head][tail] = value
        elif isinstance(value, dict):
            nested.setdefault(key, {})
            nested[key].update(value)
        else:
            nested[key] = value

    top = {"problem", "budgets", "pool_size", "pool_csv", "trials", "base_seed"}
    kwargs = {}
    for key, value in nested.items():
        if key == "engine":
            kwargs["engine"] = _settings_from(EngineSettings, value, "engine.")
        elif key == "baseline":
            kwargs["baseline"] = _settings_from(BaselineSettings, value, "baseline.")
        elif key == "eval":
            kwargs["eval"] = _settings_from(EvalSettings, value, "eval.")
        elif key in top:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "problem" not in kwargs:
        raise ConfigError("config is missing required key 'problem'")
    if "budgets" not in kwargs:
        raise ConfigError("config is missing required key 'budgets'")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ExperimentConfig:
    """Load a JSON config file (flat keys, dotted keys allowed)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return config_from_mapping(data)


def config_hash(config: ExperimentConfig) -> str:
    """Stable 12-hex-digit digest of the canonicalized config."""
    blob = json.dumps(config.to_mapping(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class RunRecord:
    """One (budget, trial, algorithm) cell of a sweep."""

    config_hash: str
    budget: int
    trial: int
    seed: int
    algo: str
    charged_requests: int
    distinct_reveals: int
    s_size: int
    s_nois_size: int
    excess_risk: float
    std_error: float
    wall_ms: float
    fallback: bool = False
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _derive_seed(*parts) -> int:
    blob = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def trial_seed(base_seed: int, budget: int, trial: int) -> int:
    """Cell seed: base_seed XOR hash(budget, trial); order-independent."""
    return (int(base_seed) ^ _derive_seed("cell", budget, trial)) & (2**63 - 1)


def default_pool_size(spec, budget: int, budgets: Sequence[int]) -> int:
    """Pool-size rule: budget^((2a+d)/(2a+d-ab)) when (a, b) are declared."""
    if spec.declared_smoothness is not None and spec.declared_noise is not None:
        a = spec.declared_smoothness[0]
        b = spec.declared_noise[0]
        expo = (2.0 * a + spec.dim) / (2.0 * a + spec.dim - a * b)
        return max(budget, math.ceil(budget**expo))
    return 10 * max(budgets)


def _evaluate(spec, classifier, settings: EvalSettings, seed: int):
    method = settings.method
    if method == "auto":
        method = "quadrature" if (spec.dim == 1 and spec.pdf is not None) else "monte-carlo"
    if method == "quadrature":
        return excess_risk_quadrature_1d(spec, classifier)
    if method == "monte-carlo":
        return excess_risk_mc(spec, classifier, settings.m, seed)
    raise ConfigError(f"unknown eval method {settings.method!r}")


def _run_cell(config: ExperimentConfig, chash: str, budget: int, trial: int) -> list:
    spec = parse_problem(config.problem)
    seed = trial_seed(config.base_seed, budget, trial)
    pool_seed = _derive_seed(seed, "pool")
    oracle_seed = _derive_seed(seed, "oracle")
    eval_seed = _derive_seed(seed, "eval")
    records = []

    if config.pool_csv is not None:
        pool = load_pool_csv(config.pool_csv, dim=spec.dim)
    else:
        w = config.pool_size or default_pool_size(spec, budget, config.budgets)
        pool = draw_pool(spec, max(w, budget), pool_seed)

    eng = config.engine
    params = StatParams(c_scale=eng.c_scale)

    start = time.perf_counter()
    try:
        oracle = Oracle(spec, pool, oracle_seed)
        classifier, state, metrics = run_akalls(
            spec, pool, oracle, budget,
            L=eng.L, C=eng.C, delta=eng.delta, epsilon=eng.epsilon, params=params,
        )
        fallback = classifier.support_size == 0
        target = ConstantClassifier(1) if fallback else classifier
        est = _evaluate(spec, target, config.eval, eval_seed)
        records.append(
            RunRecord(
                config_hash=chash, budget=budget, trial=trial, seed=seed,
                algo="akalls",
                charged_requests=metrics.charged_requests,
                distinct_reveals=metrics.distinct_reveals,
                s_size=len(state.informative),
                s_nois_size=len(state.noisy),
                excess_risk=est.excess_risk,
                std_error=est.std_error,
                wall_ms=(time.perf_counter() - start) * 1e3,
                fallback=fallback,
            )
        )
    except Exception as exc:  # record the failure, keep the sweep alive
        records.append(
            RunRecord(
                config_hash=chash, budget=budget, trial=trial, seed=seed,
                algo="akalls", charged_requests=0, distinct_reveals=0,
                s_size=0, s_nois_size=0,
                excess_risk=math.nan, std_error=math.nan,
                wall_ms=(time.perf_counter() - start) * 1e3,
                error=f"{type(exc).__name__}: {exc}",
            )
        )

    if config.baseline.enabled:
        start = time.perf_counter()
        try:
            oracle_b = Oracle(spec, pool, oracle_seed)
            rule = config.baseline.k_rule
            if rule == "auto":
                k = None
            elif rule == "sqrt":
                k = math.ceil(math.sqrt(budget))
            else:
                k = int(rule)
            baseline = PassiveKnnClassifier(spec, pool, oracle_b, budget, k=k)
            est = _evaluate(spec, baseline, config.eval, eval_seed)
            records.append(
                RunRecord(
                    config_hash=chash, budget=budget, trial=trial, seed=seed,
                    algo="passive",
                    charged_requests=budget,
                    distinct_reveals=oracle_b.distinct_reveals,
                    s_size=budget, s_nois_size=0,
                    excess_risk=est.excess_risk,
                    std_error=est.std_error,
                    wall_ms=(time.perf_counter() - start) * 1e3,
                )
            )
        except Exception as exc:
            records.append(
                RunRecord(
                    config_hash=chash, budget=budget, trial=trial, seed=seed,
                    algo="passive", charged_requests=0, distinct_reveals=0,
                    s_size=0, s_nois_size=0,
                    excess_risk=math.nan, std_error=math.nan,
                    wall_ms=(time.perf_counter() - start) * 1e3,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """Run the sweep; returns records sorted by (budget, trial, algo)."""
    chash = config_hash(config)
    cells = [(b, t) for b in config.budgets for t in range(config.trials)]
    records: list = []
    if workers <= 1:
        for budget, trial in cells:
            records.extend(_run_cell(config, chash, budget, trial))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, config, chash, b, t) for b, t in cells]
            for fut in futures:
                records.extend(fut.result())
    records.sort(key=lambda r: (r.budget, r.trial, r.algo))
    return records


# ---------------------------------------------------------------------------
# Persistence and reports
# ---------------------------------------------------------------------------


def save_records(records: list, path: str, config: Optional[ExperimentConfig] = None) -> None:
    """Write the canonical JSON record store."""
    payload = {
        "config": config.to_mapping() if config else None,
        "records": [asdict(r) for r in records],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_records(path: str) -> tuple:
    """Read a record store; returns (records, config_mapping_or_None)."""
    with open(path) as fh:
        payload = json.load(fh)
    records = [RunRecord(**r) for r in payload["records"]]
    return records, payload.get("config")


def records_to_csv(records: list) -> str:
    """Fixed-column CSV; floats use repr so parsing round-trips exactly."""
    if not records:
        raise ValueError("no records to emit")
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        row = []
        for col in CSV_COLUMNS:
            val = getattr(r, col)
            row.append(repr(float(val)) if isinstance(val, float) else str(val))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list:
    """Parse ``records_to_csv`` output back into records (CSV fields only)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError("unrecognized CSV header")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        d = dict(zip(CSV_COLUMNS, parts))
        out.append(
            RunRecord(
                config_hash=d["config_hash"],
                budget=int(d["budget"]),
                trial=int(d["trial"]),
                seed=int(d["seed"]),
                algo=d["algo"],
                charged_requests=int(d["charged_requests"]),
                distinct_reveals=int(d["distinct_reveals"]),
                s_size=int(d["s_size"]),
                s_nois_size=int(d["s_nois_size"]),
                excess_risk=float(d["excess_risk"]),
                std_error=float(d["std_error"]),
                wall_ms=float(d["wall_ms"]),
            )
        )
    return out


def median_curve(records: list, algo: str = "akalls") -> list:
    """Per-budget median excess risk over surviving trials of one algorithm."""
    by_budget: dict = {}
    for r in records:
        if r.algo == algo and not r.failed and math.isfinite(r.excess_risk):
            by_budget.setdefault(r.budget, []).append(r.excess_risk)
    return [(b, float(np.median(v))) for b, v in sorted(by_budget.items())]


def fit_records(records: list, algo: str = "akalls") -> dict:
    """Rate fit on the per-budget median curve of one algorithm."""
    curve = median_curve(records, algo)
    usable = [(n, e) for n, e in curve if e > 0]
    slope, intercept, r2 = fit_rate(usable)
    attrition = sum(1 for r in records if r.algo == algo and r.failed)
    return {
        "algo": algo,
        "curve": curve,
        "slope": slope,
        "intercept": intercept,
        "r_squared": r2,
        "failed_trials": attrition,
    }


def render_svg(records: list, config_mapping: Optional[dict]) -> str:
    """Log-log plot of median excess risk vs budget, with reference lines.

    Draws the fitted rate line always (gid ``fitted-rate-line``) and the
    theoretical rate line (gid ``theoretical-rate-line``) when the problem
    declares both smoothness and noise parameters.
    """
    import io

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curve = median_curve(records, "akalls")
    if not curve:
        raise ValueError("no successful records to plot")
    budgets = np.asarray([b for b, _ in curve], dtype=float)
    medians = np.asarray([e for _, e in curve], dtype=float)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(budgets, medians, "o-", label="engine (median)")
    pas = median_curve(records, "passive")
    if pas:
        ax.loglog([b for b, _ in pas], [e for _, e in pas], "s--", label="passive k-NN")

    positive = medians > 0
    if positive.sum() >= 3:
        slope, intercept, _ = fit_rate(list(zip(budgets[positive], medians[positive])))
        ref = np.exp(intercept) * budgets**slope
        (line,) = ax.loglog(budgets, ref, "-", color="gray",
                            label=f"fitted slope {slope:.3f}")
        line.set_gid("fitted-rate-line")

    declared = None
    if config_mapping:
        try:
            spec = parse_problem(config_mapping["problem"])
            if spec.declared_smoothness and spec.declared_noise:
                declared = (
                    spec.declared_smoothness[0],
                    spec.declared_noise[0],
                    spec.dim,
                )
        except Exception:
            declared = None
    if declared is not None:
        expo = theoretical_rate_exponent(*declared)
        anchor = medians[0] if medians[0] > 0 else 1.0
        ref = anchor * (budgets / budgets[0]) ** expo
        (line,) = ax.loglog(budgets, ref, ":", color="black",
                            label=f"theoretical slope {expo:.3f}")
        line.set_gid("theoretical-rate-line")

    ax.set_xlabel("label budget n")
    ax.set_ylabel("median excess risk")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    return buf.getvalue()


def emit_report(records: list, fmt: str, out_path: str,
                config_mapping: Optional[dict] = None) -> str:
    """Write one report file; returns the path written."""
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        with open(out_path, "w") as fh:
            fh.write(records_to_csv(records))
    elif fmt == "json":
        payload = {"config": config_mapping, "records": [asdict(r) for r in records]}
        with open(out_path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    elif fmt == "svg":
        with open(out_path, "w") as fh:
            fh.write(render_svg(records, config_mapping))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return out_path
