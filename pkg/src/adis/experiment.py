"""Replicated experiment harness: MSE-vs-samples and variance-vs-samples curves.

Methods are compared on a per-replication budget of drawn samples.  The plain
importance-sampling baseline ("lw") gets a configurable multiple of each
checkpoint budget (default 2x) to compensate the adaptive methods' per-sample
update overhead.  Replication r of every method uses the stream seeded with
master_seed XOR r, and the whole run is deterministic for a fixed master seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from . import exact
from .adapt import AdaptConfig, GradientKind, ProjectionMode, Trace, adapt_loop
from .errors import ConfigError
from .model import Assignment, EstimationProblem, InfluenceDiagram, model_from_dict
from .sampling import (
    DEFAULT_SEED,
    SamplerParams,
    clamp_row,
    draw,
    epsilon_floor,
    init_params,
    replication_seed,
    weight,
)


@dataclass(frozen=True)
class MethodSpec:
    """One compared method: an adaptive configuration, or the plain-IS baseline.

    ``adapt=None`` means importance sampling from a fixed sampler (no updates),
    which is likelihood weighting when the initial sampler is the prior.
    ``init`` optionally overrides the initial sampler tables (rows per free
    variable); adaptive methods re-clamp the override to their epsilon floor.
    """

    name: str
    adapt: AdaptConfig | None = None
    init: dict[str, tuple[tuple[float, ...], ...]] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: EstimationProblem
    methods: tuple[MethodSpec, ...]
    replications: int
    checkpoints: tuple[int, ...]
    lw_multiplier: int = 2
    master_seed: int = DEFAULT_SEED
    variance_stride: int = 10

    def check(self) -> None:
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.checkpoints:
            raise ConfigError("at least one checkpoint is required")
        if any(c < 1 for c in self.checkpoints) or list(self.checkpoints) != sorted(set(self.checkpoints)):
            raise ConfigError("checkpoints must be positive and strictly increasing")
        if self.lw_multiplier < 1:
            raise ConfigError("lw_multiplier must be >= 1")
        if self.variance_stride < 1:
            raise ConfigError("variance_stride must be >= 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate method names: {names}")
        for m in self.methods:
            if m.adapt is not None:
                m.adapt.check()
                if m.adapt.batch_size > min(self.checkpoints):
                    raise ConfigError(
                        f"method '{m.name}': batch size {m.adapt.batch_size} exceeds "
                        f"the smallest checkpoint {min(self.checkpoints)}")


@dataclass(frozen=True)
class MseRow:
    method: str
    checkpoint_samples: int
    mse: float
    replications: int
    sign_p_vs_lw: float | None  # one-sided sign test against the baseline; informational


@dataclass(frozen=True)
class VarianceRow:
    method: str
    t: int
    total_samples: int
    true_variance: float


@dataclass(frozen=True)
class ExperimentResult:
    true_value: float
    mse_rows: tuple[MseRow, ...]
    variance_rows: tuple[VarianceRow, ...]
    # method name -> checkpoint -> per-replication estimates, for analysis/tests
    estimates: dict[str, dict[int, tuple[float, ...]]]


def _initial_params(method: MethodSpec, problem: EstimationProblem) -> SamplerParams | None:
    """Resolve a method's starting sampler; None defers to init_params inside the loop."""
    gamma = method.adapt.gamma if method.adapt is not None else 0.0
    if method.init is None:
        if method.adapt is not None:
            return None
        return init_params(problem, 0.0)
    tables: dict[str, np.ndarray] = {}
    for name in problem.free_vars:
        if name not in method.init:
            raise ConfigError(f"method '{method.name}': init misses variable '{name}'")
        rows = np.array(method.init[name], dtype=float)
        expected = (len(problem.network.cpts[name].rows), problem.arity[name])
        if rows.shape != expected:
            raise ConfigError(
                f"method '{method.name}': init table for '{name}' has shape "
                f"{rows.shape}, expected {expected}")
        if gamma > 0.0:
            eps = epsilon_floor(gamma, problem.arity[name])
            rows = np.vstack([clamp_row(r, eps) for r in rows])
        tables[name] = rows
    return SamplerParams(tables)


def variance_curve(problem: EstimationProblem, trace: Trace,
                   stride: int) -> list[tuple[int, float]]:
    """(total samples drawn so far, exact weight variance) at every stride-th sampler.

    The first point is the sampler of step 1, i.e. the initial distribution at
    zero consumed samples.
    """
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    points: list[tuple[int, float]] = []
    consumed = 0
    for idx, step in enumerate(trace.steps):
        if idx % stride == 0:
            points.append((consumed, exact.weight_variance(problem, step.theta)))
        consumed += step.sample_count
    return points


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """MSE per method and checkpoint over R replications, plus variance curves."""
    config.check()
    problem = config.problem
    g_true = exact.true_value(problem)
    c_max = max(config.checkpoints)
    baseline = next((m for m in config.methods if m.adapt is None), None)

    estimates: dict[str, dict[int, tuple[float, ...]]] = {}
    variance_rows: list[VarianceRow] = []

    for method in config.methods:
        per_cp: dict[int, list[float]] = {c: [] for c in config.checkpoints}
        initial = _initial_params(method, problem)
        if method.adapt is None:
            assert initial is not None
            n_total = config.lw_multiplier * c_max
            for r in range(config.replications):
                rng = np.random.default_rng(replication_seed(config.master_seed, r))
                ws = [weight(problem, initial, draw(initial, problem, rng)).weight
                      for _ in range(n_total)]
                for c in config.checkpoints:
                    k = config.lw_multiplier * c
                    per_cp[c].append(math.fsum(ws[:k]) / k)
            variance_rows.append(VarianceRow(
                method.name, 0, 0, exact.weight_variance(problem, initial)))
        else:
            cfg = replace(method.adapt, total_updates=c_max // method.adapt.batch_size)
            curve_acc: list[list[float]] = []
            curve_meta: list[tuple[int, int]] = []
            for r in range(config.replications):
                rng = np.random.default_rng(replication_seed(config.master_seed, r))
                _, trace = adapt_loop(problem, cfg, rng, initial=initial)
                for c in config.checkpoints:
                    t_c = c // cfg.batch_size
                    per_cp[c].append(trace.steps[t_c - 1].running_estimate)
                curve = variance_curve(problem, trace, config.variance_stride)
                if not curve_acc:
                    curve_acc = [[] for _ in curve]
                    curve_meta = [(1 + i * config.variance_stride, total)
                                  for i, (total, _) in enumerate(curve)]
                for i, (_, v) in enumerate(curve):
                    curve_acc[i].append(v)
            for (t, total), values in zip(curve_meta, curve_acc):
                variance_rows.append(VarianceRow(
                    method.name, t, total,
                    math.fsum(values) / len(values)))
        estimates[method.name] = {c: tuple(v) for c, v in per_cp.items()}

    mse_rows: list[MseRow] = []
    for method in config.methods:
        for c in config.checkpoints:
            values = estimates[method.name][c]
            mse = math.fsum((v - g_true) ** 2 for v in values) / len(values)
            sign_p = None
            if baseline is not None and method is not baseline:
                base_values = estimates[baseline.name][c]
                sign_p = _sign_test_p(
                    [(v - g_true) ** 2 for v in values],
                    [(v - g_true) ** 2 for v in base_values])
            mse_rows.append(MseRow(method.name, c, mse, config.replications, sign_p))

    return ExperimentResult(
        true_value=g_true,
        mse_rows=tuple(mse_rows),
        variance_rows=tuple(variance_rows),
        estimates=estimates,
    )


def _sign_test_p(errors: list[float], baseline_errors: list[float]) -> float | None:
    """One-sided sign test on paired replications: is the method's error smaller?

    Ties are dropped; returns P(#wins >= observed | fair coin), or None if all
    pairs tie.
    """
    wins = sum(1 for a, b in zip(errors, baseline_errors) if a < b)
    losses = sum(1 for a, b in zip(errors, baseline_errors) if a > b)
    n = wins + losses
    if n == 0:
        return None
    tail = sum(math.comb(n, k) for k in range(wins, n + 1))
    return tail / 2.0 ** n


def select_action(idm: InfluenceDiagram, evidence: Assignment,
                  evaluator: str = "exact", config: AdaptConfig | None = None,
                  seed: int = DEFAULT_SEED) -> tuple[int, tuple[float, ...]]:
    """Evaluate every action and return (argmax, all values).

    ``evaluator`` is "exact" (oracle enumeration) or "sampling" (the adaptive
    loop given by ``config``; action a uses the stream seeded with seed XOR a).
    Ties break toward the lowest action index.
    """
    values: list[float] = []
    for a in range(idm.decision.arity):
        problem = EstimationProblem(idm, evidence, action=a)
        if evaluator == "exact":
            values.append(exact.true_value(problem))
        elif evaluator == "sampling":
            if config is None:
                raise ConfigError("the sampling evaluator needs an adapt configuration")
            rng = np.random.default_rng(replication_seed(seed, a))
            estimate, _ = adapt_loop(problem, config, rng)
            values.append(estimate.value)
        else:
            raise ConfigError(f"unknown evaluator '{evaluator}'")
    best = 0
    for a, v in enumerate(values):
        if v > values[best]:
            best = a
    return best, tuple(values)


# ---------------------------------------------------------------------------
# Experiment config files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {"model", "evidence", "action", "methods", "replications",
                "checkpoints", "lw_multiplier", "master_seed", "variance_stride",
                "outputs"}
_BASELINE_KEYS = {"name", "init"}
_METHOD_KEYS = {"name", "kind", "beta", "gamma", "batch", "smoothing",
                "projection", "local_min_batch", "init"}
_OUTPUT_KEYS = {"mse", "variance"}


def _method_from_dict(obj: dict[str, Any], index: int) -> MethodSpec:
    where = f"methods[{index}]"
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: must be an object")
    init = obj.get("init")
    if init is not None:
        if not isinstance(init, dict):
            raise ConfigError(f"{where}: 'init' must map variable names to rows")
        init = {name: tuple(tuple(float(p) for p in row) for row in rows)
                for name, rows in init.items()}
    if "kind" not in obj:
        unknown = set(obj) - _BASELINE_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
        return MethodSpec(name=obj.get("name", "lw"), adapt=None, init=init)
    unknown = set(obj) - _METHOD_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        kind = GradientKind(obj["kind"])
    except ValueError:
        raise ConfigError(f"{where}: unknown kind '{obj['kind']}'") from None
    try:
        projection = ProjectionMode(obj.get("projection", "mean"))
    except ValueError:
        raise ConfigError(f"{where}: unknown projection '{obj['projection']}'") from None
    adapt = AdaptConfig(
        kind=kind,
        beta=obj.get("beta"),
        gamma=obj.get("gamma", 0.1),
        batch_size=obj.get("batch", 1),
        dirichlet_smoothing=obj.get(
            "smoothing", kind in (GradientKind.LOCAL_KL2, GradientKind.LOCAL_KLS)),
        projection=projection,
        local_min_batch=obj.get("local_min_batch", 50),
    )
    return MethodSpec(name=obj.get("name", kind.value), adapt=adapt, init=init)


def config_from_dict(obj: Any) -> tuple[ExperimentConfig, dict[str, str]]:
    """Parse an experiment config object (model already inline).

    Returns the config and the output CSV paths {"mse": ..., "variance": ...}.
    """
    if not isinstance(obj, dict):
        raise ConfigError("experiment config must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"experiment config: unknown field(s) {sorted(unknown)}")
    for key in ("model", "methods", "replications", "checkpoints"):
        if key not in obj:
            raise ConfigError(f"experiment config: missing field '{key}'")
    if not isinstance(obj["model"], dict):
        raise ConfigError("experiment config: 'model' must be an inline model object "
                          "(the CLI resolves file paths before this point)")
    model = model_from_dict(obj["model"])
    problem = EstimationProblem(model, obj.get("evidence", {}), obj.get("action"))
    if not isinstance(obj["methods"], list):
        raise ConfigError("experiment config: 'methods' must be an array")
    methods = tuple(_method_from_dict(m, i) for i, m in enumerate(obj["methods"]))
    outputs = dict(obj.get("outputs", {}))
    unknown = set(outputs) - _OUTPUT_KEYS
    if unknown:
        raise ConfigError(f"outputs: unknown field(s) {sorted(unknown)}")
    outputs.setdefault("mse", "mse.csv")
    outputs.setdefault("variance", "variance.csv")
    config = ExperimentConfig(
        problem=problem,
        methods=methods,
        replications=int(obj["replications"]),
        checkpoints=tuple(int(c) for c in obj["checkpoints"]),
        lw_multiplier=int(obj.get("lw_multiplier", 2)),
        master_seed=int(obj.get("master_seed", DEFAULT_SEED)),
        variance_stride=int(obj.get("variance_stride", 10)),
    )
    return config, outputs
