"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one `[acceptance] ... PASS/FAIL` line (run with -s to see
them on passing runs).  Stochastic criteria use pinned seeds throughout, so
the whole suite is deterministic.
"""
import json
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from adis import exact, fixtures
from adis.adapt import (
    AdaptConfig,
    EmpiricalParams,
    GradientKind,
    ProjectionMode,
    adapt_loop,
    gradient_estimate_global,
    project,
    sis_update,
)
from adis.cli import main
from adis.experiment import ExperimentConfig, MethodSpec, run_experiment
from adis.model import EstimationProblem, render
from adis.sampling import init_params, replication_seed, weight

from conftest import (
    chain2_fstar_params,
    finite_difference_gradient,
    params,
    random_3var_network,
    random_interior_params,
)

# pinned configuration for the variance-reduction criterion
C5_MASTER_SEED = 7
C5_CONFIG = AdaptConfig(kind=GradientKind.VAR, beta=0.5, gamma=0.1,
                        batch_size=1, total_updates=200)

# pinned configuration for the MSE-ordering criterion; the default beta for
# the variance rule overshoots on gamble1 (weights reach 3, so squared-weight
# gradients are large) and was recalibrated once to 0.02
C6_MASTER_SEED = 1234
C6_REPLICATIONS = 40
C6_CHECKPOINTS = (50, 150, 250)
C6_VAR = AdaptConfig(kind=GradientKind.VAR, beta=0.02, gamma=0.1, batch_size=1)
C6_L2 = AdaptConfig(kind=GradientKind.L2, gamma=0.1, batch_size=1)


def report(criterion: str, description: str, ok: bool) -> None:
    print(f"[acceptance] {criterion} {description}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"{criterion} {description}"


@pytest.fixture(scope="module")
def c5_runs():
    problem = fixtures.chain2_problem()
    start = time.monotonic()
    traces = []
    for r in range(20):
        rng = np.random.default_rng(replication_seed(C5_MASTER_SEED, r))
        _, trace = adapt_loop(problem, C5_CONFIG, rng)
        traces.append(trace)
    elapsed = time.monotonic() - start
    finals = [exact.weight_variance(problem, t.final_params) for t in traces]
    return traces, finals, elapsed


@pytest.fixture(scope="module")
def c6_runs():
    problem = fixtures.gamble1_problem(0)
    config = ExperimentConfig(
        problem=problem,
        methods=(MethodSpec("lw"), MethodSpec("var", C6_VAR), MethodSpec("l2", C6_L2)),
        replications=C6_REPLICATIONS,
        checkpoints=C6_CHECKPOINTS,
        lw_multiplier=2,
        master_seed=C6_MASTER_SEED,
    )
    start = time.monotonic()
    result = run_experiment(config)
    elapsed = time.monotonic() - start
    return result, elapsed


def test_c1_oracle_correctness():
    start = time.monotonic()
    chain_value = exact.true_value(fixtures.chain2_problem())
    v0 = exact.true_value(fixtures.gamble1_problem(0))
    v1 = exact.true_value(fixtures.gamble1_problem(1))
    elapsed = time.monotonic() - start
    ok = (abs(chain_value - 0.5) <= 1e-12
          and abs(v0 - 2.0) <= 1e-12
          and abs(v1 - 2.48) <= 1e-12
          and elapsed < 1.0)
    report("C1", "oracle values on bundled fixtures", ok)


def test_c2_estimator_unbiasedness_by_enumeration():
    ok = True
    rng = np.random.default_rng(2024)
    for problem in (fixtures.chain2_problem(), fixtures.gamble1_problem(0)):
        truth = exact.true_value(problem)
        for _ in range(10):
            theta = random_interior_params(problem, rng)
            table = exact.enumerate_joint(problem, theta)
            total = math.fsum(f * weight(problem, theta, z).weight
                              for z, _, f in table.entries)
            ok = ok and abs(total - truth) <= 1e-12
    report("C2", "sum_z f(z) w(z) recovers the target for random samplers", ok)


def test_c3_gradient_correctness():
    ok = True
    chain = fixtures.chain2_problem()
    net3 = random_3var_network(np.random.default_rng(42))
    problem3 = EstimationProblem(net3, {"X3": 1})
    for problem, seed0 in ((chain, 100), (problem3, 200)):
        for s in range(10):
            theta = random_interior_params(problem, np.random.default_rng(seed0 + s))
            grad = exact.exact_gradient_var(problem, theta)
            fd = finite_difference_gradient(problem, theta, step=1e-5)
            for name in grad.tables:
                close = np.allclose(grad.tables[name], fd[name], rtol=1e-6, atol=1e-9)
                ok = ok and close
    # single-sample stochastic gradient, averaged by enumeration, is exact
    theta = init_params(chain, 0.0)
    table = exact.enumerate_joint(chain, theta)
    mean = {name: np.zeros_like(t) for name, t in theta.tables.items()}
    for z, _, f in table.entries:
        sample = weight(chain, theta, z)
        grad = gradient_estimate_global(chain, theta, [sample], GradientKind.VAR)
        for name in mean:
            mean[name] += f * grad.tables[name]
    expected = exact.exact_gradient_var(chain, theta)
    for name in mean:
        ok = ok and np.allclose(mean[name], expected.tables[name], atol=1e-12, rtol=0)
    report("C3", "exact gradient matches finite differences and the sample estimator", ok)


def test_c4_fixed_point_at_the_optimal_sampler():
    problem = fixtures.chain2_problem()
    theta = chain2_fstar_params()
    variance = exact.weight_variance(problem, theta)
    projected = project(exact.exact_gradient_var(problem, theta),
                        ProjectionMode.MEAN_CENTER)
    ok = abs(variance) <= 1e-12 and all(
        np.abs(t).max() <= 1e-12 for t in projected.tables.values())
    report("C4", "zero variance and zero projected gradient at the optimum", ok)


def test_c5_variance_reduction(c5_runs):
    _, finals, elapsed = c5_runs
    median = statistics.median(finals)
    ok = median < 0.03 and elapsed < 10.0
    report("C5", f"median final weight variance {median:.5f} < 0.03 "
                 f"({elapsed:.1f}s)", ok)


def test_c6_mse_ordering(c6_runs):
    result, elapsed = c6_runs
    mse = {(r.method, r.checkpoint_samples): r.mse for r in result.mse_rows}
    ok = (mse[("var", 250)] < mse[("lw", 250)]
          and mse[("l2", 250)] < mse[("lw", 250)]
          and elapsed < 60.0)
    report("C6", f"var {mse[('var', 250)]:.5f} and l2 {mse[('l2', 250)]:.5f} "
                 f"beat lw {mse[('lw', 250)]:.5f} at 250 samples ({elapsed:.1f}s)", ok)


def test_c7_first_iteration_l2_noop():
    problem = fixtures.chain2_problem()
    config = AdaptConfig(kind=GradientKind.L2, batch_size=1, total_updates=2)
    _, trace = adapt_loop(problem, config, np.random.default_rng(13))
    ok = all(
        np.array_equal(trace.steps[1].theta.tables[name],
                       trace.steps[0].theta.tables[name])
        for name in trace.steps[0].theta.tables)
    report("C7", "theta is bitwise unchanged after the first l2 update", ok)


def test_c8_constraint_maintenance(c5_runs, c6_runs):
    # replay the adaptive runs of criteria 5-6 and scan every sampler state
    c5_traces, _, _ = c5_runs
    chain = fixtures.chain2_problem()
    gamble = fixtures.gamble1_problem(0)
    violations = 0

    def scan(problem, trace, gamma):
        nonlocal violations
        for theta in [s.theta for s in trace.steps] + [trace.final_params]:
            for name, t in theta.tables.items():
                eps = gamma / problem.arity[name]
                if not np.allclose(t.sum(axis=1), 1.0, atol=1e-9):
                    violations += 1
                if not (t >= eps).all():
                    violations += 1

    for trace in c5_traces:
        scan(chain, trace, C5_CONFIG.gamma)
    c_max = max(C6_CHECKPOINTS)
    for method_config in (C6_VAR, C6_L2):
        from dataclasses import replace
        config = replace(method_config, total_updates=c_max // method_config.batch_size)
        for r in range(C6_REPLICATIONS):
            rng = np.random.default_rng(replication_seed(C6_MASTER_SEED, r))
            _, trace = adapt_loop(gamble, config, rng)
            scan(gamble, trace, config.gamma)
    report("C8", f"row sums and floors across all criterion 5-6 runs "
                 f"({violations} violations)", violations == 0)


def test_c9_sis_convex_combination():
    rng = np.random.default_rng(90)
    ok = True
    for _ in range(100):
        arity = int(rng.integers(2, 5))
        rows = int(rng.integers(1, 4))
        hat_t = rng.dirichlet(np.ones(arity), size=rows)
        init_t = rng.dirichlet(np.ones(arity), size=rows)
        alpha = float(rng.uniform())
        theta = params({"X": (np.ones((rows, arity)) / arity).tolist()})
        hat = EmpiricalParams(tables={"X": hat_t},
                              fallback_rows={"X": np.zeros(rows, dtype=bool)})
        theta0 = params({"X": init_t.tolist()})
        out = sis_update(theta, hat, theta0, alpha)
        t = out.tables["X"]
        ok = ok and np.abs(t.sum(axis=1) - 1.0).max() <= 1e-9
        ok = ok and (t >= 0.0).all() and (t <= 1.0).all()
        ok = ok and np.array_equal(sis_update(theta, hat, theta0, 1.0).tables["X"],
                                   init_t)
        ok = ok and np.array_equal(sis_update(theta, hat, theta0, 0.0).tables["X"],
                                   hat_t)
    report("C9", "sis blends stay on the simplex; endpoints are exact", ok)


def test_c10_experiment_reproducibility(tmp_path, monkeypatch):
    (tmp_path / "gamble1.json").write_text(render(fixtures.gamble1()),
                                           encoding="utf-8")
    config = {
        "model": "gamble1.json",
        "action": 0,
        "methods": [{"name": "lw"},
                    {"kind": "var", "beta": 0.02},
                    {"kind": "l2"}],
        "replications": 5,
        "checkpoints": [20, 50],
        "master_seed": 424242,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    monkeypatch.chdir(tmp_path)

    outputs = []
    for _ in range(2):
        assert main(["experiment", str(config_path)]) == 0
        outputs.append((Path("mse.csv").read_bytes(),
                        Path("variance.csv").read_bytes()))
    ok = outputs[0] == outputs[1]
    report("C10", "same master seed gives byte-identical experiment CSVs", ok)
