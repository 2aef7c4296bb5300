"""Shared fixtures and independent brute-force helpers.

The helpers here recompute g, f and objective values with plain loops over
itertools.product so that oracle-style tests do not reuse the code paths they
are checking.
"""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from adis import fixtures
from adis.model import (
    Cpt,
    Decision,
    EstimationProblem,
    InfluenceDiagram,
    Network,
    Utility,
    Variable,
    parent_config_index,
)
from adis.sampling import SamplerParams


@pytest.fixture
def chain2_problem() -> EstimationProblem:
    return fixtures.chain2_problem()


@pytest.fixture
def gamble1_problem() -> EstimationProblem:
    return fixtures.gamble1_problem(0)


def params(tables: dict[str, list[list[float]]]) -> SamplerParams:
    return SamplerParams({name: np.array(rows, dtype=float)
                          for name, rows in tables.items()})


def chain2_fstar_params() -> SamplerParams:
    return params({"X1": [[0.16, 0.84]]})


def random_interior_params(problem: EstimationProblem,
                           rng: np.random.Generator,
                           floor: float = 0.1) -> SamplerParams:
    """Random row-stochastic tables bounded away from the simplex boundary."""
    tables = {}
    for name in problem.free_vars:
        shape = (len(problem.network.cpts[name].rows), problem.arity[name])
        raw = rng.dirichlet(np.ones(shape[1]), size=shape[0])
        uniform = np.full(shape, 1.0 / shape[1])
        tables[name] = (1.0 - floor) * raw + floor * uniform
    return SamplerParams(tables)


def random_3var_network(rng: np.random.Generator) -> Network:
    """X1 -> X2 -> X3 with an extra X1 -> X3 arc; arities (2, 3, 2)."""
    def rows(n_rows: int, arity: int) -> list[list[float]]:
        raw = rng.dirichlet(np.ones(arity), size=n_rows)
        raw = 0.9 * raw + 0.1 / arity  # keep entries well inside (0, 1)
        return [list(r / r.sum()) for r in raw]

    return Network(
        variables=(
            Variable("X1", 2),
            Variable("X2", 3, ("X1",)),
            Variable("X3", 2, ("X1", "X2")),
        ),
        cpts={
            "X1": Cpt.from_rows(rows(1, 2)),
            "X2": Cpt.from_rows(rows(2, 3)),
            "X3": Cpt.from_rows(rows(6, 2)),
        },
    )


def scaled_utility_gamble(scale: float) -> InfluenceDiagram:
    base = fixtures.gamble1()
    return InfluenceDiagram(
        network=base.network,
        decision=base.decision,
        utility=Utility(base.utility.parents,
                        tuple(scale * u for u in base.utility.table)),
    )


# ---------------------------------------------------------------------------
# Brute-force reference computations (independent of the library's oracles)
# ---------------------------------------------------------------------------

def iter_full_assignments(problem: EstimationProblem):
    names = problem.free_vars
    for values in itertools.product(*(range(problem.arity[n]) for n in names)):
        z = dict(zip(names, values))
        full = dict(problem.evidence)
        full.update(z)
        if problem.decision is not None:
            full[problem.decision.name] = problem.action
        yield z, full


def brute_g(problem: EstimationProblem, full: dict[str, int]) -> float:
    g = 1.0
    for var in problem.network.variables:
        arities = tuple(problem.arity[p] for p in var.parents)
        j = parent_config_index(full, var.parents, arities)
        g *= problem.network.cpts[var.name].rows[j][full[var.name]]
    if problem.utility is not None:
        u = problem.utility
        arities = tuple(problem.arity[p] for p in u.parents)
        g *= u.table[parent_config_index(full, u.parents, arities)]
    return g


def brute_f(problem: EstimationProblem, theta: SamplerParams,
            full: dict[str, int]) -> float:
    f = 1.0
    for name in problem.free_vars:
        arities = tuple(problem.arity[p] for p in problem.parents[name])
        j = parent_config_index(full, problem.parents[name], arities)
        f *= float(theta.tables[name][j, full[name]])
    return f


def brute_second_moment(problem: EstimationProblem, theta: SamplerParams) -> float:
    """sum_z g(z)^2 / f(z); the variance objective up to the constant -G^2."""
    total = 0.0
    for _, full in iter_full_assignments(problem):
        g = brute_g(problem, full)
        f = brute_f(problem, theta, full)
        if g == 0.0 and f == 0.0:
            continue
        total += g * g / f
    return total


def finite_difference_gradient(problem: EstimationProblem, theta: SamplerParams,
                               step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of the variance objective, one raw coordinate at a
    time (no renormalization while perturbing)."""
    out = {}
    for name, table in theta.tables.items():
        grad = np.zeros_like(table)
        for j in range(table.shape[0]):
            for k in range(table.shape[1]):
                plus = theta.copy()
                plus.tables[name][j, k] += step
                minus = theta.copy()
                minus.tables[name][j, k] -= step
                grad[j, k] = (brute_second_moment(problem, plus)
                              - brute_second_moment(problem, minus)) / (2 * step)
        out[name] = grad
    return out
