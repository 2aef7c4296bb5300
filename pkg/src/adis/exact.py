"""Exhaustive-enumeration oracle for small problems.

Everything here walks the full joint state space of the free variables, so it
is only feasible on desk-scale models (the default cap is 2^22 states).  It
provides ground truth for the Monte Carlo machinery: the target sum, the
minimum-variance sampling distribution, the weight variance of a given
sampler, and the exact variance gradient.

All sums are accumulated with math.fsum in the fixed mixed-radix enumeration
order of the free variables, so results are bit-deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapt import Gradient
from .errors import EstimationError, StateSpaceError, SupportError
from .model import Assignment, EstimationProblem
from .sampling import SamplerParams

DEFAULT_STATE_CAP = 1 << 22


def _check_cap(problem: EstimationProblem, cap: int) -> None:
    if problem.state_count > cap:
        raise StateSpaceError(
            f"joint state space has {problem.state_count} configurations, "
            f"exceeding the cap of {cap}; enumeration refused")


@dataclass(frozen=True)
class JointTable:
    """(z, g(z), f(z|theta)) for every configuration z of the free variables."""

    entries: tuple[tuple[dict[str, int], float, float], ...]

    @property
    def total_g(self) -> float:
        return math.fsum(g for _, g, _ in self.entries)

    @property
    def total_f(self) -> float:
        return math.fsum(f for _, _, f in self.entries)


def _f_value(problem: EstimationProblem, theta: SamplerParams, full: Assignment) -> float:
    f = 1.0
    for name in problem.free_vars:
        f *= float(theta.tables[name][problem.parent_row(name, full), full[name]])
    return f


def enumerate_joint(problem: EstimationProblem, theta: SamplerParams,
                    cap: int = DEFAULT_STATE_CAP) -> JointTable:
    """Tabulate g and f over the whole free state space."""
    _check_cap(problem, cap)
    entries = []
    for z in problem.iter_free_assignments():
        full = problem.full_assignment(z)
        entries.append((z, problem.g_value(full), _f_value(problem, theta, full)))
    return JointTable(tuple(entries))


def true_value(problem: EstimationProblem, cap: int = DEFAULT_STATE_CAP) -> float:
    """The exact target sum: P(O=o) for networks, the action value for IDs."""
    _check_cap(problem, cap)
    return math.fsum(
        problem.g_value(problem.full_assignment(z))
        for z in problem.iter_free_assignments())


def optimal_distribution(problem: EstimationProblem,
                         cap: int = DEFAULT_STATE_CAP) -> list[tuple[dict[str, int], float]]:
    """The minimum-variance sampling distribution: g normalized by its sum.

    Returned as a joint table over the free configurations; no claim is made
    that it factorizes over the network structure.
    """
    _check_cap(problem, cap)
    pairs = [(z, problem.g_value(problem.full_assignment(z)))
             for z in problem.iter_free_assignments()]
    total = math.fsum(g for _, g in pairs)
    if total <= 0.0:
        raise EstimationError("optimal distribution undefined: total mass is 0")
    return [(z, g / total) for z, g in pairs]


def weight_variance(problem: EstimationProblem, theta: SamplerParams,
                    cap: int = DEFAULT_STATE_CAP) -> float:
    """Exact variance of the importance weight under the sampler.

    Var[w] = sum_z g(z)^2 / f(z) - G^2.  Raises SupportError (infinite
    variance) if the sampler misses part of the target's support.
    """
    _check_cap(problem, cap)
    second = []
    total = []
    for z in problem.iter_free_assignments():
        full = problem.full_assignment(z)
        g = problem.g_value(full)
        f = _f_value(problem, theta, full)
        if f == 0.0:
            if g > 0.0:
                raise SupportError(
                    f"sampler has zero mass at {z} where the target is positive; "
                    "weight variance is infinite")
            continue
        second.append(g * g / f)
        total.append(g)
    g_total = math.fsum(total)
    return math.fsum(second) - g_total * g_total


def exact_gradient_var(problem: EstimationProblem, theta: SamplerParams,
                       cap: int = DEFAULT_STATE_CAP) -> Gradient:
    """Exact (unprojected) gradient of the weight variance w.r.t. the sampler.

    Each parameter is treated as a free coordinate of the unnormalized
    sampler product; the simplex constraint is handled separately by
    projection.  Cells whose parent configuration is never realized stay 0.
    """
    _check_cap(problem, cap)
    acc = {name: np.zeros_like(theta.tables[name]) for name in problem.free_vars}
    for z in problem.iter_free_assignments():
        full = problem.full_assignment(z)
        g = problem.g_value(full)
        f = _f_value(problem, theta, full)
        if f == 0.0:
            if g > 0.0:
                raise SupportError(
                    f"sampler has zero mass at {z} where the target is positive")
            continue
        ratio = g * g / f
        for name in problem.free_vars:
            acc[name][problem.parent_row(name, full), full[name]] += ratio
    tables: dict[str, np.ndarray] = {}
    for name in problem.free_vars:
        grad = np.zeros_like(acc[name])
        hit = acc[name] != 0.0
        grad[hit] = -acc[name][hit] / theta.tables[name][hit]
        tables[name] = grad
    return Gradient(tables)
