"""Parameterized importance sampler: forward sampling, weights and estimators.

The sampling distribution factorizes like the original network: one
row-stochastic table per free variable, indexed by the same parent sets
(evidence and decision parents take their clamped values when indexing).
Weights are accumulated in log space; a zero target factor yields a -inf
log weight (weight 0), while a zero sampler factor is a support violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SupportError
from .model import Assignment, EstimationProblem

# Fixed default seed: runs are reproducible unless the caller supplies entropy.
DEFAULT_SEED = 20231

WEIGHT_SUM_TOL = 1e-9


def replication_seed(master_seed: int, replication: int) -> int:
    """Per-replication stream seed, derived as master_seed XOR replication index."""
    return master_seed ^ replication


@dataclass
class SamplerParams:
    """One table per free variable; tables[name][j, k] = P(name=k | parents=j)."""

    tables: dict[str, np.ndarray]

    def copy(self) -> "SamplerParams":
        return SamplerParams({name: t.copy() for name, t in self.tables.items()})

    def row(self, problem: EstimationProblem, name: str, full: Assignment) -> np.ndarray:
        return self.tables[name][problem.parent_row(name, full)]


@dataclass(frozen=True)
class WeightedSample:
    z: dict[str, int]
    weight: float
    log_weight: float


@dataclass(frozen=True)
class Estimate:
    """Combined estimate over a sequence of per-batch estimates."""

    value: float
    batch_values: tuple[float, ...]
    batch_weights: tuple[float, ...]
    sample_counts: tuple[int, ...]


def epsilon_floor(gamma: float, arity: int) -> float:
    """Lower bound gamma/arity enforced on each sampler probability."""
    return gamma / arity


def clamp_row(row: np.ndarray, eps: float) -> np.ndarray:
    """Raise entries below ``eps`` to ``eps``, rescaling the rest to keep the sum at 1.

    Rescaling is multiplicative, so the relative odds among unclamped entries
    are preserved.  Iterates in case rescaling pushes another entry below the
    floor; feasible whenever eps * len(row) < 1.
    """
    out = np.asarray(row, dtype=float).copy()
    if eps <= 0.0:
        return out
    if eps * out.size >= 1.0:
        raise ConfigError(f"floor {eps} infeasible for a row of {out.size} entries")
    clamped = out < eps
    while clamped.any():
        out[clamped] = eps
        free = ~clamped
        if not free.any():
            break
        target = 1.0 - eps * int(clamped.sum())
        out[free] *= target / out[free].sum()
        newly = free & (out < eps)
        if not newly.any():
            break
        clamped |= newly
    return out


def init_params(problem: EstimationProblem, gamma: float) -> SamplerParams:
    """Sampler initialized from the network's own CPTs, clamped to the floor.

    With gamma=0 this is an exact copy of the prior conditionals.
    """
    if not 0.0 <= gamma < 1.0:
        raise ConfigError(f"gamma must be in [0, 1), got {gamma}")
    tables: dict[str, np.ndarray] = {}
    for name in problem.free_vars:
        rows = np.array(problem.network.cpts[name].rows, dtype=float)
        if gamma > 0.0:
            eps = epsilon_floor(gamma, problem.arity[name])
            rows = np.vstack([clamp_row(r, eps) for r in rows])
        tables[name] = rows
    return SamplerParams(tables)


def draw(theta: SamplerParams, problem: EstimationProblem,
         rng: np.random.Generator) -> dict[str, int]:
    """One forward sample of the free variables.

    Nodes are visited in topological order; evidence variables are assigned
    their observed values instead of being sampled, and the decision node is
    assigned the chosen action.  Only the free variables appear in the result.
    """
    realized: dict[str, int] = {}
    z: dict[str, int] = {}
    decision = problem.decision.name if problem.decision is not None else None
    for name in problem.sample_order:
        if name == decision:
            realized[name] = problem.action  # type: ignore[assignment]
        elif name in problem.evidence:
            realized[name] = problem.evidence[name]
        else:
            probs = theta.row(problem, name, realized)
            cdf = np.cumsum(probs)
            value = int(np.searchsorted(cdf, rng.random(), side="right"))
            value = min(value, len(probs) - 1)
            realized[name] = value
            z[name] = value
    return z


def log_f(problem: EstimationProblem, theta: SamplerParams, z: Assignment) -> float:
    """log f(z | theta); raises SupportError if any sampler factor is zero."""
    full = problem.full_assignment(z)
    total = 0.0
    for name in problem.free_vars:
        p = float(theta.tables[name][problem.parent_row(name, full), full[name]])
        if p == 0.0:
            raise SupportError(f"sampler assigns zero probability to {name}={full[name]}")
        total += math.log(p)
    return total


def weight(problem: EstimationProblem, theta: SamplerParams,
           z: Assignment) -> WeightedSample:
    """Importance weight of a free-variable assignment, accumulated in log space.

    log w = sum of log target factors (CPT entries with evidence clamped,
    plus the utility for IDs) minus the log sampler factors.  A zero target
    factor is legal and yields weight 0 (log weight -inf); a zero sampler
    factor raises SupportError.
    """
    full = problem.full_assignment(z)
    lw = 0.0
    for name in problem.network.names:
        p = problem.network.cpts[name].rows[problem.parent_row(name, full)][full[name]]
        if name in problem.evidence:
            lw = -math.inf if p == 0.0 else lw + math.log(p)
        else:
            q = float(theta.tables[name][problem.parent_row(name, full), full[name]])
            if q == 0.0:
                raise SupportError(
                    f"sampler assigns zero probability to {name}={full[name]}")
            if p == 0.0:
                lw = -math.inf
            elif lw != -math.inf:
                lw += math.log(p) - math.log(q)
    if problem.utility is not None and lw != -math.inf:
        lw += math.log(problem.utility_value(full))
    return WeightedSample(z=dict(z), weight=math.exp(lw), log_weight=lw)


def batch_estimate(problem: EstimationProblem, theta: SamplerParams, n: int,
                   rng: np.random.Generator) -> tuple[float, list[WeightedSample]]:
    """Mean weight over n fresh draws; the samples are returned for reuse."""
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    samples = [weight(problem, theta, draw(theta, problem, rng)) for _ in range(n)]
    return math.fsum(s.weight for s in samples) / n, samples


def combined_estimate(batches: list[float] | tuple[float, ...],
                      weights: list[float] | tuple[float, ...]) -> float:
    """Convex combination of per-batch estimates."""
    if len(batches) != len(weights):
        raise ValueError(f"{len(batches)} batch values but {len(weights)} weights")
    if any(w < 0.0 for w in weights):
        raise ValueError("batch weights must be nonnegative")
    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"batch weights sum to {total!r}, not 1")
    return math.fsum(w * b for w, b in zip(weights, batches))


def uniform_combined(batches: list[float] | tuple[float, ...]) -> float:
    """Combined estimate with the unbiased uniform weighting 1/T."""
    t = len(batches)
    return combined_estimate(batches, (1.0 / t,) * t)
