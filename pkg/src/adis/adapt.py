"""Online adaptation of the sampling distribution.

Update rules fall in three families:

* global stochastic-gradient rules (``var``, ``l2``, ``kl1``, ``kl2``,
  ``kls``) that estimate the gradient of an error criterion from the current
  batch of weighted samples;
* local heuristics (``local-*``) that pull each conditional row toward a
  weighted empirical distribution built from the batch;
* ``sis`` (self-importance sampling), which blends the empirical distribution
  with the initial sampler.

Every gradient step is projected onto the simplex of each conditional row and
constrained to the epsilon floor gamma/arity: when a full step would leave the
feasible region, the row moves half of the maximum feasible step instead.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EstimationError
from .model import EstimationProblem
from .sampling import (
    Estimate,
    SamplerParams,
    WeightedSample,
    batch_estimate,
    epsilon_floor,
    clamp_row,
    init_params,
    log_f,
    uniform_combined,
)

PROJECTED_ROW_SUM_TOL = 1e-9


class GradientKind(enum.Enum):
    VAR = "var"
    L2 = "l2"
    KL1 = "kl1"
    KL2 = "kl2"
    KLS = "kls"
    LOCAL_L2 = "local-l2"
    LOCAL_KL1 = "local-kl1"
    LOCAL_KL2 = "local-kl2"
    LOCAL_KLS = "local-kls"
    SIS = "sis"


GLOBAL_KINDS = (GradientKind.VAR, GradientKind.L2, GradientKind.KL1,
                GradientKind.KL2, GradientKind.KLS)
LOCAL_KINDS = (GradientKind.LOCAL_L2, GradientKind.LOCAL_KL1,
               GradientKind.LOCAL_KL2, GradientKind.LOCAL_KLS)

DEFAULT_BETA: dict[GradientKind, float] = {
    GradientKind.VAR: 0.5,
    GradientKind.L2: 5.0,
    GradientKind.KL1: 0.5,
    GradientKind.KL2: 0.5,
    GradientKind.KLS: 0.5,
    GradientKind.LOCAL_L2: 1.0,
    GradientKind.LOCAL_KL1: 1.0,
    GradientKind.LOCAL_KL2: 1.0,
    GradientKind.LOCAL_KLS: 1.0,
    GradientKind.SIS: 1.0,
}


class ProjectionMode(enum.Enum):
    # subtract the signed row mean: steps have zero row sum, rows stay on the simplex
    MEAN_CENTER = "mean"
    # subtract the mean of absolute values: steps do not sum to zero, so rows are
    # renormalized (and re-clamped to the floor) after each update
    ABS_MEAN = "literal"


@dataclass
class Gradient:
    """Partial derivatives, one table per free variable, aligned with the sampler."""

    tables: dict[str, np.ndarray]


@dataclass
class EmpiricalParams:
    """Weighted empirical conditionals; rows with no mass fall back to the current ones."""

    tables: dict[str, np.ndarray]
    fallback_rows: dict[str, np.ndarray]  # bool per row: no sample mass reached it


@dataclass(frozen=True)
class AdaptConfig:
    kind: GradientKind
    beta: float | None = None  # None: method-specific default
    gamma: float = 0.1
    batch_size: int = 1
    total_updates: int = 100
    dirichlet_smoothing: bool = False
    projection: ProjectionMode = ProjectionMode.MEAN_CENTER
    local_min_batch: int = 50

    @property
    def resolved_beta(self) -> float:
        return DEFAULT_BETA[self.kind] if self.beta is None else self.beta

    def check(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.total_updates < 1:
            raise ConfigError(f"total updates must be >= 1, got {self.total_updates}")
        if not self.resolved_beta > 0.0:
            raise ConfigError(f"beta must be > 0, got {self.resolved_beta}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.kind in LOCAL_KINDS and self.batch_size < self.local_min_batch:
            raise ConfigError(
                f"{self.kind.value} needs batch size >= {self.local_min_batch} "
                "(the empirical distribution is unreliable on small batches; "
                "lower local_min_batch to override)")
        if self.kind is GradientKind.SIS and self.resolved_beta > 1.0:
            raise ConfigError("sis requires beta <= 1 so that every step is a convex blend")


@dataclass(frozen=True)
class TraceStep:
    """State of one update: the sampler the batch was drawn from, and what happened."""

    t: int
    theta: SamplerParams
    batch_estimate: float
    running_estimate: float
    sample_count: int
    alpha: float
    boundary_hits: int
    warnings: tuple[str, ...]
    weight_var: float  # sample variance of the batch weights (0.0 when n=1)


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]
    final_params: SamplerParams


# ---------------------------------------------------------------------------
# Per-sample gradient factors
# ---------------------------------------------------------------------------

def phi_var(w: float) -> float:
    """Gradient factor of the weight-variance criterion: the squared weight."""
    return w * w


def phi_l2(f_z: float, w: float, g_hat: float) -> float:
    """Gradient factor of the L2 distance to the (estimated) optimal sampler."""
    if g_hat <= 0.0:
        raise EstimationError(f"requires a positive running estimate, got {g_hat}")
    return f_z * (w / g_hat - 1.0)


def phi_kl1(w: float, g_hat: float) -> float:
    """Gradient factor of KL(optimal || current)."""
    if g_hat <= 0.0:
        raise EstimationError(f"requires a positive running estimate, got {g_hat}")
    return w / g_hat


def phi_kl2(w: float, g_hat: float) -> float:
    """Gradient factor of KL(current || optimal); needs a strictly positive weight."""
    if g_hat <= 0.0:
        raise EstimationError(f"requires a positive running estimate, got {g_hat}")
    if w <= 0.0:
        raise EstimationError(f"kl2 gradient undefined for weight {w}")
    return math.log(w / g_hat) - 1.0


def phi_kls(w: float, g_hat: float) -> float:
    """Symmetrized KL factor: the mean of the two KL factors."""
    return 0.5 * (phi_kl1(w, g_hat) + phi_kl2(w, g_hat))


# ---------------------------------------------------------------------------
# Gradient estimators
# ---------------------------------------------------------------------------

def gradient_estimate_global(problem: EstimationProblem, theta: SamplerParams,
                             samples: list[WeightedSample], kind: GradientKind,
                             g_hat: float | None = None,
                             batch_size: int | None = None) -> Gradient:
    """Monte Carlo gradient from a batch of weighted samples.

    Each sample contributes -phi / theta_ijk to the cells it realizes; cells
    never hit by a sample stay 0.  ``batch_size`` overrides the normalization
    count when some samples of the batch were excluded upstream.
    """
    if kind not in GLOBAL_KINDS:
        raise ConfigError(f"{kind.value} is not a global gradient kind")
    if kind is not GradientKind.VAR and (g_hat is None or g_hat <= 0.0):
        raise EstimationError(
            f"{kind.value} needs a positive running estimate, got {g_hat}")
    n = len(samples) if batch_size is None else batch_size
    if n < 1:
        raise ValueError("gradient estimate needs at least one sample")
    acc = {name: np.zeros_like(t) for name, t in theta.tables.items()}
    for s in samples:
        if kind is GradientKind.VAR:
            phi = phi_var(s.weight)
        elif kind is GradientKind.L2:
            phi = phi_l2(math.exp(log_f(problem, theta, s.z)), s.weight, g_hat)
        elif kind is GradientKind.KL1:
            phi = phi_kl1(s.weight, g_hat)
        elif kind is GradientKind.KL2:
            phi = phi_kl2(s.weight, g_hat)
        else:
            phi = phi_kls(s.weight, g_hat)
        if phi == 0.0:
            continue
        full = problem.full_assignment(s.z)
        for name in problem.free_vars:
            j = problem.parent_row(name, full)
            k = full[name]
            acc[name][j, k] -= phi / theta.tables[name][j, k]
    return Gradient({name: a / n for name, a in acc.items()})


def empirical_distribution(problem: EstimationProblem, theta: SamplerParams,
                           samples: list[WeightedSample],
                           smoothed: bool = False) -> EmpiricalParams:
    """Weight-frequency estimate of each conditional row from a batch.

    Unsmoothed, a row with no sample mass reverts to the current parameters.
    The smoothed variant adds the current parameter value to each numerator
    and 1 to each denominator, keeping every entry strictly positive whenever
    the current parameters are.
    """
    if not samples:
        raise ValueError("empirical distribution needs at least one sample")
    num = {name: np.zeros_like(t) for name, t in theta.tables.items()}
    den = {name: np.zeros(t.shape[0]) for name, t in theta.tables.items()}
    for s in samples:
        full = problem.full_assignment(s.z)
        for name in problem.free_vars:
            j = problem.parent_row(name, full)
            num[name][j, full[name]] += s.weight
            den[name][j] += s.weight
    tables: dict[str, np.ndarray] = {}
    fallback: dict[str, np.ndarray] = {}
    for name, t in theta.tables.items():
        out = np.empty_like(t)
        empty = den[name] == 0.0
        if smoothed:
            out[:] = (num[name] + t) / (den[name] + 1.0)[:, None]
        else:
            out[empty] = t[empty]
            live = ~empty
            out[live] = num[name][live] / den[name][live, None]
        tables[name] = out
        fallback[name] = empty
    return EmpiricalParams(tables, fallback)


def gradient_local(theta: SamplerParams, theta_hat: EmpiricalParams,
                   kind: GradientKind) -> Gradient:
    """Gradient of a local distance between current and empirical conditionals."""
    if kind not in LOCAL_KINDS:
        raise ConfigError(f"{kind.value} is not a local gradient kind")
    needs_log = kind in (GradientKind.LOCAL_KL2, GradientKind.LOCAL_KLS)
    tables: dict[str, np.ndarray] = {}
    for name, t in theta.tables.items():
        hat = theta_hat.tables[name]
        if needs_log and (hat <= 0.0).any():
            raise EstimationError(
                "empirical distribution has zero entries; "
                f"{kind.value} needs Dirichlet smoothing")
        if kind is GradientKind.LOCAL_L2:
            grad = t - hat
        else:
            ratio = np.divide(hat, t, out=np.zeros_like(t), where=t > 0.0)
            if kind is GradientKind.LOCAL_KL1:
                grad = -ratio
            else:
                log_ratio = np.log(np.where(ratio > 0.0, ratio, 1.0))
                kl2 = -(log_ratio - 1.0)
                if kind is GradientKind.LOCAL_KL2:
                    grad = kl2
                else:
                    grad = 0.5 * (-ratio + kl2)
        tables[name] = grad
    return Gradient(tables)


# ---------------------------------------------------------------------------
# Projection and updates
# ---------------------------------------------------------------------------

def project(gradient: Gradient,
            mode: ProjectionMode = ProjectionMode.MEAN_CENTER) -> Gradient:
    """Project each gradient row for the simplex constraint.

    MEAN_CENTER subtracts the signed row mean (rows sum to 0 afterwards);
    ABS_MEAN subtracts the mean of the absolute values instead.
    """
    tables: dict[str, np.ndarray] = {}
    for name, t in gradient.tables.items():
        if mode is ProjectionMode.MEAN_CENTER:
            tables[name] = t - t.mean(axis=1, keepdims=True)
        else:
            tables[name] = t - np.abs(t).mean(axis=1, keepdims=True)
    return Gradient(tables)


def apply_update(theta: SamplerParams, gradient: Gradient, alpha: float,
                 gamma: float,
                 mode: ProjectionMode = ProjectionMode.MEAN_CENTER,
                 ) -> tuple[SamplerParams, int]:
    """Take the step theta - alpha * gradient, row by row, inside the floor.

    A row whose full step would cross the epsilon floor gamma/arity instead
    moves half of the maximum feasible step along the same direction.  Returns
    the new parameters and the number of rows that hit the boundary.

    In MEAN_CENTER mode the gradient rows must sum to ~0 (i.e. be projected);
    in ABS_MEAN mode the step has nonzero row sum, so each updated row is
    renormalized and re-clamped to the floor afterwards.
    """
    if alpha < 0.0:
        raise ValueError(f"step size must be nonnegative, got {alpha}")
    tables: dict[str, np.ndarray] = {}
    hits = 0
    for name, t in theta.tables.items():
        grad = gradient.tables[name]
        if grad.shape != t.shape:
            raise ValueError(f"gradient for '{name}' has shape {grad.shape}, "
                             f"expected {t.shape}")
        eps = epsilon_floor(gamma, t.shape[1])
        rows = t.copy()
        for j in range(t.shape[0]):
            d = grad[j]
            if not d.any():
                continue
            if mode is ProjectionMode.MEAN_CENTER and abs(float(d.sum())) > PROJECTED_ROW_SUM_TOL:
                raise ValueError(
                    f"gradient row {j} of '{name}' sums to {float(d.sum())!r}; "
                    "project it before updating")
            candidate = rows[j] - alpha * d
            if (candidate >= eps).all():
                rows[j] = candidate
            else:
                hits += 1
                shrinking = d > 0.0
                alpha_max = float(np.min((rows[j][shrinking] - eps) / d[shrinking]))
                rows[j] -= 0.5 * max(alpha_max, 0.0) * d
                np.maximum(rows[j], eps, out=rows[j])  # guards rounding dust only
            if mode is ProjectionMode.ABS_MEAN:
                rows[j] = clamp_row(rows[j] / rows[j].sum(), eps)
        tables[name] = rows
    return SamplerParams(tables), hits


def sis_update(theta: SamplerParams, theta_hat: EmpiricalParams,
               theta0: SamplerParams, alpha: float) -> SamplerParams:
    """Blend the empirical distribution with the initial sampler:
    (1 - alpha) * empirical + alpha * initial."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"sis blend factor must be in [0, 1], got {alpha}")
    tables = {
        name: (1.0 - alpha) * theta_hat.tables[name] + alpha * theta0.tables[name]
        for name in theta.tables
    }
    return SamplerParams(tables)


def step_size(t: int, beta: float) -> float:
    """Decaying learning rate beta / t."""
    if t < 1:
        raise ValueError(f"update index must be >= 1, got {t}")
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    return beta / t


# ---------------------------------------------------------------------------
# The adaptation loop
# ---------------------------------------------------------------------------

def adapt_loop(problem: EstimationProblem, config: AdaptConfig,
               rng: np.random.Generator,
               initial: SamplerParams | None = None) -> tuple[Estimate, Trace]:
    """Run the full adapt-while-estimating loop.

    Each step draws a batch from the current sampler, refreshes the running
    combined estimate (uniform weights over batches so far), computes the
    configured update and applies it.  The same samples serve both the
    estimate and the update.  Returns the combined estimate with uniform
    batch weights 1/T and the full trace.

    A loop is a single sequential chain (each sampler depends on the previous
    one); run replications concurrently with independent rng streams instead.
    """
    config.check()
    theta0 = initial.copy() if initial is not None else init_params(problem, config.gamma)
    theta = theta0.copy()
    beta = config.resolved_beta
    batch_means: list[float] = []
    steps: list[TraceStep] = []

    for t in range(1, config.total_updates + 1):
        alpha = step_size(t, beta)
        batch_mean, samples = batch_estimate(problem, theta, config.batch_size, rng)
        batch_means.append(batch_mean)
        running = uniform_combined(batch_means)
        snapshot = theta.copy()
        warnings: list[str] = []
        hits = 0

        if config.kind is GradientKind.SIS:
            hat = empirical_distribution(problem, theta, samples,
                                         smoothed=config.dirichlet_smoothing)
            theta = sis_update(theta, hat, theta0, alpha)
        elif config.kind in LOCAL_KINDS:
            hat = empirical_distribution(problem, theta, samples,
                                         smoothed=config.dirichlet_smoothing)
            grad = project(gradient_local(theta, hat, config.kind), config.projection)
            theta, hits = apply_update(theta, grad, alpha, config.gamma, config.projection)
        else:
            use = samples
            skip = False
            if config.kind is not GradientKind.VAR and running <= 0.0:
                warnings.append("update-skipped:nonpositive-running-estimate")
                skip = True
            elif config.kind in (GradientKind.KL2, GradientKind.KLS):
                use = [s for s in samples if s.weight > 0.0]
                if len(use) < len(samples):
                    warnings.append(f"zero-weight-samples-skipped:{len(samples) - len(use)}")
                if not use:
                    warnings.append("update-skipped:no-positive-weights")
                    skip = True
            if not skip:
                grad = gradient_estimate_global(problem, theta, use, config.kind,
                                                g_hat=running,
                                                batch_size=config.batch_size)
                grad = project(grad, config.projection)
                theta, hits = apply_update(theta, grad, alpha, config.gamma,
                                           config.projection)

        if len(samples) > 1:
            wvar = float(np.var([s.weight for s in samples], ddof=1))
        else:
            wvar = 0.0
        steps.append(TraceStep(
            t=t, theta=snapshot, batch_estimate=batch_mean, running_estimate=running,
            sample_count=config.batch_size, alpha=alpha, boundary_hits=hits,
            warnings=tuple(warnings), weight_var=wvar))

    estimate = Estimate(
        value=uniform_combined(batch_means),
        batch_values=tuple(batch_means),
        batch_weights=(1.0 / config.total_updates,) * config.total_updates,
        sample_counts=(config.batch_size,) * config.total_updates,
    )
    return estimate, Trace(tuple(steps), theta.copy())
