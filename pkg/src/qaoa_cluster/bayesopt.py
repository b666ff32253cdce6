"""Gaussian-process Bayesian optimization with a Matern-5/2 kernel and UCB.

The search domain is the box ``[0, 2 pi)^d``. Distances are Euclidean by
default; ``wrapped=True`` switches to the chordal distance on the torus.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
SQRT5 = math.sqrt(5.0)


class GpNumericError(ArithmeticError):
    """Gram matrix could not be factorized even after jitter."""


@dataclass(frozen=True)
class Kernel:
    variance: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if self.variance <= 0 or self.lengthscale <= 0:
            raise ValueError("kernel variance and lengthscale must be positive")


@dataclass
class OptimizerConfig:
    """Knobs for :func:`optimize`; defaults are declared, not fitted."""

    variance: float = 1.0
    lengthscale: float = 1.0
    noise: float = 0.01
    prior_mean: float = 0.0
    kappa: float = 2.576
    candidate_count: int = 1000
    refinement_steps: int = 20
    initial_step: float = 0.25
    wrapped: bool = False
    early_stop: bool = True

    def __post_init__(self):
        Kernel(self.variance, self.lengthscale)
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")
        if self.refinement_steps < 0:
            raise ValueError("refinement_steps must be >= 0")

    @property
    def kernel(self) -> Kernel:
        return Kernel(self.variance, self.lengthscale)


def pairwise_distance(a: np.ndarray, b: np.ndarray, wrapped: bool = False) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError("points must have equal dimension")
    diff = a[:, None, :] - b[None, :, :]
    if wrapped:
        # chord length on a circle of circumference 2 pi, per coordinate
        diff = 2.0 * np.sin(diff / 2.0)
    return np.sqrt(np.sum(diff**2, axis=-1))


def matern25_from_distance(r, kernel: Kernel) -> np.ndarray:
    s = SQRT5 * np.asarray(r, dtype=float) / kernel.lengthscale
    return kernel.variance * (1.0 + s + s**2 / 3.0) * np.exp(-s)


def matern25(theta_a, theta_b, kernel: Kernel = Kernel(), wrapped: bool = False) -> float:
    """``var * (1 + sqrt5 r/l + 5 r^2 / (3 l^2)) * exp(-sqrt5 r/l)``."""
    r = pairwise_distance(theta_a, theta_b, wrapped)[0, 0]
    return float(matern25_from_distance(r, kernel))


@dataclass
class GpModel:
    dim: int
    kernel: Kernel = field(default_factory=Kernel)
    noise: float = 0.01
    prior_mean: float = 0.0
    wrapped: bool = False
    thetas: list[np.ndarray] = field(default_factory=list)
    ys: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError("observation noise must be non-negative")
        self._factor = None

    @classmethod
    def from_config(cls, dim: int, config: OptimizerConfig) -> "GpModel":
        return cls(dim, config.kernel, config.noise, config.prior_mean, config.wrapped)

    def __len__(self) -> int:
        return len(self.ys)

    def add(self, theta, y: float) -> None:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.dim:
            raise ValueError(f"expected a {self.dim}-dimensional point")
        self.thetas.append(theta)
        self.ys.append(float(y))
        self._factor = None

    def _k(self, a, b) -> np.ndarray:
        return matern25_from_distance(pairwise_distance(a, b, self.wrapped), self.kernel)

    def _fit(self):
        if self._factor is None:
            x = np.array(self.thetas)
            gram = self._k(x, x)
            gram[np.diag_indices_from(gram)] += self.noise
            factor = None
            # jitter only when the plain factorization fails
            for jitter in (0.0, 1e-10, 1e-8, 1e-6):
                try:
                    factor = cho_factor(gram + jitter * self.kernel.variance * np.eye(len(x)), lower=True)
                    break
                except LinAlgError:
                    log.warning("Gram matrix not positive definite; retrying with jitter")
            if factor is None:
                raise GpNumericError("Gram matrix is singular; duplicate observations need noise > 0")
            resid = np.array(self.ys) - self.prior_mean
            self._factor = (x, factor, cho_solve(factor, resid))
        return self._factor

    def predict(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at each row of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        prior_var = self.kernel.variance
        if not self.ys:
            n = len(points)
            return np.full(n, self.prior_mean), np.full(n, math.sqrt(prior_var))
        x, (chol, lower), alpha = self._fit()
        ks = self._k(points, x)
        mu = self.prior_mean + ks @ alpha
        v = solve_triangular(chol, ks.T, lower=lower)
        var = prior_var - np.sum(v**2, axis=0)
        return mu, np.sqrt(np.clip(var, 0.0, None))


def posterior(model: GpModel, theta) -> tuple[float, float]:
    mu, sigma = model.predict(theta)
    return float(mu[0]), float(sigma[0])


def ucb(model: GpModel, theta, config: OptimizerConfig) -> float:
    mu, sigma = posterior(model, theta)
    return mu + config.kappa * sigma


def _ucb_batch(model: GpModel, points: np.ndarray, kappa: float) -> np.ndarray:
    mu, sigma = model.predict(points)
    return mu + kappa * sigma


def propose_next(model: GpModel, config: OptimizerConfig, seed) -> np.ndarray:
    """Approximate argmax of UCB over ``[0, 2 pi)^d``.

    Uniform random candidates, then coordinate-wise local search from the
    best one: try ``+-step`` on each axis, keep strict improvements, halve
    the step after a sweep with none.
    """
    rng = np.random.default_rng(seed)
    cands = rng.uniform(0.0, TWO_PI, size=(config.candidate_count, model.dim))
    scores = _ucb_batch(model, cands, config.kappa)
    k = int(np.argmax(scores))
    best, best_score = cands[k].copy(), scores[k]
    step = config.initial_step
    upper = np.nextafter(TWO_PI, 0.0)
    for _ in range(config.refinement_steps):
        trial = np.repeat(best[None, :], 2 * model.dim, axis=0)
        for d in range(model.dim):
            trial[2 * d, d] += step
            trial[2 * d + 1, d] -= step
        trial = np.clip(trial, 0.0, upper)
        trial_scores = _ucb_batch(model, trial, config.kappa)
        t = int(np.argmax(trial_scores))
        if trial_scores[t] > best_score:
            best, best_score = trial[t].copy(), trial_scores[t]
        else:
            step /= 2
    return best


@dataclass
class OptimizationTrace:
    thetas: list[np.ndarray] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    historic_best: list[float] = field(default_factory=list)
    extras: list[object] = field(default_factory=list)
    reached_target: bool = False

    def __len__(self) -> int:
        return len(self.values)

    @property
    def best_value(self) -> float:
        return self.historic_best[-1] if self.historic_best else -math.inf

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.values))


class OptimizationAborted(RuntimeError):
    """The objective raised; ``trace`` holds every completed step."""

    def __init__(self, trace: OptimizationTrace, cause: BaseException):
        self.trace = trace
        super().__init__(f"objective failed after {len(trace)} steps: {cause!r}")


def optimize(
    objective: Callable[[np.ndarray], float | tuple[float, object]],
    budget: int,
    config: OptimizerConfig,
    seed,
    dim: int = 2,
    target: float | None = None,
) -> OptimizationTrace:
    """Sequential GP-UCB maximization of a noisy black box.

    ``objective`` may return ``value`` or ``(value, extra)``; extras are
    kept on the trace. With ``config.early_stop`` and a ``target``, the run
    ends on the first value ``>= target``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    step_seeds = ss.spawn(budget)
    model = GpModel.from_config(dim, config)
    trace = OptimizationTrace()
    best = -math.inf
    for step in range(budget):
        theta = propose_next(model, config, step_seeds[step])
        try:
            result = objective(theta)
        except Exception as exc:
            raise OptimizationAborted(trace, exc) from exc
        value, extra = result if isinstance(result, tuple) else (result, None)
        value = float(value)
        best = max(best, value)
        trace.thetas.append(theta)
        trace.values.append(value)
        trace.historic_best.append(best)
        trace.extras.append(extra)
        log.debug("step %d theta=%s value=%.6f best=%.6f", step, theta, value, best)
        if config.early_stop and target is not None and value >= target:
            trace.reached_target = True
            break
        model.add(theta, value)
    return trace


def dense_grid_argmax(f: Callable[[np.ndarray], np.ndarray], dim: int, points: int):
    """Brute-force maximum of a vectorized ``f`` on a regular grid of ``[0, 2 pi)^dim``."""
    axes = [np.arange(points) * TWO_PI / points] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    values = f(grid)
    k = int(np.argmax(values))
    return grid[k], float(values[k])
