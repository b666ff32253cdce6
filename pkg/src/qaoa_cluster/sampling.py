"""Cost distributions of sampled bit strings and their order statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .compiler import compile_qaoa, run_program
from .graphs import WeightedGraph, int_to_bits
from .statevector import (
    NoiseModel,
    QaoaAngles,
    apply_readout_noise,
    cut_table,
    draw_indices,
    prepare_qaoa_state,
    sample_bitstrings,
)

STATISTICS = ("max", "mean", "expected_max")


@dataclass(frozen=True)
class CostSample:
    """Cut costs of ``N`` measured bit strings."""

    values: np.ndarray
    bitstrings: np.ndarray
    n_nodes: int

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("a cost sample needs at least one value")

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def best_bitstring(self) -> tuple[int, ...]:
        return int_to_bits(int(self.bitstrings[self.best_index]), self.n_nodes)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def __len__(self) -> int:
        return len(self.values)


def _trajectory_samples(g, angles, n_shots, noise, rng) -> np.ndarray:
    program = compile_qaoa(g, angles, basis="cz")
    shots = np.full(noise.trajectories, n_shots // noise.trajectories)
    shots[: n_shots % noise.trajectories] += 1
    out = []
    for n in shots:
        if n == 0:
            continue
        state = run_program(program, depolarizing_prob=noise.depolarizing_prob_2q, rng=rng)
        out.append(draw_indices(state.probabilities(), int(n), rng).astype(np.int64))
    samples = np.concatenate(out)
    flip = noise.readout_vector(g.node_count)
    if np.any(flip > 0):
        samples = apply_readout_noise(samples, g.node_count, flip, rng)
    return samples


def evaluate_distribution(
    g: WeightedGraph,
    angles: QaoaAngles,
    n_shots: int,
    seed,
    noise: NoiseModel | None = None,
) -> CostSample:
    """Prepare the QAOA state, measure ``n_shots`` times and score each shot.

    With two-qubit depolarizing noise the shots are split evenly over
    ``noise.trajectories`` gate-level runs of the compiled ``cz`` circuit,
    each with its own sampled error pattern.
    """
    if noise is not None and noise.depolarizing_prob_2q > 0:
        samples = _trajectory_samples(g, angles, n_shots, noise, np.random.default_rng(seed))
    else:
        state = prepare_qaoa_state(g, angles)
        samples = sample_bitstrings(state, n_shots, seed, noise)
    values = cut_table(g)[samples]
    return CostSample(values, samples, g.node_count)


def best_statistic(s: CostSample) -> float:
    """Largest sampled cost, the realised ``N``-th order statistic."""
    return float(np.max(s.values))


def statistic(s: CostSample, kind: str = "max") -> float:
    """Objective handed to the optimizer.

    ``expected_max`` plugs the empirical distribution into the expected
    maximum of ``len(s)`` draws.
    """
    if kind == "max":
        return best_statistic(s)
    if kind == "mean":
        return s.mean
    if kind == "expected_max":
        support, pdf = empirical_distribution(s.values)
        return extreme_value_expectations(support, pdf, len(s))[1]
    raise ValueError(f"unknown statistic {kind!r}; choose from {STATISTICS}")


def empirical_distribution(values) -> tuple[np.ndarray, np.ndarray]:
    support, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    return support, counts / counts.sum()


def _check_pdf(pdf: np.ndarray) -> np.ndarray:
    pdf = np.asarray(pdf, dtype=float)
    if np.any(pdf < 0) or abs(pdf.sum() - 1.0) > 1e-9:
        raise ValueError("pdf must be non-negative and sum to 1")
    return pdf


def order_statistic_cdf(cdf: np.ndarray, j: int, n: int) -> np.ndarray:
    """``P(F_(j) <= v) = sum_{k >= j} C(n, k) F(v)^k (1 - F(v))^(n - k)``."""
    if not 1 <= j <= n:
        raise ValueError(f"order j={j} outside [1, {n}]")
    # binomial survival function: P(Binom(n, F) >= j)
    return binom.sf(j - 1, n, np.clip(cdf, 0.0, 1.0))


def order_statistic_pdf(pdf, cdf, j: int, n: int) -> np.ndarray:
    """Distribution of the ``j``-th smallest of ``n`` i.i.d. draws.

    ``pdf``/``cdf`` are aligned with a sorted discrete support. The result
    is obtained by differencing the order-statistic CDF, which stays exact
    at atoms where a density formula does not apply.
    """
    pdf = _check_pdf(pdf)
    cdf = np.asarray(cdf, dtype=float)
    if cdf.shape != pdf.shape:
        raise ValueError("pdf and cdf must have the same shape")
    g = order_statistic_cdf(cdf, j, n)
    return np.diff(np.concatenate(([0.0], g)))


def order_statistic_density(density, cdf, j: int, n: int) -> np.ndarray:
    """Continuous-case density of ``F_(j)`` evaluated pointwise:
    ``n C(n-1, j-1) p(v) C(v)^(j-1) (1 - C(v))^(n-j)``."""
    if not 1 <= j <= n:
        raise ValueError(f"order j={j} outside [1, {n}]")
    density = np.asarray(density, dtype=float)
    cdf = np.asarray(cdf, dtype=float)
    return n * binom.pmf(j - 1, n - 1, cdf) * density


def extreme_value_expectations(support, pdf, n: int, cdf=None) -> tuple[float, float]:
    """Expected minimum and maximum of ``n`` i.i.d. draws."""
    support = np.asarray(support, dtype=float)
    pdf = _check_pdf(pdf)
    if cdf is None:
        cdf = np.cumsum(pdf)
    s1 = float(support @ order_statistic_pdf(pdf, cdf, 1, n))
    sn = float(support @ order_statistic_pdf(pdf, cdf, n, n))
    return s1, sn


def exact_cost_distribution(g: WeightedGraph, angles: QaoaAngles) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of the cut cost under the noiseless QAOA state."""
    probs = prepare_qaoa_state(g, angles).probabilities()
    values = cut_table(g)
    support, inverse = np.unique(np.round(values, 12), return_inverse=True)
    return support, np.bincount(inverse, weights=probs, minlength=support.size)
