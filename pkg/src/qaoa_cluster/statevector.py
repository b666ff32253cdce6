"""Dense state-vector simulation of QAOA circuits.

Qubit ``k`` is bit ``k`` of the basis-state integer throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .graphs import CapacityError, GraphError, WeightedGraph, cut_values

MAX_QUBITS = 24

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError("amplitude vector must have length 2**n_qubits")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    @classmethod
    def basis(cls, n: int, index: int = 0) -> "StateVector":
        _check_capacity(n)
        amps = np.zeros(2**n, dtype=complex)
        amps[index] = 1.0
        return cls(n, amps)


@dataclass(frozen=True)
class QaoaAngles:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __init__(self, gammas: Sequence[float], betas: Sequence[float]):
        gammas = tuple(float(g) for g in np.atleast_1d(gammas))
        betas = tuple(float(b) for b in np.atleast_1d(betas))
        if len(gammas) != len(betas) or not gammas:
            raise ValueError("need p >= 1 gammas and the same number of betas")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        """Optimizer coordinates ``(gamma_1..gamma_p, beta_1..beta_p)``."""
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, theta: Sequence[float]) -> "QaoaAngles":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size % 2:
            raise ValueError("angle vector must have even length 2p")
        p = theta.size // 2
        return cls(theta[:p], theta[p:])


@dataclass
class NoiseModel:
    """Readout bit flips plus optional two-qubit depolarizing errors.

    ``readout_flip_prob`` is a scalar or one probability per qubit.
    Depolarizing errors are sampled per trajectory: after every two-qubit
    gate a uniformly random non-identity two-qubit Pauli is applied with
    probability ``depolarizing_prob_2q``.
    """

    readout_flip_prob: float | Sequence[float] = 0.0
    depolarizing_prob_2q: float = 0.0
    trajectories: int = 10
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        ro = np.atleast_1d(np.asarray(self.readout_flip_prob, dtype=float))
        if np.any(ro < 0) or np.any(ro > 0.5):
            raise ValueError("readout_flip_prob must lie in [0, 0.5]")
        if not 0.0 <= self.depolarizing_prob_2q <= 1.0:
            raise ValueError("depolarizing_prob_2q must lie in [0, 1]")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")

    def readout_vector(self, n: int) -> np.ndarray:
        ro = np.atleast_1d(np.asarray(self.readout_flip_prob, dtype=float))
        if ro.size == 1:
            return np.full(n, ro[0])
        if ro.size != n:
            raise ValueError(f"readout probabilities given for {ro.size} qubits, need {n}")
        return ro

    @property
    def is_trivial(self) -> bool:
        return self.depolarizing_prob_2q == 0 and not np.any(
            np.asarray(self.readout_flip_prob) > 0
        )


def _check_capacity(n: int) -> None:
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit guard")


def uniform_superposition(n: int) -> StateVector:
    """``H^{(x)n} |0...0>``."""
    _check_capacity(n)
    return StateVector(n, np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def _check_graph(state: StateVector, g: WeightedGraph) -> None:
    if state.n_qubits != g.node_count:
        raise GraphError(
            f"state has {state.n_qubits} qubits but graph has {g.node_count} nodes"
        )


def apply_cut_phase(state: StateVector, cuts: np.ndarray, gamma: float) -> StateVector:
    """Multiply each amplitude by ``exp(-i gamma E(x)) = exp(i gamma cut(x))`` in place."""
    state.amplitudes *= np.exp(1j * gamma * cuts)
    return state


def apply_cost_unitary(state: StateVector, g: WeightedGraph, gamma: float) -> StateVector:
    """Diagonal cost layer ``exp(-i gamma H_C)`` with ``E(x) = -cut(x)``."""
    _check_graph(state, g)
    return apply_cut_phase(state, cut_table(g), gamma)


def apply_single_qubit(state: StateVector, qubit: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary ``u`` to ``qubit`` in place."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range")
    psi = state.amplitudes.reshape(-1, 2, 1 << qubit)
    a0 = psi[:, 0, :].copy()
    a1 = psi[:, 1, :]
    psi[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    psi[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return state


def _bit_mask(n: int, qubit: int) -> np.ndarray:
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range")
    return ((np.arange(2**n, dtype=np.int64) >> qubit) & 1).astype(bool)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise ValueError("CNOT operands must differ")
    n = state.n_qubits
    idx = np.arange(2**n, dtype=np.int64)
    ctrl = _bit_mask(n, control)
    _bit_mask(n, target)
    src = np.where(ctrl, idx ^ (1 << target), idx)
    state.amplitudes = state.amplitudes[src]
    return state


def apply_cz(state: StateVector, a: int, b: int) -> StateVector:
    if a == b:
        raise ValueError("CZ operands must differ")
    n = state.n_qubits
    both = _bit_mask(n, a) & _bit_mask(n, b)
    state.amplitudes[both] *= -1
    return state


def apply_pauli(state: StateVector, qubit: int, pauli: str) -> StateVector:
    """Apply ``I``, ``X``, ``Y`` or ``Z`` to one qubit."""
    if pauli != "I":
        apply_single_qubit(state, qubit, PAULIS[pauli])
    return state


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def apply_driver_unitary(state: StateVector, beta: float) -> StateVector:
    """``exp(-i beta sum_k X_k)``, i.e. ``RX(2 beta)`` on every qubit."""
    u = rx_matrix(2 * beta)
    for q in range(state.n_qubits):
        apply_single_qubit(state, q, u)
    return state


@lru_cache(maxsize=4)
def cut_table(g: WeightedGraph) -> np.ndarray:
    """Read-only cached :func:`cut_values`; QAOA loops hit the same graph repeatedly."""
    cuts = cut_values(g)
    cuts.setflags(write=False)
    return cuts


def prepare_qaoa_state(g: WeightedGraph, angles: QaoaAngles) -> StateVector:
    """``V_p U_p ... V_1 U_1 |+>^n`` on a fresh register."""
    state = uniform_superposition(g.node_count)
    cuts = cut_table(g)
    for gamma, beta in zip(angles.gammas, angles.betas):
        apply_cut_phase(state, cuts, gamma)
        apply_driver_unitary(state, beta)
    return state


def draw_indices(probs: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    # inverse CDF, one uniform per shot
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = rng.random(n_shots)
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)


def apply_readout_noise(
    samples: np.ndarray, n: int, flip: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Flip bit ``k`` of each sample independently with probability ``flip[k]``."""
    flips = rng.random((samples.size, n)) < flip
    mask = (flips.astype(np.int64) << np.arange(n, dtype=np.int64)).sum(axis=1)
    return samples ^ mask


def sample_bitstrings(
    state: StateVector,
    n_shots: int,
    seed: int | np.random.Generator | np.random.SeedSequence,
    noise: NoiseModel | None = None,
) -> np.ndarray:
    """Draw ``n_shots`` basis-state integers from ``|amplitude|^2``.

    Only the readout part of ``noise`` acts here; depolarizing errors are
    a property of the circuit and are handled by the trajectory sampler.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    rng = np.random.default_rng(seed)
    samples = draw_indices(state.probabilities(), n_shots, rng).astype(np.int64)
    if noise is not None:
        flip = noise.readout_vector(state.n_qubits)
        if np.any(flip > 0):
            samples = apply_readout_noise(samples, state.n_qubits, flip, rng)
    return samples
