"""Shared oracles and the acceptance summary hook."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

ACCEPTANCE_LINES: list[str] = []

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


def op_on(qubit: int, m: np.ndarray, n: int) -> np.ndarray:
    """Dense ``m`` acting on ``qubit``; qubit k is bit k of the basis index."""
    out = np.eye(1, dtype=complex)
    for k in reversed(range(n)):
        out = np.kron(out, m if k == qubit else np.eye(2))
    return out


def dense_cost_hamiltonian(g) -> np.ndarray:
    """``H_C = -sum w_ij (1 - Z_i Z_j) / 2`` built from Kronecker products."""
    dim = 2**g.node_count
    h = np.zeros((dim, dim), dtype=complex)
    for i, j, w in g.edges:
        zz = op_on(i, PAULI_Z, g.node_count) @ op_on(j, PAULI_Z, g.node_count)
        h -= w * (np.eye(dim) - zz) / 2
    return h


def dense_qaoa_state(g, gammas, betas) -> np.ndarray:
    n = g.node_count
    hc = dense_cost_hamiltonian(g)
    hd = sum(op_on(k, PAULI_X, n) for k in range(n))
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for gamma, beta in zip(gammas, betas):
        psi = expm(-1j * beta * hd) @ (expm(-1j * gamma * hc) @ psi)
    return psi


def phase_aligned_error(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise difference after removing a global phase."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    k = int(np.argmax(np.abs(b)))
    phase = a[k] / b[k]
    phase /= abs(phase)
    return float(np.max(np.abs(a - phase * b)))


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
