"""Device error figures for the 19-qubit processor, used by ``--noise table-s1``.

Readout assignment fidelities are per physical qubit; two-qubit process
fidelities are per coupler. A symmetric readout channel with flip
probability ``1 - F_RO`` has assignment fidelity ``F_RO``, and a two-qubit
depolarizing channel with error probability ``1 - F_2q`` has process
fidelity ``F_2q``.
"""

from __future__ import annotations

import numpy as np

from .graphs import PHYSICAL_QUBITS_19Q
from .statevector import NoiseModel

READOUT_FIDELITY = {
    0: 0.938, 1: 0.958, 2: 0.970, 3: 0.886, 4: 0.953,
    5: 0.965, 6: 0.840, 7: 0.925, 8: 0.947, 9: 0.927,
    10: 0.942, 11: 0.900, 12: 0.942, 13: 0.921, 14: 0.947,
    15: 0.970, 16: 0.948, 17: 0.921, 18: 0.930, 19: 0.930,
}

TWO_QUBIT_FIDELITY = {
    (0, 5): 0.936, (0, 6): 0.889, (1, 6): 0.888, (1, 7): 0.919,
    (2, 7): 0.817, (2, 8): 0.906, (4, 9): 0.854, (5, 10): 0.870,
    (6, 11): 0.838, (7, 12): 0.870, (8, 13): 0.881, (9, 14): 0.872,
    (10, 15): 0.854, (10, 16): 0.838, (11, 16): 0.891, (11, 17): 0.844,
    (12, 17): 0.876, (12, 18): 0.886, (13, 18): 0.936, (13, 19): 0.921,
    (14, 19): 0.797,
}


def table_s1_noise(n_qubits: int = 19, trajectories: int = 10) -> NoiseModel:
    """Readout flips per 19Q qubit and the mean two-qubit error rate.

    Other register sizes get the mean readout error on every qubit.
    """
    flips = np.array([1.0 - READOUT_FIDELITY[q] for q in PHYSICAL_QUBITS_19Q])
    if n_qubits != len(flips):
        flips = np.full(n_qubits, flips.mean())
    depol = float(np.mean([1.0 - f for f in TWO_QUBIT_FIDELITY.values()]))
    return NoiseModel(tuple(flips), depol, trajectories, name="table-s1")
