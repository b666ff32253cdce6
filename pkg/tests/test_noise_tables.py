import numpy as np
import pytest

from qaoa_cluster.graphs import PHYSICAL_QUBITS_19Q, topology_19q
from qaoa_cluster.noise_tables import READOUT_FIDELITY, TWO_QUBIT_FIDELITY, table_s1_noise


def test_couplers_map_onto_19q_topology():
    relabel = {q: k for k, q in enumerate(PHYSICAL_QUBITS_19Q)}
    mapped = sorted((relabel[a], relabel[b]) for a, b in TWO_QUBIT_FIDELITY)
    assert mapped == sorted(topology_19q().edge_pairs)
    assert 3 not in PHYSICAL_QUBITS_19Q and len(PHYSICAL_QUBITS_19Q) == 19


def test_table_noise_model():
    m = table_s1_noise()
    flips = m.readout_vector(19)
    assert flips[0] == pytest.approx(1 - READOUT_FIDELITY[0])
    # logical qubit 3 is physical qubit 4
    assert flips[3] == pytest.approx(1 - READOUT_FIDELITY[4])
    assert m.depolarizing_prob_2q == pytest.approx(np.mean([1 - f for f in TWO_QUBIT_FIDELITY.values()]))
    assert table_s1_noise(5).readout_vector(5).shape == (5,)
