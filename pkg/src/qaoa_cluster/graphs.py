"""Weighted graphs, cut costs and the Ising encoding of Maxcut.

Bit strings are stored as integers (bit ``k`` is vertex ``k``) or as 0/1
sequences; the integer form is what the simulator indexes with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_BRUTE_FORCE_NODES = 28

# Couplers of the 20-qubit lattice that support a two-qubit gate, keyed by
# physical qubit label. Qubit 3 is dropped along with its couplers 3-8, 3-9.
_PHYSICAL_19Q_COUPLERS = (
    (0, 5), (0, 6), (1, 6), (1, 7), (2, 7), (2, 8), (4, 9),
    (5, 10), (6, 11), (7, 12), (8, 13), (9, 14),
    (10, 15), (10, 16), (11, 16), (11, 17), (12, 17), (12, 18),
    (13, 18), (13, 19), (14, 19),
)
PHYSICAL_QUBITS_19Q = tuple(q for q in range(20) if q != 3)


class GraphError(ValueError):
    """Raised for malformed graphs or mismatched assignments."""


class CapacityError(RuntimeError):
    """Raised when an instance is too large for exhaustive treatment."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with non-negative edge weights.

    Edges are kept canonical: ``i < j``, sorted, no duplicates and no
    zero weights (a zero weight is the same as a missing edge).
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]

    def __init__(self, node_count: int, edges: Iterable[Sequence[float]] = ()):
        if int(node_count) < 1:
            raise GraphError(f"node_count must be positive, got {node_count}")
        n = int(node_count)
        seen: dict[tuple[int, int], float] = {}
        for edge in edges:
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise GraphError(f"self-loop on vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for {n} nodes")
            if not np.isfinite(w) or w < 0:
                raise GraphError(f"edge ({i}, {j}) has invalid weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen[key] = w
        canon = tuple((i, j, w) for (i, j), w in sorted(seen.items()) if w > 0)
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", canon)

    @property
    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in self.edges]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.edges else 0

    def adjacency(self) -> np.ndarray:
        """Dense symmetric weight matrix ``C`` with a zero diagonal."""
        c = np.zeros((self.node_count, self.node_count))
        for i, j, w in self.edges:
            c[i, j] = c[j, i] = w
        return c

    def with_weights(self, weights: Sequence[float]) -> "WeightedGraph":
        if len(weights) != len(self.edges):
            raise GraphError("one weight per edge required")
        return WeightedGraph(
            self.node_count, [(i, j, w) for (i, j, _), w in zip(self.edges, weights)]
        )

    def to_json(self) -> dict:
        return {"nodes": self.node_count, "edges": [[i, j, w] for i, j, w in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> "WeightedGraph":
        try:
            nodes = data["nodes"]
            edges = data["edges"]
        except (KeyError, TypeError) as exc:
            raise GraphError(f"graph JSON needs 'nodes' and 'edges': {exc}") from None
        if isinstance(nodes, bool) or not isinstance(nodes, int):
            raise GraphError("'nodes' must be an integer")
        for k, e in enumerate(edges):
            if not isinstance(e, (list, tuple)) or len(e) != 3:
                raise GraphError(f"edges[{k}] must be [i, j, w]")
        return cls(nodes, edges)


def load_graph(path: str | Path) -> WeightedGraph:
    with open(path) as fh:
        return WeightedGraph.from_json(json.load(fh))


def save_graph(graph: WeightedGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_json(), fh, indent=1)
        fh.write("\n")


def bits_to_int(bits: Sequence[int]) -> int:
    return sum(1 << k for k, b in enumerate(bits) if b)


def int_to_bits(x: int, n: int) -> tuple[int, ...]:
    return tuple((x >> k) & 1 for k in range(n))


def _as_bits(g: WeightedGraph, assignment) -> np.ndarray:
    if isinstance(assignment, (int, np.integer)):
        if not 0 <= assignment < 2**g.node_count:
            raise GraphError(f"assignment {assignment} out of range")
        return np.array(int_to_bits(int(assignment), g.node_count))
    bits = np.asarray(assignment, dtype=int)
    if bits.shape != (g.node_count,):
        raise GraphError(
            f"assignment length {bits.size} does not match {g.node_count} nodes"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise GraphError("assignment entries must be 0 or 1")
    return bits


def cut_cost(g: WeightedGraph, assignment) -> float:
    """Total weight of edges whose endpoints fall on different sides."""
    bits = _as_bits(g, assignment)
    return float(sum(w for i, j, w in g.edges if bits[i] != bits[j]))


def ising_energy(g: WeightedGraph, assignment) -> float:
    """Ising energy with one unit of energy per unit of cut weight (``-cut``)."""
    return -cut_cost(g, assignment)


def _cut_block(g: WeightedGraph, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    values = np.zeros(stop - start)
    for i, j, w in g.edges:
        values += w * (((idx >> i) ^ (idx >> j)) & 1)
    return values


def cut_values(g: WeightedGraph) -> np.ndarray:
    """Cut cost of every basis state, indexed by the bit-string integer."""
    n = g.node_count
    if n > MAX_BRUTE_FORCE_NODES:
        raise CapacityError(f"{n} nodes exceeds enumeration guard {MAX_BRUTE_FORCE_NODES}")
    return _cut_block(g, 0, 2**n)


def brute_force_maxcut(g: WeightedGraph) -> tuple[tuple[int, ...], float]:
    """Exact Maxcut by enumeration.

    Ties go to the smallest assignment read as a binary integer with bit 0
    least significant.
    """
    n = g.node_count
    if n > MAX_BRUTE_FORCE_NODES:
        raise CapacityError(f"{n} nodes exceeds enumeration guard {MAX_BRUTE_FORCE_NODES}")
    best, best_value = 0, -1.0
    block = 1 << 20
    for start in range(0, 2**n, block):
        values = _cut_block(g, start, min(start + block, 2**n))
        k = int(np.argmax(values))  # first maximum within the block
        if values[k] > best_value:
            best, best_value = start + k, float(values[k])
    return int_to_bits(best, n), best_value


def optimal_assignments(g: WeightedGraph, atol: float = 1e-9) -> np.ndarray:
    """Integers of all assignments attaining the maximum cut."""
    values = cut_values(g)
    return np.flatnonzero(values >= values.max() - atol)


def topology_19q() -> WeightedGraph:
    """Coupling graph of the 19-qubit processor with unit weights.

    Physical qubits 0-2 and 4-19 become vertices 0-18 in order.
    """
    relabel = {q: k for k, q in enumerate(PHYSICAL_QUBITS_19Q)}
    return WeightedGraph(
        len(PHYSICAL_QUBITS_19Q),
        [(relabel[a], relabel[b], 1.0) for a, b in _PHYSICAL_19Q_COUPLERS],
    )


def random_weights(g: WeightedGraph, seed: int) -> WeightedGraph:
    """Same edges, weights drawn i.i.d. uniform on (0, 1]."""
    rng = np.random.default_rng(seed)
    # random() is on [0, 1); 1 - u maps that onto (0, 1]
    return g.with_weights(1.0 - rng.random(len(g.edges)))


def random_graph(n: int, seed: int, edge_prob: float = 0.5) -> WeightedGraph:
    """Erdos-Renyi graph with uniform (0, 1] weights, used by tests and presets."""
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((i, j, 1.0 - rng.random()))
    return WeightedGraph(n, edges)
