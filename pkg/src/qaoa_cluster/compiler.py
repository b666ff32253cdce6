"""Lowering QAOA layers to a native gate program.

Each cost term ``exp(i gamma w_ij [b_i != b_j])`` becomes
``CNOT i j; RZ(gamma * w_ij) j; CNOT i j``. Terms are grouped into rounds
of vertex-disjoint edges so that every round costs two two-qubit layers.
In the ``cz`` basis each CNOT is rewritten as ``H j; CZ i j; H j`` and a
peephole pass cancels the resulting ``H H`` pairs.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import WeightedGraph
from .statevector import (
    H_MATRIX,
    PAULIS,
    StateVector,
    QaoaAngles,
    apply_cnot,
    apply_cz,
    apply_pauli,
    apply_single_qubit,
    rx_matrix,
    rz_matrix,
)

SINGLE_QUBIT = {"H", "X", "RZ", "RX", "MEASURE"}
TWO_QUBIT = {"CNOT", "CZ"}
PARAMETRIC = {"RZ", "RX"}
BASES = ("cnot", "cz")


class ProgramError(ValueError):
    """Malformed gate program; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Instruction:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __str__(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.angle is None:
            return f"{self.name} {args}"
        return f"{self.name}({format_angle(self.angle)}) {args}"


@dataclass(frozen=True)
class GateProgram:
    """Ordered native gates with two-qubit round boundaries.

    ``round_markers[k]`` is the index of the first two-qubit instruction of
    round ``k``; round ``k`` spans up to ``round_markers[k + 1]``.
    """

    n_qubits: int
    instructions: tuple[Instruction, ...]
    round_markers: tuple[int, ...] = ()

    def __post_init__(self):
        for k, ins in enumerate(self.instructions):
            _validate(ins, self.n_qubits, k)
        markers = list(self.round_markers)
        if markers != sorted(set(markers)):
            raise ProgramError("round markers must be strictly increasing")
        for r, ops in enumerate(self.rounds()):
            used: set[int] = set()
            for ins in ops:
                if used & set(ins.qubits):
                    raise ProgramError(f"round {r} reuses a qubit")
                used.update(ins.qubits)

    def rounds(self) -> list[list[Instruction]]:
        """Two-qubit instructions grouped by round."""
        bounds = list(self.round_markers) + [len(self.instructions)]
        return [
            [ins for ins in self.instructions[a:b] if ins.name in TWO_QUBIT]
            for a, b in zip(bounds[:-1], bounds[1:])
        ]

    def two_qubit_depth(self) -> int:
        return sum(1 for ops in self.rounds() if ops)

    def count(self, name: str) -> int:
        return sum(1 for ins in self.instructions if ins.name == name)

    def __len__(self) -> int:
        return len(self.instructions)


def _validate(ins: Instruction, n_qubits: int, index: int | None = None) -> None:
    where = f"instruction {index}: " if index is not None else ""
    if ins.name not in SINGLE_QUBIT | TWO_QUBIT:
        raise ProgramError(f"{where}unknown gate {ins.name!r}")
    arity = 2 if ins.name in TWO_QUBIT else 1
    if len(ins.qubits) != arity:
        raise ProgramError(f"{where}{ins.name} takes {arity} qubit(s)")
    if (ins.angle is None) == (ins.name in PARAMETRIC):
        raise ProgramError(f"{where}{ins.name} angle mismatch")
    for q in ins.qubits:
        if not 0 <= q < n_qubits:
            raise ProgramError(f"{where}qubit {q} out of range for {n_qubits} qubits")
    if arity == 2 and ins.qubits[0] == ins.qubits[1]:
        raise ProgramError(f"{where}{ins.name} operands must be distinct")


@dataclass(frozen=True)
class Schedule:
    rounds: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self) -> int:
        return len(self.rounds)


def schedule_edges(g: WeightedGraph) -> Schedule:
    """Greedy edge colouring: each edge, in ``(i, j)`` order, joins the first
    round in which neither endpoint is busy."""
    rounds: list[list[tuple[int, int]]] = []
    busy: list[set[int]] = []
    for i, j in sorted(g.edge_pairs):
        for r, used in enumerate(busy):
            if i not in used and j not in used:
                rounds[r].append((i, j))
                used.update((i, j))
                break
        else:
            rounds.append([(i, j)])
            busy.append({i, j})
    return Schedule(tuple(tuple(r) for r in rounds))


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.ops: list[Instruction] = []
        self.tags: list[int | None] = []  # two-qubit round id per instruction
        self.next_round = 0

    def add(self, name: str, *qubits: int, angle: float | None = None, tag=None):
        self.ops.append(Instruction(name, tuple(qubits), angle))
        self.tags.append(tag)

    def new_round(self) -> int:
        self.next_round += 1
        return self.next_round - 1

    def cnot_layer(self, edges, basis: str) -> None:
        tag = self.new_round()
        if basis == "cnot":
            for i, j in edges:
                self.add("CNOT", i, j, tag=tag)
            return
        for _, j in edges:
            self.add("H", j)
        for i, j in edges:
            self.add("CZ", i, j, tag=tag)
        for _, j in edges:
            self.add("H", j)

    def cost_layer(self, g: WeightedGraph, gamma: float, basis: str) -> None:
        if basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {basis!r}")
        weight = {(i, j): w for i, j, w in g.edges}
        for edges in schedule_edges(g).rounds:
            self.cnot_layer(edges, basis)
            for i, j in edges:
                self.add("RZ", j, angle=gamma * weight[(i, j)])
            self.cnot_layer(edges, basis)

    def build(self, fuse: bool) -> GateProgram:
        ops, tags = self.ops, self.tags
        if fuse:
            ops, tags = _fuse(ops, tags)
        markers = []
        seen = set()
        for k, t in enumerate(tags):
            if t is not None and t not in seen:
                seen.add(t)
                markers.append(k)
        return GateProgram(self.n, tuple(ops), tuple(markers))


def _fuse(ops: Sequence[Instruction], tags: Sequence[int | None]):
    """Cancel ``H H`` and merge ``RZ RZ`` when adjacent on the same wire."""
    out: list[Instruction | None] = []
    out_tags: list[int | None] = []
    last: dict[int, int] = {}  # qubit -> position in out of its latest gate
    for ins, tag in zip(ops, tags):
        if ins.name in ("H", "RZ"):
            q = ins.qubits[0]
            k = last.get(q)
            prev = out[k] if k is not None else None
            if prev is not None and prev.name == ins.name:
                if ins.name == "H":
                    out[k] = None
                    del last[q]
                else:
                    out[k] = Instruction("RZ", (q,), prev.angle + ins.angle)
                continue
        out.append(ins)
        out_tags.append(tag)
        for q in ins.qubits:
            last[q] = len(out) - 1
    # a removed H can expose another H on the same wire; rerun to a fixed point
    kept = [(i, t) for i, t in zip(out, out_tags) if i is not None]
    new_ops = [i for i, _ in kept]
    new_tags = [t for _, t in kept]
    if len(new_ops) < len(ops):
        return _fuse(new_ops, new_tags)
    return new_ops, new_tags


def compile_cost_layer(
    g: WeightedGraph, gamma: float, basis: str = "cnot", fuse: bool = False
) -> GateProgram:
    b = _Builder(g.node_count)
    b.cost_layer(g, gamma, basis)
    return b.build(fuse)


def compile_qaoa(
    g: WeightedGraph, angles: QaoaAngles, basis: str = "cnot", fuse: bool = True
) -> GateProgram:
    """Full circuit: ``H`` on every qubit, ``p`` x (cost layer, ``RX(2 beta)``),
    then ``MEASURE`` on every qubit."""
    n = g.node_count
    b = _Builder(n)
    for q in range(n):
        b.add("H", q)
    for gamma, beta in zip(angles.gammas, angles.betas):
        b.cost_layer(g, gamma, basis)
        for q in range(n):
            b.add("RX", q, angle=2 * beta)
    for q in range(n):
        b.add("MEASURE", q)
    return b.build(fuse)


# --- text format -----------------------------------------------------------

_LINE = re.compile(r"^([A-Z]+)(?:\((.*)\))?((?:\s+\S+)*)\s*$")
_HEADER = re.compile(r"^#\s*qubits\s+(\d+)\s*$")
_ROUND = re.compile(r"^#\s*round\s+(\d+)\s*$")
_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}


def format_angle(theta: float) -> str:
    return repr(float(theta))


def parse_angle(text: str) -> float:
    """Evaluate a decimal or ``pi`` expression such as ``-3*pi/4``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ValueError(f"malformed angle {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"malformed angle {text!r}")
    return value


def parse_program(text: str, n_qubits: int | None = None) -> GateProgram:
    """Parse the line format written by :func:`emit_program`.

    The qubit count comes from ``n_qubits``, else a ``# qubits N`` header,
    else the largest index used.
    """
    ops: list[Instruction] = []
    lines: list[int] = []
    markers: list[int] = []
    pending_round: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if m := _HEADER.match(line):
                if n_qubits is None:
                    n_qubits = int(m.group(1))
            elif m := _ROUND.match(line):
                if int(m.group(1)) != len(markers) + (pending_round is not None):
                    raise ProgramError("round labels must count up from 0", lineno)
                if pending_round is not None:
                    raise ProgramError("empty round", lineno)
                pending_round = lineno
            continue
        m = _LINE.match(line)
        if not m:
            raise ProgramError(f"cannot parse {line!r}", lineno)
        name, angle_text, args = m.group(1), m.group(2), m.group(3).split()
        if name not in SINGLE_QUBIT | TWO_QUBIT:
            raise ProgramError(f"unknown mnemonic {name!r}", lineno)
        angle = None
        if angle_text is not None:
            if name not in PARAMETRIC:
                raise ProgramError(f"{name} takes no angle", lineno)
            try:
                angle = parse_angle(angle_text)
            except ValueError as exc:
                raise ProgramError(str(exc), lineno) from None
        elif name in PARAMETRIC:
            raise ProgramError(f"{name} needs an angle", lineno)
        try:
            qubits = tuple(int(a) for a in args)
        except ValueError:
            raise ProgramError(f"bad qubit index in {line!r}", lineno) from None
        arity = 2 if name in TWO_QUBIT else 1
        if len(qubits) != arity:
            raise ProgramError(f"{name} takes {arity} qubit(s)", lineno)
        if any(q < 0 for q in qubits):
            raise ProgramError("negative qubit index", lineno)
        if arity == 2 and qubits[0] == qubits[1]:
            raise ProgramError(f"{name} operands must be distinct", lineno)
        if pending_round is not None and name in TWO_QUBIT:
            markers.append(len(ops))
            pending_round = None
        ops.append(Instruction(name, qubits, angle))
        lines.append(lineno)
    if pending_round is not None:
        raise ProgramError("empty round", pending_round)
    if n_qubits is None:
        n_qubits = 1 + max((q for ins in ops for q in ins.qubits), default=0)
    for ins, lineno in zip(ops, lines):
        for q in ins.qubits:
            if q >= n_qubits:
                raise ProgramError(f"qubit {q} out of range for {n_qubits} qubits", lineno)
    try:
        return GateProgram(n_qubits, tuple(ops), tuple(markers))
    except ProgramError as exc:
        raise ProgramError(str(exc)) from None


def emit_program(program: GateProgram) -> str:
    markers = {k: r for r, k in enumerate(program.round_markers)}
    out = [f"# qubits {program.n_qubits}"]
    for k, ins in enumerate(program.instructions):
        if k in markers:
            out.append(f"# round {markers[k]}")
        out.append(str(ins))
    return "\n".join(out) + "\n"


# --- execution ---------------------------------------------------------------

_TWO_QUBIT_PAULIS = [a + b for a in "IXYZ" for b in "IXYZ"][1:]


def run_program(
    program: GateProgram,
    state: StateVector | None = None,
    depolarizing_prob: float = 0.0,
    rng: np.random.Generator | None = None,
) -> StateVector:
    """Execute gate by gate, starting from ``|0...0>`` unless ``state`` is given.

    ``MEASURE`` is a no-op here; sampling happens on the returned state.
    With ``depolarizing_prob > 0`` one error trajectory is drawn from ``rng``.
    """
    state = StateVector.basis(program.n_qubits) if state is None else state.copy()
    if depolarizing_prob > 0 and rng is None:
        raise ValueError("a generator is required for noisy execution")
    for ins in program.instructions:
        name, q = ins.name, ins.qubits
        if name == "H":
            apply_single_qubit(state, q[0], H_MATRIX)
        elif name == "X":
            apply_single_qubit(state, q[0], PAULIS["X"])
        elif name == "RZ":
            apply_single_qubit(state, q[0], rz_matrix(ins.angle))
        elif name == "RX":
            apply_single_qubit(state, q[0], rx_matrix(ins.angle))
        elif name == "CNOT":
            apply_cnot(state, q[0], q[1])
        elif name == "CZ":
            apply_cz(state, q[0], q[1])
        if name in TWO_QUBIT and depolarizing_prob > 0 and rng.random() < depolarizing_prob:
            pa, pb = _TWO_QUBIT_PAULIS[rng.integers(len(_TWO_QUBIT_PAULIS))]
            apply_pauli(state, q[0], pa)
            apply_pauli(state, q[1], pb)
    return state


def program_unitary(program: GateProgram) -> np.ndarray:
    """Dense unitary of a measurement-free program, column ``k`` = image of ``|k>``."""
    dim = 2**program.n_qubits
    cols = []
    for k in range(dim):
        cols.append(run_program(program, StateVector.basis(program.n_qubits, k)).amplitudes)
    return np.array(cols).T

