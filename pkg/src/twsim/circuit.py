"""Circuits, their graphs and tensor networks, and probability simulation."""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .multigraph import MultiGraph
from .planner import (
    ContractionPlan,
    cc_of_ordering,
    decomposition_to_contraction_ordering,
    plan_contraction,
    vertex_to_line_decomposition,
)
from .tensor import (
    DEFAULT_MAX_RANK,
    Tensor,
    TensorNetwork,
    contract_network,
    density_tensor,
    povm_tensor,
    traceout_tensor,
    unitary_tensor,
)
from .treewidth import TreeDecomposition, extend_to_circuit_graph, local_interaction_path_decomposition

log = logging.getLogger(__name__)

__all__ = [
    "Circuit",
    "CircuitError",
    "Gate",
    "MeasurementScenario",
    "SimulationResult",
    "TensorNetwork",
    "build_network",
    "circuit_graph",
    "parse_circuit",
    "serialize_circuit",
    "simulate_probability",
]

_S2 = 1 / np.sqrt(2)
UNITARIES: dict[str, np.ndarray] = {
    "h": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
    "s": np.diag([1, 1j]),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]),
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}
ALIASES = {"cx": "cnot", "cphase": "cz"}

PROJ0 = np.diag([1, 0]).astype(complex)
PROJ1 = np.diag([0, 1]).astype(complex)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    ``name`` is a key of :data:`UNITARIES`, ``"u"`` (inline unitary),
    ``"traceout"``, or ``"superop"`` (inline superoperator tensor, inputs
    first). ``data`` holds the row-major inline entries.
    """

    name: str
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    data: tuple[complex, ...] | None = None

    def unitary(self) -> np.ndarray | None:
        if self.name in UNITARIES:
            return UNITARIES[self.name]
        if self.name == "u":
            d = 2 ** len(self.inputs)
            return np.array(self.data, dtype=complex).reshape(d, d)
        return None

    def superop(self) -> np.ndarray:
        """Inline superoperator entries with shape ``(4,) * (a + b)``."""
        k = len(self.inputs) + len(self.outputs)
        return np.array(self.data, dtype=complex).reshape((4,) * k)

    def tensor(self, in_wires: Sequence[int], out_wires: Sequence[int]) -> Tensor:
        u = self.unitary()
        if u is not None:
            return unitary_tensor(u, in_wires, out_wires)
        if self.name == "traceout":
            return traceout_tensor(in_wires)
        return Tensor(tuple(in_wires) + tuple(out_wires), self.superop())


@dataclass(frozen=True)
class Circuit:
    """``n`` input qubit lines and an ordered gate list.

    Outputs are the lines still alive after the last gate, in index order.
    A trace-out (or a superoperator with fewer outputs) kills a line; a
    superoperator may revive a dead line as one of its outputs.
    """

    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        self._validate()

    def _validate(self):
        if self.n < 1:
            raise CircuitError("a circuit needs at least one qubit")
        live = set(range(self.n))
        for k, g in enumerate(self.gates):
            for q in g.inputs + g.outputs:
                if not 0 <= q < self.n:
                    raise CircuitError(f"gate {k} ({g.name}): qubit {q} out of range for {self.n}-qubit circuit")
            if len(set(g.inputs)) != len(g.inputs) or len(set(g.outputs)) != len(g.outputs):
                raise CircuitError(f"gate {k} ({g.name}): repeated qubit")
            dead = [q for q in g.inputs if q not in live]
            if dead:
                raise CircuitError(f"gate {k} ({g.name}): qubit {dead[0]} is no longer alive")
            u = g.unitary()
            if u is not None:
                if g.outputs != g.inputs:
                    raise CircuitError(f"gate {k} ({g.name}): unitary outputs must equal inputs")
                if u.shape != (2 ** len(g.inputs),) * 2:
                    raise CircuitError(f"gate {k} ({g.name}): expects {int(np.log2(u.shape[0]))} qubit(s)")
                if not np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-8):
                    raise CircuitError(f"gate {k} ({g.name}): matrix is not unitary")
            elif g.name == "traceout":
                if g.outputs:
                    raise CircuitError(f"gate {k}: traceout has no outputs")
            elif g.name == "superop":
                if g.data is None or len(g.data) != 4 ** (len(g.inputs) + len(g.outputs)):
                    raise CircuitError(f"gate {k}: superop needs 4^(a+b) entries")
                reborn = [q for q in g.outputs if q in live and q not in g.inputs]
                if reborn:
                    raise CircuitError(f"gate {k}: output qubit {reborn[0]} is already alive")
            else:
                raise CircuitError(f"gate {k}: unknown gate {g.name!r}")
            live -= set(g.inputs)
            live |= set(g.outputs)
        if not live:
            raise CircuitError("circuit has no output qubits")

    @property
    def outputs(self) -> tuple[int, ...]:
        live = set(range(self.n))
        for g in self.gates:
            live -= set(g.inputs)
            live |= set(g.outputs)
        return tuple(sorted(live))

    @property
    def m(self) -> int:
        return len(self.outputs)

    @property
    def size(self) -> int:
        return len(self.gates)

    def depth(self) -> int:
        level = [0] * self.n
        depth = 0
        for g in self.gates:
            qs = g.inputs + g.outputs
            d = max(level[q] for q in qs) + 1
            for q in qs:
                level[q] = d
            depth = max(depth, d)
        return depth


def named(name: str, *qubits: int) -> Gate:
    name = ALIASES.get(name, name)
    if name == "traceout":
        return Gate("traceout", tuple(qubits), ())
    return Gate(name, tuple(qubits), tuple(qubits))


def inline_unitary(u, *qubits: int) -> Gate:
    data = tuple(complex(z) for z in np.asarray(u, dtype=complex).ravel())
    return Gate("u", tuple(qubits), tuple(qubits), data)


# -- measurement scenario ------------------------------------------------


@dataclass(frozen=True)
class MeasurementScenario:
    """POVM element per output qubit; unlisted qubits get the identity."""

    elements: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for q, m in self.elements.items():
            m = np.asarray(m, dtype=complex)
            if m.shape != (2, 2):
                raise CircuitError(f"POVM element for qubit {q} must be 2x2")
            if not np.allclose(m, m.conj().T, atol=1e-9):
                raise CircuitError(f"POVM element for qubit {q} is not Hermitian")
            if np.linalg.eigvalsh(m).min() < -1e-9:
                raise CircuitError(f"POVM element for qubit {q} is not positive semidefinite")
            clean[int(q)] = m
        object.__setattr__(self, "elements", clean)

    def element(self, q: int) -> np.ndarray:
        return self.elements.get(q, np.eye(2, dtype=complex))

    @classmethod
    def from_bits(cls, qubits: Iterable[int], bits: str | Sequence[int]) -> MeasurementScenario:
        """Computational-basis outcome ``bits`` on ``qubits``."""
        return cls({q: PROJ1 if int(b) else PROJ0 for q, b in zip(qubits, bits, strict=True)})

    def with_element(self, q: int, m) -> MeasurementScenario:
        return MeasurementScenario({**self.elements, q: m})


# -- graph and network ---------------------------------------------------


@dataclass(frozen=True)
class Wiring:
    """Vertex and wire layout shared by the graph and the network.

    Vertices: gates ``0..T-1``, input terminals ``T..T+n-1``, then output
    terminals in ``outputs`` order. Wire ids number segments in creation
    order.
    """

    segments: dict[int, tuple[int, int]]
    gate_inputs: list[list[int]]
    gate_outputs: list[list[int]]
    input_wires: list[int]
    output_wires: list[int]


def _wiring(c: Circuit) -> Wiring:
    T = c.size
    segments: dict[int, list[int]] = {}
    current: dict[int, int] = {}
    input_wires = []
    for q in range(c.n):
        segments[len(segments)] = [T + q, -1]
        current[q] = len(segments) - 1
        input_wires.append(current[q])
    gin, gout = [], []
    for k, g in enumerate(c.gates):
        ins = []
        for q in g.inputs:
            w = current.pop(q)
            segments[w][1] = k
            ins.append(w)
        outs = []
        for q in g.outputs:
            w = len(segments)
            segments[w] = [k, -1]
            current[q] = w
            outs.append(w)
        gin.append(ins)
        gout.append(outs)
    output_wires = []
    for j, q in enumerate(sorted(current)):
        w = current[q]
        segments[w][1] = T + c.n + j
        output_wires.append(w)
    return Wiring(
        {w: (a, b) for w, (a, b) in segments.items()}, gin, gout, input_wires, output_wires
    )


def circuit_graph(c: Circuit) -> MultiGraph:
    """Gates plus one terminal per input and output; one edge per wire segment."""
    wiring = _wiring(c)
    return MultiGraph(range(c.size + c.n + c.m), wiring.segments)


def build_network(c: Circuit, x: str | Sequence[int], tau: MeasurementScenario | None = None) -> TensorNetwork:
    """Closed network whose full contraction is the realisation probability."""
    x = [int(b) for b in x]
    if len(x) != c.n:
        raise CircuitError(f"input has {len(x)} bits, circuit has {c.n} qubits")
    tau = tau or MeasurementScenario()
    outputs = c.outputs
    extra = sorted(set(tau.elements) - set(outputs))
    if extra:
        raise CircuitError(f"scenario measures qubit {extra[0]}, which is not an output")
    wiring = _wiring(c)
    tensors = [g.tensor(i, o) for g, i, o in zip(c.gates, wiring.gate_inputs, wiring.gate_outputs)]
    for b, w in zip(x, wiring.input_wires):
        tensors.append(density_tensor(PROJ1 if b else PROJ0, [w]))
    for q, w in zip(outputs, wiring.output_wires):
        tensors.append(povm_tensor(tau.element(q), w))
    return TensorNetwork(tuple(tensors))


@dataclass(frozen=True)
class SimulationResult:
    probability: float
    raw: complex
    max_rank: int
    plan: ContractionPlan


def contract_closed(net: TensorNetwork, plan: ContractionPlan, max_rank: int = DEFAULT_MAX_RANK) -> tuple[complex, int]:
    res = contract_network(net, plan.ordering, max_rank)
    return res.tensor.value(), res.max_rank


def report_probability(raw: complex) -> float:
    """Clamp to ``[0, 1]``, logging values outside numerical slack."""
    if abs(raw.imag) > 1e-9:
        log.warning("probability has imaginary part %.3e", raw.imag)
    p = raw.real
    if p < -1e-9 or p > 1 + 1e-9:
        log.warning("raw probability %.17g outside [0, 1]", p)
    return min(max(p, 0.0), 1.0)


def simulate_probability(
    c: Circuit,
    x: str | Sequence[int],
    tau: MeasurementScenario | None = None,
    strategy: str = "minfill",
    seed: int = 0,
    max_rank: int = DEFAULT_MAX_RANK,
    plan: ContractionPlan | None = None,
) -> SimulationResult:
    """Build the network, plan a contraction ordering from its line graph, contract."""
    net = build_network(c, x, tau)
    if plan is None:
        plan = plan_contraction(net.graph(), strategy, seed)
    raw, top = contract_closed(net, plan, max_rank)
    return SimulationResult(report_probability(raw), raw, top, plan)


def local_interaction_plan(c: Circuit) -> tuple[ContractionPlan, TreeDecomposition]:
    """Contraction plan built from the cut-based path decomposition.

    The decomposition of the reduced gate graph is extended to the whole
    circuit graph, lifted to its line graph and peeled into an ordering.
    Returns the plan and the extended vertex decomposition.
    """
    td, reduced, _ = local_interaction_path_decomposition(c)
    g = circuit_graph(c)
    full = extend_to_circuit_graph(td, reduced, g)
    line = vertex_to_line_decomposition(full, g)
    ordering = decomposition_to_contraction_ordering(line, g)
    plan = ContractionPlan(tuple(ordering), cc_of_ordering(g, ordering), "logdepth", 0, line.width)
    return plan, full


# -- text format ---------------------------------------------------------

_BRACKET = re.compile(r"\[(.*)\]")


def parse_complex_list(text: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(tok) for tok in re.split(r"[\s,]+", text.strip()) if tok)
    except ValueError as exc:
        raise CircuitError(f"malformed matrix literal: {exc}") from None


def format_complex(z: complex) -> str:
    s = repr(complex(z))
    return s[1:-1] if s.startswith("(") else s


def _ints(tokens: Sequence[str]) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in tokens)
    except ValueError:
        raise CircuitError(f"expected qubit indices, got {' '.join(tokens)!r}") from None


def parse_circuit(text: str) -> Circuit:
    n = None
    gates: list[Gate] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            data = None
            m = _BRACKET.search(line)
            if m:
                data = parse_complex_list(m.group(1))
                line = line[: m.start()].strip()
            head, *rest = line.split()
            head = ALIASES.get(head.lower(), head.lower())
            if head == "qubits":
                if n is not None or gates:
                    raise CircuitError("'qubits' must appear once, before any gate")
                if len(rest) != 1:
                    raise CircuitError("expected 'qubits <n>'")
                (n,) = _ints(rest)
                if n < 1:
                    raise CircuitError("a circuit needs at least one qubit")
                continue
            if n is None:
                raise CircuitError("missing 'qubits <n>' header")
            if head in UNITARIES:
                g = named(head, *_ints(rest))
                if len(g.inputs) != int(np.log2(UNITARIES[head].shape[0])):
                    raise CircuitError(f"{head} acts on {int(np.log2(UNITARIES[head].shape[0]))} qubit(s)")
            elif head == "u":
                if data is None:
                    raise CircuitError("inline unitary needs [entries]")
                qs = _ints(rest)
                if len(data) != 4 ** len(qs):
                    raise CircuitError(f"inline unitary on {len(qs)} qubit(s) needs {4 ** len(qs)} entries")
                g = Gate("u", qs, qs, data)
            elif head == "traceout":
                g = named("traceout", *_ints(rest))
            elif head == "superop":
                if data is None or "->" not in rest:
                    raise CircuitError("superop syntax: superop <in...> -> <out...> [entries]")
                cut = rest.index("->")
                g = Gate("superop", _ints(rest[:cut]), _ints(rest[cut + 1:]), data)
            else:
                raise CircuitError(f"unknown gate {head!r}")
            gates.append(g)
            lines.append(lineno)
            Circuit(n, tuple(gates))
        except CircuitError as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    if n is None:
        raise CircuitError("missing 'qubits <n>' header")
    return Circuit(n, tuple(gates))


def serialize_circuit(c: Circuit) -> str:
    out = [f"qubits {c.n}"]
    for g in c.gates:
        if g.name in UNITARIES or g.name == "traceout":
            out.append(" ".join([g.name, *map(str, g.inputs)]))
        elif g.name == "u":
            vals = " ".join(format_complex(z) for z in g.data)
            out.append(f"u {' '.join(map(str, g.inputs))} [{vals}]")
        else:
            vals = " ".join(format_complex(z) for z in g.data)
            ins = " ".join(map(str, g.inputs))
            outs = " ".join(map(str, g.outputs))
            out.append(f"superop {ins} -> {outs} [{vals}]".replace("  ", " "))
    return "\n".join(out) + "\n"


def parse_scenario(text: str) -> MeasurementScenario:
    """``m <qubit> <four entries>`` lines; brackets optional."""
    elements = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("[", " ").replace("]", " ").split(None, 2)
        try:
            if parts[0] != "m" or len(parts) < 3:
                raise CircuitError("expected 'm <qubit> <2x2 row-major entries>'")
            q = int(parts[1])
            vals = parse_complex_list(parts[2])
            if len(vals) != 4:
                raise CircuitError("a POVM element needs 4 entries")
            elements[q] = np.array(vals).reshape(2, 2)
            MeasurementScenario({q: elements[q]})
        except (CircuitError, ValueError) as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    return MeasurementScenario(elements)


def serialize_scenario(tau: MeasurementScenario) -> str:
    return "".join(
        f"m {q} {' '.join(format_complex(z) for z in m.ravel())}\n"
        for q, m in sorted(tau.elements.items())
    )
