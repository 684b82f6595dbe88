"""Graph states and one-way computation.

A graph state is prepared by a Hadamard on every qubit followed by a
controlled-Z per edge. Its network is contracted with every controlled-Z
tensor split into two tensors joined by a pair of transition wires, which
keeps the contraction complexity bounded by the graph's own.

Qubit ``i`` of a graph state is the ``i``-th vertex in sorted order, and
scenarios, programs and transcripts name qubits by vertex id.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, MeasurementScenario, PROJ0, PROJ1, _wiring, named, parse_complex_list
from .multigraph import GraphError, MultiGraph, SimpleGraph, contract_edge
from .planner import ContractionPlan, plan_contraction
from .tensor import (
    DEFAULT_MAX_RANK,
    Tensor,
    TensorNetwork,
    contract_network,
    cz_tensor,
    density_tensor,
    identity_tensor,
    povm_tensor,
)
from .treewidth import (
    GraphTooLargeError,
    TreeDecomposition,
    _mmd_lower_bound,
    exact_treewidth,
    heuristic_order,
    ordering_to_decomposition,
    treewidth_upper_bound,
)

log = logging.getLogger(__name__)

MIN_BRANCH_PROBABILITY = 1e-12
I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.diag([1, -1]).astype(complex)


def eigenprojectors(pauli: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(P0, P1)`` for the ``+1`` and ``-1`` eigenspaces of a Pauli matrix."""
    return (I2 + pauli) / 2, (I2 - pauli) / 2


BASES = {"X": eigenprojectors(PAULI_X), "Y": eigenprojectors(PAULI_Y), "Z": (PROJ0, PROJ1)}


class OneWayError(RuntimeError):
    pass


class DegenerateBranchError(OneWayError):
    """A branch's probability relative to its parent fell below the numerical guard."""


class ObliviousnessError(OneWayError):
    """A program declared oblivious has unequal branch probabilities."""


class ExpansionError(OneWayError):
    """A degree-3 expansion failed one of its verified guarantees."""


@dataclass(frozen=True)
class GraphState:
    graph: SimpleGraph

    def __post_init__(self):
        if not isinstance(self.graph, SimpleGraph):
            if not self.graph.is_simple():
                raise GraphError("graph states need a simple graph")
            object.__setattr__(self, "graph", self.graph.to_simple())

    @property
    def n(self) -> int:
        return self.graph.num_vertices


def graph_state_circuit(g: MultiGraph) -> tuple[Circuit, dict[int, int]]:
    """Hadamards on every qubit, then one controlled-Z per edge in sorted order.

    Returns the circuit and the vertex-to-qubit map.
    """
    g = GraphState(g).graph
    qubit = {v: i for i, v in enumerate(g.vertices)}
    if not qubit:
        raise GraphError("graph state needs at least one vertex")
    gates = [named("h", q) for q in range(len(qubit))]
    for a, b in sorted(tuple(sorted((qubit[u], qubit[v]))) for u, v in g.edges.values()):
        gates.append(named("cz", a, b))
    return Circuit(len(qubit), tuple(gates)), qubit


def split_cz(u_in: int, v_in: int, u_out: int, v_out: int, t_plus: int, t_minus: int) -> tuple[Tensor, Tensor]:
    """The two tensors replacing a controlled-Z on wires ``(u, v)``.

    ``g_u`` routes ``u_in`` to ``t_plus`` and ``t_minus`` to ``u_out``;
    ``g_v`` applies the controlled-Z to ``(t_plus, v_in)`` with outputs
    ``(t_minus, v_out)``.
    """
    g_u = identity_tensor((u_in, t_minus), (t_plus, u_out))
    g_v = cz_tensor((t_plus, v_in), (t_minus, v_out))
    return g_u, g_v


@dataclass(frozen=True)
class SplitNetwork:
    """Graph-state network with placeholder (identity) output tensors."""

    network: TensorNetwork
    output_position: dict[int, int]  # vertex -> tensor position
    output_wire: dict[int, int]  # vertex -> wire id


def split_network(g: MultiGraph) -> SplitNetwork:
    circuit, qubit = graph_state_circuit(g)
    wiring = _wiring(circuit)
    fresh = max(wiring.segments) + 1
    tensors: list[Tensor] = []
    for gate, ins, outs in zip(circuit.gates, wiring.gate_inputs, wiring.gate_outputs):
        if gate.name == "cz":
            tensors += split_cz(ins[0], ins[1], outs[0], outs[1], fresh, fresh + 1)
            fresh += 2
        else:
            tensors.append(gate.tensor(ins, outs))
    for w in wiring.input_wires:
        tensors.append(density_tensor(PROJ0, [w]))
    vertex_of = {q: v for v, q in qubit.items()}
    position, wire = {}, {}
    for q, w in zip(circuit.outputs, wiring.output_wires):
        position[vertex_of[q]] = len(tensors)
        wire[vertex_of[q]] = w
        tensors.append(povm_tensor(I2, w))
    return SplitNetwork(TensorNetwork(tuple(tensors)), position, wire)


class GraphStateSimulator:
    """Scenario probabilities on one graph state, reusing a single plan.

    The network's shape does not depend on the scenario, so the plan is
    computed once and only the output tensors change between calls.
    """

    def __init__(
        self,
        g: MultiGraph,
        strategy: str = "minfill",
        seed: int = 0,
        max_rank: int = DEFAULT_MAX_RANK,
        plan: ContractionPlan | None = None,
    ):
        self.graph = GraphState(g).graph
        self.split = split_network(self.graph)
        self.plan = plan or plan_contraction(self.split.network.graph(), strategy, seed)
        self.max_rank = max_rank
        self.calls = 0
        self.achieved_rank = 0

    def raw(self, elements: Mapping[int, np.ndarray]) -> complex:
        tensors = list(self.split.network.tensors)
        for v, m in elements.items():
            if v not in self.split.output_position:
                raise ValueError(f"scenario names vertex {v}, which is not in the graph")
            tensors[self.split.output_position[v]] = povm_tensor(m, self.split.output_wire[v])
        res = contract_network(TensorNetwork(tuple(tensors)), self.plan.ordering, self.max_rank)
        self.calls += 1
        self.achieved_rank = max(self.achieved_rank, res.max_rank)
        return res.tensor.value()

    def probability(self, tau: MeasurementScenario | Mapping[int, np.ndarray]) -> float:
        elements = tau.elements if isinstance(tau, MeasurementScenario) else tau
        return float(self.raw(elements).real)


def graphstate_probability(
    g: MultiGraph, tau: MeasurementScenario | Mapping[int, np.ndarray], strategy: str = "minfill", seed: int = 0
) -> float:
    """Probability that ``tau`` (keyed by vertex) is realised on ``|G>``."""
    return GraphStateSimulator(g, strategy, seed).probability(tau)


# -- programs ------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """Measure ``vertex`` with the two-outcome POVM ``{p0, p1}``."""

    vertex: int
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=complex)
        p1 = np.asarray(self.p1, dtype=complex)
        if p0.shape != (2, 2) or p1.shape != (2, 2):
            raise ValueError("POVM elements must be 2x2")
        if not np.allclose(p0 + p1, I2, atol=1e-9):
            raise ValueError(f"POVM elements on vertex {self.vertex} do not sum to the identity")
        for m in (p0, p1):
            if not np.allclose(m, m.conj().T, atol=1e-9) or np.linalg.eigvalsh(m).min() < -1e-9:
                raise ValueError(f"POVM element on vertex {self.vertex} is not a valid effect")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    def element(self, bit: int) -> np.ndarray:
        return self.p1 if bit else self.p0

    def conjugated(self, u: np.ndarray) -> Step:
        """The step measuring ``U^dagger P U``."""
        ud = u.conj().T
        return Step(self.vertex, ud @ self.p0 @ u, ud @ self.p1 @ u)


@dataclass(frozen=True)
class Record:
    vertex: int
    p0: np.ndarray
    p1: np.ndarray
    outcome: int
    probability: float  # running probability of the transcript so far


Transcript = tuple[Record, ...]


def outcomes_of(transcript: Transcript) -> tuple[int, ...]:
    return tuple(r.outcome for r in transcript)


@dataclass(frozen=True)
class OneWayProgram:
    """Adaptive measurement strategy.

    ``next`` maps the transcript so far to the next step, or ``None`` to
    halt. ``oblivious`` is the caller's declaration; it is spot-checked by
    the deterministic simulator.
    """

    next: Callable[[Transcript], Step | None]
    oblivious: bool = False

    def zero_path(self, limit: int = 10_000) -> list[Step]:
        """Steps taken when every outcome is 0."""
        steps: list[Step] = []
        transcript: Transcript = ()
        while (step := self.next(transcript)) is not None:
            steps.append(step)
            transcript += (Record(step.vertex, step.p0, step.p1, 0, 1.0),)
            if len(steps) > limit:
                raise OneWayError("program does not halt on the all-zero path")
        return steps

    @property
    def measurements(self) -> int:
        """Number of measurements on the all-zero path (``T`` when oblivious)."""
        return len(self.zero_path())


@dataclass(frozen=True)
class GuardedStep:
    """A program line: ``step`` runs when every ``(t, bit)`` guard matches.

    Guard step numbers are 1-based positions in the transcript.
    """

    step: Step
    guards: tuple[tuple[int, int], ...] = ()

    def matches(self, outcomes: Sequence[int]) -> bool:
        return all(t <= len(outcomes) and outcomes[t - 1] == b for t, b in self.guards)


def program_from_steps(lines: Sequence[GuardedStep], oblivious: bool = False) -> OneWayProgram:
    """Scan lines in order; each measurement is the next line whose guards hold."""
    lines = tuple(lines)

    def next_step(transcript: Transcript) -> Step | None:
        outcomes = outcomes_of(transcript)
        pos = 0
        for t in range(len(transcript) + 1):
            while pos < len(lines) and not lines[pos].matches(outcomes[:t]):
                pos += 1
            if pos == len(lines):
                return None
            if t < len(transcript):
                pos += 1
        return lines[pos].step

    return OneWayProgram(next_step, oblivious)


def parse_program(text: str) -> OneWayProgram:
    """Program text with 1-indexed qubits (matching graph files).

    Lines are ``measure <qubit> <basis>`` with basis ``X``, ``Y`` or ``Z``, or
    ``measure <qubit> [P0 entries] [P1 entries]``, each optionally followed
    by guards ``if <step>=<bit> ...``. A line ``oblivious`` declares the
    program oblivious.
    """
    lines = []
    oblivious = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line == "oblivious":
                oblivious = True
                continue
            body, _, guard_text = line.partition(" if ")
            guards = []
            for tok in guard_text.split():
                t, eq, b = tok.partition("=")
                if not eq or b not in ("0", "1") or int(t) < 1:
                    raise ValueError(f"malformed guard {tok!r}")
                guards.append((int(t), int(b)))
            head, _, rest = body.partition(" ")
            if head != "measure":
                raise ValueError(f"unknown command {head!r}")
            qtok, _, basis = rest.strip().partition(" ")
            vertex = int(qtok) - 1
            if vertex < 0:
                raise ValueError("qubits are numbered from 1")
            basis = basis.strip()
            if basis.upper() in BASES:
                p0, p1 = BASES[basis.upper()]
            else:
                mats = [m for m in basis.replace("]", "[").split("[") if m.strip()]
                if len(mats) != 2:
                    raise ValueError("expected a basis name or two bracketed 2x2 matrices")
                p0, p1 = (np.array(parse_complex_list(m)).reshape(2, 2) for m in mats)
            lines.append(GuardedStep(Step(vertex, p0, p1), tuple(guards)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return program_from_steps(lines, oblivious)


# -- simulation ----------------------------------------------------------


def _check_step(sim: GraphStateSimulator, step: Step, measured: set[int]):
    if step.vertex not in sim.split.output_position:
        raise OneWayError(f"program measures vertex {step.vertex}, which is not in the graph")
    if step.vertex in measured:
        raise OneWayError(f"program measures vertex {step.vertex} twice")


def _zero_probability(sim: GraphStateSimulator, tau: dict[int, np.ndarray], step: Step) -> float:
    return sim.probability({**tau, step.vertex: step.p0})


def simulate_oneway_randomized(
    g: MultiGraph,
    program: OneWayProgram,
    seed: int = 0,
    rng: np.random.Generator | None = None,
    simulator: GraphStateSimulator | None = None,
) -> tuple[tuple[int, ...], Transcript]:
    """Sample one run of ``program`` on ``|G>``.

    Each step computes the exact probability ``p_t^0`` of the transcript
    extended by outcome 0 and flips a coin that lands 0 with probability
    ``p_t^0 / p_{t-1}``.
    """
    sim = simulator or GraphStateSimulator(g)
    rng = rng if rng is not None else np.random.default_rng(seed)
    tau: dict[int, np.ndarray] = {}
    p_prev = 1.0
    transcript: Transcript = ()
    while (step := program.next(transcript)) is not None:
        _check_step(sim, step, set(tau))
        p0 = _zero_probability(sim, tau, step)
        bit = 0 if rng.random() < min(max(p0 / p_prev, 0.0), 1.0) else 1
        p_t = p0 if bit == 0 else p_prev - p0
        if p_t < MIN_BRANCH_PROBABILITY * p_prev:
            raise DegenerateBranchError(
                f"outcome {bit} at step {len(transcript) + 1} has conditional probability "
                f"{p_t / p_prev:.3e}, below the guard"
            )
        tau[step.vertex] = step.element(bit)
        transcript += (Record(step.vertex, step.p0, step.p1, bit, p_t),)
        p_prev = p_t
    return outcomes_of(transcript), transcript


def branch_distribution(
    g: MultiGraph,
    program: OneWayProgram,
    simulator: GraphStateSimulator | None = None,
    start: Sequence[int] = (),
    atol: float = 1e-9,
) -> dict[tuple[int, ...], float]:
    """Exact outcome distribution by walking the whole branch tree.

    ``start`` forces the first outcomes; the result is then the distribution
    of the remaining outcomes conditioned on that prefix. At every node the
    two children's probabilities are computed independently and must add up
    to the parent's within ``atol`` times the parent's. Branches whose
    conditional probability is below the guard are dropped.
    """
    sim = simulator or GraphStateSimulator(g)
    start = tuple(int(b) for b in start)
    dist: dict[tuple[int, ...], float] = {}
    stack: list[tuple[Transcript, dict[int, np.ndarray], float]] = [((), {}, 1.0)]
    base = None
    while stack:
        transcript, tau, p_prev = stack.pop()
        t = len(transcript)
        if t == len(start) and base is None:
            base = p_prev
        step = program.next(transcript)
        if step is None:
            if t < len(start):
                raise OneWayError(f"program halted after {t} steps, before the forced prefix")
            dist[outcomes_of(transcript)[len(start):]] = p_prev
            continue
        _check_step(sim, step, set(tau))
        probs = [sim.probability({**tau, step.vertex: step.element(b)}) for b in (0, 1)]
        if abs(probs[0] + probs[1] - p_prev) > atol * p_prev:
            raise OneWayError(
                f"probability not conserved at step {t + 1}: {probs[0]} + {probs[1]} != {p_prev}"
            )
        bits = (start[t],) if t < len(start) else (1, 0)
        for b in bits:
            if probs[b] < MIN_BRANCH_PROBABILITY * p_prev:
                if t < len(start):
                    raise DegenerateBranchError(
                        f"forced outcome {b} at step {t + 1} has conditional probability {probs[b] / p_prev:.3e}"
                    )
                continue
            rec = Record(step.vertex, step.p0, step.p1, b, probs[b])
            stack.append((transcript + (rec,), {**tau, step.vertex: step.element(b)}, probs[b]))
    base = base or 1.0
    return {k: v / base for k, v in sorted(dist.items())}


def simulate_oneway_oblivious(
    g: MultiGraph,
    program: OneWayProgram,
    simulator: GraphStateSimulator | None = None,
    spot_check_levels: int = 2,
    atol: float = 1e-9,
) -> float:
    """Probability that the final measurement gives 0, as ``p_T / p_{T-1}``.

    Both probabilities follow the all-zero path. The first
    ``spot_check_levels`` levels of the branch tree are enumerated and
    must be equiprobable, otherwise :class:`ObliviousnessError` is raised.
    """
    sim = simulator or GraphStateSimulator(g)
    steps = program.zero_path()
    if not steps:
        raise OneWayError("program makes no measurement")
    tau: dict[int, np.ndarray] = {}
    for s in steps[:-1]:
        _check_step(sim, s, set(tau))
        tau[s.vertex] = s.p0
    _check_step(sim, steps[-1], set(tau))
    p_before = sim.probability(tau)
    # an oblivious path has probability 2^-(T-1); far below that means it is impossible
    if p_before < MIN_BRANCH_PROBABILITY * 0.5 ** (len(steps) - 1):
        raise DegenerateBranchError(f"p_(T-1) = {p_before:.3e}")
    p_final = _zero_probability(sim, tau, steps[-1])
    _spot_check(sim, program, min(spot_check_levels, len(steps) - 1), atol)
    return p_final / p_before


def _spot_check(sim: GraphStateSimulator, program: OneWayProgram, levels: int, atol: float):
    frontier: list[tuple[Transcript, dict[int, np.ndarray]]] = [((), {})]
    for level in range(1, levels + 1):
        nxt = []
        for transcript, tau in frontier:
            step = program.next(transcript)
            if step is None:
                raise ObliviousnessError(f"branch {outcomes_of(transcript)} halts early")
            for b in (0, 1):
                t2 = {**tau, step.vertex: step.element(b)}
                p = sim.probability(t2)
                nxt.append((transcript + (Record(step.vertex, step.p0, step.p1, b, p),), t2))
        probs = [tr[-1].probability for tr, _ in nxt]
        if max(probs) - min(probs) > atol:
            raise ObliviousnessError(
                f"level {level} branch probabilities differ: {min(probs):.6g} vs {max(probs):.6g}"
            )
        frontier = nxt


# -- degree-3 expansion ----------------------------------------------------


@dataclass(frozen=True)
class Gadget:
    """One vertex insertion undone by two measurements.

    ``w`` sits between ``keep`` and ``drop``; measuring ``w`` and then
    ``drop`` in the X basis merges ``drop`` into ``keep``. ``neighbors`` is
    the neighbourhood of ``keep`` minus ``w`` when the gadget runs.
    """

    keep: int
    w: int
    drop: int
    neighbors: tuple[int, ...]


def _frames(gadgets: Sequence[Gadget], outcomes: Sequence[int]) -> dict[int, np.ndarray]:
    """Pauli frame ``F`` with ``target = (x F_q) actual`` after these outcomes."""
    frame: dict[int, np.ndarray] = {}
    for k, bit in enumerate(outcomes):
        gd = gadgets[k // 2]
        if not bit:
            continue
        if k % 2 == 0:
            for a in gd.neighbors:
                frame[a] = PAULI_Z @ frame.get(a, I2)
            frame[gd.keep] = PAULI_X @ frame.get(gd.keep, I2)
        else:
            frame[gd.keep] = PAULI_Z @ frame.get(gd.keep, I2)
    return frame


def prefix_step(gadgets: Sequence[Gadget], outcomes: Sequence[int]) -> Step | None:
    t = len(outcomes)
    if t >= 2 * len(gadgets):
        return None
    gd = gadgets[t // 2]
    v = gd.w if t % 2 == 0 else gd.drop
    base = Step(v, *BASES["X"])
    return base.conjugated(_frames(gadgets, outcomes).get(v, I2))


@dataclass(frozen=True)
class Expansion:
    """``graph`` contracts to the original along ``forest``.

    Original vertex ``v`` is represented by vertex ``v`` of ``graph``;
    ``prefix`` turns ``|graph>`` into ``|G>`` on those representatives up to
    the Pauli frame returned by :meth:`frame`.
    """

    graph: SimpleGraph
    forest: tuple[tuple[int, int], ...]
    gadgets: tuple[Gadget, ...]
    original: SimpleGraph
    tw_bound: tuple[int, int] | None = None  # (tw(G1) upper bound, tw(G))

    @property
    def prefix(self) -> OneWayProgram:
        gadgets = self.gadgets
        return OneWayProgram(lambda tr: prefix_step(gadgets, outcomes_of(tr)), oblivious=True)

    @property
    def prefix_length(self) -> int:
        return 2 * len(self.gadgets)

    def frame(self, outcomes: Sequence[int]) -> dict[int, np.ndarray]:
        return _frames(self.gadgets, outcomes)

    def contract_forest(self) -> MultiGraph:
        """Contract every forest edge; surviving ids are the representatives."""
        g: MultiGraph = self.graph
        pending = list(self.forest)
        while pending:
            a, b = pending.pop()
            eid = next(k for k, e in g.edges.items() if set(e) == {a, b})
            g, _ = contract_edge(g, eid)
            lo, hi = min(a, b), max(a, b)
            pending = [tuple(lo if x == hi else x for x in e) for e in pending]
        return g

    def __iter__(self):
        yield from (self.graph, self.forest, self.prefix)


def _tree_decomposition(g: SimpleGraph, budget: int) -> TreeDecomposition:
    try:
        _, order = exact_treewidth(g, budget)
    except GraphTooLargeError:
        order = heuristic_order(g, "minfill")
    return ordering_to_decomposition(g, order)


def expand_to_degree3(g: MultiGraph, budget: int = 14, verify: bool = True) -> Expansion:
    """Degree-3 expansion guided by a tree decomposition, with inserted vertices.

    Every vertex ``v`` is copied once per bag containing it, the copies
    joined along the decomposition tree, and each edge of ``G`` placed at a
    private leaf bag. Bags of tree degree above 3 are first split into
    chains of equal bags. Copy edges whose endpoints' degrees sum to at
    most 5 are then contracted, and a middle vertex is inserted on each
    copy edge that remains.
    """
    g = GraphState(g).graph
    if g.max_degree() <= 3:
        return Expansion(g, (), (), g)
    td = _tree_decomposition(g, budget)
    bags = {k: set(b) for k, b in td.bags.items()}
    tadj = {k: set(ns) for k, ns in td.tree_adjacency().items()}
    next_bag = max(bags) + 1

    def new_bag(content, *nbrs):
        nonlocal next_bag
        k = next_bag
        next_bag += 1
        bags[k] = set(content)
        tadj[k] = set()
        for x in nbrs:
            tadj[k].add(x)
            tadj[x].add(k)
        return k

    edge_bag = {}
    for eid, (a, b) in g.edges.items():
        home = min(k for k, bag in bags.items() if a in bag and b in bag)
        edge_bag[eid] = new_bag({a, b}, home)

    # split high-degree bags into chains
    for k in sorted(bags):
        if len(tadj[k]) <= 3:
            continue
        nbrs = sorted(tadj[k])
        for x in nbrs[2:]:
            tadj[k].discard(x)
            tadj[x].discard(k)
        prev = k
        for i, x in enumerate(nbrs[2:]):
            last = i == len(nbrs) - 3
            if last:
                tadj[prev].add(x)
                tadj[x].add(prev)
            else:
                prev = new_bag(bags[k], prev, x)

    # copies and their adjacency
    copies = sorted((v, k) for k, bag in bags.items() for v in bag)
    parent = {c: c for c in copies}
    adj: dict[tuple[int, int], set[tuple[int, int]]] = {c: set() for c in copies}
    for k in tadj:
        for x in tadj[k]:
            if k < x:
                for v in bags[k] & bags[x]:
                    adj[(v, k)].add((v, x))
                    adj[(v, x)].add((v, k))
    for eid, (a, b) in g.edges.items():
        leaf = edge_bag[eid]
        adj[(a, leaf)].add((b, leaf))
        adj[(b, leaf)].add((a, leaf))

    # contract copy edges while degrees allow
    changed = True
    while changed:
        changed = False
        for c in sorted(adj):
            for d in sorted(x for x in adj[c] if x[0] == c[0]):
                if len(adj[c]) + len(adj[d]) - 2 <= 3:
                    for x in adj.pop(d):
                        adj[x].discard(d)
                        if x != c:
                            adj[x].add(c)
                            adj[c].add(x)
                    changed = True
                    break
            if changed:
                break

    # ids: the first copy of v becomes v, then fresh ids
    ident: dict[tuple[int, int], int] = {}
    fresh = max(g.vertices) + 1
    for c in sorted(adj):
        if not any(x[0] == c[0] for x in ident):
            ident[c] = c[0]
    for c in sorted(adj):
        if c not in ident:
            ident[c] = fresh
            fresh += 1

    edges = []
    forest = []
    middle: dict[frozenset, int] = {}
    for c in sorted(adj):
        for d in sorted(adj[c]):
            if c >= d:
                continue
            a, b = ident[c], ident[d]
            if c[0] == d[0]:
                m = fresh
                fresh += 1
                middle[frozenset((a, b))] = m
                edges += [(a, m), (m, b)]
                forest += [(a, m), (m, b)]
            else:
                edges.append((a, b))
    g1 = SimpleGraph(sorted(set(ident.values()) | set(middle.values())), edges)

    gadgets = _gadgets(g1, g, ident, middle)
    exp = Expansion(g1, tuple(forest), tuple(gadgets), g)
    if verify:
        exp = _verify_expansion(exp, budget)
    return exp


def _gadgets(g1: SimpleGraph, g: SimpleGraph, ident, middle) -> list[Gadget]:
    """Breadth-first from each representative, merging child copies into it."""
    cur = {v: set(ns) for v, ns in g1.adjacency().items()}
    owner = {}
    for (v, _), x in ident.items():
        owner[x] = v
    mids = {m: tuple(sorted(pair)) for pair, m in middle.items()}
    gadgets = []
    for v in g.vertices:
        seen = {v}
        queue = deque([v])
        order = []
        while queue:
            x = queue.popleft()
            for m in sorted(cur[x]):
                if m not in mids:
                    continue
                a, b = mids[m]
                y = b if a == x else a
                if y in seen:
                    continue
                seen.add(y)
                order.append((x, m, y))
                queue.append(y)
        # every gadget merges into the representative ``v``
        for _, m, y in order:
            nbrs = tuple(sorted(cur[v] - {m}))
            gadgets.append(Gadget(v, m, y, nbrs))
            merged = (cur[y] - {m}) | (cur[v] - {m})
            for x in cur.pop(m):
                cur[x].discard(m)
            for x in cur.pop(y):
                cur[x].discard(y)
            for x in merged:
                cur[x].add(v)
            cur[v] = merged
    return gadgets


def _verify_expansion(exp: Expansion, budget: int) -> Expansion:
    g1, g = exp.graph, exp.original
    if g1.max_degree() > 3:
        raise ExpansionError(f"expansion has maximum degree {g1.max_degree()}")
    back = exp.contract_forest()
    if not back.is_simple() or back.vertices != g.vertices or back.adjacency() != g.adjacency():
        raise ExpansionError("contracting the forest does not give back the original graph")
    try:
        tw_g, _ = exact_treewidth(g, budget)
        lower = tw_g
    except GraphTooLargeError:
        tw_g = None
        lower = _mmd_lower_bound(g.adjacency())
    try:
        tw_g1, _ = exact_treewidth(g1, budget)
        exact1 = True
    except GraphTooLargeError:
        tw_g1, _ = treewidth_upper_bound(g1, seeds=(0, 1, 2))
        exact1 = False
    if tw_g1 > lower + 1:
        if exact1 and tw_g is not None:
            raise ExpansionError(f"tw(G1) = {tw_g1} exceeds tw(G) + 1 = {tw_g + 1}")
        log.warning("could not certify tw(G1) <= tw(G) + 1 (upper %d, lower %d)", tw_g1, lower)
    return Expansion(exp.graph, exp.forest, exp.gadgets, exp.original, (tw_g1, lower))


# -- full pipeline ---------------------------------------------------------


def with_prefix(exp: Expansion, program: OneWayProgram) -> OneWayProgram:
    """Run the expansion prefix, then ``program`` with measurements conjugated by the frame."""
    T = exp.prefix_length

    def next_step(transcript: Transcript) -> Step | None:
        outcomes = outcomes_of(transcript)
        if len(transcript) < T:
            return prefix_step(exp.gadgets, outcomes)
        frame = exp.frame(outcomes[:T])
        p_prefix = transcript[T - 1].probability if T else 1.0
        inner: Transcript = ()
        for rec in transcript[T:]:
            s = program.next(inner)
            inner += (Record(s.vertex, s.p0, s.p1, rec.outcome, rec.probability / p_prefix),)
        step = program.next(inner)
        if step is None:
            return None
        if step.vertex not in exp.original.vertices:
            raise OneWayError(f"program measures vertex {step.vertex}, which is not in the graph")
        return step.conjugated(frame.get(step.vertex, I2))

    return OneWayProgram(next_step, program.oblivious)


@dataclass(frozen=True)
class FullRun:
    expansion: Expansion
    outcomes: tuple[int, ...] | None = None  # outcomes of the user program
    transcript: Transcript = ()
    zero_probability: float | None = None  # oblivious programs only


def simulate_oneway_full(
    g: MultiGraph, program: OneWayProgram, seed: int = 0, budget: int = 14, strategy: str = "minfill"
) -> FullRun:
    """Expand to maximum degree 3, prepend the prefix, then simulate on the expansion.

    Oblivious programs are simulated deterministically and report the
    probability that the final outcome is 0; others are sampled.
    """
    exp = expand_to_degree3(g, budget)
    composite = with_prefix(exp, program)
    sim = GraphStateSimulator(exp.graph, strategy, seed)
    if program.oblivious:
        return FullRun(exp, zero_probability=simulate_oneway_oblivious(exp.graph, composite, sim))
    outcomes, transcript = simulate_oneway_randomized(exp.graph, composite, seed, simulator=sim)
    return FullRun(exp, outcomes[exp.prefix_length:], transcript)
