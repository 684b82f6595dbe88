"""Dense reference simulators.

These evolve full density matrices or state vectors gate by gate and share
no code with the tensor-network path, so they can serve as independent
checks of it.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .multigraph import MultiGraph

MAX_QUBITS = 10
MAX_GRAPH_STATE = 20


class OracleTooLargeError(RuntimeError):
    pass


class DenseState:
    """Density matrix over the live qubits, stored as a ``(2,) * 2k`` array.

    Axis ``i`` is the ket index of ``labels[i]``, axis ``k + i`` its bra.
    """

    def __init__(self, bits: Sequence[int]):
        self.labels = list(range(len(bits)))
        rho = np.ones((), dtype=complex)
        for b in bits:
            rho = np.multiply.outer(rho, _proj(b))
        self.rho = _interleaved_to_split(rho, len(bits))

    @property
    def k(self) -> int:
        return len(self.labels)

    def matrix(self) -> np.ndarray:
        d = 2**self.k
        return self.rho.reshape(d, d)

    def apply_unitary(self, u: np.ndarray, qubits: Sequence[int]):
        a = len(qubits)
        u = u.reshape((2,) * (2 * a))
        axes = [self.labels.index(q) for q in qubits]
        k = self.k
        # ket side: U rho
        rho = np.tensordot(u, self.rho, axes=(list(range(a, 2 * a)), axes))
        rho = np.moveaxis(rho, list(range(a)), axes)
        # bra side: rho U^dagger
        bra = [k + i for i in axes]
        rho = np.tensordot(rho, u.conj(), axes=(bra, list(range(a, 2 * a))))
        self.rho = np.moveaxis(rho, list(range(2 * k - a, 2 * k)), bra)

    def trace_out(self, qubits: Sequence[int]):
        for q in qubits:
            i = self.labels.index(q)
            self.rho = np.trace(self.rho, axis1=i, axis2=self.k + i)
            self.labels.pop(i)

    def apply_superop(self, entries: np.ndarray, inputs: Sequence[int], outputs: Sequence[int]):
        """Apply ``Q(s) = sum_t Q[s, t] t`` given entries over the |b1><b2| basis."""
        a, b = len(inputs), len(outputs)
        # pull the input qubits out as a (ket..., bra...) block
        axes = [self.labels.index(q) for q in inputs]
        k = self.k
        rest = [i for i in range(k) if i not in axes]
        perm = axes + [k + i for i in axes] + rest + [k + i for i in rest]
        block = self.rho.transpose(perm)
        # coefficient of |s1><s2| is rho[s1, s2]; entries index (s1 s2 per qubit, then t1 t2)
        q = entries.reshape((2, 2) * a + (2, 2) * b)
        in_axes = [2 * i for i in range(a)] + [2 * i + 1 for i in range(a)]
        out = np.tensordot(q, block, axes=(in_axes, list(range(2 * a))))
        # out axes: (t1 t2)*b then remaining ket..., bra...
        t_ket = [2 * j for j in range(b)]
        t_bra = [2 * j + 1 for j in range(b)]
        nrest = len(rest)
        ket_rest = list(range(2 * b, 2 * b + nrest))
        bra_rest = list(range(2 * b + nrest, 2 * b + 2 * nrest))
        self.rho = out.transpose(t_ket + ket_rest + t_bra + bra_rest)
        self.labels = list(outputs) + [self.labels[i] for i in rest]

    def probability(self, elements: dict[int, np.ndarray]) -> complex:
        """``tr((x_q M_q) rho)`` with the identity on unlisted qubits."""
        k = self.k
        rho = self.rho
        for q, m in elements.items():
            i = self.labels.index(q)
            rho = np.moveaxis(np.tensordot(m, rho, axes=([1], [i])), 0, i)
        d = 2**k
        return complex(np.trace(rho.reshape(d, d)))


def _proj(b: int) -> np.ndarray:
    p = np.zeros((2, 2), dtype=complex)
    p[b, b] = 1
    return p


def _interleaved_to_split(rho: np.ndarray, k: int) -> np.ndarray:
    perm = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    return rho.transpose(perm) if k else rho


def oracle_state(circuit, x: Sequence[int] | str) -> DenseState:
    bits = [int(b) for b in x]
    if len(bits) != circuit.n:
        raise ValueError(f"input has {len(bits)} bits, circuit has {circuit.n} qubits")
    if circuit.n > MAX_QUBITS:
        raise OracleTooLargeError(f"dense oracle limited to {MAX_QUBITS} qubits")
    state = DenseState(bits)
    for g in circuit.gates:
        u = g.unitary()
        if u is not None:
            state.apply_unitary(u, g.inputs)
        elif g.name == "traceout":
            state.trace_out(g.inputs)
        else:
            state.apply_superop(g.superop(), g.inputs, g.outputs)
        if state.k > MAX_QUBITS:
            raise OracleTooLargeError(f"dense oracle limited to {MAX_QUBITS} live qubits")
    return state


def oracle_probability(circuit, x, tau=None) -> float:
    """Probability that ``tau`` is realised on the circuit output, by dense evolution."""
    state = oracle_state(circuit, x)
    elements = dict(tau.elements) if tau is not None else {}
    missing = set(elements) - set(state.labels)
    if missing:
        raise ValueError(f"scenario measures non-output qubits {sorted(missing)}")
    return state.probability(elements).real


def oracle_statevector(circuit, x) -> np.ndarray:
    """Pure-state evolution for circuits built only from unitaries."""
    bits = [int(b) for b in x]
    n = circuit.n
    if n > MAX_GRAPH_STATE:
        raise OracleTooLargeError(f"state vector oracle limited to {MAX_GRAPH_STATE} qubits")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[tuple(bits)] = 1
    for g in circuit.gates:
        u = g.unitary()
        if u is None:
            raise ValueError(f"gate {g.name!r} is not unitary")
        a = len(g.inputs)
        psi = np.tensordot(u.reshape((2,) * (2 * a)), psi, axes=(list(range(a, 2 * a)), list(g.inputs)))
        psi = np.moveaxis(psi, list(range(a)), list(g.inputs))
    return psi.reshape(-1)


def oracle_graph_state(g: MultiGraph) -> np.ndarray:
    """Amplitudes ``(-1)^e(S) / sqrt(2^n)`` with qubit ``i`` the ``i``-th sorted vertex.

    Basis index bit ``n-1-i`` (most significant first) marks vertex ``i``.
    """
    verts = list(g.vertices)
    n = len(verts)
    if n > MAX_GRAPH_STATE:
        raise OracleTooLargeError(f"graph state oracle limited to {MAX_GRAPH_STATE} vertices")
    pos = {v: i for i, v in enumerate(verts)}
    masks = [(1 << (n - 1 - pos[u])) | (1 << (n - 1 - pos[v])) for u, v in g.edges.values()]
    idx = np.arange(2**n)
    count = np.zeros(2**n, dtype=np.int64)
    for mask in masks:
        count += (idx & mask) == mask
    return np.where(count % 2, -1.0, 1.0).astype(complex) / np.sqrt(2**n)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def measure_vector(psi: np.ndarray, qubit: int, element: np.ndarray) -> tuple[float, np.ndarray]:
    """Apply the Kraus operator ``sqrt(element)`` to ``qubit``.

    Returns the outcome probability and the normalised post-measurement
    vector (unchanged shape).
    """
    n = int(np.log2(psi.size))
    t = psi.reshape((2,) * n)
    k = psd_sqrt(np.asarray(element, dtype=complex))
    t = np.moveaxis(np.tensordot(k, t, axes=([1], [qubit])), 0, qubit)
    out = t.reshape(-1)
    p = float(np.vdot(out, out).real)
    if p > 0:
        out = out / np.sqrt(p)
    return p, out


def apply_single(psi: np.ndarray, qubit: int, u: np.ndarray) -> np.ndarray:
    n = int(np.log2(psi.size))
    t = psi.reshape((2,) * n)
    t = np.moveaxis(np.tensordot(u, t, axes=([1], [qubit])), 0, qubit)
    return t.reshape(-1)


def oracle_oneway_distribution(g: MultiGraph, program) -> dict[tuple[int, ...], float]:
    """Outcome distribution of a one-way program by dense state updates.

    Starts from the amplitude-formula graph state and applies the Kraus
    operator ``sqrt(P)`` of each outcome, branching on both outcomes.
    """
    from .oneway import Record

    psi0 = oracle_graph_state(g)
    axis = {v: i for i, v in enumerate(g.vertices)}
    dist: dict[tuple[int, ...], float] = {}
    stack = [((), psi0, 1.0, frozenset())]
    while stack:
        transcript, psi, p, measured = stack.pop()
        step = program.next(transcript)
        if step is None:
            dist[tuple(r.outcome for r in transcript)] = p
            continue
        if step.vertex in measured:
            raise ValueError(f"vertex {step.vertex} measured twice")
        for b in (0, 1):
            q, out = measure_vector(psi, axis[step.vertex], step.element(b))
            if q < 1e-12:
                continue
            rec = Record(step.vertex, step.p0, step.p1, b, p * q)
            stack.append((transcript + (rec,), out, p * q, measured | {step.vertex}))
    return dict(sorted(dist.items()))
