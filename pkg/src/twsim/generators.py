"""Seeded random instances: circuits, scenarios and graphs."""

from __future__ import annotations

import itertools

import numpy as np

from .circuit import Circuit, Gate, MeasurementScenario, PROJ0, PROJ1, inline_unitary, named
from .multigraph import MultiGraph, SimpleGraph

ONE_QUBIT = ("h", "x", "y", "z", "s", "t")
TWO_QUBIT = ("cnot", "cz", "swap")


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-ish unitary from a QR of a complex Gaussian matrix."""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel_superop(rng: np.random.Generator, a: int, b: int) -> np.ndarray:
    """Superoperator entries of a random channel ``a`` qubits -> ``b`` qubits.

    Built from a random isometry followed by a partial trace, so it is
    completely positive and trace preserving. Entries are indexed
    ``(s_1..s_a, t_1..t_b)`` over the operator basis.
    """
    da, db = 2**a, 2**b
    env = 2 * max(1, da // db)
    v = random_unitary(rng, db * env)[:, :da]  # isometry C^da -> C^db x C^env
    out = np.zeros((4,) * (a + b), dtype=complex)
    for sigma in itertools.product(range(4), repeat=a):
        op = np.ones((1, 1), dtype=complex)
        for k in sigma:
            e = np.zeros((2, 2), dtype=complex)
            e[k >> 1, k & 1] = 1
            op = np.kron(op, e)
        full = (v @ op @ v.conj().T).reshape(db, env, db, env)
        rho = np.einsum("ikjk->ij", full)
        t = rho.reshape((2,) * (2 * b))
        perm = [p for i in range(b) for p in (i, b + i)]
        out[sigma] = t.transpose(perm).reshape((4,) * b) if b else rho.reshape(())
    return out


def random_circuit(
    rng: np.random.Generator,
    n: int,
    size: int,
    p_traceout: float = 0.0,
    p_superop: float = 0.0,
    p_unitary: float = 0.1,
) -> Circuit:
    """Random gates from the named library plus optional noisy operations.

    Trace-outs never kill the last live qubit; superoperators act on one
    live qubit and output one qubit (channels, so probabilities stay in
    ``[0, 1]``).
    """
    gates: list[Gate] = []
    live = list(range(n))
    for _ in range(size):
        r = rng.random()
        if r < p_traceout and len(live) > 1:
            q = int(rng.choice(live))
            gates.append(named("traceout", q))
            live.remove(q)
        elif r < p_traceout + p_superop:
            q = int(rng.choice(live))
            data = tuple(random_channel_superop(rng, 1, 1).ravel())
            gates.append(Gate("superop", (q,), (q,), data))
        elif r < p_traceout + p_superop + p_unitary:
            k = 2 if len(live) > 1 and rng.random() < 0.5 else 1
            qs = tuple(int(q) for q in rng.choice(live, size=k, replace=False))
            gates.append(inline_unitary(random_unitary(rng, 2**k), *qs))
        elif len(live) > 1 and rng.random() < 0.5:
            a, b = (int(q) for q in rng.choice(live, size=2, replace=False))
            gates.append(named(str(rng.choice(TWO_QUBIT)), a, b))
        else:
            gates.append(named(str(rng.choice(ONE_QUBIT)), int(rng.choice(live))))
    return Circuit(n, tuple(gates))


def random_bits(rng: np.random.Generator, k: int) -> str:
    return "".join(str(int(b)) for b in rng.integers(0, 2, size=k))


def random_basis_scenario(rng: np.random.Generator, c: Circuit, p_measure: float = 0.8) -> MeasurementScenario:
    """Computational-basis outcomes on a random subset of the outputs."""
    elements = {}
    for q in c.outputs:
        if rng.random() < p_measure:
            elements[q] = PROJ1 if rng.random() < 0.5 else PROJ0
    return MeasurementScenario(elements)


def random_povm_element(rng: np.random.Generator) -> np.ndarray:
    """Random 2x2 effect ``0 <= M <= I``."""
    u = random_unitary(rng, 2)
    w = rng.random(2)
    return (u * w) @ u.conj().T


def nearest_neighbor_circuit(rng: np.random.Generator, n: int, depth: int, p_gate: float = 0.7) -> Circuit:
    """``depth`` layers of disjoint two-qubit gates on neighbouring lines.

    Each layer picks a random brickwork offset and keeps each candidate pair
    with probability ``p_gate``. Every gate acts on two qubits so the local
    range is uniform.
    """
    gates = []
    for _ in range(depth):
        start = int(rng.integers(0, 2))
        for lo in range(start, n - 1, 2):
            if rng.random() < p_gate:
                gates.append(inline_unitary(random_unitary(rng, 4), lo, lo + 1))
    if not gates:
        gates.append(inline_unitary(random_unitary(rng, 4), 0, 1))
    return Circuit(n, tuple(gates))


def depth2_circuit(rng: np.random.Generator, n: int) -> Circuit:
    """Two layers, each a random matching of one- and two-qubit gates."""
    gates = []
    for _ in range(2):
        order = [int(q) for q in rng.permutation(n)]
        while order:
            if len(order) > 1 and rng.random() < 0.6:
                a, b = order.pop(), order.pop()
                gates.append(named(str(rng.choice(TWO_QUBIT)), a, b))
            else:
                gates.append(named(str(rng.choice(ONE_QUBIT)), order.pop()))
    return Circuit(n, tuple(gates))


def random_simple_graph(rng: np.random.Generator, n: int, p: float) -> SimpleGraph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return SimpleGraph(range(n), edges)


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> SimpleGraph:
    """Random spanning tree plus independent extra edges."""
    edges = set()
    perm = [int(v) for v in rng.permutation(n)]
    for i in range(1, n):
        u, v = perm[i], perm[int(rng.integers(0, i))]
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return SimpleGraph(range(n), sorted(edges))


def random_multigraph(rng: np.random.Generator, n: int, m: int, p_loop: float = 0.1) -> MultiGraph:
    edges = []
    for _ in range(m):
        u = int(rng.integers(0, n))
        v = u if rng.random() < p_loop else int(rng.integers(0, n))
        edges.append((u, v))
    return MultiGraph(range(n), edges)


def path_graph(n: int) -> SimpleGraph:
    return SimpleGraph(range(n), [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> SimpleGraph:
    return SimpleGraph(range(n), [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(0, 1)][: n - 1])


def grid_graph(rows: int, cols: int) -> SimpleGraph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return SimpleGraph(range(rows * cols), edges)


def star_graph(leaves: int) -> SimpleGraph:
    return SimpleGraph(range(leaves + 1), [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n: int) -> SimpleGraph:
    return SimpleGraph(range(n), list(itertools.combinations(range(n), 2)))
