"""Dimension-4 tensors over the operator basis and their contraction.

Every index ranges over the four operators ``|b1><b2|`` in the fixed order
``|0><0|, |0><1|, |1><0|, |1><1|`` (position ``2*b1 + b2``). This order is a
file-format contract.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .multigraph import MultiGraph

DEFAULT_MAX_RANK = 14  # 4**14 complex entries


class ContractionBudgetError(RuntimeError):
    """An intermediate tensor would exceed the rank budget."""


def basis_operator(k: int) -> np.ndarray:
    """The 2x2 matrix ``|b1><b2|`` at basis position ``k``."""
    op = np.zeros((2, 2), dtype=complex)
    op[k >> 1, k & 1] = 1.0
    return op


@dataclass(frozen=True, eq=False)
class Tensor:
    """Entries indexed by wire ids; ``data.shape == (4,) * rank``.

    A wire id may appear twice in one tensor, which encodes a loop that is
    traced out when the wire is contracted.
    """

    indices: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        idx = tuple(int(w) for w in self.indices)
        if data.shape != (4,) * len(idx):
            raise ValueError(f"shape {data.shape} does not match rank {len(idx)}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "data", data)

    @property
    def rank(self) -> int:
        return len(self.indices)

    def value(self) -> complex:
        if self.rank:
            raise ValueError(f"rank-{self.rank} tensor has no scalar value")
        return complex(self.data[()])

    def transpose(self, indices: Sequence[int]) -> Tensor:
        perm = [self.indices.index(w) for w in indices]
        return Tensor(tuple(indices), self.data.transpose(perm))

    def relabel(self, mapping: dict[int, int]) -> Tensor:
        return Tensor(tuple(mapping.get(w, w) for w in self.indices), self.data)


# -- encodings -----------------------------------------------------------


def density_tensor(rho, wires: Sequence[int]) -> Tensor:
    """Entries ``tr(rho . (s_1 x ... x s_a)^dagger)`` for an ``a``-qubit matrix."""
    a = len(wires)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2**a, 2**a):
        raise ValueError(f"expected a {2**a}x{2**a} matrix for {a} wires, got {rho.shape}")
    t = rho.reshape((2,) * (2 * a))
    perm = [p for i in range(a) for p in (i, a + i)]
    return Tensor(tuple(wires), t.transpose(perm).reshape((4,) * a))


def superop_tensor(
    q: Callable[[np.ndarray], np.ndarray | complex],
    a: int,
    b: int,
    inputs: Sequence[int],
    outputs: Sequence[int],
) -> Tensor:
    """Tensor of the superoperator ``q`` taking ``a`` qubits to ``b`` qubits.

    Entry ``(s, t)`` is ``tr(q(s_1 x ... x s_a) . (t_1 x ... x t_b)^dagger)``;
    input indices come first. When ``b == 0``, ``q`` returns a scalar.
    """
    if len(inputs) != a or len(outputs) != b:
        raise ValueError(f"expected {a} input and {b} output wires")
    data = np.zeros((4,) * (a + b), dtype=complex)
    for sigma in itertools.product(range(4), repeat=a):
        op = np.ones((1, 1), dtype=complex)
        for k in sigma:
            op = np.kron(op, basis_operator(k))
        out = q(op)
        if b == 0:
            data[sigma] = complex(np.asarray(out).reshape(()))
        else:
            out = np.asarray(out, dtype=complex)
            if out.shape != (2**b, 2**b):
                raise ValueError(f"superoperator produced shape {out.shape}, expected {b} qubits")
            data[sigma] = density_tensor(out, range(b)).data
    return Tensor(tuple(inputs) + tuple(outputs), data)


def unitary_tensor(u, inputs: Sequence[int], outputs: Sequence[int]) -> Tensor:
    u = np.asarray(u, dtype=complex)
    a = len(inputs)
    if u.shape != (2**a, 2**a):
        raise ValueError(f"unitary of shape {u.shape} does not act on {a} qubits")
    return superop_tensor(lambda m: u @ m @ u.conj().T, a, a, inputs, outputs)


def identity_tensor(inputs: Sequence[int], outputs: Sequence[int]) -> Tensor:
    a = len(inputs)
    return superop_tensor(lambda m: m, a, a, inputs, outputs)


def traceout_tensor(wires: Sequence[int]) -> Tensor:
    return superop_tensor(np.trace, len(wires), 0, wires, ())


def povm_tensor(m, wire: int) -> Tensor:
    """Rank-1 tensor with entries ``tr(M s)`` closing an output wire."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("POVM element must be 2x2")
    return superop_tensor(lambda x: np.trace(m @ x), 1, 0, (wire,), ())


CZ = np.diag([1, 1, 1, -1]).astype(complex)


def cz_tensor(inputs: Sequence[int], outputs: Sequence[int]) -> Tensor:
    return unitary_tensor(CZ, inputs, outputs)


# -- contraction ---------------------------------------------------------


def trace_loops(t: Tensor) -> Tensor:
    """Sum over every wire that appears twice in ``t``."""
    idx = list(t.indices)
    data = t.data
    for w in sorted({w for w in idx if idx.count(w) == 2}):
        i = idx.index(w)
        j = idx.index(w, i + 1)
        data = np.trace(data, axis1=i, axis2=j)
        idx = [x for k, x in enumerate(idx) if k not in (i, j)]
    return Tensor(tuple(idx), data)


def contract_pair(g: Tensor, h: Tensor) -> Tensor:
    """Sum over all wires shared by ``g`` and ``h`` at once.

    Free indices of ``g`` come first, then those of ``h``.
    """
    shared = [w for w in g.indices if w in h.indices]
    if not shared:
        raise ValueError("tensors share no wire")
    ga = [g.indices.index(w) for w in shared]
    ha = [h.indices.index(w) for w in shared]
    data = np.tensordot(g.data, h.data, axes=(ga, ha))
    free = tuple(w for w in g.indices if w not in shared) + tuple(
        w for w in h.indices if w not in shared
    )
    return Tensor(free, data)


@dataclass(frozen=True)
class TensorNetwork:
    """Tensors joined by wire ids; a wire used once is open."""

    tensors: tuple[Tensor, ...]

    def __post_init__(self):
        object.__setattr__(self, "tensors", tuple(self.tensors))
        counts = self._counts()
        bad = sorted(w for w, c in counts.items() if c > 2)
        if bad:
            raise ValueError(f"wires used by more than two tensor slots: {bad}")

    def _counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for t in self.tensors:
            for w in t.indices:
                counts[w] = counts.get(w, 0) + 1
        return counts

    @property
    def open_wires(self) -> tuple[int, ...]:
        counts = self._counts()
        return tuple(w for t in self.tensors for w in t.indices if counts[w] == 1)

    @property
    def internal_wires(self) -> tuple[int, ...]:
        return tuple(sorted(w for w, c in self._counts().items() if c == 2))

    def graph(self) -> MultiGraph:
        """One vertex per tensor (its position), one edge per internal wire."""
        where: dict[int, list[int]] = {}
        for i, t in enumerate(self.tensors):
            for w in t.indices:
                where.setdefault(w, []).append(i)
        edges = {w: (ts[0], ts[1]) for w, ts in where.items() if len(ts) == 2}
        return MultiGraph(range(len(self.tensors)), edges)

    def replace(self, position: int, *tensors: Tensor) -> TensorNetwork:
        ts = list(self.tensors)
        ts[position:position + 1] = tensors
        return TensorNetwork(tuple(ts))


@dataclass(frozen=True)
class ContractionResult:
    tensor: Tensor
    max_rank: int
    steps: int


def contract_network(
    net: TensorNetwork, order: Iterable[int], max_rank: int = DEFAULT_MAX_RANK
) -> ContractionResult:
    """Contract ``net`` wire by wire following ``order``.

    Each step merges the two tensors holding the wire and sums every wire
    they share. Wires already summed by an earlier step are skipped. The
    reported ``max_rank`` covers tensors created by contraction.
    """
    nodes: dict[int, Tensor] = dict(enumerate(net.tensors))
    owner: dict[int, set[int]] = {}
    for i, t in nodes.items():
        for w in t.indices:
            owner.setdefault(w, set()).add(i)
    internal = {w for w in net.internal_wires}
    order = list(order)
    unknown = [w for w in order if w not in internal]
    if unknown:
        raise ValueError(f"ordering references unknown or open wires {unknown}")
    missing = internal - set(order)
    if missing:
        raise ValueError(f"ordering does not cover wires {sorted(missing)}")

    next_id = len(nodes)
    top = 0
    steps = 0

    def merge(new: Tensor, old: Sequence[int]):
        nonlocal next_id, top, steps
        for i in old:
            for w in nodes.pop(i).indices:
                owner[w].discard(i)
        nodes[next_id] = new
        for w in new.indices:
            owner.setdefault(w, set()).add(next_id)
        top = max(top, new.rank)
        steps += 1
        next_id += 1

    for w in order:
        holders = owner.get(w)
        if not holders:
            continue
        if len(holders) == 1:
            (i,) = holders
            merge(trace_loops(nodes[i]), [i])
            continue
        i, j = sorted(holders)
        g, h = nodes[i], nodes[j]
        if g.indices.count(w) == 2 or h.indices.count(w) == 2:
            raise ValueError(f"wire {w} is used three times")
        shared = set(g.indices) & set(h.indices)
        rank = len([x for x in g.indices if x not in shared]) + len(
            [x for x in h.indices if x not in shared]
        )
        if rank > max_rank:
            raise ContractionBudgetError(
                f"contracting wire {w} (step {steps + 1}) would create a rank-{rank} "
                f"tensor; budget is {max_rank}"
            )
        merge(contract_pair(g, h), [i, j])

    # disconnected pieces: take outer products
    ids = sorted(nodes)
    result = nodes[ids[0]] if ids else Tensor((), np.ones(()))
    for i in ids[1:]:
        t = nodes[i]
        if result.rank + t.rank > max_rank:
            raise ContractionBudgetError("outer product of components exceeds rank budget")
        result = Tensor(result.indices + t.indices, np.multiply.outer(result.data, t.data))
        top = max(top, result.rank)
    return ContractionResult(result, top, steps)
