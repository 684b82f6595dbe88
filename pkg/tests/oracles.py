"""Brute-force reference computations used only by the tests.

Nothing here imports the package's treewidth or planner code.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def adjacency(vertices, edges) -> dict[int, frozenset[int]]:
    adj = {v: set() for v in vertices}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return {v: frozenset(ns) for v, ns in adj.items()}


def induced_width_of(adj, order) -> int:
    live = {v: set(ns) for v, ns in adj.items()}
    width = 0
    for v in order:
        ns = live.pop(v)
        width = max(width, len(ns))
        for a in ns:
            live[a] |= ns - {a}
            live[a].discard(v)
    return width


def min_width_by_permutations(adj) -> int:
    """Minimum induced width over every ordering."""
    vs = list(adj)
    if not vs:
        return 0
    return min(induced_width_of(adj, p) for p in itertools.permutations(vs))


def min_width_by_subsets(adj) -> int:
    """Minimum induced width by dynamic programming over eliminated sets.

    Eliminating ``v`` after the set ``S`` costs the number of vertices
    outside ``S + v`` reachable from ``v`` through ``S``.
    """
    vs = sorted(adj)
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)
    if n == 0:
        return 0
    nbr = [sum(1 << idx[u] for u in adj[v]) for v in vs]

    def q(mask: int, i: int) -> int:
        seen = 1 << i
        frontier = [i]
        out = 0
        while frontier:
            j = frontier.pop()
            for k in range(n):
                if nbr[j] >> k & 1 and not seen >> k & 1:
                    seen |= 1 << k
                    if mask >> k & 1:
                        frontier.append(k)
                    else:
                        out += 1
        return out

    best = [0] + [n] * ((1 << n) - 1)
    for mask in range(1, 1 << n):
        val = n
        for i in range(n):
            if mask >> i & 1:
                rest = mask & ~(1 << i)
                val = min(val, max(best[rest], q(rest, i)))
        best[mask] = val
    return best[(1 << n) - 1]


def contraction_complexity(vertices, edges) -> int:
    """Minimum over edge orderings of the largest merged-vertex degree.

    Dynamic programming over the set of contracted edges: after contracting
    a set ``S``, the merged vertices are the components of ``(V, S)`` and
    an uncontracted edge counts once towards each component it touches
    (a loop once in total).
    """
    edges = list(edges)
    m = len(edges)
    vertices = list(vertices)

    def component(mask: int, start) -> set:
        comp = {start}
        changed = True
        while changed:
            changed = False
            for k in range(m):
                if mask >> k & 1:
                    a, b = edges[k]
                    if (a in comp) != (b in comp):
                        comp |= {a, b}
                        changed = True
        return comp

    def degree(mask: int, comp: set) -> int:
        return sum(1 for k in range(m) if not mask >> k & 1 and (edges[k][0] in comp or edges[k][1] in comp))

    @lru_cache(maxsize=None)
    def cost(mask: int) -> int:
        if mask == 0:
            return 0
        best = None
        for k in range(m):
            if mask >> k & 1:
                prev = mask & ~(1 << k)
                comp = component(mask, edges[k][0])
                val = max(cost(prev), degree(mask, comp))
                best = val if best is None else min(best, val)
        return best

    if m == 0:
        return 0
    return cost((1 << m) - 1)


def cc_by_permutations(vertices, edges) -> int:
    """Direct simulation of every edge ordering (tiny graphs only)."""
    edges = list(edges)
    best = None
    for perm in itertools.permutations(range(len(edges))):
        comp = {v: v for v in vertices}
        worst = 0
        done = set()
        for k in perm:
            a, b = comp[edges[k][0]], comp[edges[k][1]]
            for v in comp:
                if comp[v] == b:
                    comp[v] = a
            done.add(k)
            deg = sum(
                1
                for j, (x, y) in enumerate(edges)
                if j not in done and (comp[x] == a or comp[y] == a)
            )
            worst = max(worst, deg)
        best = worst if best is None else min(best, worst)
    return best or 0


def graph_state_vector(vertices, edges) -> np.ndarray:
    """Amplitudes from ``H^n`` then ``CZ`` per edge, by explicit matrices."""
    vs = sorted(vertices)
    n = len(vs)
    pos = {v: i for i, v in enumerate(vs)}
    psi = np.ones(2**n, dtype=complex) / np.sqrt(2**n)
    for u, v in edges:
        a, b = pos[u], pos[v]
        for idx in range(2**n):
            if (idx >> (n - 1 - a)) & 1 and (idx >> (n - 1 - b)) & 1:
                psi[idx] *= -1
    return psi


def kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def measure_dense(psi, n, axis, proj):
    """Project qubit ``axis`` onto the range of rank-1 ``proj``.

    Returns the outcome probability and the remaining ``n - 1`` qubit
    state, normalised.
    """
    w, vecs = np.linalg.eigh(proj)
    vec = vecs[:, int(np.argmax(w))]
    t = np.tensordot(vec.conj(), psi.reshape((2,) * n), axes=([0], [axis]))
    out = t.reshape(-1)
    p = float(np.vdot(out, out).real)
    return p, out / np.sqrt(p) if p > 0 else out


def apply_on(psi, n, axis, u):
    t = np.tensordot(u, psi.reshape((2,) * n), axes=([1], [axis]))
    return np.moveaxis(t, 0, axis).reshape(-1)
