"""Undirected multigraphs with parallel edges and loops.

Degrees follow the convention that a loop contributes 1 to the degree of
its vertex, so ``sum(degrees) == |E| + #loops``.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

log = logging.getLogger(__name__)

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


class MultiGraph:
    """Immutable multigraph; edges carry integer ids.

    Parameters
    ----------
    vertices : iterable of int
    edges : mapping or iterable
        Either ``{edge_id: (u, v)}`` or an iterable of ``(u, v)`` pairs, in
        which case ids are assigned ``0..m-1`` in iteration order.
    """

    __slots__ = ("_vertices", "_edges", "_incident")

    def __init__(self, vertices: Iterable[int] = (), edges=()):
        if isinstance(edges, Mapping):
            emap = {int(k): _pair(u, v) for k, (u, v) in edges.items()}
        else:
            emap = {i: _pair(u, v) for i, (u, v) in enumerate(edges)}
        verts = {int(v) for v in vertices}
        for k, (u, v) in emap.items():
            if u not in verts or v not in verts:
                raise GraphError(f"edge {k} = ({u}, {v}) references a missing vertex")
        self._vertices = tuple(sorted(verts))
        self._edges = dict(sorted(emap.items()))
        incident: dict[int, list[int]] = {v: [] for v in self._vertices}
        for eid, (u, v) in self._edges.items():
            incident[u].append(eid)
            if u != v:
                incident[v].append(eid)
        self._incident = {v: tuple(es) for v, es in incident.items()}
        self._check()

    def _check(self):
        pass

    # -- accessors -------------------------------------------------------

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    @property
    def edges(self) -> Mapping[int, Edge]:
        return MappingProxyType(self._edges)

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def endpoints(self, eid: int) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise GraphError(f"unknown edge id {eid}") from None

    def incident(self, v: int) -> tuple[int, ...]:
        return self._incident[v]

    def degree(self, v: int) -> int:
        return len(self._incident[v])

    def max_degree(self) -> int:
        return max((len(es) for es in self._incident.values()), default=0)

    def num_loops(self) -> int:
        return sum(1 for u, v in self._edges.values() if u == v)

    def neighbors(self, v: int) -> set[int]:
        """Distinct adjacent vertices, excluding ``v`` itself."""
        out = set()
        for eid in self._incident[v]:
            a, b = self._edges[eid]
            w = b if a == v else a
            if w != v:
                out.add(w)
        return out

    def adjacency(self) -> dict[int, set[int]]:
        """Simple-graph adjacency: loops dropped, parallel edges merged."""
        adj: dict[int, set[int]] = {v: set() for v in self._vertices}
        for u, v in self._edges.values():
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return adj

    def is_simple(self) -> bool:
        seen = set()
        for u, v in self._edges.values():
            if u == v or (u, v) in seen:
                return False
            seen.add((u, v))
        return True

    def to_simple(self) -> SimpleGraph:
        return SimpleGraph.from_adjacency(self.adjacency())

    def __iter__(self) -> Iterator[int]:
        return iter(self._vertices)

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self):
        return hash((self._vertices, tuple(self._edges.items())))

    def __repr__(self):
        return (
            f"{type(self).__name__}(|V|={self.num_vertices}, "
            f"|E|={self.num_edges}, loops={self.num_loops()})"
        )


class SimpleGraph(MultiGraph):
    """A multigraph with no loops and at most one edge per vertex pair."""

    __slots__ = ()

    def _check(self):
        if not self.is_simple():
            raise GraphError("simple graph may not contain loops or parallel edges")

    @classmethod
    def from_adjacency(cls, adj: Mapping[int, Iterable[int]]) -> SimpleGraph:
        pairs = sorted({_pair(u, v) for u, ws in adj.items() for v in ws if u != v})
        return cls(adj.keys(), pairs)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors(u)


def _pair(u, v) -> Edge:
    u, v = int(u), int(v)
    return (u, v) if u <= v else (v, u)


# -- operations ----------------------------------------------------------


def contract_edge(g: MultiGraph, eid: int) -> tuple[MultiGraph, int]:
    """Contract edge ``eid`` and return ``(graph, degree of merged vertex)``.

    The merged vertex keeps the smaller endpoint id. Other edges between the
    two endpoints become loops; contracting a loop just deletes it.
    """
    u, v = g.endpoints(eid)
    keep, drop = min(u, v), max(u, v)
    edges = {}
    for k, (a, b) in g.edges.items():
        if k == eid:
            continue
        a = keep if a == drop else a
        b = keep if b == drop else b
        edges[k] = (a, b)
    verts = [w for w in g.vertices if w != drop or u == v]
    h = MultiGraph(verts, edges)
    return h, h.degree(keep)


def line_graph(g: MultiGraph) -> SimpleGraph:
    """Vertices are the edge ids of ``g``; two are adjacent iff they share an endpoint."""
    adj: dict[int, set[int]] = {e: set() for e in g.edges}
    for v in g.vertices:
        inc = g.incident(v)
        for i, e in enumerate(inc):
            for f in inc[i + 1:]:
                adj[e].add(f)
                adj[f].add(e)
    return SimpleGraph.from_adjacency(adj)


@dataclass(frozen=True)
class Removal:
    kind: str  # "delete" or "smooth"
    vertex: int
    neighbors: tuple[int, ...]


def simplify(g: MultiGraph, keep: Iterable[int] | None = None) -> tuple[MultiGraph, list[Removal]]:
    """Delete degree-1 vertices and smooth degree-2 vertices to a fixed point.

    For a :class:`SimpleGraph` input the result stays simple: a degree-2
    vertex whose neighbours are already adjacent is left alone. Degree-1
    deletion stops once a single edge remains, so treewidth is preserved for
    every input with at least two edges.

    With ``keep`` given, every vertex outside ``keep`` of degree at most 2 is
    removed (isolated ones too) and the single-edge guard is off. This
    reduces a graph onto the kept vertices, e.g. a circuit graph onto its
    multi-qubit gates.
    """
    simple = isinstance(g, SimpleGraph)
    protected = None if keep is None else set(keep)
    verts = set(g.vertices)
    edges = dict(g.edges)
    inc: dict[int, set[int]] = {v: set() for v in verts}
    for k, (a, b) in edges.items():
        inc[a].add(k)
        inc[b].add(k)
    next_id = max(edges, default=-1) + 1
    removals: list[Removal] = []

    def other(k, v):
        a, b = edges[k]
        return b if a == v else a

    def drop_edge(k):
        a, b = edges.pop(k)
        inc[a].discard(k)
        inc[b].discard(k)

    changed = True
    while changed:
        changed = False
        for v in sorted(verts):
            if protected is not None and v in protected:
                continue
            deg = len(inc[v])
            if deg == 0 and protected is not None:
                verts.discard(v)
                del inc[v]
                removals.append(Removal("delete", v, ()))
                changed = True
            elif deg == 1 and (protected is not None or len(edges) >= 2):
                (k,) = inc[v]
                w = other(k, v)
                drop_edge(k)
                verts.discard(v)
                del inc[v]
                removals.append(Removal("delete", v, (w,) if w != v else ()))
                changed = True
            elif deg == 2:
                k1, k2 = sorted(inc[v])
                a, b = other(k1, v), other(k2, v)
                if a == v or b == v:
                    continue  # a loop plus one edge: degree 2 but not a path vertex
                if simple and (a == b or any(set(edges[k]) == {a, b} for k in inc[a])):
                    continue
                drop_edge(k1)
                drop_edge(k2)
                verts.discard(v)
                del inc[v]
                edges[next_id] = _pair(a, b)
                inc[a].add(next_id)
                inc[b].add(next_id)
                next_id += 1
                removals.append(Removal("smooth", v, (a, b)))
                changed = True
    cls = SimpleGraph if simple else MultiGraph
    return cls(verts, edges), removals


def _is_odd_prime(p: int) -> bool:
    if p < 3 or p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def lps_expander(p: int) -> tuple[MultiGraph, MultiGraph]:
    """The 3-regular graph on Z_p plus infinity, and its trimmed variant.

    Vertex ``p`` stands for infinity. ``x`` is joined to ``x+1``, ``x-1`` and
    ``x^-1`` with ``0^-1 = inf``; self-inverse elements and infinity carry
    loops. The second graph drops infinity and the edge ``{0, p-1}``.
    """
    if not _is_odd_prime(p):
        raise GraphError(f"p must be an odd prime, got {p}")
    inf = p
    edges = [(x, (x + 1) % p) for x in range(p)]
    edges += [(inf, inf), (inf, inf), (0, inf)]
    for x in range(1, p):
        y = pow(x, -1, p)
        if x <= y:
            edges.append((x, y))
    full = MultiGraph(range(p + 1), edges)
    trimmed = {
        k: e for k, e in full.edges.items() if inf not in e and e != (0, p - 1)
    }
    return full, MultiGraph(range(p), trimmed)


# -- PACE-style text format ---------------------------------------------


def read_graph(text: str) -> MultiGraph:
    """Parse ``p tw n m`` / ``e u v`` text (1-indexed) into 0-indexed ids."""
    n = m = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if len(parts) != 4:
                    raise GraphError("expected 'p tw <n> <m>'")
                n, m = int(parts[2]), int(parts[3])
                continue
            if parts[0] == "e":
                parts = parts[1:]
            if len(parts) != 2:
                raise GraphError("expected an edge 'e <u> <v>'")
            u, v = int(parts[0]), int(parts[1])
        except (GraphError, ValueError) as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
        if n is None:
            raise GraphError(f"line {lineno}: edge before header")
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphError(f"line {lineno}: vertex out of range 1..{n}")
        pairs.append((u - 1, v - 1))
    if n is None:
        raise GraphError("missing 'p tw' header")
    if m is not None and m != len(pairs):
        raise GraphError(f"header declares {m} edges, found {len(pairs)}")
    return MultiGraph(range(n), pairs)


def write_graph(g: MultiGraph) -> str:
    index = {v: i + 1 for i, v in enumerate(g.vertices)}
    lines = [f"p tw {g.num_vertices} {g.num_edges}"]
    lines += [f"e {index[u]} {index[v]}" for u, v in g.edges.values()]
    return "\n".join(lines) + "\n"
