"""Tree decompositions and elimination orderings.

Graphs are accepted as :class:`MultiGraph`; loops and parallel edges are
irrelevant for treewidth and get dropped through ``adjacency()``.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .multigraph import MultiGraph, simplify

Adjacency = dict[int, set[int]]


class GraphTooLargeError(RuntimeError):
    """Raised when an exact solver is asked to exceed its vertex budget."""


@dataclass(frozen=True)
class TreeDecomposition:
    """Unrooted tree of bags. ``edges`` are pairs of bag ids."""

    bags: Mapping[int, frozenset[int]]
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bags", {k: frozenset(b) for k, b in self.bags.items()})
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    @property
    def width(self) -> int:
        return max(max((len(b) for b in self.bags.values()), default=0) - 1, 0)

    def tree_adjacency(self) -> dict[int, set[int]]:
        adj = {k: set() for k in self.bags}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def is_path(self) -> bool:
        return all(len(ns) <= 2 for ns in self.tree_adjacency().values())


@dataclass(frozen=True)
class Violation:
    condition: str  # "T1", "T2", "T3" or "tree"
    item: object

    def __str__(self):
        return f"{self.condition}: {self.item}"


def validate_decomposition(td: TreeDecomposition, g: MultiGraph) -> list[Violation]:
    """Return every violated condition; an empty list means ``td`` is valid."""
    out: list[Violation] = []
    tadj = td.tree_adjacency()
    nbags = len(td.bags)
    if nbags and (len(td.edges) != nbags - 1 or len(_reach(tadj, next(iter(tadj)))) != nbags):
        out.append(Violation("tree", "bags do not form a tree"))
    for a, b in td.edges:
        if a not in td.bags or b not in td.bags:
            out.append(Violation("tree", f"edge ({a}, {b}) references a missing bag"))

    covered = set().union(*td.bags.values()) if td.bags else set()
    for v in g.vertices:
        if v not in covered:
            out.append(Violation("T1", v))
    for u, v in sorted({e for e in g.edges.values() if e[0] != e[1]}):
        if not any(u in b and v in b for b in td.bags.values()):
            out.append(Violation("T2", (u, v)))
    for v in sorted(covered):
        holding = {k for k, b in td.bags.items() if v in b}
        sub = {k: tadj.get(k, set()) & holding for k in holding}
        if len(_reach(sub, next(iter(holding)))) != len(holding):
            out.append(Violation("T3", v))
    return out


def _reach(adj, start):
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _check_ordering(adj: Adjacency, order: Sequence[int]):
    if len(order) != len(adj) or set(order) != set(adj):
        raise ValueError("ordering is not a permutation of the vertex set")


def _eliminate(adj: Adjacency, v: int) -> list[tuple[int, int]]:
    """Eliminate ``v`` in place; return the fill edges added."""
    ns = adj.pop(v)
    fill = []
    nl = sorted(ns)
    for i, a in enumerate(nl):
        adj[a].discard(v)
        for b in nl[i + 1:]:
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill.append((a, b))
    return fill


def elimination_width(g: MultiGraph, order: Sequence[int]) -> tuple[int, list[tuple[int, int]]]:
    """Induced width of ``order`` and the fill-in edges it creates."""
    adj = g.adjacency()
    _check_ordering(adj, order)
    width = 0
    fill = []
    for v in order:
        width = max(width, len(adj[v]))
        fill += _eliminate(adj, v)
    return width, fill


def ordering_to_decomposition(g: MultiGraph, order: Sequence[int]) -> TreeDecomposition:
    """Standard construction: one bag per vertex, ``{v} + later neighbours``.

    Bag ids are positions in ``order``. A bag hangs off the bag of its
    earliest-eliminated later neighbour; forest roots are chained together.
    """
    adj = g.adjacency()
    _check_ordering(adj, order)
    pos = {v: i for i, v in enumerate(order)}
    bags = {}
    edges = []
    roots = []
    for i, v in enumerate(order):
        later = adj[v]
        bags[i] = frozenset(later | {v})
        if later:
            edges.append((i, min(pos[w] for w in later)))
        else:
            roots.append(i)
        _eliminate(adj, v)
    edges += list(zip(roots, roots[1:]))
    return TreeDecomposition(bags, tuple(edges))


# -- heuristics ----------------------------------------------------------


def _fill_count(adj: Adjacency, v: int) -> int:
    ns = sorted(adj[v])
    return sum(1 for i, a in enumerate(ns) for b in ns[i + 1:] if b not in adj[a])


def _greedy(adj: Adjacency, strategy: str, seed: int) -> list[int]:
    if strategy not in ("minfill", "mindeg"):
        raise ValueError(f"unknown strategy {strategy!r}")
    adj = {v: set(ns) for v, ns in adj.items()}
    if seed:
        perm = sorted(adj)
        random.Random(seed).shuffle(perm)
        rank = {v: i for i, v in enumerate(perm)}
    else:
        rank = {v: v for v in adj}
    fill = {v: _fill_count(adj, v) for v in adj}
    order = []
    while adj:
        if strategy == "minfill":
            v = min(adj, key=lambda u: (fill[u], len(adj[u]), rank[u]))
        else:
            v = min(adj, key=lambda u: (len(adj[u]), fill[u], rank[u]))
        touched = set(adj[v])
        _eliminate(adj, v)
        del fill[v]
        order.append(v)
        for u in list(touched):
            touched |= adj[u]
        for u in touched:
            fill[u] = _fill_count(adj, u)
    return order


def heuristic_order(g: MultiGraph, strategy: str = "minfill", seed: int = 0) -> list[int]:
    """Greedy elimination ordering.

    Ties are broken by ``(fill, degree, id)`` for min-fill and
    ``(degree, fill, id)`` for min-degree. A non-zero ``seed`` replaces the
    final id key with a seeded random rank.
    """
    return _greedy(g.adjacency(), strategy, seed)


# -- exact solver --------------------------------------------------------


def _mmd_lower_bound(adj: Adjacency) -> int:
    """Minor-min-width: repeatedly contract a min-degree vertex into a neighbour."""
    adj = {v: set(ns) for v, ns in adj.items()}
    best = 0
    while len(adj) > 1:
        v = min(adj, key=lambda u: (len(adj[u]), u))
        d = len(adj[v])
        best = max(best, d)
        if d == 0:
            del adj[v]
            continue
        w = min(adj[v], key=lambda u: (len(adj[u] & adj[v]), u))
        for x in adj.pop(v):
            adj[x].discard(v)
            if x != w:
                adj[x].add(w)
                adj[w].add(x)
    return best


@dataclass
class _Search:
    adj: Adjacency
    best: int
    best_order: list[int]
    seen: dict[frozenset, int] = field(default_factory=dict)

    def run(self, adj: Adjacency, eliminated: frozenset, prefix: list[int], width: int):
        if width >= self.best:
            return
        if len(adj) <= width + 1:
            # the rest can go in any order without exceeding width
            self.best = width
            self.best_order = prefix + sorted(adj)
            return
        prev = self.seen.get(eliminated)
        if prev is not None and prev <= width:
            return
        self.seen[eliminated] = width
        if max(width, _mmd_lower_bound(adj)) >= self.best:
            return
        # a simplicial vertex, or an almost simplicial one of small degree,
        # may always be eliminated next without loss
        for v in sorted(adj, key=lambda u: (len(adj[u]), u)):
            d = len(adj[v])
            missing = _fill_count(adj, v)
            if missing == 0 or (d <= width and _almost_simplicial(adj, v)):
                self._step(adj, eliminated, prefix, width, v)
                return
        for v in sorted(adj, key=lambda u: (_fill_count(adj, u), len(adj[u]), u)):
            self._step(adj, eliminated, prefix, width, v)

    def _step(self, adj, eliminated, prefix, width, v):
        nxt = {u: set(ns) for u, ns in adj.items()}
        d = len(nxt[v])
        _eliminate(nxt, v)
        self.run(nxt, eliminated | {v}, prefix + [v], max(width, d))


def _almost_simplicial(adj: Adjacency, v: int) -> bool:
    ns = adj[v]
    for w in ns:
        rest = ns - {w}
        if all(rest - {a} <= adj[a] for a in rest):
            return True
    return False


def _reduce(adj: Adjacency, low: int) -> tuple[list[int], int]:
    """Apply safe elimination rules in place.

    Eliminates islets, twigs, series vertices (once ``low >= 2``), simplicial
    vertices, and almost simplicial vertices of degree at most ``low``.
    Returns the eliminated prefix and the raised lower bound; the treewidth
    of the original graph is ``max(low, tw(remaining))``.
    """
    prefix = []
    changed = True
    while changed:
        changed = False
        for v in sorted(adj, key=lambda u: (len(adj[u]), u)):
            d = len(adj[v])
            if d <= 1 or (d == 2 and low >= 2) or _fill_count(adj, v) == 0:
                pass
            elif not (d <= low and _almost_simplicial(adj, v)):
                continue
            low = max(low, d)
            _eliminate(adj, v)
            prefix.append(v)
            changed = True
            break
    return prefix, low


def exact_treewidth(g: MultiGraph, budget: int = 14) -> tuple[int, list[int]]:
    """Minimum induced width by branch and bound with memoised prefixes.

    Safe reduction rules run first; ``budget`` bounds the number of vertices
    left for the search. The upper bound starts from the better of the two
    greedy heuristics and the minor-min-width bound prunes. Returns
    ``(tw, optimal ordering)``.
    """
    adj = g.adjacency()
    if not adj:
        return 0, []
    prefix, low = _reduce(adj, _mmd_lower_bound(adj))
    if len(adj) > budget:
        raise GraphTooLargeError(
            f"exact treewidth limited to {budget} vertices after reduction, graph has {len(adj)}"
        )
    if not adj:
        return low, prefix
    start = []
    for strategy in ("minfill", "mindeg"):
        order = _greedy(adj, strategy, 0)
        start.append((_width_of(adj, order), order))
    ub, order = min(start)
    if ub <= low:
        return low, prefix + order
    search = _Search(adj, ub, order)
    search.run({v: set(ns) for v, ns in adj.items()}, frozenset(), [], 0)
    return max(low, search.best), prefix + search.best_order


def _width_of(adj: Adjacency, order: Sequence[int]) -> int:
    adj = {v: set(ns) for v, ns in adj.items()}
    width = 0
    for v in order:
        width = max(width, len(adj[v]))
        _eliminate(adj, v)
    return width


def treewidth_upper_bound(g: MultiGraph, seeds: Iterable[int] = (0,)) -> tuple[int, list[int]]:
    """Best greedy ordering over both strategies and the given seeds."""
    adj = g.adjacency()
    return min(
        (_width_of(adj, o), o)
        for s in seeds
        for o in (_greedy(adj, "minfill", s), _greedy(adj, "mindeg", s))
    )


# -- circuits ------------------------------------------------------------


def local_interaction_path_decomposition(circuit) -> tuple[TreeDecomposition, MultiGraph, int]:
    """Path decomposition of the circuit graph reduced onto its multi-qubit gates.

    Bag ``i`` (for the cut between qubits ``i`` and ``i+1``) holds the gates
    acting on qubits on both sides of the cut, plus the gates whose lowest
    qubit is ``i+1``. The second group makes wires on qubit ``i+1`` that join
    a gate ending there to a gate starting there land in a common bag.

    Returns ``(decomposition, reduced graph, r)`` where ``r`` is the largest
    number of gates straddling any cut. Width is at most ``2r - 1``.
    """
    from .circuit import circuit_graph

    for k, gate in enumerate(circuit.gates):
        if len(gate.inputs) != len(gate.outputs):
            raise ValueError(f"gate {k} ({gate.name}) has unequal input/output arity")
    multi = {k for k, gate in enumerate(circuit.gates) if len(gate.inputs) >= 2}
    reduced, _ = simplify(circuit_graph(circuit), keep=multi)
    n = circuit.n
    bags: dict[int, set[int]] = {i: set() for i in range(max(n - 1, 1))}
    straddle = [0] * max(n - 1, 1)
    for k in sorted(multi):
        lo, hi = min(circuit.gates[k].inputs), max(circuit.gates[k].inputs)
        for i in range(lo, hi):
            straddle[i] += 1
        for i in range(max(lo - 1, 0), hi):
            bags[i].add(k)
    r = max(straddle, default=0)
    edges = tuple((i, i + 1) for i in range(len(bags) - 1))
    return TreeDecomposition(bags, edges), reduced, r


def extend_to_circuit_graph(td: TreeDecomposition, reduced: MultiGraph, g: MultiGraph) -> TreeDecomposition:
    """Grow a decomposition of ``reduced`` into one of ``g``.

    The vertices of ``g`` outside ``reduced`` must form paths, each joined
    to at most two reduced vertices that are adjacent in ``reduced``. Each
    path is hung off a bag holding its attachments, one bag per path vertex,
    so the width grows to at most ``max(width, 2)``.
    """
    kept = set(reduced.vertices)
    adj = g.adjacency()
    bags = {k: set(b) for k, b in td.bags.items()}
    edges = list(td.edges)
    next_bag = max(bags, default=-1) + 1
    if not bags:
        bags[0] = set()
        next_bag = 1
    seen: set[int] = set()
    for start in g.vertices:
        if start in kept or start in seen:
            continue
        comp = _reach({v: adj[v] - kept for v in adj if v not in kept}, start)
        seen |= comp
        if any(len(adj[v] - kept) > 2 for v in comp):
            raise ValueError(f"vertices outside the reduced graph near {start} do not form a path")
        ends = [v for v in comp if len(adj[v] - kept) < 2] or [start]
        path = [ends[0]]
        while len(path) < len(comp):
            path.append(next(x for x in adj[path[-1]] - kept if x not in path))
        attach = sorted({a for v in comp for a in adj[v] & kept})
        if len(attach) > 2:
            raise ValueError(f"path through {start} touches {len(attach)} reduced vertices")
        home = next((k for k in sorted(bags) if set(attach) <= bags[k]), None)
        if home is None:
            raise ValueError(f"no bag holds the attachments {attach} of the path through {start}")
        # orient so that the first attachment sits at the start of the path
        if attach and not adj[path[0]] & {attach[0]}:
            path.reverse()
        carry = set(attach[1:])
        prev, prev_vertex = home, None
        for v in path:
            bag = {v} | carry | ({prev_vertex} if prev_vertex is not None else {attach[0]} if attach else set())
            bags[next_bag] = bag
            edges.append((prev, next_bag))
            prev, prev_vertex = next_bag, v
            next_bag += 1
    return TreeDecomposition(bags, tuple(edges))


def straddle_bags(circuit) -> dict[int, frozenset[int]]:
    """Gates acting on qubits ``j <= i < j'``, per cut ``i``, with no repair."""
    bags = {i: set() for i in range(max(circuit.n - 1, 1))}
    for k, gate in enumerate(circuit.gates):
        if len(gate.inputs) >= 2:
            for i in range(min(gate.inputs), max(gate.inputs)):
                bags[i].add(k)
    return {i: frozenset(b) for i, b in bags.items()}


# -- PACE .td format -----------------------------------------------------


def write_td(td: TreeDecomposition, g: MultiGraph) -> str:
    index = {v: i + 1 for i, v in enumerate(g.vertices)}
    ids = {k: i + 1 for i, k in enumerate(sorted(td.bags))}
    lines = [f"s td {len(td.bags)} {td.width + 1} {g.num_vertices}"]
    for k in sorted(td.bags):
        vs = " ".join(str(index[v]) for v in sorted(td.bags[k]))
        lines.append(f"b {ids[k]} {vs}".rstrip())
    lines += [f"{ids[a]} {ids[b]}" for a, b in td.edges]
    return "\n".join(lines) + "\n"


def read_td(text: str) -> TreeDecomposition:
    """Parse ``.td`` text; bag ids and vertices come back 0-indexed."""
    bags = {}
    edges = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        try:
            if parts[0] == "s":
                header = tuple(int(x) for x in parts[2:5])
            elif parts[0] == "b":
                bags[int(parts[1]) - 1] = frozenset(int(x) - 1 for x in parts[2:])
            else:
                a, b = parts
                edges.append((int(a) - 1, int(b) - 1))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed .td line {raw!r}") from None
    if header is None:
        raise ValueError("missing 's td' header")
    if header[0] != len(bags):
        raise ValueError(f"header declares {header[0]} bags, found {len(bags)}")
    return TreeDecomposition(bags, tuple(edges))
