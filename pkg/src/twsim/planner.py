"""Contraction orderings, their complexity, and end-to-end planning."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .multigraph import MultiGraph, line_graph
from .treewidth import (
    GraphTooLargeError,
    TreeDecomposition,
    exact_treewidth,
    heuristic_order,
    ordering_to_decomposition,
    validate_decomposition,
)

log = logging.getLogger(__name__)

STRATEGIES = ("minfill", "mindeg", "exact")


def cc_of_ordering(g: MultiGraph, order: Sequence[int]) -> int:
    """Largest merged-vertex degree when contracting edges one at a time.

    Loops stay in place and count 1 towards degree until their own turn.
    """
    order = list(order)
    if sorted(order) != sorted(g.edges):
        raise ValueError("contraction ordering must list every edge id exactly once")
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    live = set(order)
    worst = 0
    for eid in order:
        live.discard(eid)
        u, v = g.endpoints(eid)
        ru, rv = find(u), find(v)
        parent[rv] = ru
        merged = 0
        for f in live:
            a, b = g.endpoints(f)
            if find(a) == ru or find(b) == ru:
                merged += 1
        worst = max(worst, merged)
    return worst


def decomposition_to_contraction_ordering(td: TreeDecomposition, g: MultiGraph) -> list[int]:
    """Peel leaves of a decomposition of the line graph into an edge ordering.

    The tree is rooted at its smallest bag id. While more than one bag is
    left, take the smallest-id leaf: drop it if its bag is inside its
    parent's bag, otherwise emit the smallest edge present only there. The
    last bag is emitted in sorted order.
    """
    gstar = line_graph(g)
    violations = validate_decomposition(td, gstar)
    if violations:
        raise ValueError(f"not a tree decomposition of the line graph: {violations[0]}")
    if not td.bags:
        return []
    bags = {k: set(b) for k, b in td.bags.items()}
    tadj = td.tree_adjacency()
    root = min(bags)
    parent = {root: None}
    stack = [root]
    while stack:
        k = stack.pop()
        for c in tadj[k]:
            if c not in parent:
                parent[c] = k
                stack.append(c)
    children = {k: 0 for k in bags}
    for k, p in parent.items():
        if p is not None:
            children[p] += 1

    out: list[int] = []
    while len(bags) > 1:
        leaf = min(k for k in bags if children[k] == 0 and k != root)
        up = parent[leaf]
        extra = bags[leaf] - bags[up]
        if not extra:
            del bags[leaf]
            children[up] -= 1
            continue
        e = min(extra)
        out.append(e)
        bags[leaf].discard(e)
    out += sorted(bags[root])
    return out


def vertex_to_line_decomposition(td: TreeDecomposition, g: MultiGraph) -> TreeDecomposition:
    """Decomposition of the line graph from one of ``g``.

    Each bag is replaced by the edges incident to its vertices, so the
    width grows to at most ``max_degree * (width + 1) - 1``.
    """
    incident = {v: set(g.incident(v)) for v in g.vertices}
    bags = {k: set().union(*(incident[v] for v in b)) if b else set() for k, b in td.bags.items()}
    return TreeDecomposition(bags, td.edges)


@dataclass(frozen=True)
class ContractionPlan:
    ordering: tuple[int, ...]
    predicted_cc: int
    strategy: str
    seed: int
    decomposition_width: int

    @property
    def source(self) -> str:
        return f"{self.strategy}:{self.seed}"


def plan_contraction(
    g: MultiGraph, strategy: str = "minfill", seed: int = 0, budget: int = 14
) -> ContractionPlan:
    """Line graph, elimination ordering, tree decomposition, leaf peeling.

    ``strategy="exact"`` solves the line graph exactly when it has at most
    ``budget`` vertices and falls back to min-fill otherwise.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    gstar = line_graph(g)
    used = strategy
    if strategy == "exact":
        try:
            _, order = exact_treewidth(gstar, budget)
        except GraphTooLargeError:
            log.warning(
                "line graph has %d vertices (> %d); falling back to minfill",
                gstar.num_vertices,
                budget,
            )
            used = "minfill"
            order = heuristic_order(gstar, "minfill", seed)
    else:
        order = heuristic_order(gstar, strategy, seed)
    td = ordering_to_decomposition(gstar, order)
    ordering = decomposition_to_contraction_ordering(td, g)
    return ContractionPlan(tuple(ordering), cc_of_ordering(g, ordering), used, seed, td.width)


def best_plan(
    g: MultiGraph, strategies: Iterable[str] = ("minfill", "mindeg"), seeds: Iterable[int] = (0,)
) -> ContractionPlan:
    """Lowest predicted cc over several plans; ties go to the first tried."""
    plans = [plan_contraction(g, s, seed) for s in strategies for seed in seeds]
    return min(plans, key=lambda p: p.predicted_cc)


def exact_cc(g: MultiGraph, budget: int = 14) -> int:
    """Contraction complexity, computed as the treewidth of the line graph."""
    tw, _ = exact_treewidth(line_graph(g), budget)
    return tw


# -- plan file -----------------------------------------------------------


def write_plan(plan: ContractionPlan) -> str:
    lines = [
        f"p plan {len(plan.ordering)} {plan.predicted_cc}",
        f"c source {plan.strategy} seed={plan.seed}",
    ]
    lines += [str(e) for e in plan.ordering]
    return "\n".join(lines) + "\n"


def read_plan(text: str) -> tuple[list[int], int]:
    """Return ``(ordering, predicted_cc)`` from plan-file text."""
    order = []
    cc = None
    count = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        try:
            if parts[0] == "p":
                count, cc = int(parts[2]), int(parts[3])
            else:
                order.append(int(parts[0]))
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: malformed plan line {raw!r}") from None
    if cc is None:
        raise ValueError("missing 'p plan' header")
    if count != len(order):
        raise ValueError(f"header declares {count} edges, found {len(order)}")
    return order, cc
