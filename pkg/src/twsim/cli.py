"""Command-line entry point.

Output is one ``key=value`` pair per line by default; ``--format human``
adds aligned labels. Exit status is 0 on success, 1 for bad input and 2
when a resource budget (tensor rank, exact-solver size, oracle size) is
exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .circuit import CircuitError, MeasurementScenario, parse_circuit, parse_scenario, simulate_probability
from .multigraph import GraphError, MultiGraph, read_graph
from .oneway import OneWayError
from .planner import STRATEGIES, cc_of_ordering, exact_cc, plan_contraction, read_plan
from .tensor import DEFAULT_MAX_RANK, ContractionBudgetError
from .treewidth import (
    GraphTooLargeError,
    exact_treewidth,
    heuristic_order,
    ordering_to_decomposition,
    write_td,
)

log = logging.getLogger("twsim")

BUDGET_ERRORS = (ContractionBudgetError, GraphTooLargeError, MemoryError)


class InputError(Exception):
    pass


def _oracle_errors():
    from .oracle import OracleTooLargeError

    return (OracleTooLargeError,)


def fmt(x: float) -> str:
    return f"{x:.15g}"


class Output:
    def __init__(self, style: str):
        self.style = style
        self.lines: list[str] = []

    def put(self, key: str, value):
        if self.style == "human":
            self.lines.append(f"{key.replace('_', ' '):<18} {value}")
        else:
            self.lines.append(f"{key}={value}")

    def flush(self):
        if self.lines:
            print("\n".join(self.lines))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _parse(path: str, parser):
    text = _read(path)
    try:
        return parser(text)
    except (CircuitError, GraphError, ValueError, OneWayError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_graph(path: str) -> MultiGraph:
    return _parse(path, read_graph)


def _load_simple(path: str):
    g = _load_graph(path)
    if not g.is_simple():
        raise InputError(f"{path}: graph states need a simple graph (no loops or parallel edges)")
    return g.to_simple()


def _is_circuit(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            return line.split()[0].lower() == "qubits"
    return False


def _graph_scenario(path: str) -> dict[int, np.ndarray]:
    """Scenario file for graph states: qubits are 1-indexed graph labels."""
    tau = _parse(path, parse_scenario)
    if any(q < 1 for q in tau.elements):
        raise InputError(f"{path}: graph-state qubits are numbered from 1")
    return {q - 1: m for q, m in tau.elements.items()}


# -- commands ------------------------------------------------------------


def _simulate_one(args_tuple):
    circuit, x, tau, strategy, seed, max_rank, ordering = args_tuple
    plan = None
    if ordering is not None:
        from .circuit import build_network
        from .planner import ContractionPlan

        g = build_network(circuit, x, tau).graph()
        plan = ContractionPlan(tuple(ordering), cc_of_ordering(g, ordering), "file", seed, -1)
    return simulate_probability(circuit, x, tau, strategy, seed, max_rank, plan)


def cmd_simulate(args, out: Output):
    circuit = _parse(args.circuit, parse_circuit)
    x = args.input if args.input is not None else "0" * circuit.n
    if len(x) != circuit.n or set(x) - {"0", "1"}:
        raise InputError(f"--input must be {circuit.n} bits of 0/1, got {x!r}")
    scenarios = [_parse(p, parse_scenario) for p in args.measure] or [MeasurementScenario()]
    for path, tau in zip(args.measure, scenarios):
        extra = sorted(set(tau.elements) - set(circuit.outputs))
        if extra:
            raise InputError(f"{path}: qubit {extra[0]} is not an output of the circuit")
    ordering = None
    if args.plan:
        ordering, _ = _parse(args.plan, read_plan)
    jobs = [(circuit, x, tau, args.strategy, args.seed, args.budget_rank, ordering) for tau in scenarios]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_simulate_one, jobs))
    else:
        results = [_simulate_one(j) for j in jobs]
    for k, res in enumerate(results):
        prefix = "" if len(results) == 1 else f"{k + 1}."
        out.put(f"{prefix}p", fmt(res.probability))
        out.put(f"{prefix}width", res.max_rank)
        out.put(f"{prefix}cc", res.plan.predicted_cc)
        out.put(f"{prefix}plan", f"{res.plan.strategy}:seed={res.plan.seed}:edges={len(res.plan.ordering)}")
        if args.oracle:
            from .oracle import oracle_probability

            ref = oracle_probability(circuit, x, scenarios[k])
            out.put(f"{prefix}oracle", fmt(ref))
            out.put(f"{prefix}diff", f"{abs(ref - res.probability):.3e}")


def _graph_of_input(path: str) -> MultiGraph:
    text = _read(path)
    if _is_circuit(text):
        from .circuit import circuit_graph

        try:
            return circuit_graph(parse_circuit(text))
        except CircuitError as exc:
            raise InputError(f"{path}: {exc}") from None
    try:
        return read_graph(text)
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_plan(args, out: Output):
    g = _graph_of_input(args.file)
    plan = plan_contraction(g, "exact" if args.exact else args.strategy, args.seed, args.exact_budget)
    out.put("cc", plan.predicted_cc)
    out.put("strategy", plan.strategy)
    out.put("seed", plan.seed)
    out.put("edges", len(plan.ordering))
    out.put("ordering", " ".join(map(str, plan.ordering)))
    if args.output:
        from .planner import write_plan

        Path(args.output).write_text(write_plan(plan))


def cmd_treewidth(args, out: Output):
    g = _graph_of_input(args.file)
    if args.exact:
        tw, order = exact_treewidth(g, args.exact_budget)
        method = "exact"
    else:
        order = heuristic_order(g, args.strategy, args.seed)
        method = args.strategy
    td = ordering_to_decomposition(g, order)
    out.put("tw", tw if args.exact else td.width)
    out.put("method", method)
    out.put("bags", len(td.bags))
    for k in sorted(td.bags):
        out.put(f"bag.{k + 1}", " ".join(str(v + 1) for v in sorted(td.bags[k])))
    out.put("tree", " ".join(f"{a + 1}-{b + 1}" for a, b in td.edges))
    if args.output:
        Path(args.output).write_text(write_td(td, g))


def cmd_cc(args, out: Output):
    g = _graph_of_input(args.file)
    if args.exact:
        value = exact_cc(g, args.exact_budget)
        plan = plan_contraction(g, "exact", args.seed, args.exact_budget)
        out.put("cc", value)
        out.put("method", "exact")
    else:
        plan = plan_contraction(g, args.strategy, args.seed)
        out.put("cc", plan.predicted_cc)
        out.put("method", args.strategy)
    out.put("ordering", " ".join(map(str, plan.ordering)))


def cmd_graphstate(args, out: Output):
    from .oneway import GraphStateSimulator

    g = _load_simple(args.graph)
    sim = GraphStateSimulator(g, args.strategy, args.seed, args.budget_rank)
    scenarios = [_graph_scenario(p) for p in args.measure] or [{}]
    for path, tau in zip(args.measure, scenarios):
        bad = sorted(set(tau) - set(g.vertices))
        if bad:
            raise InputError(f"{path}: qubit {bad[0] + 1} is not a vertex of the graph")
    for k, tau in enumerate(scenarios):
        prefix = "" if len(scenarios) == 1 else f"{k + 1}."
        p = sim.probability(tau)
        out.put(f"{prefix}p", fmt(min(max(p, 0.0), 1.0)))
        if args.oracle:
            from .oracle import oracle_graph_state

            psi = oracle_graph_state(g)
            m = np.ones((1, 1), dtype=complex)
            for v in g.vertices:
                m = np.kron(m, tau.get(v, np.eye(2)))
            ref = float(np.vdot(psi, m @ psi).real)
            out.put(f"{prefix}oracle", fmt(ref))
            out.put(f"{prefix}diff", f"{abs(ref - p):.3e}")
    out.put("width", sim.achieved_rank)
    out.put("cc", sim.plan.predicted_cc)


def _oneway_run(job):
    graph, program_text, seed, full = job
    from .oneway import parse_program, simulate_oneway_full, simulate_oneway_randomized

    program = parse_program(program_text)
    if full:
        return simulate_oneway_full(graph, program, seed).outcomes
    return simulate_oneway_randomized(graph, program, seed)[0]


def cmd_oneway(args, out: Output):
    from .oneway import (
        branch_distribution,
        parse_program,
        simulate_oneway_full,
        simulate_oneway_oblivious,
    )

    g = _load_simple(args.graph)
    text = _read(args.program)
    program = _parse(args.program, parse_program)
    bad = sorted({s.vertex for s in program.zero_path()} - set(g.vertices))
    if bad:
        raise InputError(f"{args.program}: qubit {bad[0] + 1} is not a vertex of the graph")
    if args.mode == "oblivious" or (args.mode == "auto" and program.oblivious):
        if args.full:
            p = simulate_oneway_full(g, program, args.seed).zero_probability
        else:
            p = simulate_oneway_oblivious(g, program)
        out.put("p0", fmt(p))
    elif args.mode == "distribution":
        dist = branch_distribution(g, program)
        for k, p in dist.items():
            out.put("p." + "".join(map(str, k)), fmt(p))
        if args.oracle:
            from .oracle import oracle_oneway_distribution

            ref = oracle_oneway_distribution(g, program)
            keys = set(ref) | set(dist)
            out.put("diff", f"{max(abs(ref.get(k, 0) - dist.get(k, 0)) for k in keys):.3e}")
    else:
        jobs = [(g, text, args.seed + r, args.full) for r in range(args.runs)]
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                runs = list(pool.map(_oneway_run, jobs))
        else:
            runs = [_oneway_run(j) for j in jobs]
        for r, outcomes in enumerate(runs):
            key = "outcomes" if len(runs) == 1 else f"run.{r + 1}"
            out.put(key, " ".join(map(str, outcomes)))


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strategy", choices=STRATEGIES, default="minfill")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("kv", "human"), default="kv")
    common.add_argument("--budget-rank", type=int, default=DEFAULT_MAX_RANK, help="largest tensor rank allowed")
    common.add_argument("--exact-budget", type=int, default=14, help="vertex budget of the exact solver")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for independent evaluations")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="twsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="probability of a measurement scenario")
    s.add_argument("circuit")
    s.add_argument("--input", help="input bitstring, default all zeros")
    s.add_argument("--measure", action="append", default=[], help="scenario file; repeat for several")
    s.add_argument("--plan", help="plan file with a contraction ordering")
    s.add_argument("--oracle", action="store_true", help="cross-check with the dense simulator")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("plan", parents=[common], help="contraction ordering of a circuit or graph")
    s.add_argument("file")
    s.add_argument("--exact", action="store_true")
    s.add_argument("-o", "--output", help="write a plan file")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("treewidth", parents=[common], help="treewidth and a tree decomposition")
    s.add_argument("file")
    s.add_argument("--exact", action="store_true")
    s.add_argument("-o", "--output", help="write the decomposition in .td format")
    s.set_defaults(func=cmd_treewidth)

    s = sub.add_parser("cc", parents=[common], help="contraction complexity")
    s.add_argument("file")
    s.add_argument("--exact", action="store_true")
    s.set_defaults(func=cmd_cc)

    s = sub.add_parser("graphstate", parents=[common], help="scenario probability on a graph state")
    s.add_argument("graph")
    s.add_argument("--measure", action="append", default=[])
    s.add_argument("--oracle", action="store_true")
    s.set_defaults(func=cmd_graphstate)

    s = sub.add_parser("oneway", parents=[common], help="run a one-way program on a graph state")
    s.add_argument("graph")
    s.add_argument("program")
    s.add_argument(
        "--mode",
        choices=("auto", "sample", "distribution", "oblivious"),
        default="auto",
        help="auto samples unless the program is declared oblivious",
    )
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--full", action="store_true", help="go through the degree-3 expansion")
    s.add_argument("--oracle", action="store_true")
    s.set_defaults(func=cmd_oneway)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    out = Output(args.format)
    try:
        args.func(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BUDGET_ERRORS + _oracle_errors() as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 2
    except (CircuitError, GraphError, ValueError, OneWayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
