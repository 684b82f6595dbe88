"""Exact simulation of quantum circuits and one-way computations by
tensor contraction along tree decompositions."""

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    MeasurementScenario,
    build_network,
    circuit_graph,
    parse_circuit,
    simulate_probability,
)
from .multigraph import GraphError, MultiGraph, SimpleGraph, contract_edge, line_graph, simplify
from .oracle import oracle_graph_state, oracle_probability
from .planner import ContractionPlan, cc_of_ordering, decomposition_to_contraction_ordering, exact_cc, plan_contraction
from .tensor import ContractionBudgetError, Tensor, TensorNetwork, contract_network
from .treewidth import TreeDecomposition, exact_treewidth, heuristic_order, validate_decomposition

__version__ = "0.1.0"
