import itertools

import numpy as np
import pytest

from oracles import graph_state_vector
from twsim.circuit import PROJ0, PROJ1, Circuit, MeasurementScenario, named, parse_circuit
from twsim.generators import random_circuit, random_povm_element
from twsim.multigraph import SimpleGraph
from twsim.oneway import graph_state_circuit
from twsim.oracle import (
    OracleTooLargeError,
    oracle_graph_state,
    oracle_probability,
    oracle_statevector,
)


def test_probability_examples():
    assert oracle_probability(Circuit(1), "0", MeasurementScenario({0: PROJ0})) == pytest.approx(1)
    bell = parse_circuit("qubits 2\nh 0\ncnot 0 1\n")
    assert oracle_probability(bell, "00", MeasurementScenario.from_bits([0, 1], "00")) == pytest.approx(0.5)
    h = Circuit(1, (named("h", 0),))
    assert oracle_probability(h, "0", MeasurementScenario({0: PROJ1})) == pytest.approx(0.5)


def test_probability_errors():
    with pytest.raises(ValueError):
        oracle_probability(Circuit(2), "0")
    with pytest.raises(OracleTooLargeError):
        oracle_probability(Circuit(11), "0" * 11)


def test_graph_state_examples():
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(oracle_graph_state(SimpleGraph([0], [])), [s, s])
    np.testing.assert_allclose(oracle_graph_state(SimpleGraph([0, 1], [(0, 1)])), [0.5, 0.5, 0.5, -0.5])
    np.testing.assert_allclose(oracle_graph_state(SimpleGraph([0, 1], [])), [0.5] * 4)


def all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        yield SimpleGraph(range(n), [p for i, p in enumerate(pairs) if mask >> i & 1])


def test_graph_state_formula_matches_circuit():
    for n in range(1, 7):
        graphs = list(all_graphs(n))
        if n == 6:
            graphs = graphs[:: 97]
        for g in graphs:
            c, qubit = graph_state_circuit(g)
            psi = oracle_statevector(c, "0" * c.n)
            # qubit[v] is the circuit line of vertex v; reorder to sorted vertices
            order = [qubit[v] for v in g.vertices]
            psi = psi.reshape((2,) * c.n).transpose(order).reshape(-1)
            np.testing.assert_allclose(psi, oracle_graph_state(g), atol=1e-12)
            np.testing.assert_allclose(graph_state_vector(g.vertices, g.edges.values()), psi, atol=1e-12)


def test_linearity_in_scenario():
    rng = np.random.default_rng(0)
    for _ in range(10):
        c = random_circuit(rng, 3, 8, 0.1, 0.2, 0.2)
        q = c.outputs[0]
        a, b = random_povm_element(rng), random_povm_element(rng)
        alpha, beta = rng.random(2)
        lhs = oracle_probability(c, "010", MeasurementScenario({q: alpha * a + beta * b}))
        rhs = alpha * oracle_probability(c, "010", MeasurementScenario({q: a})) + beta * oracle_probability(
            c, "010", MeasurementScenario({q: b})
        )
        assert lhs == pytest.approx(rhs, abs=1e-12)
