import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twsim.circuit import (
    PROJ0,
    PROJ1,
    Circuit,
    CircuitError,
    Gate,
    MeasurementScenario,
    build_network,
    circuit_graph,
    local_interaction_plan,
    named,
    parse_circuit,
    parse_scenario,
    serialize_circuit,
    serialize_scenario,
    simulate_probability,
)
from twsim.generators import nearest_neighbor_circuit, random_bits, random_channel_superop, random_circuit
from twsim.oracle import oracle_probability

BELL = "qubits 2\nh 0\ncnot 0 1\n"


def bell():
    return parse_circuit(BELL)


def test_parse_identity():
    c = parse_circuit("qubits 1\n")
    assert c.n == 1 and c.m == 1 and c.size == 0


def test_parse_bell():
    c = bell()
    assert [g.name for g in c.gates] == ["h", "cnot"]
    assert c.gates[1].inputs == (0, 1)


def test_parse_errors_name_line():
    with pytest.raises(CircuitError, match="line 2"):
        parse_circuit("qubits 2\nh 7\n")
    with pytest.raises(CircuitError, match="line 2.*unknown gate"):
        parse_circuit("qubits 2\nfoo 0\n")
    with pytest.raises(CircuitError, match="line 2"):
        parse_circuit("qubits 2\ncnot 0\n")
    with pytest.raises(CircuitError, match="line 2.*matrix"):
        parse_circuit("qubits 1\nu 0 [1 0 zz 1]\n")
    with pytest.raises(CircuitError, match="line 3.*no longer alive"):
        parse_circuit("qubits 2\ntraceout 0\nh 0\n")
    with pytest.raises(CircuitError, match="header"):
        parse_circuit("h 0\n")
    with pytest.raises(CircuitError, match="line 1"):
        parse_circuit("qubits\n")
    with pytest.raises(CircuitError, match="line 2.*not unitary"):
        parse_circuit("qubits 1\nu 0 [1 1 1 1]\n")


def test_no_outputs_rejected():
    with pytest.raises(CircuitError):
        Circuit(1, (named("traceout", 0),))


def test_round_trip_examples():
    rng = np.random.default_rng(0)
    for _ in range(30):
        c = random_circuit(rng, int(rng.integers(1, 5)), int(rng.integers(0, 10)), 0.2, 0.2, 0.3)
        back = parse_circuit(serialize_circuit(c))
        assert back.n == c.n
        assert [(g.name, g.inputs, g.outputs) for g in back.gates] == [
            (g.name, g.inputs, g.outputs) for g in c.gates
        ]
        for a, b in zip(back.gates, c.gates):
            if a.data is not None:
                np.testing.assert_array_equal(a.data, b.data)
        assert serialize_circuit(back) == serialize_circuit(c)


def test_superop_syntax():
    data = " ".join(str(x) for x in np.eye(4).ravel())
    c = parse_circuit(f"qubits 1\nsuperop 0 -> 0 [{data}]\n")
    assert c.gates[0].name == "superop"
    assert simulate_probability(c, "1", MeasurementScenario({0: PROJ1})).probability == pytest.approx(1)


def test_scenario_round_trip_and_errors():
    tau = MeasurementScenario({0: PROJ0, 2: np.eye(2) / 2})
    back = parse_scenario(serialize_scenario(tau))
    assert set(back.elements) == {0, 2}
    np.testing.assert_array_equal(back.element(2), np.eye(2) / 2)
    np.testing.assert_array_equal(back.element(1), np.eye(2))
    with pytest.raises(CircuitError, match="line 1"):
        parse_scenario("m 0 1 0 0\n")
    with pytest.raises(CircuitError, match="positive"):
        parse_scenario("m 0 -1 0 0 0\n")
    with pytest.raises(CircuitError, match="Hermitian"):
        MeasurementScenario({0: np.array([[1, 1], [0, 1]])})


def test_graph_examples():
    g = circuit_graph(parse_circuit("qubits 1\n"))
    assert g.num_vertices == 2 and g.num_edges == 1
    g = circuit_graph(bell())
    assert g.num_vertices == 6
    # wire segments: in0-h, h-cnot, in1-cnot, cnot-out0, cnot-out1
    assert g.num_edges == 5
    chain = Circuit(1, tuple(named("h", 0) for _ in range(4)))
    g = circuit_graph(chain)
    assert g.num_vertices == 6 and g.num_edges == 5 and g.max_degree() == 2


def test_graph_vertex_count():
    rng = np.random.default_rng(1)
    for _ in range(20):
        c = random_circuit(rng, 4, 8, p_traceout=0.2)
        assert circuit_graph(c).num_vertices == c.size + c.n + c.m


def test_network_examples():
    net = build_network(parse_circuit("qubits 1\n"), "0", MeasurementScenario({0: PROJ0}))
    assert len(net.tensors) == 2 and all(t.rank == 1 for t in net.tensors)
    assert not net.open_wires
    net = build_network(bell(), "00", MeasurementScenario.from_bits([0, 1], "00"))
    assert len(net.tensors) == 6 and not net.open_wires


def test_unmeasured_gets_identity():
    net = build_network(bell(), "00", MeasurementScenario({0: PROJ0}))
    np.testing.assert_array_equal(net.tensors[-1].data, [1, 0, 0, 1])


def test_network_errors():
    with pytest.raises(CircuitError):
        build_network(bell(), "0")
    with pytest.raises(CircuitError):
        build_network(bell(), "00", MeasurementScenario({3: PROJ0}))


def test_simulate_examples():
    r = simulate_probability(parse_circuit("qubits 1\n"), "0", MeasurementScenario({0: PROJ0}))
    assert r.probability == pytest.approx(1.0)
    r = simulate_probability(bell(), "00", MeasurementScenario.from_bits([0, 1], "00"))
    assert abs(r.probability - 0.5) <= 1e-12
    r = simulate_probability(bell(), "00", MeasurementScenario.from_bits([0, 1], "01"))
    assert abs(r.raw) <= 1e-12


def test_clamped_and_raw_kept():
    # an unphysical superop can push the raw value outside [0, 1]
    c = Circuit(1, (Gate("superop", (0,), (0,), tuple(2 * np.eye(4).ravel())),))
    r = simulate_probability(c, "0")
    assert r.raw.real == pytest.approx(2)
    assert r.probability == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["minfill", "mindeg", "exact"]))
def test_oracle_equivalence(seed, strategy):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    c = random_circuit(rng, n, int(rng.integers(0, 13)), 0.15, 0.15, 0.2)
    x = random_bits(rng, n)
    bits = random_bits(rng, c.m)
    tau = MeasurementScenario.from_bits(c.outputs, bits)
    r = simulate_probability(c, x, tau, strategy=strategy, seed=seed % 7)
    assert abs(r.raw - oracle_probability(c, x, tau)) <= 1e-9
    assert abs(r.raw.imag) <= 1e-9


def test_completeness():
    rng = np.random.default_rng(2)
    for _ in range(10):
        c = random_circuit(rng, 3, 8, 0.1, 0.2, 0.2)
        x = random_bits(rng, 3)
        total = sum(
            simulate_probability(c, x, MeasurementScenario.from_bits(c.outputs, bits)).raw.real
            for bits in itertools.product((0, 1), repeat=c.m)
        )
        assert abs(total - 1) <= 1e-9


def test_achieved_rank_within_twice_cc():
    rng = np.random.default_rng(3)
    for _ in range(30):
        c = random_circuit(rng, 5, 12, 0.1, 0.1, 0.2)
        r = simulate_probability(c, random_bits(rng, 5))
        assert r.max_rank <= 2 * r.plan.predicted_cc + 2


def test_superop_channel_matches_oracle():
    rng = np.random.default_rng(4)
    data = tuple(random_channel_superop(rng, 1, 1).ravel())
    c = Circuit(2, (named("h", 0), Gate("superop", (0,), (0,), data), named("cnot", 0, 1)))
    tau = MeasurementScenario.from_bits([0, 1], "10")
    r = simulate_probability(c, "00", tau)
    assert abs(r.raw - oracle_probability(c, "00", tau)) <= 1e-12


def test_local_interaction_plan_matches_oracle():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(2, 8))
        c = nearest_neighbor_circuit(rng, n, int(rng.integers(1, 5)))
        plan, full = local_interaction_plan(c)
        assert plan.strategy == "logdepth"
        assert plan.predicted_cc <= plan.decomposition_width
        x = random_bits(rng, n)
        tau = MeasurementScenario.from_bits(c.outputs, random_bits(rng, c.m))
        r = simulate_probability(c, x, tau, plan=plan)
        assert abs(r.raw - oracle_probability(c, x, tau)) <= 1e-9
