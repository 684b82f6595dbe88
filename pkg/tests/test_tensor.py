import numpy as np
import pytest

from twsim.generators import random_unitary
from twsim.tensor import (
    ContractionBudgetError,
    Tensor,
    TensorNetwork,
    basis_operator,
    contract_network,
    contract_pair,
    density_tensor,
    identity_tensor,
    povm_tensor,
    superop_tensor,
    trace_loops,
    traceout_tensor,
    unitary_tensor,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
ZERO = np.diag([1, 0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def test_basis_is_orthonormal():
    for i in range(4):
        for j in range(4):
            ip = np.trace(basis_operator(i).conj().T @ basis_operator(j))
            assert ip == (1 if i == j else 0)


def test_density_examples():
    np.testing.assert_array_equal(density_tensor(ZERO, [0]).data, [1, 0, 0, 0])
    np.testing.assert_allclose(density_tensor(np.eye(2) / 2, [0]).data, [0.5, 0, 0, 0.5])
    np.testing.assert_allclose(density_tensor(PLUS, [0]).data, [0.5] * 4)


def test_density_shape_error():
    with pytest.raises(ValueError):
        density_tensor(np.eye(2), [0, 1])


def test_identity_is_delta():
    np.testing.assert_array_equal(identity_tensor([0], [1]).data, np.eye(4))
    two = identity_tensor([0, 1], [2, 3]).data.reshape(16, 16)
    np.testing.assert_array_equal(two, np.eye(16))


def test_traceout_and_hadamard_column():
    np.testing.assert_array_equal(traceout_tensor([0]).data, [1, 0, 0, 1])
    h = unitary_tensor(H, [0], [1])
    np.testing.assert_allclose(h.data[0], [0.5] * 4, atol=1e-15)


def test_superop_arity_errors():
    with pytest.raises(ValueError):
        superop_tensor(lambda m: m, 1, 1, [0], [])
    with pytest.raises(ValueError):
        unitary_tensor(np.eye(4), [0], [1])
    with pytest.raises(ValueError):
        povm_tensor(np.eye(4), 0)
    with pytest.raises(ValueError):
        superop_tensor(lambda m: np.eye(4), 1, 1, [0], [1])


def test_tensor_shape_check_and_scalar():
    with pytest.raises(ValueError):
        Tensor((0, 1), np.zeros(4))
    assert Tensor((), np.array(2.5)).value() == 2.5
    with pytest.raises(ValueError):
        Tensor((0,), np.zeros(4)).value()


def test_contract_pair_examples():
    assert contract_pair(density_tensor(ZERO, [0]), traceout_tensor([0])).value() == 1
    rng = np.random.default_rng(0)
    rho = random_matrix(rng, 2)
    out = contract_pair(density_tensor(rho, [0]), identity_tensor([0], [1]))
    np.testing.assert_allclose(out.data, density_tensor(rho, [1]).data)
    plus = contract_pair(density_tensor(ZERO, [0]), unitary_tensor(H, [0], [1]))
    np.testing.assert_allclose(plus.data, [0.5] * 4, atol=1e-15)
    with pytest.raises(ValueError):
        contract_pair(density_tensor(ZERO, [0]), density_tensor(ZERO, [1]))


def test_contract_pair_sums_parallel_wires_at_once():
    rng = np.random.default_rng(1)
    rho = random_matrix(rng, 4)
    u = random_unitary(rng, 4)
    out = contract_pair(density_tensor(rho, [0, 1]), unitary_tensor(u, [0, 1], [2, 3]))
    assert out.indices == (2, 3)
    np.testing.assert_allclose(out.data, density_tensor(u @ rho @ u.conj().T, [2, 3]).data, atol=1e-12)


def test_linearity():
    rng = np.random.default_rng(2)
    for d, wires in ((2, [0]), (4, [0, 1])):
        r1, r2 = random_matrix(rng, d), random_matrix(rng, d)
        a, b = complex(rng.normal(), rng.normal()), complex(rng.normal(), rng.normal())
        lhs = density_tensor(a * r1 + b * r2, wires).data
        rhs = a * density_tensor(r1, wires).data + b * density_tensor(r2, wires).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_reconstruction():
    rng = np.random.default_rng(3)
    for a in (1, 2):
        rho = random_matrix(rng, 2**a)
        t = density_tensor(rho, range(a)).data.reshape(-1)
        back = np.zeros_like(rho)
        for flat, coeff in enumerate(t):
            op = np.ones((1, 1), dtype=complex)
            for k in np.unravel_index(flat, (4,) * a):
                op = np.kron(op, basis_operator(int(k)))
            back += coeff * op
        np.testing.assert_allclose(back, rho, atol=1e-12)


def test_composition():
    rng = np.random.default_rng(4)
    for a in (1, 2):
        u, v = random_unitary(rng, 2**a), random_unitary(rng, 2**a)
        ins = list(range(a))
        mid = list(range(a, 2 * a))
        outs = list(range(2 * a, 3 * a))
        chained = contract_pair(unitary_tensor(u, ins, mid), unitary_tensor(v, mid, outs))
        np.testing.assert_allclose(chained.data, unitary_tensor(v @ u, ins, outs).data, atol=1e-12)


def test_trace_loops():
    t = identity_tensor([5], [5])
    assert trace_loops(t).value() == pytest.approx(4)


def test_network_rejects_triple_wire():
    with pytest.raises(ValueError):
        TensorNetwork((density_tensor(ZERO, [0]), traceout_tensor([0]), traceout_tensor([0])))


def test_contract_network_examples():
    single = TensorNetwork((Tensor((), np.array(0.3)),))
    assert contract_network(single, []).tensor.value() == pytest.approx(0.3)
    net = TensorNetwork(
        (density_tensor(ZERO, [0]), identity_tensor([0], [1]), povm_tensor(ZERO, 1))
    )
    assert contract_network(net, [0, 1]).tensor.value() == pytest.approx(1.0)


def test_contract_network_errors():
    net = TensorNetwork((density_tensor(ZERO, [0]), identity_tensor([0], [1]), povm_tensor(ZERO, 1)))
    with pytest.raises(ValueError, match="unknown"):
        contract_network(net, [0, 1, 7])
    with pytest.raises(ValueError, match="cover"):
        contract_network(net, [0])
    with pytest.raises(ContractionBudgetError, match="step"):
        contract_network(net, [0, 1], max_rank=0)


def test_open_wires_survive():
    net = TensorNetwork((density_tensor(ZERO, [0]), unitary_tensor(H, [0], [1])))
    out = contract_network(net, [0]).tensor
    assert out.indices == (1,)
    np.testing.assert_allclose(out.data, [0.5] * 4, atol=1e-15)


def _random_chain_network(rng, n_gates):
    """Random unitary/identity gates on two qubits closed by random POVMs."""
    wires = [0, 1]
    tensors = [density_tensor(PLUS, [0]), density_tensor(ZERO, [1])]
    nxt = 2
    for _ in range(n_gates):
        if rng.random() < 0.5:
            ins = list(wires)
            outs = [nxt, nxt + 1]
            nxt += 2
            tensors.append(unitary_tensor(random_unitary(rng, 4), ins, outs))
            wires = outs
        else:
            q = int(rng.integers(2))
            tensors.append(unitary_tensor(random_unitary(rng, 2), [wires[q]], [nxt]))
            wires[q] = nxt
            nxt += 1
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    tensors.append(povm_tensor(m @ m.conj().T, wires[0]))
    tensors.append(traceout_tensor([wires[1]]))
    return TensorNetwork(tuple(tensors))


def test_ordering_invariance():
    rng = np.random.default_rng(5)
    for _ in range(15):
        net = _random_chain_network(rng, int(rng.integers(1, 7)))
        wires = list(net.internal_wires)
        ref = contract_network(net, wires).tensor.value()
        for _ in range(10):
            order = list(rng.permutation(wires))
            assert abs(contract_network(net, order).tensor.value() - ref) <= 1e-12
