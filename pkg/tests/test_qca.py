from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterphase.errors import DomainError, ShapeError
from clusterphase.pauli_lattice import PauliOperator, multiply
from clusterphase.qca import (QcaStep, block_byproduct, c0_dense, conjugate_power, evolve,
                              period_pauli, qca_conjugate, qca_period, ring_z, transition_dense)

from oracles import bits_table

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def dense_step(n, bits=None):
    """Hadamards after ring CZs after Z(bits), built gate by gate."""
    b = bits_table(n)
    cz = np.ones(2 ** n)
    for k in range(n):
        cz *= 1 - 2 * (b[:, k] * b[:, (k + 1) % n])
    if bits is not None:
        cz *= 1 - 2 * ((b @ np.asarray(bits)) % 2)
    return reduce(np.kron, [H] * n) @ np.diag(cz)


def equal_up_to_phase(A, B):
    k = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    return np.allclose(A, B * (A[k] / B[k]), atol=1e-10) and np.isclose(abs(A[k] / B[k]), 1)


def pauli_strategy(n):
    bits = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    return st.builds(lambda x, z, p: PauliOperator(np.array(x), np.array(z), p),
                     bits, bits, st.integers(0, 3))


def test_generator_images():
    step = QcaStep(6)
    assert qca_conjugate(step, PauliOperator.from_label("IIZIII")).to_label() == "IIXIII"
    assert qca_conjugate(step, PauliOperator.from_label("IIXIII")).letters() == "IXZXII"
    assert qca_conjugate(step, PauliOperator.from_label("XIIIII")).letters() == "ZXIIIX"
    assert qca_conjugate(step, PauliOperator.from_label("IIXIII"), inverse=True).letters() == "IIZIII"


@pytest.mark.parametrize("n", [3, 5, 2, 6.0])
def test_bad_ring_sizes(n):
    with pytest.raises(DomainError):
        QcaStep(n)


def test_size_mismatch():
    with pytest.raises(ShapeError):
        qca_conjugate(QcaStep(4), PauliOperator.identity(6))


@pytest.mark.parametrize("n", [4, 6])
def test_dense_step_matches_reference(n):
    assert np.allclose(c0_dense(n), dense_step(n))
    bits = np.arange(n) % 3 == 0
    assert np.allclose(transition_dense(bits.astype(int)), dense_step(n, bits.astype(int)))


@settings(max_examples=40, deadline=None)
@given(pauli_strategy(4))
def test_conjugation_matches_dense_n4(P):
    U = dense_step(4)
    Q = qca_conjugate(QcaStep(4), P)
    assert np.allclose(Q.to_dense(), U @ P.to_dense() @ U.conj().T)
    assert qca_conjugate(QcaStep(4), Q, inverse=True) == P


@settings(max_examples=20, deadline=None)
@given(pauli_strategy(6), pauli_strategy(6))
def test_conjugation_is_a_homomorphism(P, Q):
    step = QcaStep(6)
    lhs = qca_conjugate(step, multiply(P, Q))
    assert lhs == multiply(qca_conjugate(step, P), qca_conjugate(step, Q))


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12, 16, 20])
def test_period_is_ring_size(n):
    assert qca_period(n) == n
    assert period_pauli(QcaStep(n)).is_identity


@pytest.mark.parametrize("n", [4, 6])
def test_dense_power_is_identity(n):
    U = np.linalg.matrix_power(dense_step(n), n)
    assert np.allclose(U, np.eye(2 ** n), atol=1e-10)


def test_evolve_returns_trajectory():
    step = QcaStep(8)
    P = PauliOperator.from_sites(8, z_sites=[0])
    traj = evolve(step, P, 8)
    assert len(traj) == 9 and traj[0] == P and traj[-1] == P
    assert traj[1] == PauliOperator.from_sites(8, x_sites=[0])
    assert conjugate_power(step, traj[3], -3) == P


def test_block_byproduct_trivial_config():
    assert block_byproduct(QcaStep(4), np.zeros((4, 4))).is_identity
    with pytest.raises(ShapeError):
        block_byproduct(QcaStep(4), np.zeros((3, 4)))


@pytest.mark.parametrize("n,seed", [(4, 0), (4, 1), (6, 2), (6, 3)])
def test_block_byproduct_matches_dense_product(n, seed):
    cfg = np.random.default_rng(seed).integers(0, 2, size=(n, n))
    U = np.eye(2 ** n)
    for t in range(n):
        U = dense_step(n, cfg[t]) @ U
    F = block_byproduct(QcaStep(n), cfg)
    assert equal_up_to_phase(U, F.to_dense())


def test_block_byproduct_is_linear_up_to_phase():
    n = 6
    rng = np.random.default_rng(5)
    step = QcaStep(n)
    a, b = rng.integers(0, 2, size=(2, n, n))
    Fa, Fb, Fab = (block_byproduct(step, c) for c in (a, b, a ^ b))
    assert multiply(Fa, Fb).equal_up_to_phase(Fab)


def test_ring_z():
    assert ring_z([1, 0, 1, 0]).to_label() == "ZIZI"
