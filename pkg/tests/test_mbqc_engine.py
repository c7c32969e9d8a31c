import math
import warnings

import numpy as np
import pytest

from clusterphase import qca
from clusterphase.errors import DomainError, NotInjective, ShapeError
from clusterphase.mbqc_engine import (BlockChannel, Hadamard01, MeasurementPattern, Rotation, SymX,
                                      Tilted, VirtualState, apply_pattern, block_unitary_dense,
                                      born_probabilities, calibrate, column_generator,
                                      compute_nu, expected_rotation, fixed_point, oblivious_wire,
                                      pauli_membership, run_pattern_channel, trace_norm)
from clusterphase.pauli_lattice import PauliOperator, commutes
from clusterphase.tensors import JunkSpec, RingTensor, build_perturbed_ring_tensors

from oracles import cluster_block, measure_leading, tilted_bra, x_bra

N = 4


def resource(family="xx-filter", theta=0.1):
    return build_perturbed_ring_tensors(N, JunkSpec(family, theta, N))


def random_state(rng, dim=2 ** N):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def single_slice_deviation(rt, cal, dalpha, psi):
    pat = MeasurementPattern(N, {(1, 1): Tilted(dalpha, cal.delta)})
    st = VirtualState.product(rt, psi, cal.rho_fix)
    st = oblivious_wire(run_pattern_channel(st, pat), max(cal.wire_blocks(N), 4))
    U = expected_rotation(dalpha, cal.delta, 1, 1, cal.nu, N).unitary()
    ideal = U @ np.outer(psi, psi.conj()) @ U.conj().T
    return trace_norm(st.logical() - ideal) / 2


# bases and patterns ---------------------------------------------------------

@pytest.mark.parametrize("basis", [SymX(), Tilted(0.05, 0.3), Tilted(-0.08, -1.2), Hadamard01()])
def test_bases_are_orthonormal(basis):
    rows = np.array([[c[0], c[1]] for c in basis.coefficients()])
    assert np.allclose(rows @ rows.conj().T, np.eye(2))


def test_pattern_validation():
    with pytest.raises(DomainError):
        MeasurementPattern(N, {(0, 0): Tilted(0.01)})
    with pytest.raises(DomainError):
        MeasurementPattern(N, {(1, 0): Tilted(0.01), (2, 0): Tilted(0.01)})
    with pytest.raises(DomainError):
        MeasurementPattern(N, {(1, 0): Hadamard01(), (2, 0): Hadamard01()}, "init")
    pat = MeasurementPattern.init(N, N)
    assert set(pat.column(N)) == set(range(N)) and not pat.column(1)
    assert pat.to_dict()["kind"] == "init"
    assert MeasurementPattern.wire(N).special == {}


# fixed point and calibration --------------------------------------------------

def test_trivial_junk_calibration():
    cal = calibrate(resource(theta=0.0))
    assert abs(cal.nu - 0.5) < 1e-12 and cal.lambda1 == 0 and cal.xi == 0
    assert abs(cal.delta + np.pi / 2) < 1e-12


@pytest.mark.parametrize("family,theta,nu,lam,xi", [
    ("xx-diagonal", 0.1, 0.4613, 0.0, 0.0),
    ("xx-diagonal", 0.3, 0.2320, 0.0, 0.0),
    ("xx-filter", 0.1, 0.4542, 0.0274, 1.11),
    ("xx-filter", 0.3, 0.1176, 0.807, 18.7),
])
def test_calibration_values(family, theta, nu, lam, xi):
    cal = calibrate(resource(family, theta))
    assert abs(cal.nu_abs - nu) < 1e-4
    assert abs(cal.lambda1 - lam) < 1e-3
    assert abs(cal.xi - xi) < 0.1


@pytest.mark.parametrize("family,theta", [("xx-diagonal", 0.2), ("xx-filter", 0.3)])
def test_nu_is_translation_invariant(family, theta):
    rt = resource(family, theta)
    nus = [compute_nu(rt, k) for k in range(N)]
    assert max(abs(v - nus[0]) for v in nus) < 1e-9


def test_fixed_point_is_a_density_matrix():
    rt = resource("xx-filter", 0.3)
    ch = BlockChannel(rt)
    rho, lam, _ = fixed_point(ch)
    assert abs(np.trace(rho) - 1) < 1e-12 and np.linalg.eigvalsh(rho).min() > -1e-12
    assert np.allclose(ch.apply(rho), rho, atol=1e-12)


def test_channel_contracts_towards_fixed_point():
    rt = resource("xx-filter", 0.3)
    ch = BlockChannel(rt)
    rho_fix, lam, _ = fixed_point(ch)
    rng = np.random.default_rng(0)
    v = random_state(rng, rt.d)
    rho = np.outer(v, v.conj())
    dists = [trace_norm(ch.apply(rho, k) - rho_fix) for k in range(0, 40, 8)]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 2 * lam ** 32


def test_non_injective_resource_is_rejected():
    junk = np.array([np.eye(2) / 4] * 16, dtype=complex)
    with pytest.raises(NotInjective):
        calibrate(RingTensor(N, junk))


# logical action ---------------------------------------------------------------

def test_column_generators():
    assert column_generator(N, 1, 2).to_label() == "IIZI"
    assert column_generator(N, 2, 1).letters() == "ZXZI"
    assert column_generator(N, 3, 1).letters() == "XZXI"
    assert column_generator(N, N, 1).letters() == "IXII"
    with pytest.raises(DomainError):
        column_generator(N, 0, 1)


def test_expected_rotation_checks():
    rot = expected_rotation(0.02, -np.pi / 2, 1, 0, 0.5, N)
    assert abs(rot.angle - 0.02) < 1e-15
    with pytest.raises(DomainError):
        expected_rotation(0.2, 0.0, 1, 0, 0.5, N)
    with pytest.warns(UserWarning):
        expected_rotation(0.02, 0.0, 3, 0, 0.5, N)
    U = Rotation(PauliOperator.from_label("ZI"), 0.3).unitary()
    assert np.allclose(U @ U.conj().T, np.eye(4))


@pytest.mark.parametrize("seed", range(3))
def test_block_unitary_is_the_tracked_byproduct(seed):
    cfg = np.random.default_rng(seed).integers(0, 2, size=(N, N))
    U = block_unitary_dense(cfg)
    assert pauli_membership(U, qca.block_byproduct(qca.QcaStep(N), cfg))
    assert not pauli_membership(U, PauliOperator.from_label("XIII") *
                                qca.block_byproduct(qca.QcaStep(N), cfg))


@pytest.mark.parametrize("m,l", [(1, 0), (2, 1), (3, 2), (N, 3)])
def test_tilted_block_matches_physical_oracle(m, l):
    """Measure a dense cluster block qubit by qubit and compare with the rotation."""
    rng = np.random.default_rng(10 * m + l)
    step = qca.QcaStep(N)
    psi = random_state(rng)
    dalpha, delta = 0.07, -np.pi / 2
    for _ in range(3):
        outs = rng.integers(0, 2, (N, N))
        st = cluster_block(psi, N, N)
        for t in range(N):
            for k in range(N):
                bra = tilted_bra(outs[t, k], dalpha, delta) if (t + 1, k) == (m, l) \
                    else x_bra(outs[t, k])
                st = measure_leading(st, bra)
        st /= np.linalg.norm(st)
        frame = PauliOperator.identity(N)
        for t in range(m - 1):
            frame = qca.qca_conjugate(step, qca.ring_z(outs[t]) * frame)
        sign = commutes(frame, PauliOperator.from_sites(N, z_sites=[l]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rot = expected_rotation(dalpha, delta, m, l, 0.5, N)
        U = Rotation(rot.generator, sign * math.copysign(math.atan(dalpha), rot.angle)).unitary()
        F = qca.block_byproduct(step, outs).to_dense()
        assert abs(np.vdot(F @ U @ psi, st)) > 1 - 1e-10


@pytest.mark.parametrize("m,l", [(1, 0), (2, 1), (N, 1)])
def test_adaptive_trajectory_matches_physical_oracle(m, l):
    rt = resource(theta=0.0)
    cal = calibrate(rt)
    rng = np.random.default_rng(m + 7 * l)
    psi = random_state(rng)
    F0 = PauliOperator.from_label("ZXYI")
    pat = MeasurementPattern(N, {(m, l): Tilted(0.07, cal.delta)})
    st = VirtualState.product(rt, psi, cal.rho_fix)
    st.frame = F0
    outs, new = apply_pattern(st, pat, seed=int(rng.integers(2 ** 31)))
    sign = new.records[-1]["tilt_signs"][(m, l)]
    phys = cluster_block(F0.to_dense() @ psi, N, N)
    for t in range(N):
        for k in range(N):
            bra = tilted_bra(outs[t, k], sign * 0.07, cal.delta) if (t + 1, k) == (m, l) \
                else x_bra(outs[t, k])
            phys = measure_leading(phys, bra)
    phys /= np.linalg.norm(phys)
    Fd = new.frame.to_dense()
    assert abs(np.vdot(phys, Fd @ new.logical() @ Fd.conj().T @ phys)) > 1 - 1e-10


def test_init_in_column_one_measures_z():
    rt = resource(theta=0.0)
    cal = calibrate(rt)
    basis = np.zeros(16)
    basis[0b0101] = 1
    for seed in range(3):
        st = VirtualState.product(rt, basis, cal.rho_fix)
        outs, new = apply_pattern(st, MeasurementPattern.init(N, 1), seed=seed)
        assert list(outs[0]) == [0, 1, 0, 1]


def test_init_in_last_column_measures_x():
    rt = resource(theta=0.0)
    cal = calibrate(rt)
    plus = np.ones(16) / 4
    for seed in range(3):
        st = VirtualState.product(rt, plus, cal.rho_fix)
        _, new = apply_pattern(st, MeasurementPattern.init(N, N), seed=seed)
        assert not new.records[-1]["frame_outcomes"][N - 1].any()


@pytest.mark.parametrize("specials", [{}, {0: Tilted(0.05, 0.4)}, {2: Hadamard01()},
                                      {l: Hadamard01() for l in range(N)}])
def test_born_probabilities_normalised(specials):
    rt = resource("xx-filter", 0.2)
    cal = calibrate(rt)
    st = VirtualState.product(rt, random_state(np.random.default_rng(1)), cal.rho_fix)
    p = born_probabilities(st, specials)
    assert p.min() >= -1e-14 and abs(p.sum() - 1) < 1e-10


def test_shape_checks():
    rt = resource(theta=0.0)
    with pytest.raises(ShapeError):
        VirtualState.product(rt, np.ones(8), np.eye(1))
    st = VirtualState.product(rt, np.ones(16) / 4, np.eye(1))
    with pytest.raises(ShapeError):
        run_pattern_channel(st, MeasurementPattern.wire(6))
    with pytest.raises(DomainError):
        oblivious_wire(st, 0)


def test_wire_preserves_logical_state():
    rt = resource("xx-filter", 0.3)
    cal = calibrate(rt)
    psi = random_state(np.random.default_rng(2))
    st = oblivious_wire(VirtualState.product(rt, psi, cal.rho_fix), 3)
    assert np.allclose(st.logical(), np.outer(psi, psi.conj()), atol=1e-12)
    assert np.allclose(st.junk(), cal.rho_fix, atol=1e-12)


def test_trajectories_average_to_channel():
    rt = resource("xx-filter", 0.2)
    cal = calibrate(rt)
    psi = random_state(np.random.default_rng(3))
    pat = MeasurementPattern(N, {(2, 1): Tilted(0.05, cal.delta)})
    st = VirtualState.product(rt, psi, cal.rho_fix)
    ref = run_pattern_channel(st, pat).logical()
    rng = np.random.Generator(np.random.PCG64(0))
    acc = np.zeros_like(ref)
    samples = 300
    for _ in range(samples):
        _, out = apply_pattern(st, pat, rng)
        acc += out.logical()
    assert np.max(np.abs(acc / samples - ref)) < 0.03


def test_trajectory_is_reproducible():
    rt = resource("xx-filter", 0.1)
    cal = calibrate(rt)
    st = VirtualState.product(rt, np.ones(16) / 4, cal.rho_fix)
    pat = MeasurementPattern(N, {(1, 0): Tilted(0.05, cal.delta)})
    a, sa = apply_pattern(st, pat, seed=42)
    b, sb = apply_pattern(st, pat, seed=42)
    assert np.array_equal(a, b) and np.allclose(sa.rho, sb.rho)


@pytest.mark.parametrize("family,theta", [("xx-diagonal", 0.1), ("xx-filter", 0.1),
                                          ("xx-filter", 0.3)])
def test_single_slice_error_is_second_order(family, theta):
    rt = resource(family, theta)
    cal = calibrate(rt)
    psi = random_state(np.random.default_rng(0))
    das = np.array([0.01, 0.02, 0.04, 0.08])
    dev = np.array([single_slice_deviation(rt, cal, a, psi) for a in das])
    slope = np.polyfit(np.log(das), np.log(dev), 1)[0]
    assert 1.9 < slope < 2.1
    assert np.all(dev <= (1 - 4 * cal.nu_abs ** 2) * das ** 2 * 1.05)


def test_single_slice_error_is_third_order_without_junk():
    rt = resource(theta=0.0)
    cal = calibrate(rt)
    psi = random_state(np.random.default_rng(0))
    das = np.array([0.01, 0.02, 0.04])
    dev = np.array([single_slice_deviation(rt, cal, a, psi) for a in das])
    assert np.polyfit(np.log(das), np.log(dev), 1)[0] > 2.8
