import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterphase.errors import DomainError, ShapeError
from clusterphase.pauli_lattice import (PauliOperator, TorusLattice, all_symmetries, commutes,
                                        is_symmetric, make_symmetry, multiply, product, star,
                                        symplectic_form, z_operator)
from clusterphase.star_reduction import half_torus_pair


def paulis(size):
    bits = st.lists(st.integers(0, 1), min_size=size, max_size=size)
    return st.builds(lambda x, z, p: PauliOperator(np.array(x), np.array(z), p),
                     bits, bits, st.integers(0, 3))


def sites_of(lat, P, part="x"):
    bits = P.xbits if part == "x" else P.zbits
    return {lat.site(int(k)) for k in np.flatnonzero(bits)}


# lattice ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 5, 2, 0])
def test_lattice_rejects_bad_sizes(n):
    with pytest.raises(DomainError):
        TorusLattice(n)


def test_lattice_geometry():
    lat = TorusLattice(6, 2)
    assert lat.length == 12 and lat.num_sites == 72
    assert all(lat.site(lat.index(x, y)) == (x, y) for x, y in lat.sites())
    assert lat.wrap(-1, 7) == (11, 1)
    assert sorted(lat.neighbors(0, 0)) == [(0, 1), (0, 5), (1, 0), (11, 0)]
    assert lat.sublattice(1, 0) != lat.sublattice(1, 1)


# symmetries and stars -------------------------------------------------------------

def test_make_symmetry_examples():
    lat = TorusLattice(4)
    u = make_symmetry(lat, 0, "+")
    assert sites_of(lat, u.operator) == {(0, 0), (1, 1), (2, 2), (3, 3)}
    assert u.operator.phase == 0 and u.operator.is_x_type
    v = make_symmetry(lat, 1, "-")
    assert sites_of(lat, v.operator) == {(0, 1), (1, 0), (2, 3), (3, 2)}
    with pytest.raises(DomainError):
        make_symmetry(lat, 4, "+")
    with pytest.raises(DomainError):
        make_symmetry(lat, 0, "x")


@pytest.mark.parametrize("n,N", [(4, 1), (6, 1), (6, 3), (8, 2)])
def test_symmetries_wrap_the_torus(n, N):
    lat = TorusLattice(n, N)
    for u in all_symmetries(lat):
        assert u.operator.weight == n * N and u.operator.is_x_type


def test_star_examples():
    lat = TorusLattice(4)
    assert sites_of(lat, star(lat, 1, 1), "z") == {(0, 1), (2, 1), (1, 0), (1, 2)}
    assert sites_of(lat, star(lat, 0, 0), "z") == {(3, 0), (1, 0), (0, 3), (0, 1)}
    assert (star(lat, 1, 1) * star(lat, 1, 1)).is_identity
    with pytest.raises(DomainError):
        star(lat, 4, 0)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_stars_commute_with_symmetries(n):
    lat = TorusLattice(n)
    syms = all_symmetries(lat)
    assert all(commutes(star(lat, x, y), u.operator) == 1 for x, y in lat.sites() for u in syms)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_half_torus_pair_is_symmetric(n):
    lat = TorusLattice(n)
    assert is_symmetric(lat, half_torus_pair(lat, 1, 2).to_operator())


def test_single_z_is_not_symmetric():
    lat = TorusLattice(4)
    assert not is_symmetric(lat, z_operator(lat, [(0, 0)]))


# Pauli algebra --------------------------------------------------------------

def test_multiply_examples():
    X = PauliOperator.from_label("X")
    Z = PauliOperator.from_label("Z")
    XZ = X * Z
    assert XZ.letters() == "Y" and XZ.to_label() == "-iY"
    assert (XZ * (Z * X)).is_identity
    P = PauliOperator.from_label("XYZI")
    assert P * PauliOperator.identity(4) == P
    with pytest.raises(ShapeError):
        multiply(P, PauliOperator.identity(3))


def test_commutes_examples():
    assert commutes(PauliOperator.from_label("X"), PauliOperator.from_label("Z")) == -1
    assert commutes(PauliOperator.from_label("XX"), PauliOperator.from_label("ZZ")) == 1
    with pytest.raises(ShapeError):
        commutes(PauliOperator.identity(2), PauliOperator.identity(3))


def test_label_round_trip_and_dense():
    for lab in ["XIZY", "-iZZ", "iYY", "-XYZ"]:
        P = PauliOperator.from_label(lab)
        assert PauliOperator.from_label(P.to_label()) == P
    Y = np.array([[0, -1j], [1j, 0]])
    assert np.allclose(PauliOperator.from_label("Y").to_dense(), Y)
    with pytest.raises(DomainError):
        PauliOperator.from_label("XQ")


def test_empty_product_needs_size():
    assert product([], size=3).is_identity
    with pytest.raises(ShapeError):
        product([])


@settings(max_examples=60, deadline=None)
@given(paulis(3), paulis(3), paulis(3))
def test_multiplication_matches_dense(P, Q, R):
    assert np.allclose((P * Q).to_dense(), P.to_dense() @ Q.to_dense())
    assert (P * Q) * R == P * (Q * R)


@settings(max_examples=60, deadline=None)
@given(paulis(4), paulis(4))
def test_inverse_and_commutation_sign(P, Q):
    assert (P * P.inverse()).is_identity and (P.inverse() * P).is_identity
    A, B = P.to_dense(), Q.to_dense()
    sign = commutes(P, Q)
    assert np.allclose(A @ B, sign * B @ A)
    assert sign == (-1) ** symplectic_form(P, Q)
