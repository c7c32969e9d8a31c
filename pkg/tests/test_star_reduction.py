import itertools

import numpy as np
import pytest

from clusterphase.errors import NotLocal, NotSymmetric, PreconditionError
from clusterphase.pauli_lattice import TorusLattice, star
from clusterphase.star_reduction import (SkewedRegion, StarDecomposition, ZSupport,
                                         enclosing_region, half_torus_pair, gf2_star_solve,
                                         in_star_kernel, is_symmetric, random_local_symmetric,
                                         reduce_to_stars, relocate_to_boundary)


def support_of(lat, P):
    return ZSupport.from_operator(lat, P)


def check_decomposition(z):
    dec = reduce_to_stars(z)
    assert dec.to_operator() == z.to_operator()
    ref = gf2_star_solve(z)
    assert ref is not None
    assert in_star_kernel(z.lattice, dec.indicator() ^ ref.indicator())
    return dec


def test_star_support_reduces_to_itself():
    lat = TorusLattice(6)
    z = support_of(lat, star(lat, 2, 3))
    assert reduce_to_stars(z).centers == ((2, 3),)
    assert len(gf2_star_solve(z)) == 1


def test_two_stars():
    lat = TorusLattice(8)
    z = support_of(lat, star(lat, 1, 1) * star(lat, 2, 2))
    check_decomposition(z)


def test_mixed_sublattices_are_split():
    lat = TorusLattice(8)
    z = support_of(lat, star(lat, 3, 3) * star(lat, 3, 4))
    assert len(z.sublattices()) == 2
    check_decomposition(z)


def test_empty_support():
    lat = TorusLattice(4)
    z = ZSupport(lat, frozenset())
    assert len(reduce_to_stars(z)) == 0
    region = SkewedRegion(lat, (0, 0), 2, 2)
    moved, used = relocate_to_boundary(z, region)
    assert not moved.support and len(used) == 0


def test_boundary_support_is_left_alone():
    lat = TorusLattice(8)
    region = SkewedRegion(lat, (0, 0), 4, 4)
    z = ZSupport(lat, frozenset({region.site(0, 2), region.site(3, 0)}))
    moved, used = relocate_to_boundary(z, region)
    assert moved == z and len(used) == 0


def test_interior_site_is_pushed_to_the_boundary():
    lat = TorusLattice(8)
    region = SkewedRegion(lat, (2, 1), 4, 4)
    z = ZSupport(lat, frozenset({region.site(2, 2)}))
    moved, used = relocate_to_boundary(z, region)
    coords = region.coords()
    assert len(used) > 0 and moved.support
    assert all(region.is_boundary(*coords[s]) for s in moved.support)
    assert (used.to_operator() * moved.to_operator()) == z.to_operator()


def test_relocation_preconditions():
    lat = TorusLattice(8)
    region = SkewedRegion(lat, (0, 0), 2, 2)
    with pytest.raises(PreconditionError):
        relocate_to_boundary(ZSupport(lat, frozenset({(4, 4)})), region)
    with pytest.raises(PreconditionError):
        relocate_to_boundary(ZSupport(lat, frozenset({(0, 0), (0, 1)})), region)
    with pytest.raises(PreconditionError):
        SkewedRegion(lat, (0, 0), 8, 2)


def test_single_site_is_unsolvable_and_not_symmetric():
    lat = TorusLattice(4)
    z = ZSupport(lat, frozenset({(1, 2)}))
    assert not is_symmetric(z)
    assert gf2_star_solve(z) is None
    with pytest.raises(NotSymmetric):
        reduce_to_stars(z)


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_half_torus_pair_is_not_local(n):
    lat = TorusLattice(n)
    z = half_torus_pair(lat, 1, 0)
    assert is_symmetric(z)
    assert gf2_star_solve(z) is None
    with pytest.raises(NotLocal):
        reduce_to_stars(z)


@pytest.mark.parametrize("n", [4, 6])
@pytest.mark.parametrize("anchor", [(0, 0), (1, 0)])
def test_exhaustive_completeness(n, anchor):
    """Every symmetric Z-operator in a side-n/2 skewed square is a star product."""
    lat = TorusLattice(n)
    k = n // 2
    region = SkewedRegion(lat, anchor, k, k)
    sites = [region.site(a, b) for a in range(k) for b in range(k)]
    count = 0
    for mask in itertools.product((0, 1), repeat=len(sites)):
        z = ZSupport(lat, frozenset(s for s, m in zip(sites, mask) if m))
        if not is_symmetric(z):
            continue
        count += 1
        assert reduce_to_stars(z).to_operator() == z.to_operator()
    assert count == 2 ** ((k - 1) ** 2)


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_rejection_sampled_symmetric_operators(n):
    """Symmetric operators found by rejection sampling, not built from stars."""
    lat = TorusLattice(n, 2)
    rng = np.random.default_rng(n)
    found = 0
    while found < 10:
        k = int(rng.integers(2, min(4, n // 2) + 1))
        region = SkewedRegion(lat, (int(rng.integers(lat.length)), int(rng.integers(n))), k, k)
        sites = [region.site(a, b) for a in range(k) for b in range(k)]
        pick = rng.random(len(sites)) < 0.5
        z = ZSupport(lat, frozenset(s for s, m in zip(sites, pick) if m))
        if not z.support or not is_symmetric(z):
            continue
        found += 1
        check_decomposition(z)


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_random_local_symmetric(n):
    lat = TorusLattice(n, 2)
    rng = np.random.default_rng(100 + n)
    for _ in range(15):
        z, region = random_local_symmetric(lat, rng)
        assert is_symmetric(z) and region.is_local
        check_decomposition(z)


def test_enclosing_region_contains_sites():
    lat = TorusLattice(8)
    sites = [(0, 0), (1, 1), (2, 0)]
    region = enclosing_region(lat, sites)
    assert set(sites) <= set(region.coords())


def test_decomposition_from_multiset_cancels_pairs():
    lat = TorusLattice(4)
    dec = StarDecomposition.from_multiset(lat, [(0, 0), (1, 1), (0, 0), (4, 1)])
    assert sorted(dec.centers) == [(0, 1), (1, 1)]
    assert dec.to_operator() == star(lat, 0, 1) * star(lat, 1, 1)
