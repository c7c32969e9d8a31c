"""Symmetric Z-operators on the torus are local products of stars.

A random symmetric operator inside a small skewed square is decomposed into
stars. The two-site operator wrapping half the torus commutes with every
stripe symmetry too, but no local star product produces it.
"""

import numpy as np

from clusterphase.errors import NotLocal
from clusterphase.pauli_lattice import TorusLattice
from clusterphase.star_reduction import (enclosing_region, half_torus_pair, random_local_symmetric,
                                         reduce_to_stars, relocate_to_boundary)


def main():
    lat = TorusLattice(8)
    rng = np.random.Generator(np.random.PCG64(5))
    z, region = random_local_symmetric(lat, rng, side=4)
    print("support:", sorted(z.support))
    dec = reduce_to_stars(z)
    print("stars:  ", list(dec.centers))
    print("product matches:", dec.to_operator() == z.to_operator())

    part = [s for s in z.support if lat.sublattice(*s) == lat.sublattice(*min(z.support))]
    box = enclosing_region(lat, part)
    moved, used = relocate_to_boundary(type(z)(lat, frozenset(part)), box)
    print(f"\none sublattice, pushed to the boundary of a {box.h}x{box.v} square:")
    print("  boundary support:", sorted(moved.support))
    print("  stars used:      ", list(used.centers))

    pair = half_torus_pair(lat, 1, 0)
    print("\nhalf-torus pair:", sorted(pair.support))
    try:
        reduce_to_stars(pair)
    except NotLocal as exc:
        print("rejected:", exc)


if __name__ == "__main__":
    main()
