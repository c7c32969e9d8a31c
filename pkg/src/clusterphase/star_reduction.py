"""Rewriting symmetric Z-operators as products of star operators.

On one sublattice it is convenient to use skewed coordinates ``(a, b)``:
site ``(a, b)`` of a region sits at ``anchor + a*(1, 1) + b*(-1, 1)``. In these
coordinates the stars centred on the other sublattice are exactly the 2x2
plaquettes ``{a-1, a} x {b-1, b}``, and the stripe symmetries run along the
lines ``a = const`` and ``b = const``. The product of all plaquettes in a
rectangle is Z on the rectangle's four corners, which is what the quadruple
cancellation step uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import gf2
from .errors import NotLocal, NotSymmetric, PreconditionError
from .pauli_lattice import PauliOperator, TorusLattice, star, z_operator

Site = tuple[int, int]


@dataclass(frozen=True)
class ZSupport:
    """Tensor product of Pauli Z on a set of torus sites."""

    lattice: TorusLattice
    support: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        lat = self.lattice
        wrapped = frozenset(lat.wrap(x, y) for x, y in self.support)
        if len(wrapped) != len(self.support):
            raise PreconditionError("support lists a site twice")
        object.__setattr__(self, "support", wrapped)

    @classmethod
    def from_operator(cls, lattice: TorusLattice, P: PauliOperator) -> "ZSupport":
        if P.size != lattice.num_sites:
            raise PreconditionError("operator does not live on this lattice")
        if not P.is_z_type:
            raise PreconditionError("operator has an X part")
        return cls(lattice, frozenset(lattice.site(k) for k in np.flatnonzero(P.zbits)))

    def to_operator(self) -> PauliOperator:
        return z_operator(self.lattice, self.support)

    def sublattices(self) -> set[int]:
        return {self.lattice.sublattice(x, y) for x, y in self.support}

    def __len__(self):
        return len(self.support)


@dataclass(frozen=True)
class SkewedRegion:
    """Skewed rectangle of ``h x v`` sites on the anchor's sublattice."""

    lattice: TorusLattice
    anchor: Site
    h: int
    v: int

    def __post_init__(self):
        n = self.lattice.n
        if not (1 <= self.h < n and 1 <= self.v < n):
            raise PreconditionError(f"extensions must satisfy 1 <= h, v < {n}")
        if self.h + self.v - 2 >= n:
            raise PreconditionError("region would overlap itself on the torus")
        object.__setattr__(self, "anchor", self.lattice.wrap(*self.anchor))

    @property
    def parity(self) -> int:
        return self.lattice.sublattice(*self.anchor)

    @property
    def area(self) -> int:
        return self.h * self.v

    @property
    def is_local(self) -> bool:
        """Fits in a skewed square whose width and height ``2(k-1)`` stay below n."""
        return 2 * (max(self.h, self.v) - 1) < self.lattice.n

    def site(self, a: int, b: int) -> Site:
        x0, y0 = self.anchor
        return self.lattice.wrap(x0 + a - b, y0 + a + b)

    def coords(self) -> dict[Site, tuple[int, int]]:
        return {self.site(a, b): (a, b) for a in range(self.h) for b in range(self.v)}

    def is_boundary(self, a: int, b: int) -> bool:
        return a in (0, self.h - 1) or b in (0, self.v - 1)

    def plaquette_center(self, a: int, b: int) -> Site:
        """Star centre of the plaquette ``{a-1, a} x {b-1, b}``."""
        x, y = self.site(a - 1, b)
        return self.lattice.wrap(x + 1, y)


@dataclass(frozen=True)
class StarDecomposition:
    """Star centres whose product is a given Z-operator (each used once)."""

    lattice: TorusLattice
    centers: tuple = ()

    @classmethod
    def from_multiset(cls, lattice: TorusLattice, centers) -> "StarDecomposition":
        odd = {}
        for c in centers:
            c = lattice.wrap(*c)
            odd[c] = not odd.get(c, False)
        return cls(lattice, tuple(sorted(c for c, keep in odd.items() if keep)))

    def to_operator(self) -> PauliOperator:
        P = PauliOperator.identity(self.lattice.num_sites)
        for x, y in self.centers:
            P = P * star(self.lattice, x, y)
        return P

    def indicator(self) -> np.ndarray:
        s = np.zeros(self.lattice.num_sites, dtype=np.uint8)
        for x, y in self.centers:
            s[self.lattice.index(x, y)] = 1
        return s

    def __len__(self):
        return len(self.centers)


def _grid(z: ZSupport) -> np.ndarray:
    lat = z.lattice
    g = np.zeros((lat.length, lat.n), dtype=np.uint8)
    for x, y in z.support:
        g[x, y] = 1
    return g


def symmetry_parities(z: ZSupport) -> np.ndarray:
    """Overlap parity with U_{c,+} (first n entries) and U_{c,-} (last n)."""
    lat = z.lattice
    g = _grid(z)
    xs = np.arange(lat.length)
    out = np.empty(2 * lat.n, dtype=np.uint8)
    for c in range(lat.n):
        out[c] = g[xs, (c + xs) % lat.n].sum() % 2
        out[lat.n + c] = g[xs, (c - xs) % lat.n].sum() % 2
    return out


def is_symmetric(z: ZSupport) -> bool:
    return not symmetry_parities(z).any()


def _apply_plaquette(grid: np.ndarray, a: int, b: int) -> None:
    grid[a - 1:a + 1, b - 1:b + 1] ^= 1


def relocate_to_boundary(z: ZSupport, region: SkewedRegion) -> tuple[ZSupport, StarDecomposition]:
    """Push every Z of ``z`` onto the region's boundary using stars inside it.

    Interior Z's are swept towards the corner ``(0, 0)``: each plaquette
    clears one site and toggles three sites closer to the corner, so the
    survivors lie on the two sides ``a = 0`` and ``b = 0``.
    """
    if len(z.sublattices()) > 1:
        raise PreconditionError("support mixes both sublattices")
    coords = region.coords()
    missing = [s for s in z.support if s not in coords]
    if missing:
        raise PreconditionError(f"sites {sorted(missing)} lie outside the region")
    if not z.support:
        return z, StarDecomposition(z.lattice)
    grid = np.zeros((region.h, region.v), dtype=np.uint8)
    for s in z.support:
        grid[coords[s]] = 1
    centers = []
    for a in range(region.h - 1, 0, -1):
        for b in range(region.v - 1, 0, -1):
            if grid[a, b] and not region.is_boundary(a, b):
                _apply_plaquette(grid, a, b)
                centers.append(region.plaquette_center(a, b))
    out = frozenset(region.site(a, b) for a, b in zip(*np.nonzero(grid)))
    return ZSupport(z.lattice, out), StarDecomposition.from_multiset(z.lattice, centers)


def _candidate_windows(lat: TorusLattice) -> list[int]:
    if lat.N == 1:
        return list(range(-lat.length + 1, 1))
    return [-(lat.length // 2) + 1]


def enclosing_region(lat: TorusLattice, sites) -> SkewedRegion | None:
    """Smallest skewed rectangle (by its longer side) containing one-sublattice ``sites``."""
    sites = list(sites)
    if not sites:
        return None
    best = None
    for ref in sites:
        for lo in _candidate_windows(lat):
            ab = []
            for x, y in sites:
                dy = (y - ref[1]) % lat.n
                dx = (x - ref[0] - lo) % lat.length + lo
                ab.append(((dx + dy) // 2, (dy - dx) // 2))
            a0 = min(a for a, _ in ab)
            b0 = min(b for _, b in ab)
            h = max(a for a, _ in ab) - a0 + 1
            v = max(b for _, b in ab) - b0 + 1
            if h + v - 2 >= lat.n:
                continue
            key = (max(h, v), h * v)
            if best is None or key < best[0]:
                anchor = lat.wrap(ref[0] + a0 - b0, ref[1] + a0 + b0)
                best = (key, SkewedRegion(lat, anchor, h, v))
    return None if best is None else best[1]


def _cancel_quadruples(grid: np.ndarray, region: SkewedRegion, centers: list) -> None:
    limit = 4 * region.area
    for _ in range(limit + 1):
        ones = list(zip(*np.nonzero(grid)))
        if not ones:
            return
        a, b = (int(t) for t in ones[0])
        col = [int(t) for t in np.flatnonzero(grid[a, :]) if t != b]
        row = [int(t) for t in np.flatnonzero(grid[:, b]) if t != a]
        if not col or not row:
            # a line inside the region carries an odd number of Z's
            raise NotLocal("support meets a stripe symmetry only once inside the region")
        b2, a2 = col[0], row[0]
        (alo, ahi), (blo, bhi) = sorted((a, a2)), sorted((b, b2))
        for pa in range(alo + 1, ahi + 1):
            for pb in range(blo + 1, bhi + 1):
                _apply_plaquette(grid, pa, pb)
                centers.append(region.plaquette_center(pa, pb))
    raise RuntimeError("quadruple cancellation exceeded its iteration bound")


def reduce_to_stars(z: ZSupport) -> StarDecomposition:
    """Decompose a symmetric, local Z-operator into star operators.

    Each sublattice is handled separately: its part of the support is
    relocated to the boundary of an enclosing skewed square, and the boundary
    Z's are then removed four at a time (a site, one partner on each of the
    two diagonals through it, and the fourth corner of the rectangle they
    span).
    """
    lat = z.lattice
    if not is_symmetric(z):
        raise NotSymmetric("Z-operator anticommutes with a stripe symmetry")
    centers = []
    for parity in (0, 1):
        part = [s for s in z.support if lat.sublattice(*s) == parity]
        if not part:
            continue
        region = enclosing_region(lat, part)
        if region is None or not region.is_local:
            raise NotLocal("support does not fit into a skewed square with sides of at most n/2 sites")
        moved, used = relocate_to_boundary(ZSupport(lat, frozenset(part)), region)
        centers.extend(used.centers)
        coords = region.coords()
        grid = np.zeros((region.h, region.v), dtype=np.uint8)
        for s in moved.support:
            grid[coords[s]] = 1
        _cancel_quadruples(grid, region, centers)
    return StarDecomposition.from_multiset(lat, centers)


@lru_cache(maxsize=16)
def _star_system(n: int, N: int) -> gf2.LinearSystem:
    return gf2.LinearSystem(star_matrix(TorusLattice(n, N)))


def star_matrix(lat: TorusLattice) -> np.ndarray:
    """Column ``j`` is the support of the star centred at site ``j``."""
    M = np.zeros((lat.num_sites, lat.num_sites), dtype=np.uint8)
    for j, (x, y) in enumerate(lat.sites()):
        for s in lat.neighbors(x, y):
            M[lat.index(*s), j] ^= 1
    return M


def gf2_star_solve(z: ZSupport) -> StarDecomposition | None:
    """Canonical GF(2) solution for ``z`` as a star product, or None."""
    lat = z.lattice
    b = np.zeros(lat.num_sites, dtype=np.uint8)
    for s in z.support:
        b[lat.index(*s)] = 1
    sol = _star_system(lat.n, lat.N).solve(b)
    if sol is None:
        return None
    return StarDecomposition(lat, tuple(lat.site(int(k)) for k in np.flatnonzero(sol)))


def in_star_kernel(lat: TorusLattice, indicator: np.ndarray) -> bool:
    """True if the stars flagged in ``indicator`` multiply to the identity."""
    M = star_matrix(lat).astype(np.int64)
    return not ((M @ (np.asarray(indicator, dtype=np.int64) & 1)) & 1).any()


def random_local_symmetric(lat: TorusLattice, rng: np.random.Generator,
                           side: int | None = None) -> tuple[ZSupport, SkewedRegion]:
    """Random product of plaquettes inside a random legal skewed square."""
    k = side if side is not None else int(rng.integers(2, lat.n // 2 + 1))
    anchor = (int(rng.integers(lat.length)), int(rng.integers(lat.n)))
    region = SkewedRegion(lat, anchor, k, k)
    grid = np.zeros((k, k), dtype=np.uint8)
    for a in range(1, k):
        for b in range(1, k):
            if rng.random() < 0.5:
                _apply_plaquette(grid, a, b)
    sites = frozenset(region.site(a, b) for a, b in zip(*np.nonzero(grid)))
    return ZSupport(lat, sites), region


def half_torus_pair(lat: TorusLattice, x: int = 0, y: int = 0) -> ZSupport:
    """Two-local operator on consecutive intersections of two diagonals."""
    h = lat.n // 2
    return ZSupport(lat, frozenset({lat.wrap(x, y), lat.wrap(x + h, y + h)}))
