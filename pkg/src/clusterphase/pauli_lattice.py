"""Torus geometry, Pauli operators in symplectic form, stripe symmetries and stars.

A Pauli operator is stored as ``i**phase * X(xbits) Z(zbits)`` where ``X(v)``
(``Z(v)``) is the tensor product of X (Z) over the sites with ``v == 1``.
All X factors are written to the left of all Z factors, so products only pick
up signs from moving a Z part past an X part.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, ShapeError

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen_bits(bits, size=None) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8) & 1
    if arr.ndim != 1:
        raise ShapeError("bit vectors must be one-dimensional")
    if size is not None and arr.shape[0] != size:
        raise ShapeError(f"expected {size} bits, got {arr.shape[0]}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TorusLattice:
    """Square lattice on a torus of circumferences ``n`` (y) and ``n*N`` (x).

    Sites are pairs ``(x, y)`` with ``x`` in ``Z_{nN}`` and ``y`` in ``Z_n``;
    the linear index is ``k = x * n + y``.
    """

    n: int
    N: int = 1

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 4 or self.n % 2:
            raise DomainError(f"n must be an even integer >= 4, got {self.n!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")

    @property
    def length(self) -> int:
        return self.n * self.N

    @property
    def num_sites(self) -> int:
        return self.n * self.n * self.N

    def wrap(self, x: int, y: int) -> tuple[int, int]:
        return int(x) % self.length, int(y) % self.n

    def index(self, x: int, y: int) -> int:
        x, y = self.wrap(x, y)
        return x * self.n + y

    def site(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.num_sites:
            raise DomainError(f"site index {k} out of range")
        return divmod(k, self.n)

    def sites(self) -> Iterable[tuple[int, int]]:
        for k in range(self.num_sites):
            yield divmod(k, self.n)

    def sublattice(self, x: int, y: int) -> int:
        x, y = self.wrap(x, y)
        return (x + y) % 2

    def neighbors(self, x: int, y: int) -> list[tuple[int, int]]:
        return [self.wrap(x - 1, y), self.wrap(x + 1, y),
                self.wrap(x, y - 1), self.wrap(x, y + 1)]

    def diagonal(self, c: int, sign: str) -> list[tuple[int, int]]:
        """Sites ``(x, c + x)`` (sign '+') or ``(x, c - x)`` (sign '-')."""
        s = _sign_value(sign)
        return [(x, (c + s * x) % self.n) for x in range(self.length)]


def _sign_value(sign) -> int:
    if sign in ("+", 1, +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise DomainError(f"sign must be '+' or '-', got {sign!r}")


@dataclass(frozen=True, eq=False)
class PauliOperator:
    """``i**phase * X(xbits) Z(zbits)`` on a fixed number of qubits."""

    xbits: np.ndarray
    zbits: np.ndarray
    phase: int = 0

    def __post_init__(self):
        x = _frozen_bits(self.xbits)
        z = _frozen_bits(self.zbits, size=x.shape[0])
        object.__setattr__(self, "xbits", x)
        object.__setattr__(self, "zbits", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def identity(cls, size: int) -> "PauliOperator":
        zero = np.zeros(size, dtype=np.uint8)
        return cls(zero, zero)

    @classmethod
    def from_sites(cls, size: int, x_sites=(), z_sites=(), phase: int = 0) -> "PauliOperator":
        x = np.zeros(size, dtype=np.uint8)
        z = np.zeros(size, dtype=np.uint8)
        for k in x_sites:
            x[k] ^= 1
        for k in z_sites:
            z[k] ^= 1
        return cls(x, z, phase)

    @classmethod
    def from_label(cls, label: str) -> "PauliOperator":
        """Parse strings such as ``"XIZY"`` or ``"-iZZ"`` (qubit 0 first)."""
        phase = 0
        body = label
        for prefix, p in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if body.startswith(prefix):
                phase, body = p, body[len(prefix):]
                break
        x = np.array([c in "XY" for c in body], dtype=np.uint8)
        z = np.array([c in "ZY" for c in body], dtype=np.uint8)
        if any(c not in "IXYZ" for c in body):
            raise DomainError(f"bad Pauli label {label!r}")
        # Y = i X Z
        return cls(x, z, phase + int(np.sum(x & z)))

    @property
    def size(self) -> int:
        return self.xbits.shape[0]

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.xbits | self.zbits))

    @property
    def is_identity(self) -> bool:
        return not self.xbits.any() and not self.zbits.any()

    @property
    def is_x_type(self) -> bool:
        return not self.zbits.any()

    @property
    def is_z_type(self) -> bool:
        return not self.xbits.any()

    def support(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.xbits | self.zbits)]

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (self.size == other.size and self.phase == other.phase
                and np.array_equal(self.xbits, other.xbits)
                and np.array_equal(self.zbits, other.zbits))

    def __hash__(self):
        return hash((self.xbits.tobytes(), self.zbits.tobytes(), self.phase))

    def equal_up_to_phase(self, other: "PauliOperator") -> bool:
        return (np.array_equal(self.xbits, other.xbits)
                and np.array_equal(self.zbits, other.zbits))

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.xbits, self.zbits, phase)

    def inverse(self) -> "PauliOperator":
        # (i^p X Z)^-1 = i^-p Z X = i^-p (-1)^{x.z} X Z
        overlap = int(np.sum(self.xbits & self.zbits))
        return PauliOperator(self.xbits, self.zbits, -self.phase + 2 * overlap)

    def to_label(self) -> str:
        """Label with Y letters and a leading sign; qubit 0 first."""
        ys = int(np.sum(self.xbits & self.zbits))
        p = (self.phase - ys) % 4
        chars = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.xbits, self.zbits))
        return ("", "i", "-", "-i")[p] + chars

    def letters(self) -> str:
        """Letters only, phase dropped."""
        return "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.xbits, self.zbits))

    def to_dense(self) -> np.ndarray:
        if self.size > 14:
            raise DomainError("dense form limited to 14 qubits")
        xs = reduce(np.kron, [_X if b else _I2 for b in self.xbits], np.eye(1))
        zs = reduce(np.kron, [_Z if b else _I2 for b in self.zbits], np.eye(1))
        return (1j ** self.phase) * (xs @ zs)

    def __repr__(self):
        return f"PauliOperator({self.to_label()!r})"


def multiply(P: PauliOperator, Q: PauliOperator) -> PauliOperator:
    """Group product ``P * Q`` with exact phase tracking."""
    if P.size != Q.size:
        raise ShapeError(f"index spaces differ: {P.size} vs {Q.size}")
    # X(a)Z(b) X(c)Z(d) = (-1)^{b.c} X(a+c) Z(b+d)
    sign = int(np.sum(P.zbits & Q.xbits)) % 2
    return PauliOperator(P.xbits ^ Q.xbits, P.zbits ^ Q.zbits,
                         P.phase + Q.phase + 2 * sign)


def symplectic_form(P: PauliOperator, Q: PauliOperator) -> int:
    if P.size != Q.size:
        raise ShapeError(f"index spaces differ: {P.size} vs {Q.size}")
    return int(np.sum(P.xbits & Q.zbits) + np.sum(P.zbits & Q.xbits)) % 2


def commutes(P: PauliOperator, Q: PauliOperator) -> int:
    """+1 if ``P`` and ``Q`` commute, -1 if they anticommute."""
    return -1 if symplectic_form(P, Q) else 1


def product(paulis: Sequence[PauliOperator], size: int | None = None) -> PauliOperator:
    if not paulis:
        if size is None:
            raise ShapeError("empty product needs an explicit size")
        return PauliOperator.identity(size)
    return reduce(multiply, paulis)


@dataclass(frozen=True)
class SymmetryElement:
    """Stripe symmetry ``U_{c,+}`` or ``U_{c,-}``: X along a wrapped diagonal."""

    c: int
    sign: str
    operator: PauliOperator


def make_symmetry(lattice: TorusLattice, c: int, sign) -> SymmetryElement:
    if not (isinstance(c, (int, np.integer)) and 0 <= c < lattice.n):
        raise DomainError(f"c must satisfy 0 <= c < {lattice.n}, got {c!r}")
    s = _sign_value(sign)
    sites = [lattice.index(x, y) for x, y in lattice.diagonal(c, sign)]
    op = PauliOperator.from_sites(lattice.num_sites, x_sites=sites)
    return SymmetryElement(int(c), "+" if s > 0 else "-", op)


def all_symmetries(lattice: TorusLattice) -> list[SymmetryElement]:
    return [make_symmetry(lattice, c, s) for s in "+-" for c in range(lattice.n)]


def star(lattice: TorusLattice, x: int, y: int) -> PauliOperator:
    """Z on the four nearest neighbours of ``(x, y)``."""
    if not (0 <= x < lattice.length and 0 <= y < lattice.n):
        raise DomainError(f"site ({x}, {y}) outside the lattice")
    sites = [lattice.index(*s) for s in lattice.neighbors(x, y)]
    return PauliOperator.from_sites(lattice.num_sites, z_sites=sites)


def z_operator(lattice: TorusLattice, sites: Iterable[tuple[int, int]]) -> PauliOperator:
    return PauliOperator.from_sites(
        lattice.num_sites, z_sites=[lattice.index(x, y) for x, y in sites])


def is_symmetric(lattice: TorusLattice, P: PauliOperator) -> bool:
    return all(commutes(P, u.operator) == 1 for u in all_symmetries(lattice))
