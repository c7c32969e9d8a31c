"""The Clifford cellular automaton acting on the logical ring.

One step is ``C0 = Hbar Lambdabar``: controlled-Z on every ring edge
``(k, k+1)`` followed by a Hadamard on every position. Its conjugation action
on ring Paulis is

    Z_k -> X_k,        X_k -> X_{k-1} Z_k X_{k+1},

and the inverse step maps ``X_k -> Z_k`` and ``Z_k -> Z_{k-1} X_k Z_{k+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import DomainError, ShapeError
from .pauli_lattice import PauliOperator, multiply

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _check_ring(n) -> int:
    if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
        raise DomainError(f"ring size must be an even integer >= 4, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class QcaStep:
    """One step ``C0 = Hbar Lambdabar`` on a ring of ``n`` qubits."""

    n: int

    def __post_init__(self):
        _check_ring(self.n)

    def _image_x(self, k: int, inverse: bool) -> PauliOperator:
        n = self.n
        if inverse:
            return PauliOperator.from_sites(n, z_sites=[k])
        return PauliOperator.from_sites(n, x_sites=[(k - 1) % n, (k + 1) % n], z_sites=[k])

    def _image_z(self, k: int, inverse: bool) -> PauliOperator:
        n = self.n
        if inverse:
            return PauliOperator.from_sites(n, x_sites=[k], z_sites=[(k - 1) % n, (k + 1) % n])
        return PauliOperator.from_sites(n, x_sites=[k])

    @property
    def symplectic(self) -> np.ndarray:
        """Matrix acting on column vectors ``(x | z)`` mod 2."""
        return _symplectic(self.n)


@lru_cache(maxsize=64)
def _symplectic(n: int) -> np.ndarray:
    S = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    for k in range(n):
        # image of X_k
        S[(k - 1) % n, k] = 1
        S[(k + 1) % n, k] = 1
        S[n + k, k] = 1
        # image of Z_k
        S[k, n + k] = 1
    S.setflags(write=False)
    return S


def qca_conjugate(step: QcaStep, P: PauliOperator, inverse: bool = False) -> PauliOperator:
    """``C0 P C0^dagger`` (or ``C0^dagger P C0`` when ``inverse``) with exact phase."""
    if P.size != step.n:
        raise ShapeError(f"ring size mismatch: {P.size} vs {step.n}")
    out = PauliOperator.identity(step.n).with_phase(P.phase)
    for k in np.flatnonzero(P.xbits):
        out = multiply(out, step._image_x(int(k), inverse))
    for k in np.flatnonzero(P.zbits):
        out = multiply(out, step._image_z(int(k), inverse))
    return out


def conjugate_power(step: QcaStep, P: PauliOperator, power: int) -> PauliOperator:
    """Apply ``qca_conjugate`` ``power`` times; negative powers use the inverse."""
    inverse = power < 0
    for _ in range(abs(power)):
        P = qca_conjugate(step, P, inverse=inverse)
    return P


def qca_period(n) -> int:
    """Smallest ``p >= 1`` with ``S^p = 1`` for the step's symplectic matrix."""
    n = _check_ring(n)
    if n > 64:
        raise DomainError("qca_period supports n <= 64")
    S = _symplectic(n).astype(np.int64)
    eye = np.eye(2 * n, dtype=np.int64)
    M = S.copy()
    for p in range(1, 16 * n + 1):
        if np.array_equal(M, eye):
            return p
        M = (S @ M) & 1
    raise RuntimeError(f"no period found up to {16 * n}")


def period_phases(step: QcaStep, period: int | None = None) -> dict[str, list[int]]:
    """Phases picked up by X_k and Z_k after one full period."""
    p = period if period is not None else qca_period(step.n)
    out = {"X": [], "Z": []}
    for k in range(step.n):
        for label, P in (("X", PauliOperator.from_sites(step.n, x_sites=[k])),
                         ("Z", PauliOperator.from_sites(step.n, z_sites=[k]))):
            Q = conjugate_power(step, P, p)
            if not Q.equal_up_to_phase(P):
                raise RuntimeError("period does not act trivially")
            out[label].append(Q.phase)
    return out


def period_pauli(step: QcaStep) -> PauliOperator:
    """The Pauli ``P0`` with the same conjugation action as ``C0^n``."""
    return _period_pauli(step.n)


@lru_cache(maxsize=64)
def _period_pauli(n: int) -> PauliOperator:
    step = QcaStep(n)
    ph = period_phases(step, n)
    # P0 X_k P0^dag = (-1)^{z_k} X_k and P0 Z_k P0^dag = (-1)^{x_k} Z_k
    z = np.array([p // 2 for p in ph["X"]], dtype=np.uint8)
    x = np.array([p // 2 for p in ph["Z"]], dtype=np.uint8)
    return PauliOperator(x, z)


def ring_z(bits) -> PauliOperator:
    bits = np.asarray(bits, dtype=np.uint8)
    return PauliOperator(np.zeros_like(bits), bits)


def block_byproduct(step: QcaStep, cfg) -> PauliOperator:
    """Pauli ``F`` with ``C(i_{n-1}) ... C(i_0) = omega * F`` for a block of rings.

    ``cfg[t]`` holds the X-basis outcome bits of ring ``t`` (0-based, measured
    first at ``t = 0``). Ring ``t`` contributes its ``Z(i_t)`` pushed through the
    remaining ``n - t`` steps; the leftover ``C0^n`` is replaced by
    ``period_pauli``. The global phase ``omega`` is not tracked.
    """
    n = step.n
    cfg = np.asarray(cfg, dtype=np.uint8)
    if cfg.shape != (n, n):
        raise ShapeError(f"block configuration must have shape ({n}, {n})")
    F = period_pauli(step)
    for t in range(n):
        if cfg[t].any():
            F = multiply(conjugate_power(step, ring_z(cfg[t]), n - t), F)
    return F


def evolve(step: QcaStep, P: PauliOperator, steps: int) -> list[PauliOperator]:
    """``[P, C0 P C0^dag, ...]`` with ``steps + 1`` entries."""
    out = [P]
    for _ in range(steps):
        out.append(qca_conjugate(step, out[-1]))
    return out


# dense references ---------------------------------------------------------

def _bits_table(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return (idx[:, None] >> (n - 1 - np.arange(n))) & 1


def lambda_dense(n: int) -> np.ndarray:
    """Diagonal of the ring controlled-Z product, qubit 0 most significant."""
    b = _bits_table(n)
    parity = sum(b[:, k] * b[:, (k + 1) % n] for k in range(n)) % 2
    return 1.0 - 2.0 * parity


def c0_dense(n: int) -> np.ndarray:
    hb = reduce(np.kron, [_H] * n)
    return hb * lambda_dense(n)[None, :]


def z_dense_diag(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[0]
    return 1.0 - 2.0 * ((_bits_table(n) @ bits) % 2)


def transition_dense(bits) -> np.ndarray:
    """Dense ``C(i) = Hbar Lambdabar Z(i)``."""
    bits = np.asarray(bits)
    return c0_dense(bits.shape[0]) * z_dense_diag(bits)[None, :]
