"""Dense GF(2) linear algebra on uint8 arrays."""

from __future__ import annotations

import numpy as np


def rref(A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and its pivot columns.

    Columns are scanned left to right, so the result is canonical for a
    fixed column order.
    """
    M = (np.asarray(A, dtype=np.uint8) & 1).copy()
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.flatnonzero(M[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            M[[r, p]] = M[[p, r]]
        others = np.flatnonzero(M[:, c])
        others = others[others != r]
        if others.size:
            M[others] ^= M[r]
        pivots.append(c)
        r += 1
    return M, pivots


def rank(A: np.ndarray) -> int:
    return len(rref(A)[1])


class LinearSystem:
    """Solve ``A s = b`` over GF(2) for many right-hand sides.

    The elimination is done once on ``[A | I]``; each solve is then a
    matrix-vector product. Free variables are set to zero, which makes the
    returned solution canonical.
    """

    def __init__(self, A: np.ndarray):
        A = np.asarray(A, dtype=np.uint8) & 1
        m, k = A.shape
        R, piv = rref(np.concatenate([A, np.eye(m, dtype=np.uint8)], axis=1))
        piv = [c for c in piv if c < k]
        self.shape = (m, k)
        self.rank = len(piv)
        self._pivots = np.array(piv, dtype=int)
        # rows of T with T A = rref(A)
        self._T = R[:, k:].astype(np.int64)

    def solve(self, b: np.ndarray) -> np.ndarray | None:
        b = (np.asarray(b, dtype=np.int64) & 1).reshape(-1)
        tb = (self._T @ b) & 1
        if tb[self.rank:].any():
            return None
        s = np.zeros(self.shape[1], dtype=np.uint8)
        s[self._pivots] = tb[: self.rank]
        return s


def nullspace(A: np.ndarray) -> np.ndarray:
    """Basis of ``{s : A s = 0}`` as rows."""
    A = np.asarray(A, dtype=np.uint8) & 1
    R, piv = rref(A)
    k = A.shape[1]
    free = [c for c in range(k) if c not in set(piv)]
    basis = np.zeros((len(free), k), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for row, p in enumerate(piv):
            basis[t, p] = R[row, f]
    return basis
