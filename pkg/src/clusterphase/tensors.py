"""Cluster PEPS tensors, ring tensors and their Clifford x junk factorization.

Leg order of a site tensor is ``(phys, N, S, E, W)``; the physical leg is in
the Z basis. Rings are columns of constant ``x``; ring position ``y`` connects
its N leg to the S leg of position ``y + 1``, and a ring tensor maps the W legs
(input, previous ring) to the E legs (output, next ring).

Ring tensor components are taken in the X basis of the physical legs, with
``i_k = 0`` for ``|+>`` and ``i_k = 1`` for ``|->``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import qca
from .errors import DomainError, FactorizationFailed, PreconditionError
from .pauli_lattice import PauliOperator, multiply

LEGS = ("phys", "N", "S", "E", "W")
FAMILIES = ("xx-diagonal", "xx-filter")
THETA_MAX = 0.3


def cluster_peps_tensor() -> np.ndarray:
    """Cluster-state site tensor ``T[a, N, S, E, W]``.

    N and W copy the physical Z value ``a``; S and E carry the controlled-Z
    phase ``(-1)^(a * bond)`` towards the copy legs of the neighbours, so each
    lattice edge receives exactly one controlled-Z.
    """
    T = np.zeros((2,) * 5, dtype=complex)
    for a in (0, 1):
        for s in (0, 1):
            for e in (0, 1):
                T[a, a, s, e, a] = (-1) ** (a * (s + e)) / np.sqrt(2)
    return T


def leg_pauli(label: str) -> PauliOperator:
    """Five-leg Pauli from a label in ``LEGS`` order, e.g. ``"XXZZX"``."""
    if len(label.lstrip("+-i")) != 5:
        raise DomainError("leg labels need five letters")
    return PauliOperator.from_label(label)


def tensor_symmetries() -> dict[str, PauliOperator]:
    """The four symmetries compatible with X-type junk, and the extra one.

    ``sym1`` is ``X_k X_N(k) X_W(k) Z_S(k) Z_E(k)``; ``sym2..sym4`` are ``sym1``
    times the virtual stabilizers ``Z_N X_S``, ``Z_N X_E`` and ``Z_N Z_W``, so
    all four act by X on the physical leg. ``extra`` acts by Z on the
    physical leg and singles out the cluster tensor.
    """
    s1 = leg_pauli("XXZZX")
    out = {"sym1": s1}
    for name, v in (("sym2", "IZXII"), ("sym3", "IZIXI"), ("sym4", "IZIIZ")):
        out[name] = multiply(s1, leg_pauli(v))
    out["extra"] = leg_pauli("ZZIII")
    return out


def apply_leg_operator(T: np.ndarray, P: PauliOperator) -> np.ndarray:
    """Apply a five-leg Pauli to the tensor, each factor acting on its own leg."""
    M = P.to_dense().reshape((2,) * 10)
    return np.tensordot(M, T, axes=(list(range(5, 10)), list(range(5))))


def symmetry_residuals(T: np.ndarray, names=None) -> dict[str, float]:
    syms = tensor_symmetries()
    names = names if names is not None else list(syms)
    return {k: float(np.max(np.abs(apply_leg_operator(T, syms[k]) - T))) for k in names}


def solution_space_dimension(names) -> int:
    """Dimension of the joint +1 eigenspace of the named symmetries (5 qubits)."""
    syms = tensor_symmetries()
    proj = np.eye(32, dtype=complex)
    for k in names:
        proj = proj @ (np.eye(32) + syms[k].to_dense()) / 2
    return int(round(np.trace(proj).real))


def _x_component(T: np.ndarray, outcome: int) -> np.ndarray:
    vec = np.array([1.0, (-1.0) ** outcome]) / np.sqrt(2)
    return np.tensordot(vec, T, axes=(0, 0))


def ring_from_peps(T: np.ndarray, bits) -> np.ndarray:
    """Contract ``n`` site tensors around a ring; returns the W -> E operator."""
    bits = [int(b) for b in bits]
    n = len(bits)
    comps = [_x_component(T, b) for b in bits]  # legs (N, S, E, W)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    bond = letters[:n]            # bond y joins N of y and S of y+1
    east = letters[n:2 * n]
    west = letters[2 * n:3 * n]
    terms = [f"{bond[y]}{bond[(y - 1) % n]}{east[y]}{west[y]}" for y in range(n)]
    spec = ",".join(terms) + "->" + east + west
    out = np.einsum(spec, *comps, optimize="greedy")
    return out.reshape(2 ** n, 2 ** n)


def peps_torus_state(T: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Contract the site tensor on an ``nx x ny`` torus into a state vector.

    Physical legs are ordered by the linear index ``x * ny + y``.
    """
    letters = [chr(c) for c in range(ord("a"), ord("z") + 1)] + \
        [chr(c) for c in range(ord("A"), ord("Z") + 1)]
    pool = iter(letters * 1)
    phys = {}
    vbond = {}
    hbond = {}
    for x in range(nx):
        for y in range(ny):
            phys[x, y] = next(pool)
    for x in range(nx):
        for y in range(ny):
            vbond[x, y] = next(pool)   # between (x, y) N and (x, y+1) S
            hbond[x, y] = next(pool)   # between (x, y) E and (x+1, y) W
    terms = []
    for x in range(nx):
        for y in range(ny):
            terms.append(phys[x, y] + vbond[x, y] + vbond[x, (y - 1) % ny]
                         + hbond[x, y] + hbond[(x - 1) % nx, y])
    out = "".join(phys[x, y] for x in range(nx) for y in range(ny))
    psi = np.einsum(",".join(terms) + "->" + out, *([T] * (nx * ny)), optimize="greedy")
    return psi.reshape(-1)


def cluster_state_dense(nx: int, ny: int) -> np.ndarray:
    """``prod CZ |+>`` on an ``nx x ny`` torus, same qubit order as above."""
    m = nx * ny
    idx = np.arange(2 ** m)
    bits = (idx[:, None] >> (m - 1 - np.arange(m))) & 1
    phase = np.zeros(2 ** m, dtype=np.int64)
    for x in range(nx):
        for y in range(ny):
            k = x * ny + y
            for k2 in (((x + 1) % nx) * ny + y, x * ny + (y + 1) % ny):
                phase += bits[:, k] * bits[:, k2]
    return (1.0 - 2.0 * (phase % 2)) / np.sqrt(2 ** m)


# junk ---------------------------------------------------------------------

@dataclass(frozen=True)
class JunkSpec:
    """Symmetric perturbation family applied on top of the cluster state.

    ``xx-diagonal`` is ``prod exp(i theta X_a X_b)`` over diagonal neighbour
    pairs; ``xx-filter`` is the non-unitary ``prod exp(theta X_a X_b)``.
    Both are X-type and therefore commute with every stripe symmetry.
    """

    family: str = "xx-diagonal"
    theta: float = 0.0
    n: int = 4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown junk family {self.family!r}; choose from {FAMILIES}")
        if not np.isfinite(self.theta) or abs(self.theta) > THETA_MAX + 1e-12:
            raise DomainError(f"|theta| must not exceed {THETA_MAX}")
        if self.n not in (4, 6):
            raise DomainError("ring tensors are built for n in {4, 6}")

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "theta": self.theta, "n": self.n})

    @classmethod
    def from_json(cls, text: str) -> "JunkSpec":
        d = json.loads(text)
        return cls(d["family"], float(d["theta"]), int(d["n"]))


def _popcount_parity(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    p = np.zeros_like(a)
    while a.any():
        p ^= a & 1
        a >>= 1
    return p


@lru_cache(maxsize=8)
def _character_table(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return 1.0 - 2.0 * _popcount_parity(idx[:, None] & idx[None, :])


def _pair_coefficients(n: int, family: str, theta: float) -> np.ndarray:
    """``W[p_t, p_next]``: summed expansion weight of the inter-ring gates.

    The gates join position ``a`` of one ring with ``a + 1`` and ``a - 1`` of
    the next. Expanding every gate as ``alpha I + beta X X`` and grouping
    terms by the X strings they leave on the two rings gives ``W``.
    """
    if family == "xx-diagonal":
        alpha, beta = np.cos(theta), 1j * np.sin(theta)
    else:
        alpha, beta = np.cosh(theta), np.sinh(theta)
    pairs = [(a, (a + 1) % n) for a in range(n)] + [(a, (a - 1) % n) for a in range(n)]
    m = len(pairs)
    u = np.arange(2 ** m)
    chosen = (u[:, None] >> np.arange(m)) & 1
    pt = np.zeros(2 ** m, dtype=np.int64)
    pn = np.zeros(2 ** m, dtype=np.int64)
    for t, (a, b) in enumerate(pairs):
        pt ^= chosen[:, t] << (n - 1 - a)
        pn ^= chosen[:, t] << (n - 1 - b)
    weight = chosen.sum(axis=1)
    coeff = alpha ** (m - weight) * beta ** weight
    W = np.zeros((2 ** n, 2 ** n), dtype=complex)
    np.add.at(W, (pt, pn), coeff)
    return W


def raw_junk_matrices(n: int, family: str, theta: float) -> np.ndarray:
    """Uncompressed junk parts ``B(i)[j_out, j_in]`` on the pending-X-string space.

    The junk basis state ``|j>`` records the X string that the gates towards
    the previous ring leave on the current ring. Measuring the ring with
    outcome ``i`` turns it into the sign ``(-1)^(i.j)``.
    """
    had = _character_table(n)
    f = had @ _pair_coefficients(n, family, theta)  # f[i, j_out]
    return f[:, :, None] * had[:, None, :]


def _psd_sqrt(sig: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(sig)
    if w.min() <= 1e-13 * w.max():
        raise FactorizationFailed("junk environment is singular; tensor not injective")
    s = (v * np.sqrt(w)) @ v.conj().T
    si = (v / np.sqrt(w)) @ v.conj().T
    return s, si


def canonical_junk(B: np.ndarray) -> np.ndarray:
    """Compress to the reachable junk space and gauge so ``sum B^dag B = 1``."""
    F = np.concatenate([B[i] for i in range(B.shape[0])], axis=1)
    U, S, _ = np.linalg.svd(F, full_matrices=False)
    r = int(np.sum(S > 1e-12 * S[0]))
    V = U[:, :r]
    Bc = np.einsum("ja,ijk,kb->iab", V.conj(), B, V)
    if r == 1:
        scale = np.sqrt(np.sum(np.abs(Bc) ** 2))
        return Bc / scale
    # right environment: fixed point of sigma -> sum B^dag sigma B
    E = np.einsum("iab,icd->acbd", Bc.conj(), Bc).reshape(r * r, r * r)
    w, v = np.linalg.eig(E.T)
    k = int(np.argmax(np.abs(w)))
    eta = w[k].real
    sig = v[:, k].reshape(r, r)
    sig = sig / np.trace(sig)
    sig = (sig + sig.conj().T) / 2
    s, si = _psd_sqrt(sig)
    return np.einsum("ab,ibc,cd->iad", s, Bc, si) / np.sqrt(eta)


@dataclass
class RingTensor:
    """Factored ring tensor ``A(i) = C(i) (x) B(i)``.

    ``C(i) = Hbar Lambdabar Z(i)`` is unitary and kept implicit; ``junk[i]`` is
    ``B(i)``, normalised so that ``rho -> sum_i B(i) rho B(i)^dag`` preserves
    the trace.
    """

    n: int
    junk: np.ndarray
    residual: float = 0.0
    spec: JunkSpec | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.junk.shape[1]

    def bits(self, i: int) -> np.ndarray:
        return (i >> (self.n - 1 - np.arange(self.n))) & 1

    def clifford(self, i: int) -> np.ndarray:
        return qca.transition_dense(self.bits(i))

    def component(self, i: int) -> np.ndarray:
        return np.kron(self.clifford(i), self.junk[i])

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "d": self.d,
            "spec": json.loads(self.spec.to_json()) if self.spec else None,
            "residual": self.residual,
            "junk": [[[[z.real, z.imag] for z in row] for row in B] for B in self.junk],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "RingTensor":
        d = json.loads(text)
        junk = np.array(d["junk"], dtype=float)
        junk = junk[..., 0] + 1j * junk[..., 1]
        spec = JunkSpec(**d["spec"]) if d.get("spec") else None
        return cls(d["n"], junk, d.get("residual", 0.0), spec)


def factor_ring_tensor(A: np.ndarray, n: int | None = None, tol: float = 1e-8,
                       configs=None):
    """Split dense ring components ``A[i]`` into ``C(i) (x) B(i)``.

    ``B(i)`` is read off by contracting ``A(i)`` with ``C(i)^dag`` over the
    logical factor. Returns ``(C, B, residual)`` with ``C`` the dense
    Clifford parts and ``residual = max_i |A(i) - C(i) (x) B(i)| / |A(i)|``.
    Raises FactorizationFailed above ``tol``.
    """
    A = np.asarray(A)
    if n is None:
        n = int(round(np.log2(A.shape[0])))
    if A.shape[0] != 2 ** n:
        raise PreconditionError("expected one component per ring configuration")
    D = A.shape[1]
    if A.shape[1] != A.shape[2] or D % (2 ** n):
        raise PreconditionError("components must be square with a 2^n logical factor")
    d = D // 2 ** n
    idx = range(2 ** n) if configs is None else configs
    Cs, Bs, res = [], [], 0.0
    for i in idx:
        bits = (i >> (n - 1 - np.arange(n))) & 1
        C = qca.transition_dense(bits)
        Ai = A[i].reshape(2 ** n, d, 2 ** n, d)
        B = np.einsum("ab,ajbk->jk", C.conj(), Ai) / 2 ** n
        rebuilt = np.kron(C, B)
        norm = np.linalg.norm(A[i])
        r = np.linalg.norm(A[i] - rebuilt) / norm if norm > 0 else 0.0
        res = max(res, float(r))
        Cs.append(C)
        Bs.append(B)
    if res > tol:
        raise FactorizationFailed(f"factorization residual {res:.3e} exceeds {tol:.1e}")
    return np.array(Cs), np.array(Bs), res


def build_perturbed_ring_tensors(n: int, spec: JunkSpec) -> RingTensor:
    """Ring tensors of ``U|C>`` for the perturbation ``spec``, already factored.

    The cluster part comes from contracting the PEPS site tensor around the
    ring, the junk part from expanding the inter-ring gates; the dense
    product is then split again by ``factor_ring_tensor`` and the residual
    recorded. For large junk spaces only a fixed subset of configurations is
    re-factored.
    """
    if spec.n != n:
        spec = JunkSpec(spec.family, spec.theta, n)
    B = canonical_junk(raw_junk_matrices(n, spec.family, spec.theta))
    d = B.shape[1]
    T = cluster_peps_tensor()
    configs = list(range(2 ** n)) if 2 ** n * d <= 256 else [0, 1, 2 ** n - 1, 5, 2 ** (n - 1)]
    A = np.zeros((2 ** n, 2 ** n * d, 2 ** n * d), dtype=complex)
    for i in configs:
        bits = (i >> (n - 1 - np.arange(n))) & 1
        ring = ring_from_peps(T, bits) * 2 ** (n / 2)
        A[i] = np.kron(ring, B[i])
    _, _, res = factor_ring_tensor(A, n, configs=configs)
    return RingTensor(n, B, res, spec, {"checked_configs": len(configs)})


# symmetry constraints ------------------------------------------------------

def _apply_pauli_vec(P: PauliOperator, v: np.ndarray) -> np.ndarray:
    m = P.size
    xmask = int("".join(str(b) for b in P.xbits), 2)
    zmask = int("".join(str(b) for b in P.zbits), 2)
    idx = np.arange(2 ** m)
    w = v * (1.0 - 2.0 * _popcount_parity(idx & zmask))
    return (1j ** P.phase) * w[idx ^ xmask]


def ring_constraints(n: int, bits) -> list[PauliOperator]:
    """The 2n stabilizers of the CJ state of ``C(i)`` (out qubits first).

    ``C(i) = s (X_{k-1} Z_k X_{k+1})_out C(i) (X_k)_in`` with
    ``s = (-1)^{i_k}``, and ``C(i) = (X_k)_out C(i) (Z_k)_in``. An operator
    ``O C O'`` becomes ``O (x) O'^T`` on the CJ state.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    gens = []
    for k in range(n):
        out = PauliOperator.from_sites(2 * n, x_sites=[(k - 1) % n, (k + 1) % n, n + k],
                                       z_sites=[k], phase=2 * int(bits[k]))
        gens.append(out)
        gens.append(PauliOperator.from_sites(2 * n, x_sites=[k], z_sites=[n + k]))
    return gens


def derive_transition_from_symmetries(n: int, bits, seed: int = 0) -> np.ndarray:
    """Solve the ring symmetry constraints for the transition operator.

    Returns the dense unitary ``C`` (global phase arbitrary) whose CJ state
    is the unique joint +1 eigenvector of ``ring_constraints``.
    """
    if n not in (4, 6):
        raise DomainError("derivation is implemented for n in {4, 6}")
    gens = ring_constraints(n, bits)
    from .gf2 import rank
    for a in range(len(gens)):
        for b in range(a):
            if multiply(gens[a], gens[b]) != multiply(gens[b], gens[a]):
                raise RuntimeError("ring constraints do not commute")
    sympl = np.array([np.concatenate([g.xbits, g.zbits]) for g in gens])
    if rank(sympl) != 2 * n:
        raise RuntimeError("ring constraints are not independent")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=4 ** n) + 1j * rng.normal(size=4 ** n)
    for g in gens:
        v = (v + _apply_pauli_vec(g, v)) / 2
    norm = np.linalg.norm(v)
    if norm < 1e-8:
        raise RuntimeError("constraints admit no joint eigenvector")
    v = v / norm
    for g in gens:
        if np.linalg.norm(_apply_pauli_vec(g, v) - v) > 1e-9:
            raise RuntimeError("inconsistent symmetry constraints")
    return v.reshape(2 ** n, 2 ** n) * 2 ** (n / 2)


def equal_up_to_phase(A: np.ndarray, B: np.ndarray) -> float:
    """``min_phi |A - e^{i phi} B|_max``."""
    k = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    ph = A[k] / B[k]
    ph = ph / abs(ph)
    return float(np.max(np.abs(A - ph * B)))
