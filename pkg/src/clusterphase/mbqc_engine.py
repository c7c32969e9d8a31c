"""Computation on the virtual space: wire channels, calibration and measurement blocks.

The simulated object is the virtual state of the current ring, a density
matrix on ``logical (2^n) x junk (d)``. Measuring one ring with X-basis
outcome ``i`` applies ``C0 Z(i) (x) B(i)``.

States are held in the byproduct frame: the true logical state is
``F sigma F^dag`` where ``F`` is a Pauli accumulated from the outcomes, and
``sigma`` is what ``VirtualState.rho`` stores. In this frame every X-basis ring
acts on the logical part by the fixed Clifford ``C0``, and a tilted site acts
by the same Kraus operators whatever happened before, provided its tilt sign
is flipped whenever ``F`` anticommutes with ``Z_l``. Trajectory runs track
``F`` and apply that flip. Channel runs average over outcomes and need no
frame.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import qca
from .errors import ConvergenceError, DomainError, NotInjective, ShapeError
from .pauli_lattice import PauliOperator, commutes, multiply
from .tensors import RingTensor

GAP_TOL = 1e-10


# measurement bases ----------------------------------------------------------

@dataclass(frozen=True)
class SymX:
    """The symmetry-protected X basis."""

    def coefficients(self, sign: int = 1):
        # rows: outcome; entries (coef of <+|, coef of <-|, frame bit)
        return ((1.0, 0.0, 0), (0.0, 1.0, 1))


@dataclass(frozen=True)
class Tilted:
    """Kets ``|+> + e^{i delta} da |->`` and ``|-> - e^{-i delta} da |+>``, normalised.

    The second ket carries ``e^{-i delta}`` so that the two are orthogonal for
    every ``delta``.
    """

    dalpha: float
    delta: float = 0.0

    def coefficients(self, sign: int = 1):
        da = sign * self.dalpha
        c = 1.0 / math.sqrt(1.0 + da * da)
        e = np.exp(1j * self.delta)
        return ((c, c * np.conj(e) * da, 0), (-c * e * da, c, 1))


@dataclass(frozen=True)
class Hadamard01:
    """``|0> = (|+> + |->)/sqrt2`` and ``|1> = (|-> - |+>)/sqrt2``."""

    def coefficients(self, sign: int = 1):
        r = 1.0 / math.sqrt(2.0)
        return ((r, r, 0), (-r, r, 0))


@dataclass(frozen=True)
class MeasurementPattern:
    """Bases for one ``n x n`` block; unspecified sites use ``SymX``.

    ``special`` maps ``(m, l)`` with column ``m`` in ``1..n`` (ring within the
    block) and row ``l`` in ``0..n-1`` to a basis. Only ``kind == "init"``
    may measure more than one site away from the X basis, and then only with
    ``Hadamard01`` sites sharing one column.
    """

    n: int
    special: dict = field(default_factory=dict)
    kind: str = "gate"

    def __post_init__(self):
        for (m, l), basis in self.special.items():
            if not (1 <= m <= self.n and 0 <= l < self.n):
                raise DomainError(f"special site {(m, l)} outside the block")
            if not isinstance(basis, (SymX, Tilted, Hadamard01)):
                raise DomainError(f"unknown basis {basis!r}")
        nonx = [k for k, b in self.special.items() if not isinstance(b, SymX)]
        if self.kind == "init":
            if len({m for m, _ in nonx}) > 1 or any(
                    not isinstance(self.special[k], Hadamard01) for k in nonx):
                raise DomainError("init patterns use Hadamard01 sites in a single column")
        elif len(nonx) > 1:
            raise DomainError("at most one non-X site per block")

    @classmethod
    def wire(cls, n: int) -> "MeasurementPattern":
        return cls(n, {}, "wire")

    @classmethod
    def init(cls, n: int, column: int = 1) -> "MeasurementPattern":
        """Simultaneous ``{|0>, |1>}`` measurement of every row in one column.

        In column 1 this measures every logical ``Z_l``; in column ``n`` the
        QCA turns it into a measurement of every ``X_l``.
        """
        return cls(n, {(column, l): Hadamard01() for l in range(n)}, "init")

    def column(self, m: int) -> dict:
        return {l: b for (mm, l), b in self.special.items()
                if mm == m and not isinstance(b, SymX)}

    def to_dict(self) -> dict:
        sites = []
        for (m, l), b in sorted(self.special.items()):
            entry = {"m": m, "l": l, "basis": type(b).__name__}
            if isinstance(b, Tilted):
                entry.update(dalpha=b.dalpha, delta=b.delta)
            sites.append(entry)
        return {"n": self.n, "kind": self.kind, "special": sites}


# channels -------------------------------------------------------------------

def _superop(B: np.ndarray) -> np.ndarray:
    """``sum_i B_i (x) conj(B_i)``: acts on row-major ``vec(rho)``."""
    d = B.shape[1]
    return np.einsum("iab,icd->acbd", B, B.conj()).reshape(d * d, d * d)


@dataclass
class BlockChannel:
    """Junk channel of one block (``n`` rings measured in the X basis, outcomes forgotten)."""

    ring: RingTensor

    @property
    def n(self) -> int:
        return self.ring.n

    @property
    def d(self) -> int:
        return self.ring.d

    @cached_property
    def ring_matrix(self) -> np.ndarray:
        return _superop(self.ring.junk)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.linalg.matrix_power(self.ring_matrix, self.n)

    def apply_ring(self, rho: np.ndarray, rings: int = 1) -> np.ndarray:
        d = self.d
        v = rho.reshape(-1)
        for _ in range(rings):
            v = self.ring_matrix @ v
        return v.reshape(d, d)

    def apply(self, rho: np.ndarray, blocks: int = 1) -> np.ndarray:
        return self.apply_ring(rho, blocks * self.n)

    @cached_property
    def spectral_data(self):
        return _fixed_point(self)


def _fixed_point(ch: BlockChannel):
    d = ch.d
    if d == 1:
        return np.ones((1, 1), dtype=complex), 0.0, 0.0
    M = ch.matrix
    w, v = np.linalg.eig(M)
    order = np.argsort(-np.abs(w))
    lead = w[order[0]]
    second = abs(w[order[1]])
    if abs(lead) - second < GAP_TOL:
        raise NotInjective(f"leading eigenvalue degenerate (|l0|={abs(lead):.3g}, |l1|={second:.3g})")
    rho = v[:, order[0]].reshape(d, d)
    rho = rho / np.trace(rho)
    rho = (rho + rho.conj().T) / 2
    # eigenvalues of a nilpotent remainder come out at ~sqrt(eps); snap them to 0
    P = np.outer(rho.reshape(-1), np.eye(d).reshape(-1))
    Q = M - P
    if np.linalg.norm(np.linalg.matrix_power(Q, 2)) < 1e-13:
        second = 0.0
    lam = float(second)
    xi = 0.0 if lam <= 0.0 else -ch.n / math.log(lam)
    return rho, lam, xi


def fixed_point(ch: BlockChannel) -> tuple[np.ndarray, float, float]:
    """``(rho_fix, lambda1, xi)`` of the block channel.

    ``lambda1`` is the second-largest eigenvalue modulus of the block channel;
    ``xi = -n / ln(lambda1)`` is the correlation length in rings (0 when the
    junk forgets everything within one block).
    """
    return ch.spectral_data


def trace_norm(A: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh((A + A.conj().T) / 2))))


def compute_nu(rt: RingTensor, k: int = 0, ch: BlockChannel | None = None,
               tol: float = 1e-9) -> complex:
    """Calibration constant ``nu_{-+}`` for ring position ``k``.

    The deviation map ``rho -> sum_r B(r, i_k=1) rho B(r, i_k=0)^dag`` is applied
    to ``rho_fix`` and the wire channel iterated until the result is
    proportional to ``rho_fix``; the proportionality constant is returned.
    """
    ch = ch or BlockChannel(rt)
    rho_fix, _, xi = fixed_point(ch)
    n = rt.n
    bit = 1 << (n - 1 - k)
    X = np.zeros_like(rho_fix)
    for i in range(2 ** n):
        if not i & bit:
            X = X + rt.junk[i | bit] @ rho_fix @ rt.junk[i].conj().T
    budget = int(math.ceil(10 * xi / n)) + 100
    for _ in range(budget + 1):
        nu = np.trace(X)
        if np.max(np.abs(X - nu * rho_fix)) <= tol * max(abs(nu), 1e-300) or abs(nu) < 1e-300:
            return complex(nu)
        X = ch.apply(X, 1)
    raise ConvergenceError(f"nu did not converge within {budget} blocks")


@dataclass(frozen=True)
class Calibration:
    nu: complex
    rho_fix: np.ndarray
    lambda1: float
    xi: float

    @property
    def nu_abs(self) -> float:
        return abs(self.nu)

    @property
    def delta(self) -> float:
        """Tilt phase making ``Im(e^{-i delta} nu) = |nu|``."""
        return float(np.angle(self.nu) - np.pi / 2)

    def wire_blocks(self, n: int) -> int:
        return max(2, int(math.ceil(10 * self.xi / n)))


def calibrate(rt: RingTensor) -> Calibration:
    ch = BlockChannel(rt)
    rho, lam, xi = fixed_point(ch)
    return Calibration(compute_nu(rt, 0, ch), rho, lam, xi)


# virtual state --------------------------------------------------------------

@dataclass
class VirtualState:
    """Frame-picture virtual state on ``logical (x) junk``.

    ``frame`` is the accumulated byproduct Pauli (``None`` once outcomes have
    been averaged over). ``ring_in_block`` counts rings measured since the
    last block boundary.
    """

    resource: RingTensor
    rho: np.ndarray
    frame: PauliOperator | None = None
    records: list = field(default_factory=list)

    @classmethod
    def product(cls, resource: RingTensor, logical: np.ndarray, junk: np.ndarray) -> "VirtualState":
        L = 2 ** resource.n
        logical = np.asarray(logical, dtype=complex)
        if logical.ndim == 1:
            logical = np.outer(logical, logical.conj())
        if logical.shape != (L, L) or junk.shape != (resource.d, resource.d):
            raise ShapeError("logical/junk shapes do not match the resource")
        return cls(resource, np.kron(logical, junk), PauliOperator.identity(resource.n))

    @property
    def n(self) -> int:
        return self.resource.n

    @property
    def d(self) -> int:
        return self.resource.d

    def _blocks(self) -> np.ndarray:
        L, d = 2 ** self.n, self.d
        return self.rho.reshape(L, d, L, d)

    def logical(self) -> np.ndarray:
        return np.einsum("ajbj->ab", self._blocks())

    def junk(self) -> np.ndarray:
        return np.einsum("ajak->jk", self._blocks())

    def copy(self) -> "VirtualState":
        return VirtualState(self.resource, self.rho.copy(), self.frame, list(self.records))


class _Kernel:
    """Per-resource caches for ring updates."""

    def __init__(self, rt: RingTensor):
        self.rt = rt
        self.n = rt.n
        self.L = 2 ** rt.n
        self.c0 = qca.c0_dense(rt.n)
        if not np.allclose(np.linalg.matrix_power(self.c0, rt.n), np.eye(self.L)):
            raise RuntimeError("C0^n is not the identity for this ring size")
        self.step = qca.QcaStep(rt.n)
        self.channel = BlockChannel(rt)
        self.zdiag = np.array([qca.z_dense_diag((i >> (self.n - 1 - np.arange(self.n))) & 1)
                               for i in range(self.L)])
        self._kraus = {}
        self._powers = {}
        self.c0_pow = [np.linalg.matrix_power(self.c0, k) for k in range(rt.n)]

    def _junk_power(self, k: int) -> np.ndarray:
        M = self._powers.get(k)
        if M is None:
            M = np.linalg.matrix_power(self.channel.ring_matrix, k).T.copy()
            self._powers[k] = M
        return M

    def x_rings(self, rho: np.ndarray, k: int) -> np.ndarray:
        """``k`` consecutive X-basis rings with outcomes averaged."""
        if k == 0:
            return rho
        L, d = self.L, self.rt.d
        R = rho.reshape(L, d, L, d).transpose(0, 2, 1, 3).reshape(L * L, d * d)
        if d > 1:
            R = R @ self._junk_power(k)
        R = R.reshape(L, L, d, d)
        U = self.c0_pow[k % self.n]
        if k % self.n:
            R = np.tensordot(U, R, axes=(1, 0))
            R = np.tensordot(R, U.conj(), axes=(1, 1)).transpose(0, 3, 1, 2)
        return R.transpose(0, 2, 1, 3).reshape(L * d, L * d)

    def kraus(self, specials: dict):
        """Frame Kraus operators (without the trailing ``C0``) for a ring.

        Returns ``([(outcome_bits, frame_bits, K)], effects)`` over all ``2^n``
        outcomes, where ``effects[o]`` is the transpose of ``K^dag K`` so that
        Born weights are ``sum(effects[o] * rho)``.
        """
        key = tuple(sorted(specials.items()))
        if key in self._kraus:
            return self._kraus[key]
        n, L = self.n, self.L
        pos = sorted(specials)
        coefs = {l: specials[l].coefficients() for l in pos}
        out = []
        for o in range(L):
            obits = (o >> (n - 1 - np.arange(n))) & 1
            fbits = obits.copy()
            for l in pos:
                fbits[l] = coefs[l][obits[l]][2]
            K = np.zeros((L * self.rt.d, L * self.rt.d), dtype=complex)
            for b in range(2 ** len(pos)):
                cfg = obits.copy()
                amp = 1.0 + 0j
                for t, l in enumerate(pos):
                    bl = (b >> t) & 1
                    cfg[l] = bl
                    amp *= coefs[l][obits[l]][bl]
                if amp == 0:
                    continue
                i = int("".join(str(int(v)) for v in cfg), 2)
                zbits = np.zeros(n, dtype=np.int64)
                for l in pos:
                    zbits[l] = cfg[l] ^ fbits[l]
                zd = qca.z_dense_diag(zbits)
                K += amp * np.kron(np.diag(zd), self.rt.junk[i])
            out.append((obits, fbits, K))
        effects = np.stack([(K.conj().T @ K).T for _, _, K in out])
        self._kraus[key] = (out, effects)
        return self._kraus[key]

    def channel_terms(self, specials: dict) -> list:
        """Outcome-summed ring map as ``[(zl, zr, S)]``.

        The map is ``R -> sum (diag(zl) (x) .) S[R] (diag(zr) (x) .)`` with ``S``
        a junk superoperator, grouping Kraus terms by their logical Z factors.
        """
        key = ("terms",) + tuple(sorted(specials.items()))
        if key in self._kraus:
            return self._kraus[key]
        n, d = self.n, self.rt.d
        pos = sorted(specials)
        coefs = {l: specials[l].coefficients() for l in pos}
        groups: dict = {}
        for o in range(self.L):
            obits = (o >> (n - 1 - np.arange(n))) & 1
            terms = []
            for b in range(2 ** len(pos)):
                cfg = obits.copy()
                amp = 1.0 + 0j
                zb = 0
                for t, l in enumerate(pos):
                    bl = (b >> t) & 1
                    cfg[l] = bl
                    c = coefs[l][obits[l]]
                    amp *= c[bl]
                    zb |= (bl ^ c[2]) << (n - 1 - l)
                if amp != 0:
                    terms.append((amp, zb, int("".join(str(int(v)) for v in cfg), 2)))
            for a1, z1, i1 in terms:
                for a2, z2, i2 in terms:
                    M = a1 * np.conj(a2) * np.kron(self.rt.junk[i1], self.rt.junk[i2].conj())
                    if (z1, z2) in groups:
                        groups[z1, z2] += M
                    else:
                        groups[z1, z2] = M
        out = [(self.zdiag[z1], self.zdiag[z2], S.T.copy()) for (z1, z2), S in groups.items()]
        self._kraus[key] = out
        return out

    def special_ring(self, rho: np.ndarray, specials: dict) -> np.ndarray:
        L, d = self.L, self.rt.d
        R = rho.reshape(L, d, L, d).transpose(0, 2, 1, 3).reshape(L, L, d * d)
        acc = np.zeros_like(R)
        for zl, zr, ST in self.channel_terms(specials):
            acc += (zl[:, None] * zr[None, :])[:, :, None] * (R @ ST)
        R = acc.reshape(L, L, d, d).transpose(0, 2, 1, 3).reshape(L * d, L * d)
        return self.conj_c0(R)

    def sample_x_ring(self, rho: np.ndarray, rng: np.random.Generator):
        """Sample an X-basis ring: Kraus ``I (x) B(i)`` in the frame, then ``C0``."""
        L, d = self.L, self.rt.d
        B = self.rt.junk
        R = rho.reshape(L, d, L, d)
        junk = np.einsum("ajak->jk", R)
        probs = np.clip(np.einsum("ijk,kl,ijl->i", B, junk, B.conj()).real,
                        0.0, None)
        probs = probs / probs.sum()
        i = int(rng.choice(L, p=probs))
        X = np.matmul(B[i], rho.reshape(L, d, L * d)).reshape(L * d, L, d)
        X = np.matmul(X, B[i].conj().T).reshape(L * d, L * d) / probs[i]
        bits = ((i >> (self.n - 1 - np.arange(self.n))) & 1).astype(np.uint8)
        return bits, self.conj_c0(X)

    def conj_c0(self, rho: np.ndarray) -> np.ndarray:
        """``(C0 (x) I) rho (C0 (x) I)^dag`` acting on the logical indices only."""
        L, d = self.L, self.rt.d
        X = (self.c0 @ rho.reshape(L, -1)).reshape(L * d, L, d)
        return np.matmul(self.c0.conj(), X).reshape(L * d, L * d)


_KERNELS: dict[int, _Kernel] = {}


def _kernel(rt: RingTensor) -> _Kernel:
    k = _KERNELS.get(id(rt))
    if k is None or k.rt is not rt:
        k = _Kernel(rt)
        _KERNELS[id(rt)] = k
    return k


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def run_pattern_channel(state: VirtualState, pat: MeasurementPattern) -> VirtualState:
    """Outcome-averaged block in the frame picture (exact channel backend)."""
    if pat.n != state.n:
        raise ShapeError("pattern and state ring sizes differ")
    kern = _kernel(state.resource)
    rho = state.rho
    pending = 0
    for m in range(1, state.n + 1):
        specials = pat.column(m)
        if not specials:
            pending += 1
            continue
        rho = kern.x_rings(rho, pending)
        pending = 0
        rho = kern.special_ring(rho, specials)
    rho = kern.x_rings(rho, pending)
    return VirtualState(state.resource, rho, None, state.records)


def apply_pattern(state: VirtualState, pat: MeasurementPattern, seed=None):
    """Sample one block of outcomes; returns ``(outcomes, new_state)``.

    ``outcomes[m-1, l]`` is the physical outcome bit of site ``(m, l)``. The
    frame is updated ring by ring. A tilted site is physically measured with
    tilt ``sign * dalpha`` where ``sign = -1`` when the current frame
    anticommutes with ``Z_l``; the signs used are kept in ``state.records``.
    """
    if pat.n != state.n:
        raise ShapeError("pattern and state ring sizes differ")
    rng = _rng(seed)
    kern = _kernel(state.resource)
    n = state.n
    frame = state.frame if state.frame is not None else PauliOperator.identity(n)
    rho = state.rho
    outcomes = np.zeros((n, n), dtype=np.uint8)
    labels = np.zeros((n, n), dtype=np.uint8)
    signs = {}
    for m in range(1, n + 1):
        specials = pat.column(m)
        if not specials:
            obits, rho = kern.sample_x_ring(rho, rng)
            outcomes[m - 1] = labels[m - 1] = obits
            frame = qca.qca_conjugate(kern.step, multiply(qca.ring_z(obits), frame))
            continue
        anti = {l: commutes(frame, PauliOperator.from_sites(n, z_sites=[l])) for l in specials}
        # the physical tilt is sign * dalpha; in the frame the Kraus set is fixed
        signs.update({(m, l): s for l, s in anti.items() if isinstance(specials[l], Tilted)})
        kr, effects = kern.kraus(specials)
        probs = np.clip(np.einsum("oab,ab->o", effects, rho).real, 0.0, None)
        probs = probs / probs.sum()
        j = int(rng.choice(len(kr), p=probs))
        obits, fbits, K = kr[j]
        rho = kern.conj_c0(K @ rho @ K.conj().T / probs[j])
        phys = obits.copy()
        for l, b in specials.items():
            if isinstance(b, Hadamard01) and anti[l] == -1:
                phys[l] ^= 1
        outcomes[m - 1] = phys
        labels[m - 1] = obits
        frame = qca.qca_conjugate(kern.step, multiply(qca.ring_z(fbits), frame))
    record = {"kind": pat.kind, "outcomes": outcomes, "frame_outcomes": labels,
              "tilt_signs": signs}
    new = VirtualState(state.resource, rho, frame, state.records + [record])
    return outcomes, new


def born_probabilities(state: VirtualState, specials: dict) -> np.ndarray:
    """Outcome distribution of one ring with the given special sites."""
    kern = _kernel(state.resource)
    _, effects = kern.kraus(specials)
    return np.einsum("oab,ab->o", effects, state.rho).real


def oblivious_wire(state: VirtualState, blocks: int) -> VirtualState:
    """``blocks`` blocks of X measurements with forgotten outcomes."""
    if blocks < 1:
        raise DomainError("blocks must be >= 1")
    kern = _kernel(state.resource)
    rho = kern.x_rings(state.rho, blocks * state.n)
    return VirtualState(state.resource, rho, None, state.records)


# expected logical action ------------------------------------------------------

@dataclass(frozen=True)
class Rotation:
    """``exp(i angle G)`` with ``G`` a ring Pauli."""

    generator: PauliOperator
    angle: float

    def unitary(self) -> np.ndarray:
        G = self.generator.to_dense()
        return math.cos(self.angle) * np.eye(G.shape[0]) + 1j * math.sin(self.angle) * G


def column_generator(n: int, m: int, l: int) -> PauliOperator:
    """``Z_l`` seen from the block input when the tilted site sits in column ``m``."""
    if not (1 <= m <= n and 0 <= l < n):
        raise DomainError(f"site ({m}, {l}) outside an n={n} block")
    return qca.conjugate_power(qca.QcaStep(n), PauliOperator.from_sites(n, z_sites=[l]), -(m - 1))


def expected_rotation(dalpha: float, delta: float, m: int, l: int, nu: complex, n: int) -> Rotation:
    """First-order logical action of one tilted site followed by wire.

    Angle ``2 Im(e^{-i delta} nu) dalpha``, which equals ``2 |nu| dalpha`` for
    the calibrated ``delta``. Columns 1, 2 and ``n`` give ``Z_l``,
    ``Z_{l-1} X_l Z_{l+1}`` and ``X_l``.
    """
    if abs(dalpha) > 0.1:
        raise DomainError("|dalpha| must be <= 0.1 (small-angle regime)")
    if m not in (1, 2, n):
        warnings.warn(f"column {m} is outside the validated set {{1, 2, n}}", stacklevel=2)
    G = column_generator(n, m, l)
    angle = 2.0 * (np.exp(-1j * delta) * nu).imag * dalpha
    # fold the generator's phase (+-1) into the angle
    if G.phase == 2:
        G, angle = G.with_phase(0), -angle
    elif G.phase != 0:
        raise RuntimeError("generator is not Hermitian")
    return Rotation(G, float(angle))


def block_unitary_dense(outcome_rows) -> np.ndarray:
    """Dense ``C(i_{n-1}) ... C(i_0)`` for X-basis outcomes of one block."""
    rows = np.asarray(outcome_rows)
    U = np.eye(2 ** rows.shape[1], dtype=complex)
    for bits in rows:
        U = qca.transition_dense(bits) @ U
    return U


def pauli_membership(U: np.ndarray, P: PauliOperator, tol: float = 1e-10) -> bool:
    """True if ``U`` equals ``P`` up to a global phase."""
    D = P.to_dense()
    M = D.conj().T @ U
    ph = M[0, 0]
    return abs(abs(ph) - 1) < tol and np.max(np.abs(M - ph * np.eye(M.shape[0]))) < tol
