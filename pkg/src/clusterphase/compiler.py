"""Compile logical circuits to measurement-pattern programs and run them.

Layout: logical qubit ``q`` lives on ring row ``2q``. Odd rows are prepared
in ``|+>`` and left alone afterwards, so the column-2 generator
``Z_{l-1} X_l Z_{l+1}`` on an odd row ``l`` acts as ``Z_{l-1} Z_{l+1}`` on the
two neighbouring logical qubits.

Gate conventions: ``rz``, ``rx`` and ``rzz`` with angle ``beta`` mean
``exp(i beta Z)``, ``exp(i beta X)`` and ``exp(i beta Z Z)``; ``measz`` is a
Z-basis readout whose outcome is not fed forward.

A rotation by ``beta`` is split into ``k = ceil(|beta| / (2 |nu| dalpha))``
equal slices. Each slice is one block with a single tilted site followed by
enough X-basis wire for the junk to relax.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg

from . import mbqc_engine as eng
from .errors import CompilationInfeasible, DomainError
from .pauli_lattice import PauliOperator, commutes
from .qca import ring_z
from .tensors import RingTensor

GATE_TYPES = ("rz", "rx", "rzz", "measz")
MAX_ORACLE_QUBITS = 6


@dataclass(frozen=True)
class Gate:
    type: str
    q: int
    beta: float = 0.0

    def __post_init__(self):
        if self.type not in GATE_TYPES:
            raise DomainError(f"unknown gate type {self.type!r}")
        if not math.isfinite(self.beta):
            raise DomainError("gate angle must be finite")


@dataclass(frozen=True)
class LogicalCircuit:
    n_logical: int
    gates: tuple = ()

    def __post_init__(self):
        if self.n_logical < 1:
            raise DomainError("n_logical must be >= 1")
        gates = tuple(g if isinstance(g, Gate) else Gate(**g) for g in self.gates)
        for g in gates:
            if not 0 <= g.q < self.n_logical:
                raise DomainError(f"gate on qubit {g.q} outside 0..{self.n_logical - 1}")
            if g.type == "rzz" and self.n_logical < 2:
                raise DomainError("rzz needs two logical qubits")
        object.__setattr__(self, "gates", gates)

    def to_dict(self) -> dict:
        return {"n_logical": self.n_logical, "gates": [asdict(g) for g in self.gates]}

    @classmethod
    def from_dict(cls, data: dict) -> "LogicalCircuit":
        return cls(int(data["n_logical"]), tuple(Gate(**g) for g in data["gates"]))

    @classmethod
    def from_json(cls, text: str) -> "LogicalCircuit":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Resource:
    """Calibrated resource parameters the compiler needs."""

    n: int
    nu: complex
    xi: float
    dalpha: float
    trivial: bool
    init_repetitions: int = 1
    readout_repetitions: int = 1
    wire: int | None = None

    def __post_init__(self):
        if not 0 < self.dalpha <= 0.1:
            raise DomainError("dalpha must lie in (0, 0.1]")
        if self.wire is not None and self.wire < 1:
            raise DomainError("wire must be >= 1 block")
        if abs(self.nu) < 1e-12:
            raise CompilationInfeasible("nu vanishes: tilted sites have no logical effect",
                                        math.inf)

    @classmethod
    def from_ring(cls, rt: RingTensor, dalpha: float, repetitions: int | None = None,
                  calibration: eng.Calibration | None = None,
                  wire: int | None = None) -> "Resource":
        cal = calibration or eng.calibrate(rt)
        trivial = rt.d == 1
        reps = repetitions if repetitions is not None else (1 if trivial else 50)
        return cls(rt.n, cal.nu, cal.xi, dalpha, trivial, reps, reps, wire)

    @property
    def delta(self) -> float:
        return float(np.angle(self.nu) - np.pi / 2)

    @property
    def wire_blocks(self) -> int:
        """Wire after each pattern: ``max(10 xi, 2 blocks)`` unless set explicitly."""
        if self.wire is not None:
            return self.wire
        return max(2, int(math.ceil(10 * self.xi / self.n)))

    @property
    def slice_floor(self) -> float:
        """Second-order trace-distance error per unit ``dalpha^2``."""
        return max(0.0, 1.0 - 4.0 * abs(self.nu) ** 2)


@dataclass(frozen=True)
class Step:
    """One program step: ``repetitions`` blocks, each followed by wire.

    ``kind`` is ``init``, ``rotation`` or ``readout``. Rotation steps carry the
    tilted site ``(column, row)`` and a signed per-slice ``dalpha``. When
    ``adaptive``, the sign is flipped at run time if the generator
    anticommutes with the logical byproduct left by initialization.
    """

    kind: str
    row: int = 0
    column: int = 1
    dalpha: float = 0.0
    repetitions: int = 1
    wire_blocks: int = 2
    adaptive: bool = True
    source: str = ""

    def pattern(self, n: int, delta: float) -> eng.MeasurementPattern:
        if self.kind == "init":
            return eng.MeasurementPattern.init(n, self.column)
        if self.kind == "readout":
            return eng.MeasurementPattern(n, {(1, self.row): eng.Hadamard01()}, "readout")
        return eng.MeasurementPattern(n, {(self.column, self.row): eng.Tilted(self.dalpha, delta)})


@dataclass
class CompiledProgram:
    n: int
    n_logical: int
    resource: Resource
    steps: list
    error_floor: float
    byproduct_rule: str = ("flip the slice sign when the generator anticommutes with the "
                           "init byproduct Z(s); per-site tilt signs follow the block frame")

    @property
    def num_blocks(self) -> int:
        return sum(s.repetitions * (1 + s.wire_blocks) for s in self.steps)

    @property
    def num_slices(self) -> int:
        return sum(s.repetitions for s in self.steps if s.kind == "rotation")

    def to_dict(self) -> dict:
        res = asdict(self.resource)
        res["nu"] = [self.resource.nu.real, self.resource.nu.imag]
        return {"n": self.n, "n_logical": self.n_logical, "resource": res,
                "error_floor": self.error_floor, "byproduct_rule": self.byproduct_rule,
                "steps": [asdict(s) for s in self.steps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "CompiledProgram":
        res = dict(data["resource"])
        res["nu"] = complex(*res["nu"])
        return cls(data["n"], data["n_logical"], Resource(**res),
                   [Step(**s) for s in data["steps"]], data["error_floor"],
                   data.get("byproduct_rule", ""))


def _generator_sign(n: int, m: int, l: int, letters: str) -> int:
    G = eng.column_generator(n, m, l)
    if G.letters() != letters:
        raise RuntimeError(f"column {m} generator is {G.letters()}, expected {letters}")
    return 1 if G.phase == 0 else -1


def _target(n: int, row: int, kind: str) -> tuple[int, str]:
    lab = ["I"] * n
    if kind == "z":
        lab[row] = "Z"
        return 1, "".join(lab)
    if kind == "x":
        lab[row] = "X"
        return n, "".join(lab)
    lab[(row - 1) % n], lab[row], lab[(row + 1) % n] = "Z", "X", "Z"
    return 2, "".join(lab)


def _rotation_steps(res: Resource, row: int, kind: str, beta: float, source: str,
                    adaptive: bool = True) -> list:
    if beta == 0.0:
        return []
    m, letters = _target(res.n, row, kind)
    sign = _generator_sign(res.n, m, row, letters)
    scale = 2.0 * abs(res.nu)
    k = int(math.ceil(abs(beta) / (scale * res.dalpha) - 1e-12))
    phi = sign * beta / k
    # tan matches the exact trivial-junk response atan(2|nu| da)
    da = math.tan(phi) / scale
    return [Step("rotation", row, m, da, k, res.wire_blocks, adaptive, source)]


def compile(circuit: LogicalCircuit, eps: float, resource: Resource,
            init_column: int | None = None) -> CompiledProgram:
    """Lower ``circuit`` to blocks; raise ``CompilationInfeasible`` above ``eps``.

    Initialization measures every row at once. With ``init_column=1`` this is
    a Z measurement and each row is then turned towards ``|+>`` by sliced
    ``RX(-pi/4)`` and ``RZ(-pi/4)``. The default ``init_column=n`` measures
    ``X_l`` directly, so no rotation slices are spent. Either way outcome
    ``s`` leaves the byproduct ``Z(s)``.

    The error floor is ``sum_slices (1 - 4 |nu|^2) dalpha_s^2``, the summed
    second-order trace-distance error of the slices.
    """
    n, k = resource.n, circuit.n_logical
    if n < 2 * k:
        raise DomainError(f"{k} logical qubits need a ring of at least {2 * k} rows")
    if not 1e-6 < eps < 0.5:
        raise DomainError("eps must lie in (1e-6, 0.5)")
    col = n if init_column is None else init_column
    if col not in (1, n):
        raise DomainError("init_column must be 1 or n")
    steps = [Step("init", 0, col, 0.0, resource.init_repetitions, resource.wire_blocks,
                  False, "init")]
    # |s> -> Z^s |+> up to phase; the Z^s byproduct is absorbed by sign flips
    for row in (range(n) if col == 1 else ()):
        steps += _rotation_steps(resource, row, "x", -math.pi / 4, "init-plus", False)
        steps += _rotation_steps(resource, row, "z", -math.pi / 4, "init-plus", False)
    for t, g in enumerate(circuit.gates):
        src = f"gate{t}:{g.type}"
        row = 2 * g.q
        if g.type == "rz":
            steps += _rotation_steps(resource, row, "z", g.beta, src)
        elif g.type == "rx":
            steps += _rotation_steps(resource, row, "x", g.beta, src)
        elif g.type == "rzz":
            if g.q == k - 1 and n != 2 * k:
                raise DomainError("cyclic rzz needs a ring of exactly 2 * n_logical rows")
            steps += _rotation_steps(resource, row + 1, "zxz", g.beta, src)
        else:
            steps.append(Step("readout", row, 1, 0.0, resource.readout_repetitions,
                              resource.wire_blocks, source=src))
    floor = resource.slice_floor * sum(s.repetitions * s.dalpha ** 2 for s in steps
                                       if s.kind == "rotation")
    if floor > eps:
        raise CompilationInfeasible(
            f"estimated error floor {floor:.3g} exceeds eps={eps:g}; reduce dalpha", floor)
    prog = CompiledProgram(n, k, resource, steps, floor)
    check_frozen_odd(prog)
    return prog


def check_frozen_odd(prog: CompiledProgram) -> None:
    """Odd rows may only be touched by init steps and column-2 rotations."""
    for s in prog.steps:
        if s.kind == "init" or s.source.startswith("init"):
            continue
        if s.row % 2 and not (s.kind == "rotation" and s.column == 2):
            raise RuntimeError(f"step {s} would disturb a frozen odd row")


# execution ------------------------------------------------------------------

@dataclass
class ExecutionResult:
    rho: np.ndarray
    rho_ring: np.ndarray
    init_bits: np.ndarray
    stats: dict = field(default_factory=dict)


def reduce_to_even_rows(rho: np.ndarray, n: int, n_logical: int) -> np.ndarray:
    keep = [2 * q for q in range(n_logical)]
    drop = [r for r in range(n) if r not in keep]
    T = rho.reshape([2] * (2 * n))
    for r in sorted(drop, reverse=True):
        T = np.trace(T, axis1=r, axis2=r + T.ndim // 2)
    D = 2 ** len(keep)
    return T.reshape(D, D)


def execute(prog: CompiledProgram, rt: RingTensor, seed=0, backend: str = "channel",
            calibration: eng.Calibration | None = None) -> ExecutionResult:
    """Run a program on the virtual state.

    The init readout is always sampled; its majority-vote outcome ``s`` leaves
    the logical byproduct ``Z(s)``, which flips the sign of every later slice
    whose generator anticommutes with it and is undone on the final state.
    With ``backend="channel"`` every other block is outcome-averaged in the
    byproduct frame; ``"trajectory"`` samples every block and applies the
    per-site tilt-sign rule.
    """
    if backend not in ("channel", "trajectory"):
        raise DomainError(f"unknown backend {backend!r}")
    if rt.n != prog.n:
        raise DomainError("program and resource ring sizes differ")
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(seed))
    cal = calibration or eng.calibrate(rt)
    n, delta = prog.n, prog.resource.delta
    L = 2 ** n
    state = eng.VirtualState.product(rt, np.eye(L) / L, cal.rho_fix)
    wire = eng.MeasurementPattern.wire(n)
    tally = np.zeros(n, dtype=int)
    init_bits = np.zeros(n, dtype=np.uint8)
    byproduct = PauliOperator.identity(n)
    blocks = 0

    def run_wire(st, count):
        if backend == "channel":
            return eng.oblivious_wire(st, count)
        for _ in range(count):
            st = eng.apply_pattern(st, wire, rng)[1]
        return st

    for s in prog.steps:
        if s.kind == "rotation" and s.adaptive:
            G = eng.column_generator(n, s.column, s.row)
            if commutes(G, byproduct) == -1:
                s = replace(s, dalpha=-s.dalpha)
        pat = s.pattern(n, delta)
        for _ in range(s.repetitions):
            if s.kind == "init":
                if backend == "channel":
                    state = eng.VirtualState(state.resource, state.rho, None, state.records)
                state = eng.apply_pattern(state, pat, rng)[1]
                tally += state.records[-1]["frame_outcomes"][s.column - 1]
            elif backend == "channel":
                state = eng.run_pattern_channel(state, pat)
            else:
                state = eng.apply_pattern(state, pat, rng)[1]
            state = run_wire(state, s.wire_blocks)
            blocks += 1 + s.wire_blocks
        if s.kind == "init":
            init_bits = (2 * tally > s.repetitions).astype(np.uint8)
            byproduct = ring_z(init_bits)
    B = byproduct.to_dense()
    rho_ring = B @ state.logical() @ B.conj().T
    rho = reduce_to_even_rows(rho_ring, n, prog.n_logical)
    stats = {"blocks": blocks, "slices": prog.num_slices, "init_bits": init_bits.tolist(),
             "nu": [cal.nu.real, cal.nu.imag], "xi": cal.xi, "lambda1": cal.lambda1,
             "error_floor": prog.error_floor, "seconds": time.perf_counter() - t0,
             "backend": backend}
    return ExecutionResult(rho, rho_ring, init_bits, stats)


def oracle_simulate(circuit: LogicalCircuit) -> np.ndarray:
    """Dense logical density matrix, starting from ``|+>`` on every qubit."""
    k = circuit.n_logical
    if k > MAX_ORACLE_QUBITS:
        raise DomainError(f"oracle limited to {MAX_ORACLE_QUBITS} logical qubits")
    psi = np.ones(2 ** k) / 2 ** (k / 2)
    rho = np.outer(psi, psi).astype(complex)
    for g in circuit.gates:
        if g.type == "measz":
            Z = PauliOperator.from_sites(k, z_sites=[g.q]).to_dense()
            rho = (rho + Z @ rho @ Z) / 2
            continue
        if g.type == "rz":
            P = PauliOperator.from_sites(k, z_sites=[g.q])
        elif g.type == "rx":
            P = PauliOperator.from_sites(k, x_sites=[g.q])
        else:
            P = PauliOperator.from_sites(k, z_sites=sorted({g.q, (g.q + 1) % k}))
        U = scipy.linalg.expm(1j * g.beta * P.to_dense())
        rho = U @ rho @ U.conj().T
    return rho


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    s = scipy.linalg.sqrtm(rho)
    inner = scipy.linalg.sqrtm(s @ sigma @ s)
    return float(min(1.0, np.real(np.trace(inner)) ** 2))
