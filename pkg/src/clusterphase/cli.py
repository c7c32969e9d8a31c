"""Command-line front end: ``clusterphase {verify,calibrate,run,qca-evolve,reduce-z}``.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 infeasible request.
``CPL_THREADS`` caps the BLAS thread pools and must be set before numpy loads.
"""

from __future__ import annotations

import os

if os.environ.get("CPL_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["CPL_THREADS"])

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from dataclasses import dataclass  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from . import compiler, mbqc_engine, qca, star_reduction, tensors  # noqa: E402
from .errors import (ClusterPhaseError, CompilationInfeasible, NotInjective,  # noqa: E402
                     NotLocal)
from .pauli_lattice import (PauliOperator, TorusLattice, all_symmetries,  # noqa: E402
                            commutes, star)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 4
    N: int = 1
    family: str = "xx-diagonal"
    theta: float = 0.0
    dalpha: float = 0.02
    wire: int | None = None
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    deterministic: bool = False

    def validate(self, ring: bool = False) -> "RunConfig":
        if self.n < 4 or self.n % 2:
            raise UsageError(f"n must be an even integer >= 4, got {self.n}")
        if self.N < 1:
            raise UsageError("N must be >= 1")
        if self.family not in tensors.FAMILIES:
            raise UsageError(f"unknown family {self.family!r}; choose from {tensors.FAMILIES}")
        if ring and self.n not in (4, 6):
            raise UsageError("ring tensors are built for n in {4, 6}")
        if abs(self.theta) > tensors.THETA_MAX:
            raise UsageError(f"|theta| must be <= {tensors.THETA_MAX}")
        if not 0 < self.dalpha <= 0.1:
            raise UsageError("dalpha must lie in (0, 0.1]")
        if self.wire is not None and self.wire < 1:
            raise UsageError("wire must be >= 1 block")
        return self


def _config(args) -> RunConfig:
    keys = RunConfig.__dataclass_fields__
    return RunConfig(**{k: getattr(args, k) for k in keys if hasattr(args, k)})


def _cplx(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _matrix(M: np.ndarray) -> list:
    return [[_cplx(v) for v in row] for row in M]


def _emit(payload, cfg: RunConfig) -> None:
    if cfg.deterministic:
        payload = _strip_timing(payload)
    text = json.dumps(payload, indent=1, sort_keys=True)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in ("seconds", "timestamp")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _check(name: str, ok: bool, residual=None, **extra) -> dict:
    out = {"name": name, "pass": bool(ok)}
    if residual is not None:
        out["residual"] = float(residual)
    out.update(extra)
    return out


# verify suites ------------------------------------------------------------

def suite_symmetries(cfg: RunConfig, samples: int) -> list:
    lat = TorusLattice(cfg.n, cfg.N)
    syms = all_symmetries(lat)
    checks = [_check("symmetry count", len(syms) == 2 * cfg.n, count=len(syms)),
              _check("symmetries are X-type of weight nN",
                     all(s.operator.is_x_type and s.operator.weight == cfg.n * cfg.N for s in syms))]
    bad = sum(commutes(star(lat, x, y), s.operator) != 1 for x, y in lat.sites() for s in syms)
    checks.append(_check("stars commute with every symmetry", bad == 0, bad))
    pair = star_reduction.half_torus_pair(lat).to_operator()
    checks.append(_check("half-torus pair commutes with every symmetry",
                         all(commutes(pair, s.operator) == 1 for s in syms)))
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    fails = 0
    for _ in range(samples):
        P, Q, R = (_random_pauli(lat.num_sites, rng) for _ in range(3))
        fails += (P * Q) * R != P * (Q * R)
        fails += not (P * P.inverse()).is_identity
        fails += commutes(P, Q) * commutes(Q, P) != 1
    checks.append(_check("group axioms on random Paulis", fails == 0, fails, samples=samples))
    return checks


def _random_pauli(size: int, rng) -> PauliOperator:
    return PauliOperator(rng.integers(0, 2, size, dtype=np.uint8),
                         rng.integers(0, 2, size, dtype=np.uint8), int(rng.integers(4)))


def suite_stars(cfg: RunConfig, samples: int) -> list:
    lat = TorusLattice(cfg.n, cfg.N)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    exact = agree = 0
    for _ in range(samples):
        z, _ = star_reduction.random_local_symmetric(lat, rng)
        dec = star_reduction.reduce_to_stars(z)
        exact += dec.to_operator() == z.to_operator()
        ref = star_reduction.gf2_star_solve(z)
        agree += ref is not None and star_reduction.in_star_kernel(
            lat, dec.indicator() ^ ref.indicator())
    try:
        star_reduction.reduce_to_stars(star_reduction.half_torus_pair(lat))
        rejected = False
    except NotLocal:
        rejected = True
    return [_check("decompositions multiply back exactly", exact == samples,
                   samples - exact, samples=samples),
            _check("agreement with GF(2) solve modulo kernel", agree == samples,
                   samples - agree, samples=samples),
            _check("half-torus pair rejected as NotLocal", rejected)]


def suite_qca(cfg: RunConfig, samples: int) -> list:
    n = cfg.n
    if n > 64:
        raise UsageError("qca suite supports n <= 64")
    step = qca.QcaStep(n)
    p = qca.qca_period(n)
    checks = [_check("period equals n", p == n, period=p),
              _check("period Pauli is the identity", qca.period_pauli(step).is_identity)]
    if n <= 8:
        C = qca.c0_dense(n)
        worst = 0.0
        for k in range(n):
            for P in (PauliOperator.from_sites(n, x_sites=[k]),
                      PauliOperator.from_sites(n, z_sites=[k])):
                worst = max(worst, np.max(np.abs(
                    C @ P.to_dense() @ C.conj().T - qca.qca_conjugate(step, P).to_dense())))
        checks.append(_check("symbolic vs dense conjugation", worst < 1e-10, worst))
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        ok = 0
        for _ in range(samples):
            cfg_bits = rng.integers(0, 2, (n, n), dtype=np.uint8)
            U = mbqc_engine.block_unitary_dense(cfg_bits)
            ok += mbqc_engine.pauli_membership(U, qca.block_byproduct(step, cfg_bits))
        checks.append(_check("block transition is the predicted Pauli", ok == samples,
                             samples - ok, samples=samples))
    return checks


def suite_tensors(cfg: RunConfig, samples: int) -> list:
    tol = cfg.tol if cfg.tol is not None else 1e-8
    T = tensors.cluster_peps_tensor()
    res = tensors.symmetry_residuals(T)
    checks = [_check(f"PEPS symmetry {k}", v <= 1e-12, v) for k, v in res.items()]
    n = cfg.n
    if n in (4, 6):
        worst = 0.0
        for i in range(2 ** n):
            bits = (i >> (n - 1 - np.arange(n))) & 1
            A = tensors.ring_from_peps(T, bits)
            worst = max(worst, np.max(np.abs(A - 2 ** (-n / 2) * qca.transition_dense(bits))))
        checks.append(_check("ring contraction equals C(i)", worst <= 1e-12, worst))
        rt = tensors.build_perturbed_ring_tensors(n, tensors.JunkSpec(cfg.family, cfg.theta, n))
        checks.append(_check("factorization residual", rt.residual <= tol, rt.residual,
                             junk_dim=rt.d))
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        worst = 0.0
        for _ in range(min(samples, 8)):
            bits = rng.integers(0, 2, n)
            D = tensors.derive_transition_from_symmetries(n, bits, seed=cfg.seed)
            worst = max(worst, tensors.equal_up_to_phase(D, qca.transition_dense(bits)))
        checks.append(_check("transition derived from symmetries", worst <= 1e-10, worst))
    return checks


SUITES = {"symmetries": suite_symmetries, "stars": suite_stars,
          "qca": suite_qca, "tensors": suite_tensors}


def cmd_verify(args) -> int:
    cfg = _config(args).validate()
    t0 = time.perf_counter()
    checks = SUITES[args.suite](cfg, args.samples)
    ok = all(c["pass"] for c in checks)
    _emit({"suite": args.suite, "n": cfg.n, "N": cfg.N, "seed": cfg.seed, "pass": ok,
           "checks": checks, "seconds": time.perf_counter() - t0}, cfg)
    return EXIT_OK if ok else EXIT_FAIL


# calibrate ------------------------------------------------------------------

def calibration_row(n: int, family: str, theta: float) -> dict:
    row = {"theta": round(theta, 12), "nu_abs": math.nan, "nu_arg": math.nan,
           "xi": math.nan, "lambda1": math.nan, "status": "ok"}
    try:
        rt = tensors.build_perturbed_ring_tensors(n, tensors.JunkSpec(family, theta, n))
        cal = mbqc_engine.calibrate(rt)
        row.update(nu_abs=abs(cal.nu), nu_arg=float(np.angle(cal.nu)),
                   xi=cal.xi, lambda1=cal.lambda1)
    except NotInjective:
        row["status"] = "not-injective"
    except ClusterPhaseError as exc:
        row["status"] = type(exc).__name__
    return row


def cmd_calibrate(args) -> int:
    cfg = _config(args).validate(ring=True)
    if args.theta_step <= 0:
        raise UsageError("theta-step must be positive")
    count = int(round(args.theta_max / args.theta_step))
    grid = [k * args.theta_step for k in range(count + 1)]
    if any(abs(t) > tensors.THETA_MAX + 1e-12 for t in grid):
        raise UsageError(f"theta grid exceeds {tensors.THETA_MAX}")
    rows = [calibration_row(cfg.n, cfg.family, min(t, tensors.THETA_MAX)) for t in grid]
    fields = ["theta", "nu_abs", "nu_arg", "xi", "lambda1", "status"]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    else:
        _emit({"family": cfg.family, "n": cfg.n, "rows": rows}, cfg)
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAIL


# run -------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args).validate(ring=True)
    try:
        with open(args.circuit) as fh:
            circ = compiler.LogicalCircuit.from_json(fh.read())
    except FileNotFoundError:
        raise UsageError(f"circuit file not found: {args.circuit}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot parse circuit: {exc}")
    if 2 * circ.n_logical > cfg.n:
        raise UsageError(f"{circ.n_logical} logical qubits need n >= {2 * circ.n_logical}")
    rt = tensors.build_perturbed_ring_tensors(cfg.n, tensors.JunkSpec(cfg.family, cfg.theta, cfg.n))
    cal = mbqc_engine.calibrate(rt)
    res = compiler.Resource.from_ring(rt, cfg.dalpha, args.repetitions, cal, cfg.wire)
    prog = compiler.compile(circ, args.eps, res, args.init_column)
    out = compiler.execute(prog, rt, seed=cfg.seed, backend=args.backend, calibration=cal)
    ref = compiler.oracle_simulate(circ)
    fid = compiler.fidelity(out.rho, ref)
    _emit({"circuit": circ.to_dict(),
           "config": {"n": cfg.n, "family": cfg.family, "theta": cfg.theta,
                      "dalpha": cfg.dalpha, "seed": cfg.seed, "eps": args.eps,
                      "backend": args.backend},
           "calibration": {"nu": _cplx(cal.nu), "delta": res.delta, "xi": cal.xi,
                           "lambda1": cal.lambda1, "junk_dim": rt.d},
           "program": {"slices": prog.num_slices, "blocks": prog.num_blocks,
                       "steps": len(prog.steps), "error_floor": prog.error_floor,
                       "wire_blocks": prog.steps[0].wire_blocks},
           "fidelity": fid, "infidelity": 1.0 - fid,
           "logical_state": _matrix(out.rho), "stats": out.stats}, cfg)
    return EXIT_OK


# qca-evolve and reduce-z --------------------------------------------------------

def cmd_qca_evolve(args) -> int:
    cfg = _config(args).validate()
    try:
        P = PauliOperator.from_label(args.pauli) if len(args.pauli) == cfg.n else None
    except ClusterPhaseError:
        P = None
    if P is None:
        letter = args.pauli.upper()
        if letter not in ("X", "Z") or not 0 <= args.site < cfg.n:
            raise UsageError("--pauli must be X, Z or a full ring label; --site in 0..n-1")
        P = (PauliOperator.from_sites(cfg.n, x_sites=[args.site]) if letter == "X"
             else PauliOperator.from_sites(cfg.n, z_sites=[args.site]))
    steps = args.steps if args.steps is not None else 2 * cfg.n
    trail = qca.evolve(qca.QcaStep(cfg.n), P, steps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "label", "weight"] + [f"q{k}" for k in range(cfg.n)])
    for t, Q in enumerate(trail):
        w.writerow([t, Q.to_label(), Q.weight] + list(Q.letters()))
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _sites(sites) -> list:
    return [[int(v) for v in s] for s in sorted(sites)]


def _parse_sites(text: str) -> list:
    try:
        return [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse sites {text!r}; use 'x,y;x,y'")


def cmd_reduce_z(args) -> int:
    cfg = _config(args).validate()
    lat = TorusLattice(cfg.n, cfg.N)
    region = None
    if args.sites:
        sites = _parse_sites(args.sites)
        if any(len(s) != 2 for s in sites):
            raise UsageError("sites need two coordinates")
        z = star_reduction.ZSupport(lat, frozenset(lat.wrap(*s) for s in sites))
    else:
        z, region = star_reduction.random_local_symmetric(
            lat, np.random.Generator(np.random.PCG64(cfg.seed)))
    payload = {"n": cfg.n, "N": cfg.N, "support": _sites(z.support),
               "symmetric": star_reduction.is_symmetric(z)}
    try:
        dec = star_reduction.reduce_to_stars(z)
    except ClusterPhaseError as exc:
        payload.update(status=type(exc).__name__, message=str(exc))
        _emit(payload, cfg)
        return EXIT_FAIL
    payload.update(status="ok", stars=_sites(dec.centers),
                   verified=bool(dec.to_operator() == z.to_operator()))
    if args.trail:
        part = [s for s in z.support if lat.sublattice(*s) == lat.sublattice(*min(z.support))]
        region = star_reduction.enclosing_region(lat, part)
        moved, used = star_reduction.relocate_to_boundary(
            star_reduction.ZSupport(lat, frozenset(part)), region)
        payload["relocation"] = {"anchor": [int(v) for v in region.anchor],
                                 "h": int(region.h), "v": int(region.v),
                                 "boundary_support": _sites(moved.support),
                                 "stars": _sites(used.centers)}
    _emit(payload, cfg)
    return EXIT_OK if payload["verified"] else EXIT_FAIL


# parser ------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, ring: bool = False) -> None:
    p.add_argument("--n", type=int, default=4, help="ring size (even, >= 4)")
    p.add_argument("--N", type=int, default=1, help="long-direction block count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--deterministic", action="store_true",
                   help="omit wall-clock fields so identical runs are byte-identical")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    if ring:
        p.add_argument("--family", default="xx-diagonal")
        p.add_argument("--theta", type=float, default=0.0)
        p.add_argument("--dalpha", type=float, default=0.02)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterphase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--samples", type=int, default=50)
    _common(p, ring=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("calibrate", help="sweep theta and report nu, xi, lambda1")
    _common(p, ring=True)
    p.add_argument("--theta-max", type=float, default=0.3)
    p.add_argument("--theta-step", type=float, default=0.05)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="compile and execute a circuit file")
    p.add_argument("circuit", help="LogicalCircuit JSON file")
    _common(p, ring=True)
    p.add_argument("--wire", type=int, default=None, help="wire blocks per segment")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--repetitions", type=int, default=None,
                   help="init/readout repetitions (default 1 for trivial junk, else 50)")
    p.add_argument("--init-column", type=int, default=None)
    p.add_argument("--backend", choices=("channel", "trajectory"), default="channel")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("qca-evolve", help="CSV trail of a ring Pauli under the QCA")
    _common(p)
    p.add_argument("--pauli", default="Z", help="X, Z or a full ring label")
    p.add_argument("--site", type=int, default=0)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_qca_evolve)

    p = sub.add_parser("reduce-z", help="decompose a symmetric Z-operator into stars")
    _common(p)
    p.add_argument("--sites", default=None, help="'x,y;x,y;...' (default: random sample)")
    p.add_argument("--trail", action="store_true", help="include the boundary relocation")
    p.set_defaults(func=cmd_reduce_z)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"clusterphase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompilationInfeasible as exc:
        print(f"clusterphase: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"clusterphase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClusterPhaseError as exc:
        print(f"clusterphase: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
