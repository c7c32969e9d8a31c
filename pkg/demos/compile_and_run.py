"""Compile a two-qubit circuit into measurement blocks and run it.

At the cluster point the sliced rotations are exact. Inside the phase each
slice leaves an error of order ``dalpha^2``, so halving the tilt halves the
total infidelity of a fixed circuit.
"""

from clusterphase.compiler import (Gate, LogicalCircuit, Resource, compile, execute, fidelity,
                                   oracle_simulate)
from clusterphase.mbqc_engine import calibrate
from clusterphase.tensors import JunkSpec, build_perturbed_ring_tensors

CIRCUIT = LogicalCircuit(2, (Gate("rz", 0, 0.3), Gate("rx", 1, 0.2), Gate("rzz", 0, 0.25)))


def run(family, theta, dalpha, seed=0):
    rt = build_perturbed_ring_tensors(4, JunkSpec(family, theta, 4))
    cal = calibrate(rt)
    prog = compile(CIRCUIT, 0.1, Resource.from_ring(rt, dalpha, calibration=cal))
    out = execute(prog, rt, seed=seed, calibration=cal)
    infid = 1 - fidelity(out.rho, oracle_simulate(CIRCUIT))
    return prog, infid


def main():
    print(f"{'family':>12} {'theta':>6} {'dalpha':>7} {'slices':>7} {'blocks':>7} "
          f"{'floor':>9} {'infidelity':>11}")
    for family, theta in [("xx-diagonal", 0.0), ("xx-diagonal", 0.1), ("xx-filter", 0.1)]:
        for dalpha in (0.04, 0.02, 0.01):
            prog, infid = run(family, theta, dalpha)
            print(f"{family:>12} {theta:6.2f} {dalpha:7.2f} {prog.num_slices:7d} "
                  f"{prog.num_blocks:7d} {prog.error_floor:9.2e} {infid:11.2e}")


if __name__ == "__main__":
    main()
