"""Readout accuracy against the number of repeated weak Z measurements.

Inside the phase one readout block is only a weak measurement of the logical
Z: the junk blurs the outcome. Repeating the block (with wire in between)
and taking a majority vote recovers a near-projective measurement. The
compiler's default of 50 repetitions sits on the flat part of this curve.
"""

import numpy as np

from clusterphase.mbqc_engine import (Hadamard01, MeasurementPattern, VirtualState, apply_pattern,
                                      calibrate, oblivious_wire)
from clusterphase.tensors import JunkSpec, build_perturbed_ring_tensors

REPS = (1, 5, 11, 25, 51)


def readout_bits(rt, cal, logical, reps, rng):
    st = VirtualState.product(rt, logical, cal.rho_fix)
    pat = MeasurementPattern(rt.n, {(1, 0): Hadamard01()}, "readout")
    bits = []
    for _ in range(reps):
        _, st = apply_pattern(st, pat, rng)
        bits.append(st.records[-1]["frame_outcomes"][0, 0])
        st = oblivious_wire(st, cal.wire_blocks(rt.n))
    return np.array(bits)


def main(trials=60, seed=0):
    logical = np.zeros(16)
    logical[0b1000] = 1.0  # row 0 in |1>
    rng = np.random.Generator(np.random.PCG64(seed))
    print(f"{'family':>12} {'theta':>6} " + " ".join(f"R={r:<4d}" for r in REPS))
    for family in ("xx-diagonal", "xx-filter"):
        theta = 0.3
        rt = build_perturbed_ring_tensors(4, JunkSpec(family, theta, 4))
        cal = calibrate(rt)
        runs = np.array([readout_bits(rt, cal, logical, max(REPS), rng) for _ in range(trials)])
        correct = [np.mean(2 * runs[:, :r].sum(axis=1) > r) for r in REPS]
        print(f"{family:>12} {theta:6.2f} " + " ".join(f"{c:6.2f}" for c in correct))


if __name__ == "__main__":
    main()
