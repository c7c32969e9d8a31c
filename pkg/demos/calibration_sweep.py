"""How the logical response to a measurement tilt fades inside the phase.

For each junk family the ring tensors are built, factored and calibrated.
``|nu|`` is the rotation per unit tilt (1/2 at the cluster point) and ``xi``
is the junk correlation length in rings, which sets the wire length.
"""

import numpy as np

from clusterphase.mbqc_engine import calibrate
from clusterphase.tensors import FAMILIES, JunkSpec, build_perturbed_ring_tensors


def main():
    thetas = np.round(np.arange(0.0, 0.301, 0.05), 2)
    for family in FAMILIES:
        print(f"\n{family}")
        print(f"{'theta':>6} {'|nu|':>8} {'arg nu':>8} {'lambda1':>9} {'xi':>7} {'d':>3}")
        for theta in thetas:
            rt = build_perturbed_ring_tensors(4, JunkSpec(family, float(theta), 4))
            cal = calibrate(rt)
            print(f"{theta:6.2f} {cal.nu_abs:8.4f} {np.angle(cal.nu):8.4f} "
                  f"{cal.lambda1:9.4f} {cal.xi:7.2f} {rt.d:3d}")


if __name__ == "__main__":
    main()
