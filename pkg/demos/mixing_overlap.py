"""How fast two very different starts become indistinguishable.

Two point masses in the disk, with different positions and velocities, are
run with the same CL walls. We histogram both and add up the mass they share
on the set of moderate (position, velocity) pairs. At first the overlap is
zero; once particles have hit the wall and been re-emitted, it grows towards
the equilibrium mass of that set.

    python demos/mixing_overlap.py
"""

import numpy as np

from clkinetic.harness.experiments import overlap_experiment

times = tuple(0.25 * 2 ** (k / 2) for k in range(11))
r = overlap_experiment(n=100_000, times=times)
for t, o in zip(r.times, r.overlaps):
    print(f"T={t:6.2f}  shared mass {o:.4f}  " + "#" * int(round(50 * o)))
print("non-decreasing:", bool(np.all(np.diff(r.overlaps) >= -0.003)), "(up to histogram noise)")
