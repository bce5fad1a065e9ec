"""Relaxation of a gas in the unit disk towards the wall Maxwellian.

Every particle starts with the same velocity (1, 0). Walls re-emit particles
and the ensemble slowly forgets its initial velocity. The slowest particles set
the pace: a particle with speed |v| needs time of order 1/|v| to cross the disk,
so the distance to equilibrium decays like a power of t, not exponentially.

The full-size run (10**6 particles, t up to 100) takes about a minute per wall
model; pass --n to shrink it.

    python demos/disk_relaxation.py --n 200000
"""

import argparse

from clkinetic.harness.decay import InsufficientDynamicRange
from clkinetic.harness.experiments import decay_experiment
from clkinetic.kernel import BoundaryCondition

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=200_000)
ap.add_argument("--t-end", type=float, default=100.0)
args = ap.parse_args()

for label, bc in [("diffuse", BoundaryCondition.diffuse()), ("CL(0.5, 0.5)", BoundaryCondition.cercignani_lampis(0.5, 0.5))]:
    try:
        r = decay_experiment(bc, n=args.n, t_end=args.t_end, label=label)
    except InsufficientDynamicRange as exc:
        # too few particles: the curve hits the Monte Carlo floor before enough points are in the fit window
        print(f"\n{label}: {exc}; rerun with a larger --n")
        continue
    print(f"\n{label}: {r.seconds:.0f}s, noise floor {r.noise_floor:.2e}")
    for t, d, se in zip(r.times[::4], r.distances[::4], r.std_errors[::4]):
        print(f"  t={t:7.2f}  L1={d:.5f} +- {se:.5f}")
    f = r.fit
    print(f"  fitted slope {f.slope:.3f}, 95% CI ({f.ci95[0]:.3f}, {f.ci95[1]:.3f}) on t in [{f.window[0]:g}, {f.window[1]:.3g}]")
    print("  in the disk (d = 2) the expected slope is -2")
