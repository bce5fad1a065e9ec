"""A short tour of the Cercignani-Lampis wall.

We fire a single incident velocity at a flat wall, draw many re-emitted
velocities, and compare their histogram with the density evaluated on a grid.
Then we look at the two limits of the kernel, and at how much of the outgoing
mass escapes to high speed when the incident particle is fast.

    python demos/kernel_tour.py
"""

import math

import numpy as np

from clkinetic.geometry import BoundaryPoint
from clkinetic.kernel import (
    AccommodationParams,
    BoundaryCondition,
    cl_density,
    nonregularity_witness,
    normalization_residual,
    sample_outgoing,
    tail_mass,
)
from clkinetic.rng import ParticleStream

normal = np.array([0.0, -1.0])  # outward normal of the floor y = 0
wall = BoundaryPoint(np.zeros(2), normal, 1.0)
u = 1.5 * np.array([math.sin(math.radians(30)), -math.cos(math.radians(30))])
prm = AccommodationParams(0.5, 0.5)
bc = BoundaryCondition("cercignani_lampis", prm)

print("incident velocity", u.round(4))
print(f"normalization residual of the density: {normalization_residual(u, normal, 1.0, prm):.2e}")

out = sample_outgoing(u, wall, bc, ParticleStream(1, 0), size=400_000)
print(f"mean outgoing velocity {out.mean(axis=0).round(3)} (tangential part keeps (1 - r_par) u_t = {0.5 * u[0]:.3f})")

# R is normalized against the normal flux |v.n| dv, so the law of the
# re-emitted velocity is |v.n| R(u -> v); compare that with a fine histogram
edges_t = np.linspace(-3, 3, 31)
edges_n = np.linspace(0, 4, 21)
H, *_ = np.histogram2d(out[:, 0], out[:, 1], bins=[edges_t, edges_n])
H /= len(out) * np.diff(edges_t)[0] * np.diff(edges_n)[0]
ct = 0.5 * (edges_t[1:] + edges_t[:-1])
cn = 0.5 * (edges_n[1:] + edges_n[:-1])
V = np.array([[a, b] for a in ct for b in cn])
dens = (V[:, 1] * cl_density(u, V, normal, 1.0, prm)).reshape(H.shape)
print(f"largest histogram vs midpoint density gap: {np.max(np.abs(H - dens)):.3f} (peak density {dens.max():.3f})")

# limits: r = (1, 1) forgets the incident velocity, small r remembers it
for name, b in [("diffuse", BoundaryCondition.diffuse()), ("nearly specular", BoundaryCondition.cercignani_lampis(1e-4, 1e-4))]:
    s = sample_outgoing(u, wall, b, ParticleStream(2, 0), size=100_000)
    print(f"{name:>16}: mean outgoing {s.mean(axis=0).round(3)}, spread {s.std(axis=0).round(3)}")

# fast incident particles keep a fixed share of their mass at high speed
for m in (10, 20, 40):
    up, uq = nonregularity_witness(m, 1.0, prm)
    w = np.array([uq, -up])
    print(f"incident speed {np.linalg.norm(w):6.1f}: fraction re-emitted faster than {m}: {tail_mass(w, normal, 1.0, prm, m):.3f}")
