"""Free-transport Monte Carlo in bounded domains with Cercignani-Lampis walls."""

from .geometry import Ball, BoundaryPoint, ConvexPolygon, Disk, NoExitError, PeriodicBox, TemperatureField
from .kernel import AccommodationParams, BoundaryCondition
from .rng import ParticleStream
from .transport import Ensemble, EnsembleSnapshot, Particle, advance_particle, iter_run, run, sample_initial

__version__ = "0.1.0"

__all__ = [
    "AccommodationParams",
    "Ball",
    "BoundaryCondition",
    "BoundaryPoint",
    "ConvexPolygon",
    "Disk",
    "Ensemble",
    "EnsembleSnapshot",
    "NoExitError",
    "Particle",
    "ParticleStream",
    "PeriodicBox",
    "TemperatureField",
    "advance_particle",
    "iter_run",
    "run",
    "sample_initial",
]
