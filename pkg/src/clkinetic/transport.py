"""Event-driven free transport with stochastic wall reflections.

Particles fly in straight lines; at every wall hit the boundary condition of
the hit face draws a new velocity from the particle's own counter-based
stream. All of the work happens in one numba kernel, shared by the single
particle API and the threaded ensemble runner.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .geometry import BOX, Domain, boundary_parameter, exit_time_kernel, field_value, outward_normal, snap_to_boundary
from .kernel import BoundaryCondition, reflect
from .rng import ParticleStream

MAX_EVENTS = 10**6
OK, RUNAWAY, GRAZING = 0, 1, 2


class RunawayError(RuntimeError):
    """Too many wall events in one advance call."""


class GrazingFailure(RuntimeError):
    """A reflection exhausted its grazing resamples."""


@dataclass(frozen=True)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    collision_count: int = 0


@dataclass
class Ensemble:
    positions: np.ndarray
    velocities: np.ndarray
    collision_count: np.ndarray
    master_seed: int = 0
    time: float = 0.0
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float)
        self.collision_count = np.ascontiguousarray(self.collision_count, dtype=np.int64)
        if self.ids is None:
            self.ids = np.arange(len(self.positions), dtype=np.int64)
        if not (self.positions.shape == self.velocities.shape and len(self.collision_count) == len(self.positions)):
            raise ValueError("positions, velocities and collision counts must have matching lengths")

    @classmethod
    def from_arrays(cls, positions, velocities, master_seed=0, time=0.0):
        positions = np.asarray(positions, dtype=float)
        return cls(positions, np.asarray(velocities, dtype=float), np.zeros(len(positions), np.int64), master_seed, time)

    def __len__(self):
        return len(self.positions)

    @property
    def dim(self):
        return self.positions.shape[1]

    def particle(self, i) -> Particle:
        return Particle(self.positions[i].copy(), self.velocities[i].copy(), int(self.collision_count[i]))

    def copy(self) -> "Ensemble":
        return Ensemble(
            self.positions.copy(), self.velocities.copy(), self.collision_count.copy(), self.master_seed, self.time, self.ids.copy()
        )

    def snapshot(self, flux=None) -> "EnsembleSnapshot":
        return EnsembleSnapshot(
            self.time, self.positions.copy(), self.velocities.copy(), self.collision_count.copy(), flux
        )


@dataclass(frozen=True)
class EnsembleSnapshot:
    time: float
    positions: np.ndarray
    velocities: np.ndarray
    collision_count: np.ndarray
    flux_counts: np.ndarray | None = field(default=None)

    def __len__(self):
        return len(self.positions)

    @property
    def dim(self):
        return self.positions.shape[1]


# ----------------------------------------------------------------------------
# kernel


@nb.njit(cache=True, nogil=True)
def _advance(x, v, count, dt, code, gp, ftab, tnodes, ff, bctab, seed, pid, cutoffs, flux, max_events):
    """Advance one particle in place; returns (status, events)."""
    d = x.size
    remaining = dt
    events = 0
    nrm = np.empty(d)
    newv = np.empty(d)
    while remaining > 0.0:
        sigma, face = exit_time_kernel(code, gp, x, v)
        if sigma < 0.0 or sigma >= remaining:
            for k in range(d):
                x[k] += remaining * v[k]
            break
        for k in range(d):
            x[k] += sigma * v[k]
        remaining -= sigma
        snap_to_boundary(code, gp, x, face)
        outward_normal(code, gp, x, face, nrm)
        theta = field_value(ftab, tnodes, ff[face], boundary_parameter(code, gp, x, face))
        speed = 0.0
        for k in range(d):
            speed += v[k] * v[k]
        speed = np.sqrt(speed)
        for j in range(cutoffs.size):
            if speed <= cutoffs[j]:
                flux[j] += 1
        if reflect(bctab[face], theta, v, nrm, seed, pid, count[0], newv) != 0:
            return GRAZING, events
        for k in range(d):
            v[k] = newv[k]
        count[0] += 1
        events += 1
        if events > max_events:
            return RUNAWAY, events
    if code == BOX:
        x[0] = x[0] - np.floor(x[0])
    return OK, events


@nb.njit(cache=True, nogil=True)
def _advance_range(X, V, C, ids, lo, hi, dt, code, gp, ftab, tnodes, ff, bctab, seed, cutoffs, F, status, max_events):
    cnt = np.empty(1, dtype=np.int64)
    for i in range(lo, hi):
        cnt[0] = C[i]
        st, _ = _advance(X[i], V[i], cnt, dt, code, gp, ftab, tnodes, ff, bctab, seed, np.uint64(ids[i]), cutoffs, F[i], max_events)
        C[i] = cnt[0]
        status[i] = st


def _bc_table(domain: Domain, bc) -> np.ndarray:
    if isinstance(bc, BoundaryCondition):
        bcs = [bc] * domain.n_faces
    else:
        bcs = list(bc)
        if len(bcs) != domain.n_faces:
            raise ValueError(f"expected {domain.n_faces} boundary conditions, got {len(bcs)}")
    return np.ascontiguousarray(np.stack([b.row for b in bcs]))


def _raise_status(status, ids):
    bad = np.flatnonzero(status)
    if bad.size == 0:
        return
    i = bad[0]
    if status[i] == RUNAWAY:
        raise RunawayError(f"particle {ids[i]} exceeded {MAX_EVENTS} wall events in one advance")
    raise GrazingFailure(f"particle {ids[i]}: grazing resample limit reached")


def advance_particle(p: Particle, dt: float, domain: Domain, bc, stream: ParticleStream, *, flux_cutoffs=()) -> Particle:
    """Transport one particle for time ``dt``; the input is left untouched."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    x = np.array(p.position, dtype=float)
    v = np.array(p.velocity, dtype=float)
    cnt = np.array([p.collision_count], dtype=np.int64)
    code, gp, ftab, tnodes, ff = domain.packed
    cut = np.asarray(flux_cutoffs, dtype=float)
    flux = np.zeros(cut.size, dtype=np.int64)
    st, _ = _advance(x, v, cnt, float(dt), code, gp, ftab, tnodes, ff, _bc_table(domain, bc),
                     np.uint64(stream.master_seed), np.uint64(stream.index), cut, flux, MAX_EVENTS)
    _raise_status(np.array([st]), np.array([stream.index]))
    return Particle(x, v, int(cnt[0]))


def _chunks(n, workers):
    workers = max(1, min(int(workers), n)) if n else 1
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return list(zip(bounds[:-1], bounds[1:]))


def advance_ensemble(ens: Ensemble, dt: float, domain: Domain, bc, *, workers: int = 1, flux_cutoffs=(), flux_out=None):
    """Advance all particles by ``dt`` in place.

    ``flux_out``, if given, is an (n, len(flux_cutoffs)) int64 array of
    per-particle wall-event counts that gets incremented.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    code, gp, ftab, tnodes, ff = domain.packed
    bct = _bc_table(domain, bc)
    cut = np.ascontiguousarray(flux_cutoffs, dtype=float)
    n = len(ens)
    if flux_out is None:
        flux_out = np.zeros((n, cut.size), dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    seed = np.uint64(ens.master_seed)

    def job(bounds):
        _advance_range(ens.positions, ens.velocities, ens.collision_count, ens.ids, bounds[0], bounds[1], float(dt),
                       code, gp, ftab, tnodes, ff, bct, seed, cut, flux_out, status, MAX_EVENTS)

    parts = _chunks(n, workers)
    if len(parts) == 1:
        job(parts[0])
    else:
        with ThreadPoolExecutor(len(parts)) as pool:
            list(pool.map(job, parts))
    _raise_status(status, ens.ids)
    ens.time += dt
    return flux_out


def iter_run(ens: Ensemble, domain: Domain, bc, snapshot_times, *, workers: int = 1, flux_cutoffs=()):
    """Yield an :class:`EnsembleSnapshot` at each requested absolute time.

    Snapshots carry cumulative wall-event counts (summed over particles) for
    each speed cutoff, counted from the start of this call.
    """
    times = [float(t) for t in snapshot_times]
    if any(b < a for a, b in zip(times[:-1], times[1:])):
        raise ValueError("snapshot times must be ascending")
    if times and times[0] < ens.time:
        raise ValueError("snapshot times must not precede the ensemble time")
    cut = np.asarray(flux_cutoffs, dtype=float)
    flux = np.zeros((len(ens), cut.size), dtype=np.int64)
    for t in times:
        advance_ensemble(ens, t - ens.time, domain, bc, workers=workers, flux_cutoffs=cut, flux_out=flux)
        ens.time = t
        yield ens.snapshot(flux.sum(axis=0) if cut.size else None)


def run(ens: Ensemble, domain: Domain, bc, snapshot_times, *, workers: int = 1, flux_cutoffs=()):
    return list(iter_run(ens, domain, bc, snapshot_times, workers=workers, flux_cutoffs=flux_cutoffs))


# ----------------------------------------------------------------------------
# initial data


def sample_initial(descriptor: dict, n: int, rng: np.random.Generator, domain: Domain, master_seed: int = 0) -> Ensemble:
    """Draw ``n`` i.i.d. particles.

    Descriptor kinds: ``maxwellian`` (uniform position, isotropic Maxwellian of
    ``temperature``), ``point`` (``position`` and ``velocity``),
    ``fixed_velocity`` (uniform position, given ``velocity``) and
    ``toy_steady`` (the periodic-box steady state, needs ``r_perp``, ``r_par``).
    """
    if n < 1:
        raise ValueError("need at least one particle")
    kind = descriptor.get("kind")
    d = domain.dim
    if kind == "maxwellian":
        T = float(descriptor.get("temperature", 1.0))
        if T <= 0:
            raise ValueError("temperature must be positive")
        x = domain.sample_uniform(n, rng)
        v = np.sqrt(T) * rng.standard_normal((n, d))
    elif kind == "point":
        x = np.tile(np.asarray(descriptor["position"], dtype=float), (n, 1))
        v = np.tile(np.asarray(descriptor["velocity"], dtype=float), (n, 1))
        if np.any(domain.distance_outside(x[:1]) > 1e-10):
            raise ValueError("point-mass position lies outside the domain")
    elif kind == "fixed_velocity":
        x = domain.sample_uniform(n, rng)
        v = np.tile(np.asarray(descriptor["velocity"], dtype=float), (n, 1))
    elif kind == "toy_steady":
        from .toymodel import ToyModelSpec, sample_steady

        spec = ToyModelSpec.from_domain(domain, float(descriptor["r_perp"]), float(descriptor["r_par"]))
        draw = sample_steady(spec, n, rng)
        x, v = draw.positions, draw.velocities
    else:
        raise ValueError(f"unknown initial distribution {kind!r}")
    if x.shape[1] != d or v.shape[1] != d:
        raise ValueError("initial data dimension does not match the domain")
    return Ensemble(x, v, np.zeros(n, np.int64), master_seed, 0.0)
