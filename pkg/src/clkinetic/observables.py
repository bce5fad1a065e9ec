"""Histograms, L1 distances, moments, fluxes and flow fields of particle ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .geometry import Domain
from .quadrature import cell_rule


class GridMismatchError(ValueError):
    pass


# ----------------------------------------------------------------------------
# grids and histograms


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Product grid over position x velocity with one overflow bin.

    ``velocity_mode`` is ``"cartesian"`` (per-axis edges) or ``"speed"`` (edges
    in |v|, starting at 0). A particle whose position or velocity falls outside
    the edges lands in the overflow bin.
    """

    position_edges: tuple
    velocity_edges: tuple
    velocity_mode: str = "cartesian"

    def __post_init__(self):
        pe = tuple(np.asarray(e, dtype=float) for e in self.position_edges)
        ve = tuple(np.asarray(e, dtype=float) for e in self.velocity_edges)
        for e in pe + ve:
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("grid edges must be strictly increasing with at least two entries")
        if self.velocity_mode not in ("cartesian", "speed"):
            raise ValueError(f"unknown velocity mode {self.velocity_mode!r}")
        if self.velocity_mode == "speed" and (len(ve) != 1 or ve[0][0] != 0.0):
            raise ValueError("speed grids take a single edge list starting at 0")
        object.__setattr__(self, "position_edges", pe)
        object.__setattr__(self, "velocity_edges", ve)

    @classmethod
    def cartesian(cls, domain: Domain, n_pos, n_vel, v_max: float | None = None):
        lo, hi = domain.bounding_box()
        n_pos = np.broadcast_to(n_pos, (domain.dim,))
        n_vel = np.broadcast_to(n_vel, (domain.dim,))
        if v_max is None:
            v_max = 6.0 * np.sqrt(domain.theta_bounds[1])
        pe = tuple(np.linspace(a, b, int(k) + 1) for a, b, k in zip(lo, hi, n_pos))
        ve = tuple(np.linspace(-v_max, v_max, int(k) + 1) for k in n_vel)
        return cls(pe, ve, "cartesian")

    @classmethod
    def speed(cls, domain: Domain, n_pos, speed_edges):
        lo, hi = domain.bounding_box()
        n_pos = np.broadcast_to(n_pos, (domain.dim,))
        pe = tuple(np.linspace(a, b, int(k) + 1) for a, b, k in zip(lo, hi, n_pos))
        return cls(pe, (np.asarray(speed_edges, dtype=float),), "speed")

    @property
    def dim(self):
        return len(self.position_edges)

    @property
    def position_shape(self):
        return tuple(e.size - 1 for e in self.position_edges)

    @property
    def velocity_shape(self):
        return tuple(e.size - 1 for e in self.velocity_edges)

    @property
    def shape(self):
        return self.position_shape + self.velocity_shape

    @property
    def n_cells(self):
        return int(np.prod(self.shape))

    @property
    def v_max(self):
        return float(max(abs(e[0]) for e in self.velocity_edges) if self.velocity_mode == "cartesian" else self.velocity_edges[0][-1])

    def key(self):
        return (self.velocity_mode,) + tuple(e.tobytes() for e in self.position_edges + self.velocity_edges)

    def __eq__(self, other):
        return isinstance(other, GridSpec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def cell_index(self, positions, velocities) -> np.ndarray:
        """Flat cell index per particle; ``n_cells`` marks the overflow bin."""
        X = np.atleast_2d(positions)
        V = np.atleast_2d(velocities)
        coords = [X[:, k] for k in range(X.shape[1])]
        if self.velocity_mode == "speed":
            coords.append(np.linalg.norm(V, axis=1))
        else:
            coords += [V[:, k] for k in range(V.shape[1])]
        edges = self.position_edges + self.velocity_edges
        idx = np.zeros(len(X), dtype=np.int64)
        bad = np.zeros(len(X), dtype=bool)
        for c, e in zip(coords, edges):
            j = np.searchsorted(e, c, side="right") - 1
            # the top edge belongs to the last cell
            j = np.where(c == e[-1], e.size - 2, j)
            bad |= (j < 0) | (j >= e.size - 1) | ~np.isfinite(c)
            idx = idx * (e.size - 1) + np.clip(j, 0, e.size - 2)
        idx[bad] = self.n_cells
        return idx

    def cell_centers(self):
        """(positions, velocities) of every cell centre, flattened in cell order."""
        mids = [0.5 * (e[1:] + e[:-1]) for e in self.position_edges + self.velocity_edges]
        mesh = np.meshgrid(*mids, indexing="ij")
        flat = [m.ravel() for m in mesh]
        d = self.dim
        return np.column_stack(flat[:d]), np.column_stack(flat[d:])

    def to_dict(self):
        return {
            "velocity_mode": self.velocity_mode,
            "position_edges": [e.tolist() for e in self.position_edges],
            "velocity_edges": [e.tolist() for e in self.velocity_edges],
        }


@dataclass(frozen=True, eq=False)
class PhaseSpaceHistogram:
    grid: GridSpec
    masses: np.ndarray
    overflow: float
    n: int

    @property
    def total_mass(self):
        return float(self.masses.sum() + self.overflow)

    @property
    def counts(self):
        return np.rint(np.append(self.masses, self.overflow) * self.n).astype(np.int64)


def histogram(ensemble, grid: GridSpec, *, weight: float | None = None) -> PhaseSpaceHistogram:
    """Bin an ensemble (or snapshot). Each particle carries mass ``weight`` (default 1/n)."""
    n = len(ensemble.positions)
    idx = grid.cell_index(ensemble.positions, ensemble.velocities)
    counts = np.bincount(idx, minlength=grid.n_cells + 1)
    w = 1.0 / n if weight is None else weight
    return PhaseSpaceHistogram(grid, counts[:-1] * w, float(counts[-1] * w), n)


def _same_grid(h1, h2):
    if h1.grid != h2.grid:
        raise GridMismatchError("histograms are defined on different grids")


def l1_distance(h1: PhaseSpaceHistogram, h2: PhaseSpaceHistogram) -> float:
    _same_grid(h1, h2)
    return float(np.abs(h1.masses - h2.masses).sum() + abs(h1.overflow - h2.overflow))


# ----------------------------------------------------------------------------
# closed-form densities


class ClosedFormDensity:
    """Phase-space density that can report its mass in every grid cell."""

    total_mass: float = 1.0

    def cell_masses(self, grid: GridSpec) -> np.ndarray:
        raise NotImplementedError


class ZeroDensity(ClosedFormDensity):
    total_mass = 0.0

    def cell_masses(self, grid):
        return np.zeros(grid.n_cells)


def _gaussian_axis_mass(edges, theta):
    return np.diff(special.ndtr(np.asarray(edges) / np.sqrt(theta)))


def gaussian_velocity_masses(grid: GridSpec, theta: float) -> np.ndarray:
    """Mass of the centred Maxwellian of temperature ``theta`` in each velocity cell."""
    d = grid.dim
    if grid.velocity_mode == "speed":
        e = grid.velocity_edges[0] / np.sqrt(theta)
        if d == 2:
            return -np.diff(np.exp(-0.5 * e * e))
        return np.diff(stats.chi(d).cdf(e))
    out = np.ones(())
    for e in grid.velocity_edges:
        out = np.multiply.outer(out, _gaussian_axis_mass(e, theta))
    return out.ravel()


class WallMaxwellianEquilibrium(ClosedFormDensity):
    """Uniform position x centred Maxwellian at the (constant) wall temperature."""

    def __init__(self, domain: Domain, theta: float | None = None, total_mass: float = 1.0):
        lo, hi = domain.theta_bounds
        if theta is None:
            if hi - lo > 1e-15:
                raise ValueError("equilibrium needs a constant wall temperature")
            theta = lo
        self.domain = domain
        self.theta = float(theta)
        self.total_mass = float(total_mass)
        self._cache = {}

    def position_masses(self, grid: GridSpec) -> np.ndarray:
        key = ("pos",) + grid.key()[1 : grid.dim + 1]
        if key not in self._cache:
            edges = grid.position_edges
            mids = np.meshgrid(*[np.arange(e.size - 1) for e in edges], indexing="ij")
            vols = np.empty(mids[0].size)
            for k, cell in enumerate(zip(*[m.ravel() for m in mids])):
                lo = [e[j] for e, j in zip(edges, cell)]
                hi = [e[j + 1] for e, j in zip(edges, cell)]
                vols[k] = self.domain.cell_volume(lo, hi)
            self._cache[key] = vols / self.domain.volume
        return self._cache[key]

    def cell_masses(self, grid):
        pm = self.position_masses(grid)
        vm = gaussian_velocity_masses(grid, self.theta)
        return self.total_mass * np.multiply.outer(pm, vm).ravel()


class QuadratureDensity(ClosedFormDensity):
    """Cell masses of a vectorised ``f(x, v)`` by a fixed-order Gauss-Legendre rule per cell.

    ``f`` takes arrays of shape (..., d) for x and v. Cartesian velocity grids only.
    """

    def __init__(self, f, total_mass: float, *, order: int = 6):
        self.f = f
        self.total_mass = float(total_mass)
        self.order = order

    def cell_masses(self, grid):
        if grid.velocity_mode != "cartesian":
            raise ValueError("quadrature densities need a cartesian velocity grid")
        d = grid.dim
        o = self.order
        prules = [cell_rule(e, o) for e in grid.position_edges]
        vrules = [cell_rule(e, o) for e in grid.velocity_edges]
        # velocity nodes: shape (n_vcells * o^d, d) with matching weights
        vn = np.meshgrid(*[r[0].ravel() for r in vrules], indexing="ij")
        vw = np.ones(())
        for r in vrules:
            vw = np.multiply.outer(vw, r[1].ravel())
        V = np.stack([m.ravel() for m in vn], axis=-1)
        vw = vw.ravel()
        vshape = []
        for r in vrules:
            vshape += [r[0].shape[0], o]
        pshape = grid.position_shape
        out = np.empty(pshape + grid.velocity_shape)
        for cell in np.ndindex(*pshape):
            xs = [prules[k][0][cell[k]] for k in range(d)]
            xw = [prules[k][1][cell[k]] for k in range(d)]
            acc = np.zeros(grid.velocity_shape)
            for node in np.ndindex(*(o,) * d):
                x = np.array([xs[k][node[k]] for k in range(d)])
                w = np.prod([xw[k][node[k]] for k in range(d)])
                vals = self.f(np.broadcast_to(x, V.shape), V) * vw
                # collapse the node axes of every velocity cell
                acc += w * vals.reshape(vshape).sum(axis=tuple(range(1, 2 * d, 2)))
            out[cell] = acc
        return out.ravel()


def l1_distance_to_density(h: PhaseSpaceHistogram, f: ClosedFormDensity, masses: np.ndarray | None = None) -> float:
    """Sum_cells |h - f(cell)| + mass of f outside the grid + overflow of h.

    ``masses`` lets callers reuse precomputed cell masses of ``f``.
    """
    m = f.cell_masses(h.grid) if masses is None else masses
    beyond = max(f.total_mass - float(m.sum()), 0.0)
    return float(np.abs(h.masses - m).sum() + beyond + h.overflow)


def bootstrap_noise_floor(h: PhaseSpaceHistogram, rng: np.random.Generator, n_boot: int = 20):
    """Mean and spread of L1(resampled h, h) over particle-level bootstrap resamples.

    Resampling particles with replacement is a multinomial draw over cells.
    """
    p = np.append(h.masses, h.overflow)
    p = p / p.sum()
    vals = np.empty(n_boot)
    for b in range(n_boot):
        c = rng.multinomial(h.n, p) / h.n
        vals[b] = np.abs(c - p).sum()
    return float(vals.mean()), float(vals.std(ddof=1) if n_boot > 1 else 0.0)


def l1_standard_error(h: PhaseSpaceHistogram, masses: np.ndarray) -> float:
    """Delta-method standard error of the L1 distance between h and fixed cell masses."""
    p = np.append(h.masses, h.overflow)
    sign = np.sign(p - np.append(masses, 0.0))
    # Var of sum_j s_j p_j under multinomial sampling
    mean = float(sign @ p)
    var = float((sign * sign) @ p) - mean * mean
    return float(np.sqrt(max(var, 0.0) / h.n))


# ----------------------------------------------------------------------------
# moments and fluxes


@dataclass(frozen=True)
class MomentRecord:
    time: float
    alpha: float
    value: float
    std_error: float
    excluded_mass: float = 0.0


def weighted_moment(ensemble, alpha: float, domain: Domain) -> MomentRecord:
    """Mean of (1 + sigma(x, v) + sqrt|v|)**alpha over particles with nonzero velocity."""
    d = domain.dim
    if not (0 <= alpha < d + 1):
        raise ValueError(f"alpha must lie in [0, {d + 1})")
    X = np.asarray(ensemble.positions)
    V = np.asarray(ensemble.velocities)
    keep = np.any(V != 0, axis=1)
    n = len(X)
    w = domain.bracket(X[keep], V[keep]) ** alpha if keep.any() else np.array([])
    w = np.atleast_1d(w)
    value = float(w.mean()) if w.size else np.nan
    se = float(w.std(ddof=1) / np.sqrt(w.size)) if w.size > 1 else 0.0
    return MomentRecord(float(getattr(ensemble, "time", 0.0)), float(alpha), value, se, float((~keep).sum() / n))


@dataclass(frozen=True)
class FluxTrace:
    times: np.ndarray
    cutoffs: np.ndarray
    counts: np.ndarray  # (n_times, n_cutoffs) cumulative wall events, all particles
    n: int

    @classmethod
    def from_snapshots(cls, snapshots, cutoffs, start_time: float = 0.0):
        times = np.array([start_time] + [s.time for s in snapshots])
        rows = [np.zeros(len(cutoffs), dtype=np.int64)] + [np.asarray(s.flux_counts) for s in snapshots]
        n = len(snapshots[0]) if snapshots else 0
        return cls(times, np.asarray(cutoffs, dtype=float), np.array(rows), n)


def flux_counter(trace: FluxTrace, lam: float):
    """(times, cumulative, per_interval) truncated wall flux per unit mass for cutoff ``lam``."""
    if not np.isfinite(lam):
        raise ValueError("flux counter needs a finite speed cutoff")
    if lam <= 0:
        z = np.zeros(trace.times.size)
        return trace.times, z, np.diff(z)
    hit = np.flatnonzero(trace.cutoffs == lam)
    if hit.size == 0:
        raise ValueError(f"cutoff {lam} was not recorded; available: {trace.cutoffs.tolist()}")
    cum = trace.counts[:, hit[0]] / trace.n
    return trace.times, cum, np.diff(cum)


# ----------------------------------------------------------------------------
# flow field and overlap


@dataclass(frozen=True)
class FlowField:
    position_edges: tuple
    mean: np.ndarray  # (n_cells, d), NaN where empty
    std_error: np.ndarray
    counts: np.ndarray
    empty: np.ndarray


def velocity_flow_field(ensemble, position_edges) -> FlowField:
    X = np.asarray(ensemble.positions)
    V = np.asarray(ensemble.velocities)
    d = X.shape[1]
    edges = tuple(np.asarray(e, dtype=float) for e in position_edges)
    shape = tuple(e.size - 1 for e in edges)
    idx = np.zeros(len(X), dtype=np.int64)
    inside = np.ones(len(X), dtype=bool)
    for k, e in enumerate(edges):
        j = np.searchsorted(e, X[:, k], side="right") - 1
        j = np.where(X[:, k] == e[-1], e.size - 2, j)
        inside &= (j >= 0) & (j < e.size - 1)
        idx = idx * (e.size - 1) + np.clip(j, 0, e.size - 2)
    idx = idx[inside]
    Vi = V[inside]
    m = int(np.prod(shape))
    counts = np.bincount(idx, minlength=m)
    s1 = np.stack([np.bincount(idx, Vi[:, k], minlength=m) for k in range(d)], axis=1)
    s2 = np.stack([np.bincount(idx, Vi[:, k] ** 2, minlength=m) for k in range(d)], axis=1)
    empty = counts == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        c = counts[:, None].astype(float)
        mean = s1 / c
        var = (s2 - c * mean * mean) / (c - 1)
        se = np.sqrt(np.maximum(var, 0.0) / c)
    se[counts < 2] = np.nan
    return FlowField(edges, mean, se, counts, empty)


def sublevel_mask(grid: GridSpec, domain: Domain, lam: float) -> np.ndarray:
    """Cells whose centre satisfies 1 + sigma + sqrt|v| <= lam (cartesian grids)."""
    if grid.velocity_mode != "cartesian":
        raise ValueError("sublevel masks need a cartesian velocity grid")
    X, V = grid.cell_centers()
    inside = domain.distance_outside(X) <= 0
    ok = np.zeros(len(X), dtype=bool)
    moving = inside & np.any(V != 0, axis=1)
    ok[moving] = domain.bracket(X[moving], V[moving]) <= lam
    return ok


def minorization_overlap(h1: PhaseSpaceHistogram, h2: PhaseSpaceHistogram, mask=None) -> float:
    _same_grid(h1, h2)
    both = np.minimum(h1.masses, h2.masses)
    if mask is None:
        return float(both.sum() + min(h1.overflow, h2.overflow))
    return float(both[np.asarray(mask, dtype=bool)].sum())
