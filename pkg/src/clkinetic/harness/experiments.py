"""Experiment pipelines shared by the CLI, the acceptance tests and the demos."""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..geometry import Disk, PeriodicBox
from ..kernel import BoundaryCondition
from ..observables import (
    GridSpec,
    WallMaxwellianEquilibrium,
    bootstrap_noise_floor,
    histogram,
    l1_distance_to_density,
    l1_standard_error,
    minorization_overlap,
    sublevel_mask,
    weighted_moment,
)
from ..toymodel import ToyModelSpec, sample_steady, steady_cell_density
from ..transport import Ensemble, iter_run, sample_initial
from .config import ExperimentConfig, config_hash
from .decay import fit_decay
from .io import write_csv, write_snapshot_csv, write_snapshot_npz


def reference_density(domain, bc, initial: dict | None = None):
    """Known steady state for the configured walls, or None."""
    bcs = bc if isinstance(bc, list) else [bc] * domain.n_faces
    if isinstance(domain, PeriodicBox):
        top = domain.top_temperature
        floor, lid = bcs
        if lid.variant == "diffuse" and top.kind == "constant" and top.params[0] == 1.0:
            if floor.variant == "cercignani_lampis":
                try:
                    spec = ToyModelSpec.from_domain(domain, floor.params.r_perp, floor.params.r_par)
                except ValueError:
                    return None
                return steady_cell_density(spec)
        return None
    lo, hi = domain.theta_bounds
    if hi - lo > 1e-15:
        return None
    if all(b.stochastic and not (b.variant == "maxwell_mix" and b.alpha == 0) for b in bcs):
        return WallMaxwellianEquilibrium(domain, lo)
    return None


def _versions():
    import numba
    import scipy

    return {
        "clkinetic": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def simulate(cfg: ExperimentConfig, out_dir) -> dict:
    """Run a configured experiment and write snapshots, observables.csv and manifest.json."""
    start = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sha = cfg.sha256
    dom = cfg.build_domain()
    bc = cfg.build_boundary(dom)
    grid = cfg.build_grid(dom)
    times = cfg.snapshot_times()
    rng = np.random.default_rng(cfg.seed)
    ens = sample_initial(cfg.initial, cfg.n_particles, rng, dom, master_seed=cfg.seed)
    ref = reference_density(dom, bc, cfg.initial)
    masses = ref.cell_masses(grid) if ref is not None else None
    cutoffs = [float(c) for c in cfg.flux_cutoffs]
    rows = []
    files = []
    last_hist = None
    for k, snap in enumerate(iter_run(ens, dom, bc, times, workers=cfg.workers, flux_cutoffs=cutoffs)):
        if cfg.snapshot_format == "csv":
            name = f"snapshot_{k:03d}.csv"
            write_snapshot_csv(out / name, snap, sha)
            files.append(name)
        elif cfg.snapshot_format == "npz":
            name = f"snapshot_{k:03d}.npz"
            write_snapshot_npz(out / name, snap, sha)
            files.append(name)
        n = len(snap)
        h = histogram(snap, grid)
        last_hist = h
        rows.append((snap.time, "mass", h.total_mass, 0.0))
        if masses is not None:
            rows.append((snap.time, "l1_distance", l1_distance_to_density(h, ref, masses), l1_standard_error(h, masses)))
        for a in cfg.moment_alphas:
            m = weighted_moment(snap, a, dom)
            rows.append((snap.time, f"moment_alpha_{a:g}", m.value, m.std_error))
        for j, c in enumerate(cutoffs):
            cnt = int(snap.flux_counts[j])
            rows.append((snap.time, f"flux_lambda_{c:g}", cnt / n, np.sqrt(cnt) / n))
    if masses is not None and last_hist is not None:
        floor, spread = bootstrap_noise_floor(last_hist, np.random.default_rng([cfg.seed, 1]), cfg.noise_bootstrap)
        rows.append((times[-1], "l1_noise_floor", floor, spread))
    write_csv(out / "observables.csv", ["time", "observable", "value", "std_error"], rows, sha)
    files.append("observables.csv")
    (out / "config.json").write_text(cfg.to_json(), encoding="utf-8")
    manifest = {
        "config_sha256": sha,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "n_particles": cfg.n_particles,
        "snapshot_times": times,
        "files": files,
        "versions": _versions(),
        "wall_clock_seconds": time.time() - start,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def read_l1_curve(path):
    """(times, distances, noise_floor) from an observables CSV."""
    from .io import read_csv

    _, header, rows = read_csv(path)
    col = {h: i for i, h in enumerate(header)}
    t, y, floor = [], [], None
    for r in rows:
        name = r[col["observable"]]
        if name == "l1_distance":
            t.append(float(r[col["time"]]))
            y.append(float(r[col["value"]]))
        elif name == "l1_noise_floor":
            floor = float(r[col["value"]])
    return np.array(t), np.array(y), floor


# ----------------------------------------------------------------------------
# decay-rate experiment

DECAY_SPEED_EDGES = (0.0, 0.5, 6.0)


@dataclass
class DecayResult:
    label: str
    times: np.ndarray
    distances: np.ndarray
    std_errors: np.ndarray
    noise_floor: float
    fit: object
    seconds: float


def decay_experiment(bc: BoundaryCondition, *, n: int = 10**6, t_end: float = 100.0, per_octave: int = 4,
                     seed: int = 2024, speed_edges=DECAY_SPEED_EDGES, velocity=(1.0, 0.0), t_min: float = 4.0,
                     workers: int = 1, label: str = "") -> DecayResult:
    """L1 distance to equilibrium in the unit disk from a single-velocity start.

    The grid keeps one position cell and splits speeds at a small threshold: the
    approach to equilibrium is limited by the slowest re-emitted particles,
    which need a time of order 1/|v| to cross the disk.
    """
    start = time.time()
    disk = Disk()
    grid = GridSpec.speed(disk, 1, list(speed_edges))
    ref = WallMaxwellianEquilibrium(disk, 1.0)
    masses = ref.cell_masses(grid)
    rng = np.random.default_rng(seed)
    ens = sample_initial({"kind": "fixed_velocity", "velocity": list(velocity)}, n, rng, disk, master_seed=seed)
    sched = [2.0 ** (k / per_octave) for k in range(int(np.floor(per_octave * np.log2(t_end) + 1e-9)) + 1)]
    if sched[-1] < t_end:
        sched.append(t_end)
    ts, ds, ses = [], [], []
    h = None
    for snap in iter_run(ens, disk, bc, sched, workers=workers):
        h = histogram(snap, grid)
        ts.append(snap.time)
        ds.append(l1_distance_to_density(h, ref, masses))
        ses.append(l1_standard_error(h, masses))
    floor, _ = bootstrap_noise_floor(h, np.random.default_rng([seed, 1]), 50)
    fit = fit_decay(ts, ds, floor, t_min=t_min)
    return DecayResult(label, np.array(ts), np.array(ds), np.array(ses), floor, fit, time.time() - start)


# ----------------------------------------------------------------------------
# toy-model stationarity


@dataclass
class StationarityResult:
    times: np.ndarray
    distances: np.ndarray
    std_errors: np.ndarray
    max_z: float
    passed: bool
    acceptance_rate: float


def l1_bootstrap_se(h, masses, rng, n_boot=50):
    """Bootstrap standard deviation of the L1 distance to fixed cell masses."""
    p = np.append(h.masses, h.overflow)
    p = p / p.sum()
    beyond = max(1.0 - masses.sum(), 0.0)
    m = np.append(masses, 0.0)
    vals = [np.abs(rng.multinomial(h.n, p) / h.n - m).sum() + beyond for _ in range(n_boot)]
    return float(np.std(vals, ddof=1))


def toy_stationarity(spec: ToyModelSpec, *, n: int = 10**5, t_end: float = 20.0, n_snapshots: int = 10,
                     seed: int = 11, n_pos: int = 2, v_edges=None, workers: int = 1) -> StationarityResult:
    """Sample the steady state, transport it, and compare histograms to it at every snapshot."""
    dom = spec.domain()
    bcs = spec.boundary_conditions()
    if v_edges is None:
        v_edges = np.array([-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0])
    grid = GridSpec(tuple(np.linspace(0, 1, n_pos + 1) for _ in range(2)), (v_edges, v_edges), "cartesian")
    ref = steady_cell_density(spec, order=8)
    masses = ref.cell_masses(grid)
    rng = np.random.default_rng(seed)
    draw = sample_steady(spec, n, rng)
    ens = Ensemble(draw.positions, draw.velocities, np.zeros(n, np.int64), seed)
    times = np.linspace(0.0, t_end, n_snapshots + 1)
    brng = np.random.default_rng([seed, 2])
    ds, ses = [], []
    for snap in iter_run(ens, dom, bcs, times, workers=workers):
        h = histogram(snap, grid)
        ds.append(l1_distance_to_density(h, ref, masses))
        ses.append(l1_bootstrap_se(h, masses, brng))
    ds, ses = np.array(ds), np.array(ses)
    z = np.abs(ds - ds[0]) / np.sqrt(ses**2 + ses[0] ** 2)
    return StationarityResult(times, ds, ses, float(z.max()), bool(np.all(z <= 3.0)), draw.acceptance_rate)


# ----------------------------------------------------------------------------
# minorization overlap


@dataclass
class OverlapResult:
    times: np.ndarray
    overlaps: np.ndarray
    lam: float


def overlap_experiment(*, r_perp=0.5, r_par=0.5, n=10**5, times=(1.25, 2.5, 5.0, 10.0), lam=6.0, seed=5,
                       starts=(((0.0, 0.0), (1.0, 0.0)), ((0.5, 0.3), (-0.3, 0.8))), n_pos=2, n_vel=6, v_max=3.0,
                       workers=1) -> OverlapResult:
    """Overlap of two point-mass starts, restricted to the sublevel set of the bracket weight.

    The default times start where the overlap first becomes positive for the
    default starts and end before it saturates at the equilibrium mass of the
    sublevel set, where histogram noise would hide further growth.
    """
    disk = Disk()
    bc = BoundaryCondition.cercignani_lampis(r_perp, r_par)
    grid = GridSpec.cartesian(disk, n_pos, n_vel, v_max)
    mask = sublevel_mask(grid, disk, lam)
    for x0, v0 in starts:
        if disk.bracket(x0, v0) > lam:
            raise ValueError("initial point lies outside the sublevel set")
    hists = []
    for k, (x0, v0) in enumerate(starts):
        ens = sample_initial({"kind": "point", "position": x0, "velocity": v0}, n, None, disk, master_seed=seed + k)
        hists.append([histogram(s, grid) for s in iter_run(ens, disk, bc, times, workers=workers)])
    ov = np.array([minorization_overlap(a, b, mask) for a, b in zip(*hists)])
    return OverlapResult(np.asarray(times, dtype=float), ov, lam)


__all__ = [
    "DecayResult",
    "OverlapResult",
    "StationarityResult",
    "config_hash",
    "decay_experiment",
    "overlap_experiment",
    "read_l1_curve",
    "reference_density",
    "simulate",
    "toy_spec_from_config",
    "toy_stationarity",
    "toy_verification",
]


# ----------------------------------------------------------------------------
# toy-model consolidated check

TOY_TOL = 1e-6
TOY_KEYS = {"schema_version", "r_perp", "r_par", "upper_root", "T2", "tolerance", "n_grid", "stationarity"}


def toy_spec_from_config(d: dict) -> ToyModelSpec:
    from .config import SCHEMA_VERSION, ConfigError

    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {d.get('schema_version')!r} (expected {SCHEMA_VERSION})")
    extra = set(d) - TOY_KEYS
    if extra:
        raise ConfigError(f"unknown toy-model config keys: {sorted(extra)}")
    if "r_perp" not in d:
        raise ConfigError("toy-model config needs r_perp")
    try:
        return ToyModelSpec.from_dict(d)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"toy-model hypothesis violated: {exc}") from None


def toy_verification(spec: ToyModelSpec, *, tol: float = TOY_TOL, n_grid: int = 5, stationarity: dict | None = None) -> dict:
    """Normalization, wall residuals, lid flux, zero flow and (optionally) the dynamic stationarity run."""
    from ..toymodel import boundary_residuals, brute_force_mass, flow_integrals, normalize, unnormalized_mass

    start = time.time()
    beta = normalize(spec)
    pts = (np.arange(n_grid) + 0.5) / n_grid
    vels = np.array([[0.3, 1.2], [-0.7, 0.4], [1.5, 2.0], [0.0, 0.8]])
    br = boundary_residuals(spec, pts, vels)
    flows = np.array([flow_integrals(spec, (a, b)).flow for a in pts for b in pts])
    report = {
        "spec": spec.to_dict(),
        "beta": float(beta),
        "unnormalized_mass": float(unnormalized_mass(spec)),
        "residuals": {
            "lid": float(br.lid),
            "floor": float(br.floor),
            "lid_flux_minus_beta": float(np.max(np.abs(br.lid_flux - beta))),
        },
        "flow": {"max_abs": float(np.max(np.abs(flows))), "n_points": int(len(flows))},
        "tolerance": tol,
    }
    checks = {
        "lid": br.lid < tol,
        "floor": br.floor < tol,
        "lid_flux": report["residuals"]["lid_flux_minus_beta"] < tol,
        "flow": report["flow"]["max_abs"] < tol,
    }
    if spec.T2.kind != "piecewise_linear":
        # the tensor-product cross-check is only accurate for smooth floor profiles
        bf = brute_force_mass(spec)
        report["beta_brute_force"] = float(1.0 / bf)
        checks["beta"] = bool(abs(1.0 / bf - beta) < 1e-8)
    if stationarity:
        st = toy_stationarity(spec, **stationarity)
        report["stationarity"] = {
            "times": st.times.tolist(),
            "distances": st.distances.tolist(),
            "std_errors": st.std_errors.tolist(),
            "max_z": st.max_z,
        }
        report["acceptance_rate"] = st.acceptance_rate
        checks["stationarity"] = st.passed
    else:
        report["acceptance_rate"] = sample_steady(spec, 2000, np.random.default_rng(0)).acceptance_rate
    report["checks"] = {k: bool(v) for k, v in checks.items()}
    report["passed"] = all(checks.values())
    report["_seconds"] = time.time() - start
    return report
