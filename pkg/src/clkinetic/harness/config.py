"""JSON experiment configs: parsing, validation and hashing."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..geometry import Domain, domain_from_dict
from ..kernel import BoundaryCondition
from ..observables import GridSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; maps to exit code 2."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def geometric_schedule(t_end: float, per_octave: int = 2, t_start: float = 1.0, include_zero: bool = True):
    """Times 2**(k / per_octave) in [t_start, t_end], plus t_end and optionally 0."""
    if not (t_end > 0 and t_start > 0 and per_octave >= 1):
        raise ConfigError("geometric schedule needs t_end > 0, t_start > 0 and per_octave >= 1")
    k0 = math.ceil(per_octave * math.log2(t_start) - 1e-9)
    k1 = math.floor(per_octave * math.log2(t_end) + 1e-9)
    times = [2.0 ** (k / per_octave) for k in range(k0, k1 + 1)]
    if not times or abs(times[-1] - t_end) > 1e-9 * t_end:
        times.append(float(t_end))
    return ([0.0] if include_zero else []) + times


@dataclass
class ExperimentConfig:
    domain: dict
    boundary: dict | list
    initial: dict
    n_particles: int
    snapshots: dict
    grid: dict = field(default_factory=lambda: {"mode": "cartesian", "n_pos": 4, "n_vel": 12})
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1
    flux_cutoffs: list = field(default_factory=list)
    moment_alphas: list = field(default_factory=list)
    snapshot_format: str = "csv"
    noise_bootstrap: int = 20
    schema_version: int = SCHEMA_VERSION

    # -- construction

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {d.get('schema_version')!r} (expected {SCHEMA_VERSION})")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"domain", "boundary", "initial", "n_particles", "snapshots"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def sha256(self) -> str:
        return config_hash(self.to_dict())

    # -- validation and derived objects

    def validate(self):
        try:
            dom = self.build_domain()
            self.build_boundary(dom)
            self.build_grid(dom)
            times = self.snapshot_times()
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None
        if not isinstance(self.n_particles, int) or self.n_particles < 1:
            raise ConfigError("n_particles must be a positive integer")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an integer in [0, 2**64)")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.snapshot_format not in ("csv", "npz", "none"):
            raise ConfigError("snapshot_format must be csv, npz or none")
        if any(not (isinstance(c, (int, float)) and 0 < c < math.inf) for c in self.flux_cutoffs):
            raise ConfigError("flux cutoffs must be finite and positive")
        if any(not (0 <= a < dom.dim + 1) for a in self.moment_alphas):
            raise ConfigError(f"moment exponents must lie in [0, {dom.dim + 1})")
        if not times:
            raise ConfigError("snapshot schedule is empty")
        kind = self.initial.get("kind")
        if kind not in ("maxwellian", "point", "fixed_velocity", "toy_steady"):
            raise ConfigError(f"unknown initial distribution {kind!r}")
        if kind in ("point", "fixed_velocity"):
            v = np.asarray(self.initial.get("velocity", []), dtype=float)
            if v.shape != (dom.dim,) or not np.all(np.isfinite(v)) or not np.any(v != 0):
                raise ConfigError("initial velocity must be a finite nonzero vector of the domain dimension")
        if kind == "point":
            x = np.asarray(self.initial.get("position", []), dtype=float)
            if x.shape != (dom.dim,) or dom.distance_outside(x[None])[0] > 1e-10:
                raise ConfigError("point-mass position must lie in the closed domain")
        if kind == "toy_steady":
            from ..toymodel import HypothesisError, ToyModelSpec

            try:
                ToyModelSpec.from_domain(dom, float(self.initial["r_perp"]), float(self.initial["r_par"]))
            except (HypothesisError, KeyError) as exc:
                raise ConfigError(f"toy_steady initial data: {exc}") from None

    def build_domain(self) -> Domain:
        try:
            return domain_from_dict(self.domain)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"domain: {exc}") from None

    def build_boundary(self, domain: Domain):
        try:
            if isinstance(self.boundary, list):
                bcs = [BoundaryCondition.from_dict(b) for b in self.boundary]
                if len(bcs) != domain.n_faces:
                    raise ConfigError(f"boundary list needs {domain.n_faces} entries, one per face")
                return bcs
            return BoundaryCondition.from_dict(self.boundary)
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"boundary: {exc}") from None

    def build_grid(self, domain: Domain) -> GridSpec:
        g = dict(self.grid)
        mode = g.pop("mode", "cartesian")
        try:
            if mode == "cartesian":
                return GridSpec.cartesian(domain, g.get("n_pos", 4), g.get("n_vel", 12), g.get("v_max"))
            if mode == "speed":
                return GridSpec.speed(domain, g.get("n_pos", 1), g["speed_edges"])
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"grid: {exc}") from None
        raise ConfigError(f"unknown grid mode {mode!r}")

    def snapshot_times(self):
        s = self.snapshots
        if "times" in s:
            times = [float(t) for t in s["times"]]
            if any(not math.isfinite(t) or t < 0 for t in times) or any(b < a for a, b in zip(times[:-1], times[1:])):
                raise ConfigError("snapshot times must be finite, nonnegative and ascending")
            return times
        return geometric_schedule(
            float(s["t_end"]), int(s.get("per_octave", 2)), float(s.get("t_start", 1.0)), bool(s.get("include_zero", True))
        )
