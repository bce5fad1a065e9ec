"""Explicit steady state of the periodic box with a diffuse lid and a CL floor.

The lid (x2 = 1) is diffuse at temperature 1; the floor (x2 = 0) is
Cercignani-Lampis at temperature T2(x1) with r_par (2 - r_par) = r_perp. Going
down, the steady state is the unit Maxwellian flux profile. Going up, it is a
Maxwellian at temperature kappa = 1 - r_perp + r_perp T2, evaluated where
the particle last left the floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PeriodicBox, TemperatureField
from .kernel import BoundaryCondition, check_hypothesis_constraint, flux_closed_form, incoming_flux_integral
from .observables import QuadratureDensity
from .quadrature import QuadratureError, integrate, integrate_2d

SQRT_2PI = np.sqrt(2 * np.pi)


class HypothesisError(ValueError):
    """Parameters outside the range where the closed form holds."""


@dataclass(frozen=True)
class ToyModelSpec:
    r_perp: float
    r_par: float
    T2: TemperatureField = TemperatureField.sinusoid(0.5, 0.3)

    def __post_init__(self):
        if not (0 < self.r_perp <= 1):
            raise HypothesisError(f"r_perp must lie in (0, 1], got {self.r_perp}")
        if not (0 < self.r_par < 2):
            raise HypothesisError(f"r_par must lie in (0, 2), got {self.r_par}")
        try:
            check_hypothesis_constraint(self.r_perp, self.r_par)
        except ValueError as exc:
            raise HypothesisError(str(exc)) from None
        lo, hi = self.T2.bounds
        if hi > 1.0:
            raise HypothesisError(f"floor temperature must not exceed the lid temperature 1 (sup T2 = {hi})")
        if self.T2.kind == "piecewise_linear" and self.T2.params[0] != 1.0:
            raise HypothesisError("floor temperature profile must be 1-periodic in x1")
        if self.T2.kind == "sinusoid" and abs(1.0 / self.T2.params[2] - round(1.0 / self.T2.params[2])) > 1e-12:
            raise HypothesisError("sinusoidal floor temperature must be 1-periodic in x1")

    @classmethod
    def from_r_perp(cls, r_perp: float, T2=None, *, upper: bool = False) -> "ToyModelSpec":
        """Solve r_par (2 - r_par) = r_perp for r_par (lower root unless ``upper``)."""
        s = np.sqrt(1 - r_perp)
        r_par = 1 + s if upper else 1 - s
        # snap the constraint to the exact product
        r_perp_exact = r_par * (2 - r_par)
        return cls(r_perp_exact, r_par, T2 if T2 is not None else TemperatureField.sinusoid(0.5, 0.3))

    @classmethod
    def from_domain(cls, domain, r_perp: float, r_par: float) -> "ToyModelSpec":
        if not isinstance(domain, PeriodicBox):
            raise HypothesisError("the steady state is only known for the periodic box")
        top = domain.top_temperature
        if top.kind != "constant" or top.params[0] != 1.0:
            raise HypothesisError("the lid must be diffuse at temperature 1")
        return cls(r_perp, r_par, domain.bottom_temperature)

    def domain(self) -> PeriodicBox:
        return PeriodicBox(self.T2, TemperatureField.constant(1.0))

    def boundary_conditions(self):
        return [BoundaryCondition.cercignani_lampis(self.r_perp, self.r_par), BoundaryCondition.diffuse()]

    def kappa(self, s):
        return 1 - self.r_perp + self.r_perp * self.T2(s)

    @property
    def kappa_bounds(self):
        lo, hi = self.T2.bounds
        return 1 - self.r_perp + self.r_perp * lo, 1 - self.r_perp + self.r_perp * hi

    def to_dict(self):
        return {"r_perp": self.r_perp, "r_par": self.r_par, "T2": self.T2.to_dict()}

    @classmethod
    def from_dict(cls, d):
        T2 = TemperatureField.from_dict(d["T2"]) if "T2" in d else TemperatureField.sinusoid(0.5, 0.3)
        if "r_par" not in d:
            return cls.from_r_perp(float(d["r_perp"]), T2, upper=bool(d.get("upper_root", False)))
        return cls(float(d["r_perp"]), float(d["r_par"]), T2)


def backward_floor_x1(x, v):
    """x1 of the wrapped backward exit point for upward velocities (v2 > 0)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v[..., 1] <= 0):
        raise ValueError("backward exit lands on the floor only for v2 > 0")
    s = x[..., 0] - x[..., 1] * v[..., 0] / v[..., 1]
    return s - np.floor(s)


def steady_density(x, v, spec: ToyModelSpec, *, normalized: bool = False):
    """Steady state at (x, v); arrays broadcast over leading axes. Undefined at v2 = 0."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    v2 = v[..., 1]
    if np.any(v2 == 0):
        raise ValueError("steady state is undefined for v2 = 0")
    up = v2 > 0
    r2 = np.sum(v * v, axis=-1)
    s = x[..., 0] - x[..., 1] * v[..., 0] / np.where(up, v2, 1.0)
    k = np.where(up, spec.kappa(s - np.floor(s)), 1.0)
    out = np.exp(-0.5 * r2 / k) / (k**1.5 * SQRT_2PI)
    if normalized:
        out = out * normalize(spec)
    return out if out.ndim else float(out)


def steady_density_integral_form(x, v, spec: ToyModelSpec, *, tol: float = 1e-11) -> float:
    """Upward branch from its defining integral: CL re-emission of the downward Maxwellian flux."""
    v = np.asarray(v, dtype=float)
    T = float(spec.T2(backward_floor_x1(x, v)))
    gauss = lambda u1, u2: np.exp(-(u1 * u1 + u2 * u2) / 2) / SQRT_2PI
    return incoming_flux_integral(v, T, spec.r_perp, spec.r_par, gauss, tol=tol).value


_BETA_CACHE: dict = {}


def unnormalized_mass(spec: ToyModelSpec, *, tol: float = 1e-13) -> float:
    """Total mass with beta = 1.

    For fixed v the x1-average of the upward branch does not depend on x2 or
    on the direction of v (periodic shift), and its radial integral is exact,
    leaving a 1D integral of kappa^(-1/2) over one period.
    """
    lower = SQRT_2PI / 2
    if spec.T2.kind == "constant":
        avg = spec.kappa(0.0) ** -0.5
    else:
        pts = list(spec.T2.nodes) if spec.T2.kind == "piecewise_linear" else []
        res = integrate(lambda s: spec.kappa(s) ** -0.5, 0.0, 1.0, points=pts, tol=tol, raise_on_failure=True)
        avg = res.value
    return lower + np.pi / SQRT_2PI * avg


def normalize(spec: ToyModelSpec) -> float:
    key = repr(spec)
    if key not in _BETA_CACHE:
        _BETA_CACHE[key] = 1.0 / unnormalized_mass(spec)
    return _BETA_CACHE[key]


def brute_force_mass(spec: ToyModelSpec, *, n_x1: int = 48, order: int = 16, panels: int = 4) -> float:
    """Mass by direct quadrature over (x1, x2, polar angle, speed), with no use of shift invariance.

    x1 uses the periodic trapezoid rule; the other axes use composite
    Gauss-Legendre.
    """
    from .quadrature import composite_nodes

    x1 = (np.arange(n_x1) + 0.5) / n_x1
    x2, w2 = composite_nodes(0.0, 1.0, 1, order)
    phi, wphi = composite_nodes(0.0, np.pi, panels * 4, order)
    smax = 14.0
    s, ws = composite_nodes(0.0, smax, panels, order)
    total = 0.0
    cphi, sphi = np.cos(phi), np.sin(phi)
    for a, wa in zip(x2, w2):
        # (x1, phi, s)
        base = x1[:, None] - a * (cphi / sphi)[None, :]
        k = spec.kappa(base - np.floor(base))[:, :, None]
        vals = s[None, None, :] * np.exp(-0.5 * s[None, None, :] ** 2 / k) / (k**1.5 * SQRT_2PI)
        total += wa * float(np.einsum("ijk,j,k->", vals, wphi, ws)) / n_x1
    return SQRT_2PI / 2 + total


def upward_flux_lid(spec: ToyModelSpec, x1: float, *, tol: float = 1e-10) -> float:
    """Integral of w2 f(x1, 1, w) over w2 > 0, normalized, by polar quadrature."""
    beta = normalize(spec)

    def f(phi, s):
        v = np.stack(np.broadcast_arrays(s * np.cos(phi), s * np.sin(phi)), axis=-1)
        x = np.array([x1, 1.0])
        return s * v[..., 1] * steady_density(x, v, spec)

    res = integrate_2d(f, (1e-300, np.pi - 1e-15), (0.0, 14.0), tol=tol, min_panels=2, raise_on_failure=True)
    return beta * res.value


@dataclass(frozen=True)
class BoundaryResiduals:
    lid: float
    floor: float
    lid_flux: np.ndarray
    beta: float


def boundary_residuals(spec: ToyModelSpec, x1_values, velocities, *, tol: float = 1e-11) -> BoundaryResiduals:
    """Largest violation of the lid (diffuse) and floor (CL) conditions.

    ``velocities`` are taken with v2 < 0 at the lid and reflected to v2 > 0 at
    the floor.
    """
    beta = normalize(spec)
    V = np.atleast_2d(np.asarray(velocities, dtype=float))
    down = V.copy()
    down[:, 1] = -np.abs(down[:, 1])
    up = -down
    lid_res = 0.0
    floor_res = 0.0
    fluxes = []
    gauss = lambda u1, u2: beta * np.exp(-(u1 * u1 + u2 * u2) / 2) / SQRT_2PI
    for x1 in np.atleast_1d(x1_values):
        flux = upward_flux_lid(spec, float(x1))
        fluxes.append(flux)
        f_lid = beta * steady_density(np.array([x1, 1.0]), down, spec)
        emitted = np.exp(-0.5 * np.sum(down**2, axis=1)) / SQRT_2PI * flux
        lid_res = max(lid_res, float(np.max(np.abs(f_lid - emitted))))
        T = float(spec.T2(x1))
        for v in up:
            f_floor = beta * float(steady_density(np.array([x1, 0.0]), v, spec))
            rhs = incoming_flux_integral(v, T, spec.r_perp, spec.r_par, gauss, tol=tol).value
            floor_res = max(floor_res, abs(f_floor - rhs))
    return BoundaryResiduals(lid_res, floor_res, np.array(fluxes), beta)


@dataclass(frozen=True)
class FlowIntegrals:
    flow: np.ndarray
    downward_flux: float
    upward_flux: float


def flow_integrals(spec: ToyModelSpec, x, *, tol: float = 1e-11) -> FlowIntegrals:
    """Velocity moments of the normalized steady state at an interior point, by polar quadrature.

    The downward half is a centred Maxwellian, so its v1 moment vanishes by
    oddness and is not integrated.
    """
    x = np.asarray(x, dtype=float)
    if not (0 < x[1] < 1):
        raise ValueError("flow integrals need an interior point")
    beta = normalize(spec)

    def moment(comp, lo, hi):
        def f(phi, s):
            v = np.stack(np.broadcast_arrays(s * np.cos(phi), s * np.sin(phi)), axis=-1)
            return s * v[..., comp] * steady_density(x, v, spec)

        res = integrate_2d(f, (lo, hi), (0.0, 14.0), tol=tol, min_panels=2)
        if not res.converged:
            raise QuadratureError("flow quadrature did not converge")
        return beta * res.value

    up1 = moment(0, 1e-300, np.pi - 1e-15)
    up2 = moment(1, 1e-300, np.pi - 1e-15)
    down2 = moment(1, np.pi + 1e-15, 2 * np.pi - 1e-15)
    return FlowIntegrals(np.array([up1, up2 + down2]), down2, up2)


@dataclass(frozen=True)
class SteadySample:
    positions: np.ndarray
    velocities: np.ndarray
    acceptance_rate: float


def sample_steady(spec: ToyModelSpec, n: int, rng: np.random.Generator, *, batch: int | None = None) -> SteadySample:
    """Exact draws from the normalized steady state.

    The downward half is sampled directly. The upward half is sampled by
    rejection from a half-plane Maxwellian at the largest kappa, with
    acceptance (kappa_min / kappa)^(3/2) exp(-|v|^2 (1/kappa - 1/kappa_max) / 2).
    """
    k_lo, k_hi = spec.kappa_bounds
    m_low = SQRT_2PI / 2
    p_low = m_low / unnormalized_mass(spec)
    is_low = rng.random(n) < p_low
    n_low = int(is_low.sum())
    X = np.empty((n, 2))
    V = np.empty((n, 2))
    X[is_low] = rng.random((n_low, 2))
    vl = rng.standard_normal((n_low, 2))
    vl[:, 1] = -np.abs(vl[:, 1])
    V[is_low] = vl
    need = n - n_low
    got_x, got_v = [], []
    proposed = 0
    batch = batch or max(1024, 2 * need)
    while need > 0:
        x = rng.random((batch, 2))
        v = np.sqrt(k_hi) * rng.standard_normal((batch, 2))
        v[:, 1] = np.abs(v[:, 1])
        v = v[v[:, 1] > 0]
        x = x[: len(v)]
        k = spec.kappa(backward_floor_x1(x, v))
        r2 = np.sum(v * v, axis=1)
        acc = (k_lo / k) ** 1.5 * np.exp(-0.5 * r2 * (1 / k - 1 / k_hi))
        keep = np.flatnonzero(rng.random(len(v)) < acc)[:need]
        # proposals past the last needed acceptance are never looked at
        proposed += len(v) if len(keep) < need else int(keep[-1]) + 1
        got_x.append(x[keep])
        got_v.append(v[keep])
        need -= len(keep)
        if proposed >= 10_000 and sum(len(g) for g in got_x) < 0.01 * proposed:
            raise RuntimeError("rejection sampler acceptance below 1%: proposal misconfigured")
    if got_x:
        X[~is_low] = np.concatenate(got_x)
        V[~is_low] = np.concatenate(got_v)
    accepted_up = n - n_low
    rate = (n_low + accepted_up) / (n_low + proposed) if (n_low + proposed) else 1.0
    return SteadySample(X, V, float(rate))


def steady_cell_density(spec: ToyModelSpec, *, order: int = 6) -> QuadratureDensity:
    """Normalized steady state as a cell-mass provider (velocity grids must put an edge at v2 = 0)."""
    beta = normalize(spec)
    return QuadratureDensity(lambda x, v: beta * steady_density(x, v, spec), 1.0, order=order)


def lower_branch_fraction(spec: ToyModelSpec) -> float:
    return (SQRT_2PI / 2) / unnormalized_mass(spec)


__all__ = [
    "BoundaryResiduals",
    "FlowIntegrals",
    "HypothesisError",
    "SteadySample",
    "ToyModelSpec",
    "backward_floor_x1",
    "boundary_residuals",
    "brute_force_mass",
    "flow_integrals",
    "flux_closed_form",
    "lower_branch_fraction",
    "normalize",
    "sample_steady",
    "steady_cell_density",
    "steady_density",
    "steady_density_integral_form",
    "unnormalized_mass",
    "upward_flux_lid",
]
