"""Cercignani-Lampis scattering: density, exact sampling and quadrature checks.

Orientation: ``n`` is the outward unit normal, the incident velocity ``u``
satisfies ``u.n > 0`` and the re-emitted velocity ``v`` satisfies ``v.n < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import optimize, stats

from .quadrature import QuadratureError, cell_rule, integrate, integrate_2d, integrate_nd
from .rng import ParticleStream, stream_block, stream_normals

BC_CL, BC_DIFFUSE, BC_SPECULAR, BC_BOUNCE_BACK, BC_MAXWELL_MIX = 0, 1, 2, 3, 4
BC_NAMES = {
    "cercignani_lampis": BC_CL,
    "diffuse": BC_DIFFUSE,
    "specular": BC_SPECULAR,
    "bounce_back": BC_BOUNCE_BACK,
    "maxwell_mix": BC_MAXWELL_MIX,
}
GRAZING_TOL = 1e-12
MAX_GRAZING_ATTEMPTS = 100
_LOG_2PI = np.log(2 * np.pi)


class KernelDomainError(ValueError):
    """Velocities on the wrong side of the wall, or parameters out of range."""


class GrazingError(RuntimeError):
    """Resampling kept producing grazing velocities."""


# ----------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class AccommodationParams:
    """Normal and tangential accommodation coefficients.

    ``r_perp = r_par = 1`` is accepted as the diffuse limit.
    """

    r_perp: float
    r_par: float

    def __post_init__(self):
        if not (0.0 < self.r_perp <= 1.0):
            raise KernelDomainError(f"r_perp must lie in (0, 1], got {self.r_perp}")
        if not (0.0 < self.r_par < 2.0):
            raise KernelDomainError(f"r_par must lie in (0, 2), got {self.r_par}")

    @property
    def perp_retention(self) -> float:
        return 1.0 - self.r_perp

    @property
    def par_retention(self) -> float:
        return (1.0 - self.r_par) ** 2

    @property
    def contraction(self) -> float:
        return max(self.perp_retention, self.par_retention)

    @property
    def par_variance_factor(self) -> float:
        return self.r_par * (2.0 - self.r_par)


@dataclass(frozen=True)
class BoundaryCondition:
    variant: str
    params: AccommodationParams | None = None
    alpha: float = 0.0

    def __post_init__(self):
        if self.variant not in BC_NAMES:
            raise KernelDomainError(f"unknown boundary condition {self.variant!r}")
        if self.variant == "cercignani_lampis" and self.params is None:
            raise KernelDomainError("cercignani_lampis needs accommodation parameters")
        if self.variant == "maxwell_mix" and not (0.0 <= self.alpha <= 1.0):
            raise KernelDomainError(f"maxwell_mix alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def cercignani_lampis(cls, r_perp: float, r_par: float) -> "BoundaryCondition":
        return cls("cercignani_lampis", AccommodationParams(r_perp, r_par))

    @classmethod
    def diffuse(cls):
        return cls("diffuse")

    @classmethod
    def specular(cls):
        return cls("specular")

    @classmethod
    def bounce_back(cls):
        return cls("bounce_back")

    @classmethod
    def maxwell_mix(cls, alpha: float):
        return cls("maxwell_mix", alpha=float(alpha))

    @property
    def stochastic(self) -> bool:
        return self.variant not in ("specular", "bounce_back")

    @property
    def row(self) -> np.ndarray:
        """Packed ``[code, r_perp, r_par, alpha]`` used by the transport kernel."""
        rp, rq = (1.0, 1.0) if self.params is None else (self.params.r_perp, self.params.r_par)
        return np.array([BC_NAMES[self.variant], rp, rq, self.alpha])

    def to_dict(self) -> dict:
        d = {"kind": self.variant}
        if self.params is not None:
            d.update(r_perp=self.params.r_perp, r_par=self.params.r_par)
        if self.variant == "maxwell_mix":
            d["alpha"] = self.alpha
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryCondition":
        kind = d.get("kind")
        if kind == "cercignani_lampis":
            return cls.cercignani_lampis(float(d["r_perp"]), float(d["r_par"]))
        if kind == "maxwell_mix":
            return cls.maxwell_mix(float(d["alpha"]))
        if kind in BC_NAMES:
            return cls(kind)
        raise KernelDomainError(f"unknown boundary condition {kind!r}")


@dataclass(frozen=True)
class IncidentFrame:
    normal: np.ndarray
    u_perp_mag: float
    u_par: np.ndarray

    @classmethod
    def from_velocity(cls, u, normal) -> "IncidentFrame":
        u = np.asarray(u, dtype=float)
        n = np.asarray(normal, dtype=float)
        un = float(u @ n)
        if un <= 0:
            raise KernelDomainError("incident velocity must point into the wall (u.n > 0)")
        return cls(n, un, u - un * n)


# ----------------------------------------------------------------------------
# Bessel I0


@nb.njit(cache=True, nogil=True)
def _i0e_scalar(y):
    y = abs(y)
    if y <= 15.0:
        q = 0.25 * y * y
        term = 1.0
        total = 1.0
        k = 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total * np.exp(-y)
    # asymptotic series, truncated at its smallest term
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * y)
        if nxt > term or nxt < 1e-17 * total:
            break
        term = nxt
        total += term
    return total / np.sqrt(2.0 * np.pi * y)


@nb.vectorize(["float64(float64)"], cache=True)
def bessel_i0e(y):
    """exp(-|y|) I0(y)."""
    return _i0e_scalar(y)


def bessel_i0(y):
    """Modified Bessel function I0 (overflows to inf beyond |y| ~ 713)."""
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore"):
        out = bessel_i0e(y) * np.exp(np.abs(y))
    return float(out) if out.ndim == 0 else out


def bessel_i0_integral(y: float, tol: float = 1e-13) -> float:
    """(1/pi) * integral over [0, pi] of exp(y cos phi); reference for the series."""
    y = float(y)
    res = integrate(lambda p: np.exp(y * np.cos(p) - abs(y)), 0.0, np.pi, tol=tol * 1e-3, raise_on_failure=True)
    return res.value / np.pi * np.exp(abs(y))


def rice_pdf(x, mu, sigma2):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or sigma2 <= 0:
        raise KernelDomainError("rice_pdf needs x >= 0 and sigma2 > 0")
    m = abs(float(mu))
    out = x / sigma2 * np.exp(-((x - m) ** 2) / (2 * sigma2)) * bessel_i0e(m * x / sigma2)
    return float(out) if out.ndim == 0 else out


def rice_sf(x, mu, sigma2):
    """P(X > x) for X ~ Rice(mu, sigma2), via the noncentral chi-square law of X^2/sigma2."""
    x = np.asarray(x, dtype=float)
    return stats.ncx2.sf(x * x / sigma2, 2, mu * mu / sigma2)


def rice_cdf(x, mu, sigma2):
    x = np.asarray(x, dtype=float)
    return stats.ncx2.cdf(x * x / sigma2, 2, mu * mu / sigma2)


def rice_cdf_quadrature(x, mu, sigma2, *, order: int = 8):
    """Rice CDF at the points ``x`` by summing Gauss-Legendre integrals of rice_pdf.

    Consecutive sorted points share one panel each, so a whole sample costs one
    pass; gaps wider than a tenth of a standard deviation are subdivided.
    """
    x = np.asarray(x, dtype=float)
    order_idx = np.argsort(x, kind="stable")
    xs = x[order_idx]
    if xs.size and xs[0] < 0:
        raise KernelDomainError("rice CDF needs x >= 0")
    step = 0.1 * np.sqrt(sigma2)
    grid = np.unique(np.concatenate([[0.0], xs, np.arange(0.0, xs[-1] if xs.size else 0.0, step)]))
    nodes, weights = cell_rule(grid, order)
    cum = np.concatenate([[0.0], np.cumsum(np.sum(weights * rice_pdf(nodes.clip(min=0.0), mu, sigma2), axis=1))])
    out = np.empty_like(x)
    out[order_idx] = cum[np.searchsorted(grid, xs)]
    return out


# ----------------------------------------------------------------------------
# density


def log_cl_components(u_perp_mag, u_par, v_perp_mag, v_par, theta, r_perp, r_par, d_par=None):
    """log R from normal speeds and tangential parts (trailing axis).

    ``d_par`` defaults to the length of that axis; pass it when the tangential
    parts are given in ambient coordinates.
    """
    s_perp = theta * r_perp
    s_par = theta * r_par * (2.0 - r_par)
    a = np.sqrt(1.0 - r_perp)
    mu = a * u_perp_mag
    y = mu * v_perp_mag / s_perp
    d_par = np.asarray(v_par).shape[-1] if d_par is None else d_par
    dev = np.asarray(v_par) - (1.0 - r_par) * np.asarray(u_par)
    log_normal_part = -np.log(s_perp) - (v_perp_mag - mu) ** 2 / (2 * s_perp) + np.log(bessel_i0e(y))
    log_tangent_part = -0.5 * d_par * (_LOG_2PI + np.log(s_par)) - np.sum(dev * dev, axis=-1) / (2 * s_par)
    return log_normal_part + log_tangent_part


def _direct_cl(u_perp_mag, u_par, v_perp_mag, v_par, theta, r_perp, r_par, d_par):
    s_perp = theta * r_perp
    s_par = theta * r_par * (2.0 - r_par)
    dev = np.asarray(v_par) - (1.0 - r_par) * np.asarray(u_par)
    return (
        1.0
        / s_perp
        / (2 * np.pi * s_par) ** (d_par / 2)
        * np.exp(-(v_perp_mag**2) / (2 * s_perp))
        * np.exp(-(1 - r_perp) * u_perp_mag**2 / (2 * s_perp))
        * bessel_i0(np.sqrt(1 - r_perp) * u_perp_mag * v_perp_mag / s_perp)
        * np.exp(-np.sum(dev * dev, axis=-1) / (2 * s_par))
    )


def cl_density(u, v, normal, theta: float, params: AccommodationParams, *, log_space: bool = True):
    """R(u -> v) for one incident ``u`` and one or many outgoing ``v``."""
    frame = IncidentFrame.from_velocity(u, normal)
    n = frame.normal
    v = np.asarray(v, dtype=float)
    vn = v @ n
    if np.any(vn >= 0):
        raise KernelDomainError("outgoing velocity must point away from the wall (v.n < 0)")
    v_par = v - vn[..., None] * n if v.ndim > 1 else v - vn * n
    # tangential parts stay in ambient coordinates; only their norms matter
    args = (frame.u_perp_mag, frame.u_par, -vn, v_par, theta, params.r_perp, params.r_par, n.size - 1)
    if log_space:
        out = np.exp(log_cl_components(*args))
    else:
        out = _direct_cl(*args)
    return float(out) if np.ndim(out) == 0 else out


def wall_maxwellian_flux(v, theta: float, dim: int):
    """Diffuse re-emission density (1/theta)(2 pi theta)^{-(d-1)/2} exp(-|v|^2 / 2 theta)."""
    v = np.asarray(v, dtype=float)
    return np.exp(-np.sum(v * v, axis=-1) / (2 * theta)) / theta / (2 * np.pi * theta) ** ((dim - 1) / 2)


# ----------------------------------------------------------------------------
# sampling


@nb.njit(cache=True, nogil=True)
def tangent_basis(n, t1, t2):
    if n.size == 2:
        t1[0] = -n[1]
        t1[1] = n[0]
        return
    sign = 1.0 if n[2] >= 0.0 else -1.0
    a = -1.0 / (sign + n[2])
    b = n[0] * n[1] * a
    t1[0] = 1.0 + sign * n[0] * n[0] * a
    t1[1] = sign * b
    t1[2] = -sign * n[0]
    t2[0] = b
    t2[1] = sign + n[1] * n[1] * a
    t2[2] = -n[1]


@nb.njit(cache=True, nogil=True)
def reflect(bc, theta, u, n, seed, index, counter, out):
    """Write the post-collision velocity into ``out``; return 0, or 1 if grazing persisted.

    Draws for attempt ``k`` use tags ``(k << 8) | block``: block 0 drives the
    normal speed, block 1 the tangential part, block 2 the diffuse/specular coin.
    """
    d = u.size
    code = int(bc[0])
    un = 0.0
    for i in range(d):
        un += u[i] * n[i]
    if code == BC_SPECULAR:
        for i in range(d):
            out[i] = u[i] - 2.0 * un * n[i]
        return 0
    if code == BC_BOUNCE_BACK:
        for i in range(d):
            out[i] = -u[i]
        return 0
    if code == BC_MAXWELL_MIX:
        coin, _ = stream_block(seed, index, counter, 2)
        if coin >= bc[3]:
            for i in range(d):
                out[i] = u[i] - 2.0 * un * n[i]
            return 0
    if code == BC_CL:
        rp = bc[1]
        rq = bc[2]
    else:
        rp = 1.0
        rq = 1.0
    mu = np.sqrt(1.0 - rp) * un
    s_perp = np.sqrt(theta * rp)
    s_par = np.sqrt(theta * rq * (2.0 - rq))
    t1 = np.zeros(d)
    t2 = np.zeros(d)
    tangent_basis(n, t1, t2)
    for attempt in range(MAX_GRAZING_ATTEMPTS):
        tag = attempt << 8
        z1, z2 = stream_normals(seed, index, counter, tag)
        z3, z4 = stream_normals(seed, index, counter, tag | 1)
        a = mu + s_perp * z1
        b = s_perp * z2
        vn = np.sqrt(a * a + b * b)
        for i in range(d):
            ut = u[i] - un * n[i]
            w = (1.0 - rq) * ut + s_par * z3 * t1[i]
            if d == 3:
                w += s_par * z4 * t2[i]
            out[i] = w - vn * n[i]
        tsq = 0.0
        for i in range(d):
            tsq += out[i] * out[i]
        if vn >= GRAZING_TOL * np.sqrt(tsq):
            return 0
    return 1


@nb.njit(cache=True)
def _reflect_batch(bc, theta, u, n, seed, index, counters):
    m = counters.size
    out = np.empty((m, u.size))
    status = 0
    for k in range(m):
        status |= reflect(bc, theta, u, n, seed, index, counters[k], out[k])
    return out, status


def _sample_generator(u, n, theta, bc, rng, size):
    d = u.size
    un = float(u @ n)
    ut = u - un * n
    code = BC_NAMES[bc.variant]
    if code == BC_SPECULAR:
        return np.tile(u - 2 * un * n, (size, 1))
    if code == BC_BOUNCE_BACK:
        return np.tile(-u, (size, 1))
    rp, rq = (bc.params.r_perp, bc.params.r_par) if code == BC_CL else (1.0, 1.0)
    t1, t2 = np.zeros(d), np.zeros(d)
    tangent_basis(n, t1, t2)
    basis = [t1] if d == 2 else [t1, t2]

    def draw(k):
        z = rng.standard_normal((k, 2))
        vn = np.hypot(np.sqrt(1 - rp) * un + np.sqrt(theta * rp) * z[:, 0], np.sqrt(theta * rp) * z[:, 1])
        g = rng.standard_normal((k, d - 1))
        w = (1 - rq) * ut + np.sqrt(theta * rq * (2 - rq)) * sum(g[:, [j]] * basis[j] for j in range(d - 1))
        return w - vn[:, None] * n

    out = draw(size)
    for _ in range(MAX_GRAZING_ATTEMPTS):
        bad = np.abs(out @ n) < GRAZING_TOL * np.linalg.norm(out, axis=1)
        if not bad.any():
            break
        out[bad] = draw(int(bad.sum()))
    else:
        raise GrazingError("grazing resample limit reached")
    if code == BC_MAXWELL_MIX:
        spec = rng.random(size) >= bc.alpha
        out[spec] = u - 2 * un * n
    return out


def sample_outgoing(u, point, bc: BoundaryCondition, rng, *, size: int | None = None, counter: int = 0):
    """Draw re-emitted velocities for incident ``u`` at a ``BoundaryPoint``.

    ``rng`` is either a ``numpy.random.Generator`` or a ``ParticleStream``; with
    a stream, sample ``k`` uses collision counter ``counter + k``, exactly as the
    transport loop does.
    """
    u = np.asarray(u, dtype=float)
    n = np.asarray(point.normal, dtype=float)
    if u @ n <= 0:
        raise KernelDomainError("incident velocity must point into the wall (u.n > 0)")
    m = 1 if size is None else int(size)
    if isinstance(rng, ParticleStream):
        counters = np.arange(counter, counter + m, dtype=np.uint64)
        out, status = _reflect_batch(bc.row, float(point.temperature), u, n, np.uint64(rng.master_seed), np.uint64(rng.index), counters)
        if status:
            raise GrazingError("grazing resample limit reached")
    else:
        out = _sample_generator(u, n, float(point.temperature), bc, rng, m)
    return out[0] if size is None else out


# ----------------------------------------------------------------------------
# quadrature oracles

_WIDTH = 14.0


def _rice_window(mu, s2):
    s = np.sqrt(s2)
    return max(0.0, mu - _WIDTH * s), mu + _WIDTH * s


def reemitted_mass(u, normal, theta, params: AccommodationParams, *, tol=1e-10, m: float = 0.0):
    """Tensor quadrature of the re-emitted flux mass, restricted to |v| >= m when m > 0.

    For ``m = 0`` the integrand is evaluated on the full (v_perp, v_par) product
    domain; for ``m > 0`` the speed cut is handled by integrating the exact
    Rice survival function along each tangential line.
    """
    frame = IncidentFrame.from_velocity(u, normal)
    d = frame.normal.size
    rp, rq = params.r_perp, params.r_par
    mu = np.sqrt(1 - rp) * frame.u_perp_mag
    s_perp = theta * rp
    s_par = theta * rq * (2 - rq)
    # tangential coordinates of the incident velocity
    t1, t2 = np.zeros(d), np.zeros(d)
    tangent_basis(frame.normal, t1, t2)
    basis = [t1] if d == 2 else [t1, t2]
    up = np.array([frame.u_par @ t for t in basis])
    centers = (1 - rq) * up
    tw = [(c - _WIDTH * np.sqrt(s_par), c + _WIDTH * np.sqrt(s_par)) for c in centers]
    xlim = _rice_window(mu, s_perp)

    if m > 0:
        if d != 2:
            raise NotImplementedError("speed-cut mass is implemented for d = 2")
        g = stats.norm(centers[0], np.sqrt(s_par))

        def line(t):
            return g.pdf(t) * rice_sf(np.sqrt(np.maximum(m * m - t * t, 0.0)), mu, s_perp)

        pts = [p for p in (-m, m, centers[0]) if tw[0][0] < p < tw[0][1]]
        return integrate(line, *tw[0], tol=tol * 1e-2, points=pts, max_nodes=2**16)

    if d == 2:
        def f2(x, t):
            return x * np.exp(log_cl_components(frame.u_perp_mag, up, x, t[..., None], theta, rp, rq))

        return integrate_2d(f2, xlim, tw[0], xpoints=[mu], ypoints=[centers[0]], tol=tol, min_panels=2)

    def f3(x, t_1, t_2):
        tt = np.stack(np.broadcast_arrays(t_1, t_2), axis=-1)
        return x * np.exp(log_cl_components(frame.u_perp_mag, up, x, tt, theta, rp, rq))

    return integrate_nd(f3, [xlim, *tw], points=[[mu], [centers[0]], [centers[1]]], tol=tol, min_panels=2, max_nodes=2**9)


def normalization_residual(u, normal, theta, params: AccommodationParams, *, tol: float = 1e-10) -> float:
    """|integral of R |v.n| over outgoing v - 1|; raises QuadratureError if refinements disagree."""
    res = reemitted_mass(u, normal, theta, params, tol=tol)
    if not res.converged or res.error > 1e-6:
        raise QuadratureError(f"normalization quadrature did not converge (last change {res.error:.3g})")
    return abs(res.value - 1.0)


def tail_mass(u, normal, theta, params: AccommodationParams, m: float, *, tol: float = 1e-10) -> float:
    """Re-emitted flux mass carried by speeds |v| >= m."""
    if m < 0:
        raise KernelDomainError("speed threshold must be nonnegative")
    if m == 0:
        return 1.0
    res = reemitted_mass(u, normal, theta, params, tol=tol, m=m)
    if not res.converged:
        raise QuadratureError("tail-mass quadrature did not converge")
    return min(1.0, max(0.0, res.value))


def nonregularity_witness(m: float, theta: float, params: AccommodationParams):
    """Incident velocity (normal speed, tangential speed) for the d = 2 tail bound.

    The tangential speed centres the re-emitted tangential law on m / sqrt(2);
    the normal speed is the smallest one for which the re-emitted normal speed
    exceeds m / sqrt(2) with probability 1/2.
    """
    if params.r_par == 1.0:
        raise KernelDomainError("witness needs r_par != 1")
    h = np.sqrt(2.0) * m / 2.0
    u_par = h / (1.0 - params.r_par)
    s2 = theta * params.r_perp
    a = np.sqrt(1.0 - params.r_perp)
    if a == 0:
        raise KernelDomainError("witness needs r_perp < 1")
    if rice_sf(h, 0.0, s2) >= 0.5:
        u_perp = 1e-9
    else:
        u_perp = optimize.brentq(lambda w: rice_sf(h, a * w, s2) - 0.5, 0.0, (h + 20 * np.sqrt(s2)) / a, xtol=1e-12)
        u_perp *= 1 + 1e-9
    return u_perp, u_par


def _gaussian_window(a, b, w):
    c = b * w / (b - a)
    sd = 1.0 / np.sqrt(2 * (b - a))
    return c, sd


def _check_ab(a, b):
    if not (0 < a < b):
        raise KernelDomainError(f"identity needs 0 < a < b, got a={a}, b={b}")


def chen_gaussian_identity(a: float, b: float, w: float, *, tol: float = 1e-12):
    _check_ab(a, b)
    c, sd = _gaussian_window(a, b, w)
    rhs = np.sqrt(b / (b - a)) * np.exp(a * b * w * w / (b - a))
    # integrate the integrand scaled by its peak value so tol is relative
    peak = a * c * c - b * (c - w) ** 2

    def f(v):
        return np.exp(a * v * v - b * (v - w) ** 2 - peak)

    res = integrate(f, c - _WIDTH * sd, c + _WIDTH * sd, points=[c], tol=tol, rtol=1e-15, raise_on_failure=True)
    lhs = np.sqrt(b / np.pi) * res.value * np.exp(peak)
    return lhs, rhs


def chen_rice_identity(a: float, b: float, w: float, *, tol: float = 1e-12):
    _check_ab(a, b)
    w = abs(w)
    c, sd = _gaussian_window(a, b, w)
    rhs = b / (b - a) * np.exp(a * b * w * w / (b - a))
    peak = a * c * c - b * (c - w) ** 2

    def f(v):
        y = 2 * b * v * w
        return v * np.exp(a * v * v - b * v * v - b * w * w + y - peak) * bessel_i0e(y)

    hi = c + (_WIDTH + 4) * sd
    res = integrate(f, 0.0, hi, points=[c], tol=tol, rtol=1e-15, raise_on_failure=True)
    lhs = 2 * b * res.value * np.exp(peak)
    return lhs, rhs


def check_hypothesis_constraint(r_perp: float, r_par: float):
    if abs(r_par * (2 - r_par) - r_perp) >= 1e-12:
        raise KernelDomainError(f"accommodation constraint r_par (2 - r_par) = r_perp violated: {r_par * (2 - r_par)} vs {r_perp}")


def flux_closed_form(v, T2, r_perp):
    v = np.asarray(v, dtype=float)
    kappa = 1 - r_perp + T2 * r_perp
    return np.exp(-np.sum(v * v, axis=-1) / (2 * kappa)) / (kappa**1.5 * np.sqrt(2 * np.pi))


def bottom_wall_kernel(u, v, T2, r_perp, r_par):
    """R(u -> v) on the wall x2 = 0 (outward normal (0, -1)); arrays broadcast over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.exp(
        log_cl_components(-u[..., 1], u[..., :1], v[..., 1], v[..., :1], T2, r_perp, r_par)
    )


def incoming_flux_integral(v, T2, r_perp, r_par, weight, *, tol=1e-10, u1_lim=None, u2_max=None):
    """Quadrature of the integral over u2 < 0 of (-u2) R(u -> v; T2) weight(u1, u2) du.

    ``weight`` is assumed to decay at least like a standard Gaussian.
    """
    v = np.asarray(v, dtype=float)
    sq = r_par * (2 - r_par)
    a = np.sqrt(1 - r_perp)
    prec1 = (1 - r_par) ** 2 / (T2 * sq) + 1.0
    c1 = (1 - r_par) * v[0] / (T2 * sq) / prec1
    prec2 = a * a / (T2 * r_perp) + 1.0
    c2 = a * v[1] / (T2 * r_perp) / prec2
    if u1_lim is None:
        u1_lim = (c1 - _WIDTH / np.sqrt(prec1), c1 + _WIDTH / np.sqrt(prec1))
    if u2_max is None:
        u2_max = c2 + _WIDTH / np.sqrt(prec2)
    y_lim = (-u2_max, 0.0)

    def f(u1, u2):
        U = np.stack(np.broadcast_arrays(u1, u2), axis=-1)
        return -u2 * bottom_wall_kernel(U, v, T2, r_perp, r_par) * weight(u1, u2)

    return integrate_2d(f, u1_lim, y_lim, xpoints=[c1], ypoints=[-c2], tol=tol, min_panels=2, raise_on_failure=True)


def cl_flux_integral(v, T2: float, r_perp: float, r_par: float, *, tol: float = 1e-11):
    """(lhs, rhs) for the re-emission of a unit-temperature Maxwellian flux through a CL wall."""
    check_hypothesis_constraint(r_perp, r_par)
    if not (0 < T2 <= 1):
        raise KernelDomainError(f"wall temperature must lie in (0, 1], got {T2}")
    v = np.asarray(v, dtype=float)
    if v[1] <= 0:
        raise KernelDomainError("outgoing velocity must have v2 > 0")
    gauss = lambda u1, u2: np.exp(-(u1 * u1 + u2 * u2) / 2) / np.sqrt(2 * np.pi)
    lhs = incoming_flux_integral(v, T2, r_perp, r_par, gauss, tol=tol).value
    return lhs, float(flux_closed_form(v, T2, r_perp))


def reciprocity_residual(a, b, T: float, r_perp: float, r_par: float) -> float:
    """Relative gap in R(b -> a) = R(-a -> -b) exp(-|a|^2/2T) exp(|b|^2/2T) on the bottom wall."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (a[1] > 0 and b[1] < 0):
        raise KernelDomainError("reciprocity needs a2 > 0 and b2 < 0")
    ll = np.log(bottom_wall_kernel(b, a, T, r_perp, r_par))
    lr = np.log(bottom_wall_kernel(-a, -b, T, r_perp, r_par)) - a @ a / (2 * T) + b @ b / (2 * T)
    return float(abs(np.expm1(lr - ll)))
