"""Bounded domains with closed-form ray/boundary queries.

Each domain is packed into flat arrays (shape code, shape parameters,
temperature-field table) so the same scalar kernels serve both the numpy API
below and the numba transport loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy import integrate as _spi

DISK, BALL, POLYGON, BOX = 0, 1, 2, 3
T_CONST, T_PWL, T_SIN = 0, 1, 2

# distance below which a point counts as lying on the boundary
BOUNDARY_EPS = 1e-12


class NoExitError(ValueError):
    """The straight line from (x, v) never reaches the boundary."""


# ----------------------------------------------------------------------------
# temperature fields


@dataclass(frozen=True)
class TemperatureField:
    """Positive wall temperature as a function of a scalar boundary parameter.

    The parameter is the polar angle for a disk, the angle from the +z axis for
    a ball, the arc length for a polygon and ``x1`` for the periodic box.
    """

    kind: str
    params: tuple = ()
    nodes: tuple = ()
    values: tuple = ()

    @classmethod
    def constant(cls, value: float) -> "TemperatureField":
        return cls("constant", (float(value),))

    @classmethod
    def piecewise_linear(cls, nodes, values, period: float | None = None) -> "TemperatureField":
        nodes = tuple(float(s) for s in nodes)
        values = tuple(float(t) for t in values)
        if len(nodes) != len(values) or len(nodes) < 2:
            raise ValueError("piecewise-linear field needs matching node/value lists of length >= 2")
        if any(b <= a for a, b in zip(nodes[:-1], nodes[1:])):
            raise ValueError("piecewise-linear nodes must be strictly increasing")
        return cls("piecewise_linear", (0.0 if period is None else float(period),), nodes, values)

    @classmethod
    def sinusoid(cls, mean: float, amplitude: float, period: float = 1.0, phase: float = 0.0):
        """``mean + amplitude * sin(2 pi s / period + phase)``."""
        return cls("sinusoid", (float(mean), float(amplitude), float(period), float(phase)))

    def __post_init__(self):
        lo, _ = self.bounds
        if not lo > 0:
            raise ValueError(f"wall temperature must stay positive, got minimum {lo}")

    @property
    def bounds(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.params[0], self.params[0]
        if self.kind == "piecewise_linear":
            return min(self.values), max(self.values)
        if self.kind == "sinusoid":
            m, a = self.params[0], abs(self.params[1])
            return m - a, m + a
        raise ValueError(f"unknown temperature field kind {self.kind!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.params[0])
        if self.kind == "sinusoid":
            m, a, p, ph = self.params
            return m + a * np.sin(2 * np.pi * s / p + ph)
        period = self.params[0]
        x = np.asarray(self.nodes)
        y = np.asarray(self.values)
        if period > 0:
            return np.interp(np.mod(s, period), x, y, period=period)
        return np.interp(s, x, y)

    def shifted(self, delta: float) -> "TemperatureField":
        """Field ``s -> self(s + delta)``; only periodic kinds are supported."""
        if self.kind == "constant":
            return self
        if self.kind == "sinusoid":
            m, a, p, ph = self.params
            return TemperatureField.sinusoid(m, a, p, ph + 2 * np.pi * delta / p)
        period = self.params[0]
        if period <= 0:
            raise ValueError("only periodic fields can be shifted")
        nodes = np.mod(np.asarray(self.nodes) - delta, period)
        # nodes that coincide modulo the period carry the same value; keep one
        nodes, first = np.unique(np.round(nodes, 12) % period, return_index=True)
        return TemperatureField.piecewise_linear(nodes, np.asarray(self.values)[first], period)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "sinusoid":
            m, a, p, ph = self.params
            return {"kind": "sinusoid", "mean": m, "amplitude": a, "period": p, "phase": ph}
        out = {"kind": "piecewise_linear", "nodes": list(self.nodes), "values": list(self.values)}
        if self.params[0] > 0:
            out["period"] = self.params[0]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TemperatureField":
        kind = d.get("kind", "constant")
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "sinusoid":
            return cls.sinusoid(d["mean"], d["amplitude"], d.get("period", 1.0), d.get("phase", 0.0))
        if kind == "piecewise_linear":
            return cls.piecewise_linear(d["nodes"], d["values"], d.get("period"))
        raise ValueError(f"unknown temperature field kind {kind!r}")


def _pack_fields(fields):
    table = np.zeros((len(fields), 5))
    nodes = [np.zeros(0)]
    offset = 0
    for i, f in enumerate(fields):
        if f.kind == "constant":
            table[i] = [T_CONST, f.params[0], 0, 0, 0]
        elif f.kind == "sinusoid":
            table[i] = [T_SIN, *f.params]
        else:
            k = len(f.nodes)
            table[i] = [T_PWL, offset, k, f.params[0], 0]
            nodes.append(np.concatenate([f.nodes, f.values]))
            offset += 2 * k
    return table, np.concatenate(nodes)


@nb.njit(cache=True, nogil=True)
def field_value(table, tnodes, fid, s):
    code = int(table[fid, 0])
    if code == T_CONST:
        return table[fid, 1]
    if code == T_SIN:
        return table[fid, 1] + table[fid, 2] * np.sin(2.0 * np.pi * s / table[fid, 3] + table[fid, 4])
    off = int(table[fid, 1])
    k = int(table[fid, 2])
    period = table[fid, 3]
    xs = tnodes[off : off + k]
    ys = tnodes[off + k : off + 2 * k]
    if period > 0.0:
        s = s - period * np.floor(s / period)
        # wrap segment between the last and first node
        if s < xs[0] or s >= xs[k - 1]:
            span = xs[0] + period - xs[k - 1]
            d = s - xs[k - 1] if s >= xs[k - 1] else s + period - xs[k - 1]
            return ys[k - 1] + (ys[0] - ys[k - 1]) * d / span
    else:
        if s <= xs[0]:
            return ys[0]
        if s >= xs[k - 1]:
            return ys[k - 1]
    j = np.searchsorted(xs, s, side="right") - 1
    if j >= k - 1:
        j = k - 2
    return ys[j] + (ys[j + 1] - ys[j]) * (s - xs[j]) / (xs[j + 1] - xs[j])


# ----------------------------------------------------------------------------
# scalar kernels
#
# polygon parameter layout: [nv, vx0, vy0, ..., nx0, ny0, c0, ..., s0, ..., perimeter]


@nb.njit(cache=True, nogil=True)
def exit_time_kernel(code, gp, x, v):
    """Return (sigma, face); sigma < 0 signals that no exit exists."""
    if code == DISK or code == BALL:
        r = gp[0]
        a = 0.0
        b = 0.0
        c = -r * r
        for i in range(x.size):
            a += v[i] * v[i]
            b += x[i] * v[i]
            c += x[i] * x[i]
        if a == 0.0:
            if c >= -BOUNDARY_EPS * r:
                return 0.0, 0
            return -1.0, 0
        if c >= -BOUNDARY_EPS * r and b >= 0.0:
            return 0.0, 0
        disc = b * b - a * c
        if disc < 0.0:
            disc = 0.0
        sq = np.sqrt(disc)
        # stable root of a t^2 + 2 b t + c = 0
        if b <= 0.0:
            t = (-b + sq) / a
        else:
            t = -c / (b + sq)
        if t < 0.0:
            t = 0.0
        return t, 0
    if code == POLYGON:
        nv = int(gp[0])
        no = 1 + 2 * nv
        best = np.inf
        face = -1
        for e in range(nv):
            nx = gp[no + 3 * e]
            ny = gp[no + 3 * e + 1]
            ce = gp[no + 3 * e + 2]
            vn = v[0] * nx + v[1] * ny
            dist = ce - (x[0] * nx + x[1] * ny)
            if dist <= BOUNDARY_EPS and vn >= 0.0:
                return 0.0, e
            if vn > 0.0:
                t = dist / vn
                if t < 0.0:
                    t = 0.0
                if t < best:
                    best = t
                    face = e
        if face < 0:
            return -1.0, 0
        return best, face
    # periodic box, walls x2 = 0 (face 0) and x2 = 1 (face 1)
    if x[1] <= BOUNDARY_EPS and v[1] <= 0.0:
        return 0.0, 0
    if x[1] >= 1.0 - BOUNDARY_EPS and v[1] >= 0.0:
        return 0.0, 1
    if v[1] < 0.0:
        return x[1] / -v[1], 0
    if v[1] > 0.0:
        return (1.0 - x[1]) / v[1], 1
    return -1.0, 0


@nb.njit(cache=True, nogil=True)
def snap_to_boundary(code, gp, q, face):
    """Project a point that should lie on ``face`` exactly onto it (in place)."""
    if code == DISK or code == BALL:
        r = gp[0]
        nrm = np.sqrt(np.sum(q * q))
        if nrm > 0.0:
            for i in range(q.size):
                q[i] *= r / nrm
    elif code == POLYGON:
        nv = int(gp[0])
        no = 1 + 2 * nv
        nx = gp[no + 3 * face]
        ny = gp[no + 3 * face + 1]
        excess = q[0] * nx + q[1] * ny - gp[no + 3 * face + 2]
        q[0] -= excess * nx
        q[1] -= excess * ny
    else:
        q[1] = 0.0 if face == 0 else 1.0
        q[0] = q[0] - np.floor(q[0])


@nb.njit(cache=True, nogil=True)
def outward_normal(code, gp, q, face, out):
    if code == DISK or code == BALL:
        r = gp[0]
        for i in range(q.size):
            out[i] = q[i] / r
    elif code == POLYGON:
        no = 1 + 2 * int(gp[0])
        out[0] = gp[no + 3 * face]
        out[1] = gp[no + 3 * face + 1]
    else:
        out[0] = 0.0
        out[1] = -1.0 if face == 0 else 1.0


@nb.njit(cache=True, nogil=True)
def boundary_parameter(code, gp, q, face):
    if code == DISK:
        a = np.arctan2(q[1], q[0])
        return a + 2.0 * np.pi if a < 0.0 else a
    if code == BALL:
        c = q[2] / gp[0]
        c = min(1.0, max(-1.0, c))
        return np.arccos(c)
    if code == POLYGON:
        nv = int(gp[0])
        s0 = gp[1 + 5 * nv + face]
        dx = q[0] - gp[1 + 2 * face]
        dy = q[1] - gp[2 + 2 * face]
        return s0 + np.sqrt(dx * dx + dy * dy)
    return q[0]


@nb.njit(cache=True)
def _exit_batch(code, gp, X, V):
    n = X.shape[0]
    t = np.empty(n)
    faces = np.empty(n, dtype=np.int64)
    for i in range(n):
        t[i], faces[i] = exit_time_kernel(code, gp, X[i], V[i])
    return t, faces


@nb.njit(cache=True)
def _exit_point_batch(code, gp, ftab, tnodes, face_field, X, V):
    n, d = X.shape
    t = np.empty(n)
    Q = np.empty((n, d))
    N = np.empty((n, d))
    theta = np.empty(n)
    faces = np.empty(n, dtype=np.int64)
    for i in range(n):
        s, f = exit_time_kernel(code, gp, X[i], V[i])
        t[i] = s
        faces[i] = f
        if s < 0.0:
            Q[i] = np.nan
            N[i] = np.nan
            theta[i] = np.nan
            continue
        for k in range(d):
            Q[i, k] = X[i, k] + s * V[i, k]
        snap_to_boundary(code, gp, Q[i], f)
        outward_normal(code, gp, Q[i], f, N[i])
        theta[i] = field_value(ftab, tnodes, face_field[f], boundary_parameter(code, gp, Q[i], f))
    return t, Q, N, theta, faces


# ----------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class BoundaryPoint:
    position: np.ndarray
    normal: np.ndarray
    temperature: float
    face: int = 0


def _as_batch(x, v, dim):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    single = x.ndim == 1 and v.ndim == 1
    x2 = np.atleast_2d(x)
    v2 = np.atleast_2d(v)
    x2, v2 = np.broadcast_arrays(x2, v2)
    if x2.shape[-1] != dim:
        raise ValueError(f"expected {dim}-dimensional points, got shape {x.shape}")
    return np.ascontiguousarray(x2), np.ascontiguousarray(v2), single


class Domain:
    """Common query surface; subclasses fill in the packed description."""

    dim: int
    code: int
    params: np.ndarray
    fields: tuple
    face_field: np.ndarray
    n_faces: int

    def _packed_fields(self):
        if not hasattr(self, "_ftab"):
            table, nodes = _pack_fields(self.fields)
            object.__setattr__(self, "_ftab", table)
            object.__setattr__(self, "_tnodes", nodes)
        return self._ftab, self._tnodes

    @property
    def packed(self):
        table, nodes = self._packed_fields()
        return self.code, self.params, table, nodes, self.face_field

    @property
    def theta_bounds(self) -> tuple[float, float]:
        lo = min(f.bounds[0] for f in self.fields)
        hi = max(f.bounds[1] for f in self.fields)
        return lo, hi

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def exit_time(self, x, v):
        """sigma(x, v); zero on the outgoing and grazing parts of the boundary."""
        X, V, single = _as_batch(x, v, self.dim)
        t, _ = _exit_batch(self.code, self.params, X, V)
        if np.any(t < 0):
            raise NoExitError("no exit: zero velocity (or no boundary crossing) from an interior point")
        return float(t[0]) if single else t

    def exit_points(self, x, v):
        """Batched exit data: (sigma, points, normals, temperatures, faces)."""
        X, V, _ = _as_batch(x, v, self.dim)
        code, gp, table, nodes, ff = self.packed
        t, Q, N, theta, faces = _exit_point_batch(code, gp, table, nodes, ff, X, V)
        if np.any(t < 0):
            raise NoExitError("no exit: zero velocity (or no boundary crossing) from an interior point")
        return t, Q, N, theta, faces

    def exit_point(self, x, v) -> BoundaryPoint:
        _, Q, N, theta, faces = self.exit_points(x, v)
        return BoundaryPoint(Q[0], N[0], float(theta[0]), int(faces[0]))

    def bracket(self, x, v):
        """1 + sigma(x, v) + sqrt(|v|)."""
        X, V, single = _as_batch(x, v, self.dim)
        out = 1.0 + self.exit_time(X, V) + np.sqrt(np.linalg.norm(V, axis=1))
        return float(out[0]) if single else out

    def boundary_point(self, q, face: int = 0) -> BoundaryPoint:
        q = np.array(q, dtype=float)
        code, gp, table, nodes, ff = self.packed
        snap_to_boundary(code, gp, q, face)
        n = np.empty(self.dim)
        outward_normal(code, gp, q, face, n)
        theta = field_value(table, nodes, ff[face], boundary_parameter(code, gp, q, face))
        return BoundaryPoint(q, n, float(theta), face)

    def distance_outside(self, x) -> np.ndarray:
        """Euclidean distance to the domain (0 inside)."""
        raise NotImplementedError

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    @property
    def volume(self) -> float:
        raise NotImplementedError

    def cell_volume(self, lo, hi) -> float:
        """Lebesgue measure of the axis-aligned box [lo, hi] intersected with the domain."""
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


def _disk_rect_area(r, x0, x1, y0, y1):
    x0, x1 = max(x0, -r), min(x1, r)
    if x1 <= x0 or y1 <= y0:
        return 0.0

    def length(x):
        h = np.sqrt(max(r * r - x * x, 0.0))
        return max(0.0, min(y1, h) - max(y0, -h))

    pts = [x0, x1]
    for y in (y0, y1):
        if abs(y) < r:
            xs = np.sqrt(r * r - y * y)
            pts += [-xs, xs]
    pts = sorted(p for p in set(pts) if x0 <= p <= x1)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += _spi.quad(length, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return total


@dataclass(frozen=True, eq=False)
class Disk(Domain):
    radius: float = 1.0
    temperature: TemperatureField = field(default_factory=lambda: TemperatureField.constant(1.0))

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dim", 2)
        object.__setattr__(self, "code", DISK)
        object.__setattr__(self, "params", np.array([float(self.radius)]))
        object.__setattr__(self, "fields", (self.temperature,))
        object.__setattr__(self, "face_field", np.zeros(1, dtype=np.int64))
        object.__setattr__(self, "n_faces", 1)

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def volume(self):
        return np.pi * self.radius**2

    def distance_outside(self, x):
        return np.maximum(np.linalg.norm(np.atleast_2d(x), axis=1) - self.radius, 0.0)

    def sample_uniform(self, n, rng):
        r = self.radius * np.sqrt(rng.random(n))
        a = 2 * np.pi * rng.random(n)
        return np.column_stack([r * np.cos(a), r * np.sin(a)])

    def bounding_box(self):
        return np.full(2, -self.radius), np.full(2, self.radius)

    def cell_volume(self, lo, hi):
        return _disk_rect_area(self.radius, lo[0], hi[0], lo[1], hi[1])


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    radius: float = 1.0
    temperature: TemperatureField = field(default_factory=lambda: TemperatureField.constant(1.0))

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "dim", 3)
        object.__setattr__(self, "code", BALL)
        object.__setattr__(self, "params", np.array([float(self.radius)]))
        object.__setattr__(self, "fields", (self.temperature,))
        object.__setattr__(self, "face_field", np.zeros(1, dtype=np.int64))
        object.__setattr__(self, "n_faces", 1)

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def volume(self):
        return 4.0 / 3.0 * np.pi * self.radius**3

    def distance_outside(self, x):
        return np.maximum(np.linalg.norm(np.atleast_2d(x), axis=1) - self.radius, 0.0)

    def sample_uniform(self, n, rng):
        g = rng.standard_normal((n, 3))
        g /= np.linalg.norm(g, axis=1)[:, None]
        return g * (self.radius * rng.random(n) ** (1 / 3))[:, None]

    def bounding_box(self):
        return np.full(3, -self.radius), np.full(3, self.radius)

    def cell_volume(self, lo, hi):
        r = self.radius
        z0, z1 = max(lo[2], -r), min(hi[2], r)
        if z1 <= z0:
            return 0.0
        def slab(z):
            return _disk_rect_area(np.sqrt(max(r * r - z * z, 0.0)), lo[0], hi[0], lo[1], hi[1])
        return _spi.quad(slab, z0, z1, epsabs=1e-13, epsrel=1e-11, limit=200)[0]


@dataclass(frozen=True, eq=False)
class ConvexPolygon(Domain):
    """Strictly convex polygon, vertices listed counterclockwise."""

    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    temperature: TemperatureField = field(default_factory=lambda: TemperatureField.constant(1.0))

    def __post_init__(self):
        vs = np.asarray(self.vertices, dtype=float)
        if vs.ndim != 2 or vs.shape[1] != 2 or len(vs) < 3:
            raise ValueError("polygon needs at least three 2d vertices")
        nxt = np.roll(vs, -1, axis=0)
        nxt2 = np.roll(vs, -2, axis=0)
        cross = (nxt[:, 0] - vs[:, 0]) * (nxt2[:, 1] - nxt[:, 1]) - (nxt[:, 1] - vs[:, 1]) * (nxt2[:, 0] - nxt[:, 0])
        if np.any(cross <= 0):
            raise ValueError("vertices must form a strictly convex counterclockwise polygon")
        edges = nxt - vs
        lengths = np.linalg.norm(edges, axis=1)
        normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, vs)
        starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
        nv = len(vs)
        gp = np.concatenate([[nv], vs.ravel(), np.column_stack([normals, offsets]).ravel(), starts, [lengths.sum()]])
        object.__setattr__(self, "vertices", tuple(map(tuple, vs)))
        object.__setattr__(self, "dim", 2)
        object.__setattr__(self, "code", POLYGON)
        object.__setattr__(self, "params", gp)
        object.__setattr__(self, "fields", (self.temperature,))
        object.__setattr__(self, "face_field", np.zeros(nv, dtype=np.int64))
        object.__setattr__(self, "n_faces", nv)

    @property
    def _verts(self):
        return np.asarray(self.vertices)

    @property
    def perimeter(self):
        return float(self.params[-1])

    @property
    def diameter(self):
        vs = self._verts
        return float(np.max(np.linalg.norm(vs[:, None] - vs[None], axis=2)))

    @property
    def volume(self):
        x, y = self._verts.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def distance_outside(self, x):
        import shapely

        poly = shapely.Polygon(self._verts)
        pts = shapely.points(np.atleast_2d(x))
        return shapely.distance(poly, pts)

    def sample_uniform(self, n, rng):
        vs = self._verts
        a, b, c = vs[0], vs[1:-1], vs[2:]
        areas = 0.5 * np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1]) - (b[:, 1] - a[1]) * (c[:, 0] - a[0]))
        tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
        u, w = rng.random(n), rng.random(n)
        flip = u + w > 1
        u[flip], w[flip] = 1 - u[flip], 1 - w[flip]
        return a + u[:, None] * (b[tri] - a) + w[:, None] * (c[tri] - a)

    def bounding_box(self):
        vs = self._verts
        return vs.min(axis=0), vs.max(axis=0)

    def cell_volume(self, lo, hi):
        import shapely

        return float(shapely.Polygon(self._verts).intersection(shapely.box(lo[0], lo[1], hi[0], hi[1])).area)


@dataclass(frozen=True, eq=False)
class PeriodicBox(Domain):
    """Unit square, periodic in x1, with walls at x2 = 0 (face 0) and x2 = 1 (face 1)."""

    bottom_temperature: TemperatureField = field(default_factory=lambda: TemperatureField.sinusoid(0.5, 0.3))
    top_temperature: TemperatureField = field(default_factory=lambda: TemperatureField.constant(1.0))

    def __post_init__(self):
        object.__setattr__(self, "dim", 2)
        object.__setattr__(self, "code", BOX)
        object.__setattr__(self, "params", np.zeros(1))
        object.__setattr__(self, "fields", (self.bottom_temperature, self.top_temperature))
        object.__setattr__(self, "face_field", np.array([0, 1], dtype=np.int64))
        object.__setattr__(self, "n_faces", 2)

    @property
    def diameter(self):
        return float(np.sqrt(2.0))

    @property
    def volume(self):
        return 1.0

    def distance_outside(self, x):
        x2 = np.atleast_2d(x)[:, 1]
        return np.maximum(np.maximum(-x2, x2 - 1.0), 0.0)

    def sample_uniform(self, n, rng):
        return rng.random((n, 2))

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    def cell_volume(self, lo, hi):
        w = max(0.0, min(hi[0], 1.0) - max(lo[0], 0.0))
        h = max(0.0, min(hi[1], 1.0) - max(lo[1], 0.0))
        return w * h


def domain_from_dict(d: dict) -> Domain:
    shape = d.get("shape")
    if shape == "disk2d":
        return Disk(float(d.get("radius", 1.0)), TemperatureField.from_dict(d.get("temperature", {"value": 1.0})))
    if shape == "ball3d":
        return Ball(float(d.get("radius", 1.0)), TemperatureField.from_dict(d.get("temperature", {"value": 1.0})))
    if shape == "convex_polygon2d":
        return ConvexPolygon(tuple(map(tuple, d["vertices"])), TemperatureField.from_dict(d.get("temperature", {"value": 1.0})))
    if shape == "periodic_box2d":
        return PeriodicBox(
            TemperatureField.from_dict(d.get("bottom_temperature", {"kind": "sinusoid", "mean": 0.5, "amplitude": 0.3})),
            TemperatureField.from_dict(d.get("top_temperature", {"value": 1.0})),
        )
    raise ValueError(f"unknown domain shape {shape!r}")


def domain_to_dict(domain: Domain) -> dict:
    if isinstance(domain, Disk):
        return {"shape": "disk2d", "radius": domain.radius, "temperature": domain.temperature.to_dict()}
    if isinstance(domain, Ball):
        return {"shape": "ball3d", "radius": domain.radius, "temperature": domain.temperature.to_dict()}
    if isinstance(domain, ConvexPolygon):
        return {"shape": "convex_polygon2d", "vertices": np.asarray(domain.vertices, dtype=float).tolist(), "temperature": domain.temperature.to_dict()}
    if isinstance(domain, PeriodicBox):
        return {
            "shape": "periodic_box2d",
            "bottom_temperature": domain.bottom_temperature.to_dict(),
            "top_temperature": domain.top_temperature.to_dict(),
        }
    raise TypeError(type(domain))
