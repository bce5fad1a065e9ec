"""Kernel identity checks over a parameter grid, collected into a JSON report."""

from __future__ import annotations

import json
import math
import time

import numpy as np

from ..kernel import (
    AccommodationParams,
    KernelDomainError,
    bessel_i0e,
    bessel_i0_integral,
    chen_gaussian_identity,
    chen_rice_identity,
    cl_flux_integral,
    nonregularity_witness,
    normalization_residual,
    reciprocity_residual,
    reemitted_mass,
    tail_mass,
)
from ..quadrature import QuadratureError
from .config import ConfigError, config_hash

TOLERANCES = {
    "normalization": 1e-6,
    "chen_gaussian": 1e-8,
    "chen_rice": 1e-8,
    "cl_flux": 1e-6,
    "reciprocity": 1e-12,
    "tail_mass": 0.25,
    "bessel_i0": 1e-12,
}
FAMILIES = tuple(TOLERANCES)
FAULT_SIZE = 1e-3
WALL_NORMAL = np.array([0.0, -1.0])

DEFAULT_GRID = {
    "normalization": {
        "theta": [0.5, 1.0, 2.0],
        "r_perp": [0.1, 0.5, 0.9],
        "r_par": [0.2, 1.0, 1.8],
        "speed": [0.1, 1.0, 10.0, 50.0],
        "incidence_deg": 30.0,
    },
    "chen_gaussian": {"n": 100, "seed": 101},
    "chen_rice": {"n": 100, "seed": 102},
    "cl_flux": {"n": 50, "seed": 103},
    "reciprocity": {"n": 100, "seed": 104},
    "tail_mass": {"m": [10.0], "theta": 1.0, "r_perp": 0.5, "r_par": 0.5},
    "bessel_i0": {"y": [0.0, 0.5, 3.0, 14.9, 15.1, 40.0, 200.0]},
}


def random_chen_triples(n, seed):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.2, 3.0, n)
    a = b * rng.uniform(0.05, 0.9, n)
    w = rng.uniform(-2.5, 2.5, n)
    return np.column_stack([a, b, w]).tolist()


def random_flux_tuples(n, seed):
    """(v1, v2, T2, r_perp, r_par) with r_par the root of r_par (2 - r_par) = r_perp."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        rp = rng.uniform(0.05, 1.0)
        s = math.sqrt(1 - rp)
        rq = 1 + s if rng.random() < 0.5 else 1 - s
        out.append([rng.uniform(-2, 2), rng.uniform(0.05, 2.5), rng.uniform(0.1, 1.0), rp, rq])
    return out


def random_reciprocity_triples(n, seed):
    """(a1, a2, b1, b2, T, r_perp, r_par) with a2 > 0 > b2."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = [rng.uniform(-3, 3), rng.uniform(0.05, 3)]
        b = [rng.uniform(-3, 3), -rng.uniform(0.05, 3)]
        out.append(a + b + [rng.uniform(0.2, 2.0), rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.95)])
    return out


def _check(identity, params, residual, tol, *, lower=False, reason=None):
    if reason is not None:
        return {"identity": identity, "parameters": params, "residual": None, "tolerance": tol,
                "passed": False, "reason": reason}
    ok = residual >= tol if lower else residual < tol
    return {"identity": identity, "parameters": params, "residual": float(residual), "tolerance": tol,
            "passed": bool(ok), "reason": None if ok else ("below bound" if lower else "residual above tolerance")}


def _guard(identity, params, tol, fn, **kw):
    try:
        return _check(identity, params, fn(), tol, **kw)
    except QuadratureError as exc:
        return _check(identity, params, None, tol, reason=f"quadrature did not converge: {exc}")
    except KernelDomainError as exc:
        return _check(identity, params, None, tol, reason=f"parameters outside the identity's domain: {exc}")


def _rel(lhs, rhs):
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def _entries(spec, draw):
    if "values" in spec:
        return [list(map(float, e)) for e in spec["values"]]
    return draw(int(spec.get("n", 0)), spec.get("seed", 0))


def _fault(active, k):
    return 1.0 + FAULT_SIZE if active and k == 0 else 1.0


def run_checks(grid: dict, *, inject_fault: str | None = None):
    """List of check records, in family order then grid order.

    ``inject_fault`` names a family; its first check is computed with the
    right-hand side perturbed by a relative 1e-3 so the report must flag it.
    """
    unknown = set(grid) - set(FAMILIES)
    if unknown:
        raise ConfigError(f"unknown identity families in grid: {sorted(unknown)}")
    if inject_fault is not None and inject_fault not in FAMILIES:
        raise ConfigError(f"cannot inject a fault into unknown family {inject_fault!r}")
    checks = []

    spec = grid.get("normalization")
    if spec:
        ang = math.radians(float(spec.get("incidence_deg", 30.0)))
        # incident direction with u . n = cos(ang) > 0 for n = (0, -1)
        direction = np.array([math.sin(ang), -math.cos(ang)])
        k = 0
        for th in spec.get("theta", []):
            for rp in spec.get("r_perp", []):
                for rq in spec.get("r_par", []):
                    for U in spec.get("speed", []):
                        u = U * direction
                        p = {"theta": th, "r_perp": rp, "r_par": rq, "speed": U, "u": u.tolist()}

                        def res(u=u, th=th, prm=AccommodationParams(rp, rq), f=_fault(inject_fault == "normalization", k)):
                            if f == 1.0:
                                return normalization_residual(u, WALL_NORMAL, th, prm)
                            mass = reemitted_mass(u, WALL_NORMAL, th, prm, tol=1e-10)
                            if not mass.converged:
                                raise QuadratureError("normalization quadrature did not converge")
                            return abs(mass.value - f)

                        checks.append(_guard("normalization", p, TOLERANCES["normalization"], res))
                        k += 1

    for name, fn in (("chen_gaussian", chen_gaussian_identity), ("chen_rice", chen_rice_identity)):
        spec = grid.get(name)
        if not spec:
            continue
        for k, (a, b, w) in enumerate(_entries(spec, random_chen_triples)):
            f = _fault(inject_fault == name, k)

            def res(a=a, b=b, w=w, f=f, fn=fn):
                lhs, rhs = fn(a, b, w)
                return _rel(lhs, rhs * f)

            checks.append(_guard(name, {"a": a, "b": b, "w": w}, TOLERANCES[name], res))

    spec = grid.get("cl_flux")
    if spec:
        for k, (v1, v2, T2, rp, rq) in enumerate(_entries(spec, random_flux_tuples)):
            f = _fault(inject_fault == "cl_flux", k)

            def res(v=(v1, v2), T2=T2, rp=rp, rq=rq, f=f):
                lhs, rhs = cl_flux_integral(np.array(v), T2, rp, rq)
                return abs(lhs - rhs * f)

            checks.append(_guard("cl_flux", {"v": [v1, v2], "T2": T2, "r_perp": rp, "r_par": rq},
                                 TOLERANCES["cl_flux"], res))

    spec = grid.get("reciprocity")
    if spec:
        for k, (a1, a2, b1, b2, T, rp, rq) in enumerate(_entries(spec, random_reciprocity_triples)):
            f = _fault(inject_fault == "reciprocity", k)

            def res(a=(a1, a2), b=(b1, b2), T=T, rp=rp, rq=rq, f=f):
                r = reciprocity_residual(np.array(a), np.array(b), T, rp, rq)
                return r if f == 1.0 else abs(r + (f - 1.0))

            checks.append(_guard("reciprocity", {"a": [a1, a2], "b": [b1, b2], "T": T, "r_perp": rp, "r_par": rq},
                                 TOLERANCES["reciprocity"], res))

    spec = grid.get("tail_mass")
    if spec:
        th = float(spec.get("theta", 1.0))
        prm = AccommodationParams(float(spec.get("r_perp", 0.5)), float(spec.get("r_par", 0.5)))
        bound = float(spec.get("bound", TOLERANCES["tail_mass"]))
        for k, m in enumerate(spec.get("m", [])):
            f = _fault(inject_fault == "tail_mass", k)

            def res(m=m, f=f):
                up, uq = nonregularity_witness(m, th, prm)
                # incident velocity on the wall with outward normal (0, -1)
                u = np.array([uq, -up])
                return tail_mass(u, WALL_NORMAL, th, prm, m) * (1.0 if f == 1.0 else 0.0)

            checks.append(_guard("tail_mass", {"m": m, "theta": th, "r_perp": prm.r_perp, "r_par": prm.r_par},
                                 bound, res, lower=True))

    spec = grid.get("bessel_i0")
    if spec:
        for k, y in enumerate(spec.get("y", [])):
            f = _fault(inject_fault == "bessel_i0", k)

            def res(y=float(y), f=f):
                ref = bessel_i0_integral(y) * math.exp(-abs(y))
                return abs(float(bessel_i0e(y)) * f - ref) / ref

            checks.append(_guard("bessel_i0", {"y": y}, TOLERANCES["bessel_i0"], res))
    return checks


def build_report(grid: dict, *, inject_fault: str | None = None) -> dict:
    start = time.perf_counter()
    checks = run_checks(grid, inject_fault=inject_fault)
    failed = [c for c in checks if not c["passed"]]
    return {
        "grid_sha256": config_hash(grid),
        "inject_fault": inject_fault,
        "checks": checks,
        "summary": {"n_checks": len(checks), "n_failed": len(failed), "passed": not failed,
                    "families": sorted({c["identity"] for c in checks})},
        "_seconds": time.perf_counter() - start,
    }


def report_json(report: dict) -> str:
    """Serialized report without the timing field, so identical grids give identical bytes."""
    body = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=False) + "\n"


__all__ = ["DEFAULT_GRID", "FAMILIES", "TOLERANCES", "build_report", "report_json", "run_checks"]
