"""Power-law slope fits of distance-vs-time curves above a Monte Carlo noise floor."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

MIN_POINTS = 6
FLOOR_FACTOR = 3.0


class InsufficientDynamicRange(ValueError):
    """Too few snapshots sit above the noise floor for a slope fit."""


@dataclass(frozen=True)
class DecayFit:
    times: list
    distances: list
    noise_floor: float
    window: tuple
    n_points: int
    slope: float
    intercept: float
    slope_stderr: float
    ci95: tuple

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        d["ci95"] = list(self.ci95)
        return d


def fit_decay(times, distances, noise_floor: float, *, t_min: float = 0.0, t_max: float = np.inf,
              floor_factor: float = FLOOR_FACTOR, min_points: int = MIN_POINTS) -> DecayFit:
    """Least squares of log(distance) on log(1 + t).

    Only points with t in [t_min, t_max] whose distance exceeds
    ``floor_factor * noise_floor`` enter the fit.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(distances, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and distances must have the same length")
    ok = (t >= t_min) & (t <= t_max) & (y > floor_factor * noise_floor) & np.isfinite(y) & (y > 0)
    if ok.sum() < min_points:
        raise InsufficientDynamicRange(
            f"insufficient dynamic range: {int(ok.sum())} admissible points above {floor_factor} x noise floor "
            f"{noise_floor:.3g} (need {min_points})"
        )
    lx = np.log1p(t[ok])
    ly = np.log(y[ok])
    res = stats.linregress(lx, ly)
    q = stats.t.ppf(0.975, ok.sum() - 2)
    return DecayFit(
        t.tolist(), y.tolist(), float(noise_floor), (float(t[ok].min()), float(t[ok].max())), int(ok.sum()),
        float(res.slope), float(res.intercept), float(res.stderr),
        (float(res.slope - q * res.stderr), float(res.slope + q * res.stderr)),
    )


def synthetic_decay(exponent: float, times, *, scale: float = 1.0, noise: float = 0.01, rng=None):
    """C / (1 + t)**exponent with multiplicative Gaussian noise of relative size ``noise``."""
    rng = np.random.default_rng(0) if rng is None else rng
    t = np.asarray(times, dtype=float)
    return scale * (1 + t) ** (-exponent) * (1 + noise * rng.standard_normal(t.size))
