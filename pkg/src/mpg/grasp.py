"""Grasp criterion: probability mass of a pose density inside a moved tolerance box."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .chart import chart_at, lift_array, project
from .mixture import MPG
from .quaternion import RigidMotion, compose


@dataclass(frozen=True, eq=False)
class ToleranceBox:
    """Box around ``center``: chart half-widths for rotation, lengths for translation."""

    center: RigidMotion
    half_widths: np.ndarray

    def __post_init__(self):
        hw = np.array(self.half_widths, dtype=float).reshape(6)
        if not np.all(hw > 0):
            raise ValueError("half_widths must all be positive")
        hw.flags.writeable = False
        object.__setattr__(self, "half_widths", hw)


@dataclass(frozen=True)
class GraspConfig:
    n_samples: int = 20_000
    seed: int = 0
    max_starts: int = 10
    max_iter: int = 400
    initial_step: float = 0.5  # simplex edge as a fraction of the half-widths


def box_fraction(samples, box: ToleranceBox, transform: RigidMotion):
    """Fraction of motion samples ``(N, 7)`` inside ``transform(box)``.

    Membership is decided in the chart at the moved box center: lifted
    rotation coordinates and the translation offset must lie within the
    half-widths. Samples that cannot be lifted count as outside.
    """
    center = compose(transform, box.center)
    chart = chart_at(center.rotation)
    coords, valid = lift_array(chart, samples)
    offsets = np.where(valid[:, None], coords, np.inf)
    offsets[:, 3:] -= center.translation
    inside = np.all(np.abs(offsets) <= box.half_widths, axis=1)
    return float(np.mean(inside))


def box_probability(mpg: MPG, box: ToleranceBox, transform: RigidMotion | None = None,
                    n=20_000, seed=0):
    """Monte Carlo estimate of the mass in ``transform(box)``. Returns ``(p, stderr)``."""
    if n < 1000:
        raise ValueError("n must be at least 1000")
    transform = transform or RigidMotion.identity()
    samples = mpg.sample_array(n, np.random.default_rng(seed))
    p = box_fraction(samples, box, transform)
    return p, float(np.sqrt(p * (1.0 - p) / n))


def grasp_optimize(mpg: MPG, box: ToleranceBox, cfg: GraspConfig | None = None):
    """Search for the transform that puts the most probability mass in the box.

    Starts at the mode of each component (heaviest first) and runs
    Nelder-Mead over the chart coordinates of the moved box center. All
    evaluations share one sample set, so the objective is deterministic.
    Returns ``(transform, probability)``.
    """
    cfg = cfg or GraspConfig()
    samples = mpg.sample_array(cfg.n_samples, np.random.default_rng(cfg.seed))
    center_inv = box.center.inverse()
    order = np.argsort(-mpg.weights, kind="stable")[: cfg.max_starts]

    best_transform, best_p = None, -1.0
    for k in order:
        mode = mpg.components[k].mode
        chart = chart_at(mode.rotation)
        base = np.concatenate([np.zeros(3), mode.translation])

        def to_transform(x):
            return compose(project(chart, base + x), center_inv)

        def objective(x):
            return -box_fraction(samples, box, to_transform(x))

        x0 = np.zeros(6)
        simplex = np.vstack([x0, np.diag(cfg.initial_step * box.half_widths)])
        start_p = -objective(x0)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "maxiter": cfg.max_iter,
                                "xatol": 1e-6, "fatol": 0.5 / cfg.n_samples})
        candidates = [(start_p, x0), (-float(res.fun), res.x)]
        p, x = max(candidates, key=lambda c: c[0])
        if p > best_p:
            best_p, best_transform = p, to_transform(x)
    return best_transform, best_p
