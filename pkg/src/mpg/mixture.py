"""Mixtures of projected Gaussians and their fusion and composition."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .chart import chart_angle
from .exceptions import NoCompatiblePairs
from .projected import (
    FUSION_THRESHOLD,
    ProjectedGaussian,
    as_generator,
    common_chart_params,
    compose_pg,
    fuse_gaussians,
    recenter_params,
)
from .quaternion import RigidMotion

WEIGHT_TOL = 1e-9
FUSION_FLOOR = 1e-12


class MPG:
    """Convex combination of projected Gaussians.

    Parameters
    ----------
    weights : array-like of shape (n,)
        Nonnegative mixture weights summing to one.
    components : sequence of ProjectedGaussian
    """

    def __init__(self, weights, components: Sequence[ProjectedGaussian]):
        weights = np.array(weights, dtype=float).reshape(-1)
        components = tuple(components)
        if len(components) == 0:
            raise ValueError("a mixture needs at least one component")
        if weights.shape[0] != len(components):
            raise ValueError("weights and components differ in length")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must be nonnegative and sum to 1 (sum={weights.sum():.12g})")
        weights.flags.writeable = False
        self.weights = weights
        self.components = components

    @classmethod
    def from_unnormalized(cls, weights, components):
        weights = np.asarray(weights, dtype=float)
        return cls(weights / weights.sum(), components)

    @classmethod
    def single(cls, pg: ProjectedGaussian):
        return cls([1.0], [pg])

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(zip(self.weights, self.components))

    def __repr__(self):
        return f"MPG(n_components={len(self)}, weights={np.round(self.weights, 4).tolist()})"

    def logpdf_array(self, motions, normalized=True):
        """Log mixture density at motion arrays ``(N, 7)``."""
        motions = np.atleast_2d(motions)
        logs = np.stack([pg.logpdf_array(motions, normalized) for pg in self.components], axis=1)
        with np.errstate(divide="ignore"):
            logs = logs + np.log(self.weights)
        top = np.max(logs, axis=1)
        finite = np.isfinite(top)
        out = np.full(motions.shape[0], -np.inf)
        out[finite] = top[finite] + np.log(
            np.sum(np.exp(logs[finite] - top[finite, None]), axis=1)
        )
        return out

    def density_array(self, motions):
        motions = np.atleast_2d(motions)
        total = np.zeros(motions.shape[0])
        for w, pg in self:
            total += w * pg.density_array(motions)
        return total

    def density(self, m: RigidMotion) -> float:
        return float(self.density_array(m.as_array())[0])

    def sample_indices(self, n, rng=None):
        rng = as_generator(rng)
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        # zero-weight trailing components can never be hit
        return np.minimum(idx, len(self) - 1)

    def sample_array(self, n, rng=None, return_indices=False):
        """Draw ``n`` motions: pick components by weight, then sample each chosen PG."""
        rng = as_generator(rng)
        idx = self.sample_indices(n, rng)
        out = np.empty((n, 7))
        for k, pg in enumerate(self.components):
            hit = np.flatnonzero(idx == k)
            if hit.size:
                out[hit] = pg.sample_array(hit.size, rng)
        if return_indices:
            return out, idx
        return out

    def sample(self, rng=None) -> RigidMotion:
        x = self.sample_array(1, rng)[0]
        return RigidMotion(x[:4], x[4:])

    def dominant(self) -> ProjectedGaussian:
        return self.components[int(np.argmax(self.weights))]


def alpha_compat(p1: ProjectedGaussian, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD) -> int:
    """1 when both elements can share a tangent space, else 0."""
    return int(chart_angle(p1.chart, p2.chart) < max_angle)


def mahalanobis_factor(mu1, s1, mu2, s2):
    diff = mu1 - mu2
    return float(np.exp(-0.5 * diff @ np.linalg.solve(s1 + s2, diff)))


def delta_compat(p1: ProjectedGaussian, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD) -> float:
    """Mahalanobis compatibility ``exp(-d^2 / 2)`` of two PGs on their midpoint chart."""
    _, (mu1, s1), (mu2, s2) = common_chart_params(p1, p2, max_angle)
    return mahalanobis_factor(mu1, s1, mu2, s2)


def fuse_mpg(m1: MPG, m2: MPG, max_angle=FUSION_THRESHOLD, floor=FUSION_FLOOR, mc=None):
    """Fuse two mixtures describing the same motion.

    Every pair of components is fused and weighted by
    ``alpha * delta * w1 * w2``; pairs that cannot share a chart are
    skipped. Returns ``(mixture, skipped)``.
    """
    weights, comps = [], []
    skipped = 0
    for w1, p1 in m1:
        for w2, p2 in m2:
            if not alpha_compat(p1, p2, max_angle):
                skipped += 1
                continue
            chart, (mu1, s1), (mu2, s2) = common_chart_params(p1, p2, max_angle)
            weight = mahalanobis_factor(mu1, s1, mu2, s2) * w1 * w2
            if weight < floor:
                continue
            mu, sigma = fuse_gaussians(mu1, s1, mu2, s2)
            chart, mu, sigma = recenter_params(chart, mu, sigma)
            weights.append(weight)
            comps.append(ProjectedGaussian(chart, mu, sigma, mc or p1.mc))
    if not comps:
        raise NoCompatiblePairs(f"no component pair reached the weight floor {floor:g}")
    return MPG.from_unnormalized(weights, comps), skipped


def compose_mpg(outer: MPG, inner: MPG, mc=None) -> MPG:
    """Mixture of ``m_outer o m_inner`` for independent motions.

    Component ``(i, j)`` is ``compose_pg(outer_i, inner_j)`` with weight
    ``w_i * w_j``.
    """
    weights, comps = [], []
    for w2, p2 in outer:
        for w1, p1 in inner:
            weights.append(w2 * w1)
            comps.append(compose_pg(p2, p1, mc))
    return MPG.from_unnormalized(weights, comps)
