"""Projected Gaussians: Gaussians on a tangent chart pushed onto SE(3).

The density of a projected Gaussian at a motion ``m`` is the chart Gaussian
evaluated at the lift of ``m``, divided by a normalization constant that is
estimated by Monte Carlo. The constant integrates over both quaternion
sheets with the round measure on the 3-sphere, so each sample drawn from the
chart Gaussian contributes the central-projection area element
``(1 + u^2 + v^2 + w^2) ** -2`` and the sheet count contributes a factor 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .chart import (
    TangentChart,
    chart_angle,
    chart_at,
    composition_chart,
    composition_jacobian,
    composition_map,
    lift_array,
    project_array,
    transition_array,
    transition_jacobian,
)
from .exceptions import ChartsTooFarApart, NonSymmetric, NotPositiveDefinite
from .quaternion import RigidMotion

DIM = 6
FUSION_THRESHOLD = np.deg2rad(15.0)
SYM_TOL = 1e-12
EIG_FLOOR = -1e-9
JITTER = 1e-9
MC_CHUNK = 4096


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings for normalization constants."""

    n_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1000:
            raise ValueError("n_samples must be at least 1000")


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def box_muller(rng, shape):
    """Standard normal draws from pairs of uniforms."""
    shape = tuple(np.atleast_1d(shape))
    count = int(np.prod(shape))
    half = (count + 1) // 2
    u1 = 1.0 - rng.random(half)  # in (0, 1]
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:count].reshape(shape)


def central_projection_constant(mean, cov, n, seed):
    """Mass of a tangent Gaussian pushed onto a unit sphere by central projection.

    ``mean`` and ``cov`` describe the Gaussian on the tangent plane (any
    dimension ``k``). Returns ``(C, stderr)`` where
    ``C = 2 * E[(1 + |y|^2) ** (-(k + 1) / 2)]``. Samples are drawn in fixed
    chunks, each with its own counter-based stream, so the estimate only
    depends on ``seed`` and ``n``.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = mean.shape[0]
    chol = _psd_factor(cov)
    n_chunks = -(-n // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    weights = np.empty(n)
    for i, child in enumerate(children):
        size = min(MC_CHUNK, n - i * MC_CHUNK)
        rng = np.random.Generator(np.random.Philox(child))
        y = mean + box_muller(rng, (size, k)) @ chol.T
        r2 = np.sum(y * y, axis=1)
        weights[i * MC_CHUNK : i * MC_CHUNK + size] = (1.0 + r2) ** (-0.5 * (k + 1))
    weights *= 2.0
    return float(weights.mean()), float(weights.std(ddof=1) / np.sqrt(n))


def _cholesky(cov):
    return cholesky(cov, lower=True, check_finite=False)


def _psd_factor(cov):
    """``L`` with ``L L^T = cov``; semi-definite input (a point mass) is allowed."""
    try:
        return _cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        if vals[0] < EIG_FLOOR * max(1.0, float(vals[-1])):
            raise NotPositiveDefinite(f"covariance has eigenvalue {vals[0]:.3g}") from None
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def validate_covariance(sigma):
    """Check symmetry and definiteness, jittering semi-definite input."""
    sigma = np.array(sigma, dtype=float).reshape(DIM, DIM)
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(sigma - sigma.T)) > SYM_TOL * scale:
        raise NonSymmetric("covariance is not symmetric")
    sigma = 0.5 * (sigma + sigma.T)
    smallest = np.linalg.eigvalsh(sigma)[0]
    if smallest < EIG_FLOOR:
        raise NotPositiveDefinite(f"covariance has eigenvalue {smallest:.3g}")
    if smallest <= 0.0:
        sigma = sigma + JITTER * np.eye(DIM)
    return sigma


def symmetrize(a):
    return 0.5 * (a + a.T)


class ProjectedGaussian:
    """Gaussian ``N(mu, sigma)`` on ``chart`` projected onto SE(3) and renormalized.

    Instances are immutable. The normalization constant is computed on
    construction with ``mc`` (default 10^4 samples, seed 0).
    """

    __slots__ = ("chart", "mu", "sigma", "norm_const", "norm_stderr", "norm_samples", "mc", "_chol")

    def __init__(self, chart: TangentChart, mu, sigma, mc: MCConfig | None = None):
        mc = mc or MCConfig()
        mu = np.array(mu, dtype=float).reshape(DIM)
        if not np.all(np.isfinite(mu)):
            raise ValueError("mean must be finite")
        sigma = validate_covariance(sigma)
        c, err = central_projection_constant(mu[:3], sigma[:3, :3], mc.n_samples, mc.seed)
        self._set(chart, mu, sigma, c, err, mc.n_samples, mc)

    @classmethod
    def from_state(cls, chart, mu, sigma, norm_const, norm_stderr=0.0, norm_samples=0, mc=None):
        """Rebuild without recomputing the normalization constant."""
        self = object.__new__(cls)
        sigma = validate_covariance(sigma)
        if not norm_const > 0:
            raise ValueError("normalization constant must be positive")
        self._set(chart, np.array(mu, dtype=float).reshape(DIM), sigma, float(norm_const),
                  float(norm_stderr), int(norm_samples), mc or MCConfig())
        return self

    def _set(self, chart, mu, sigma, c, err, n, mc):
        mu.flags.writeable = False
        sigma.flags.writeable = False
        for name, value in (("chart", chart), ("mu", mu), ("sigma", sigma), ("norm_const", c),
                            ("norm_stderr", err), ("norm_samples", n), ("mc", mc)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "_chol", None)

    def __setattr__(self, name, value):
        raise AttributeError("ProjectedGaussian is immutable")

    def __reduce__(self):
        return (ProjectedGaussian.from_state, (self.chart, self.mu, self.sigma, self.norm_const,
                                               self.norm_stderr, self.norm_samples, self.mc))

    def __repr__(self):
        return (f"ProjectedGaussian(q0={self.chart.q0.tolist()}, mu={self.mu.tolist()}, "
                f"C={self.norm_const:.6g})")

    @property
    def chol(self):
        if self._chol is None:
            object.__setattr__(self, "_chol", _cholesky(self.sigma))
        return self._chol

    @property
    def is_pg0(self):
        return bool(np.all(self.mu[:3] == 0.0))

    @property
    def mode(self) -> RigidMotion:
        """The projected mean."""
        x = project_array(self.chart, self.mu)
        return RigidMotion(x[:4], x[4:])

    # density

    def gaussian_logpdf(self, coords):
        """Log density of the chart Gaussian at coordinates ``(N, 6)``."""
        diff = np.atleast_2d(coords) - self.mu
        sol = solve_triangular(self.chol, diff.T, lower=True, check_finite=False)
        maha = np.sum(sol * sol, axis=0)
        log_det = 2.0 * np.sum(np.log(np.diag(self.chol)))
        return -0.5 * (maha + log_det + DIM * np.log(2.0 * np.pi))

    def logpdf_array(self, motions, normalized=True):
        """Log density at motion arrays ``(N, 7)``; ``-inf`` where the lift is undefined."""
        coords, valid = lift_array(self.chart, np.atleast_2d(motions))
        out = np.full(coords.shape[0], -np.inf)
        if np.any(valid):
            out[valid] = self.gaussian_logpdf(coords[valid])
            if normalized:
                out[valid] -= np.log(self.norm_const)
        return out

    def density_array(self, motions):
        return np.exp(self.logpdf_array(motions))

    def density(self, m: RigidMotion) -> float:
        return float(self.density_array(m.as_array())[0])

    # sampling

    def sample_coords(self, n, rng=None):
        rng = as_generator(rng)
        return self.mu + box_muller(rng, (n, DIM)) @ self.chol.T

    def sample_array(self, n, rng=None):
        """``n`` motions as a ``(n, 7)`` array."""
        return project_array(self.chart, self.sample_coords(n, rng))

    def sample(self, rng=None) -> RigidMotion:
        x = self.sample_array(1, rng)[0]
        return RigidMotion(x[:4], x[4:])

    # chart changes

    def restate(self, chart: TangentChart, max_angle=FUSION_THRESHOLD):
        if chart_angle(self.chart, chart) >= max_angle:
            raise ChartsTooFarApart(
                f"charts are {np.rad2deg(chart_angle(self.chart, chart)):.2f} degrees apart"
            )
        mu, sigma = restate_params(self.chart, self.mu, self.sigma, chart)
        return ProjectedGaussian(chart, mu, sigma, self.mc)

    def recenter(self):
        """Equivalent PG whose chart sits at the projected mean (a PG0 element)."""
        if self.is_pg0:
            return self
        chart, mu, sigma = recenter_params(self.chart, self.mu, self.sigma)
        return ProjectedGaussian(chart, mu, sigma, self.mc)

    def with_norm(self, mc: MCConfig):
        return ProjectedGaussian(self.chart, self.mu, self.sigma, mc)


def restate_params(chart, mu, sigma, new_chart):
    """Move ``N(mu, sigma)`` on ``chart`` to ``new_chart`` by linearizing the transition at ``mu``."""
    new_mu = transition_array(chart, new_chart, mu)
    jac = transition_jacobian(chart, new_chart, mu)
    return new_mu, symmetrize(jac @ sigma @ jac.T)


def recenter_params(chart, mu, sigma):
    x = project_array(chart, mu)
    new_chart = chart_at(x[:4])
    new_mu, new_sigma = restate_params(chart, mu, sigma, new_chart)
    new_mu[:3] = 0.0
    return new_chart, new_mu, new_sigma


def midpoint_chart(a: TangentChart, b: TangentChart) -> TangentChart:
    """Chart at ``normalize(q_a + s q_b)`` with ``s`` folding ``q_b`` onto ``q_a``'s hemisphere."""
    s = -1.0 if np.dot(a.q0, b.q0) < 0.0 else 1.0
    q = a.q0 + s * b.q0
    return chart_at(q / np.linalg.norm(q))


def common_chart_params(p1: ProjectedGaussian, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD):
    """Restate both PGs onto their midpoint chart. Returns ``(chart, (mu1, s1), (mu2, s2))``."""
    angle = chart_angle(p1.chart, p2.chart)
    if angle >= max_angle:
        raise ChartsTooFarApart(f"charts are {np.rad2deg(angle):.2f} degrees apart")
    chart = midpoint_chart(p1.chart, p2.chart)
    return (
        chart,
        restate_params(p1.chart, p1.mu, p1.sigma, chart),
        restate_params(p2.chart, p2.mu, p2.sigma, chart),
    )


def fuse_gaussians(mu1, s1, mu2, s2):
    """Information-form product of two Gaussians on a shared chart."""
    f1 = cho_factor(s1)
    f2 = cho_factor(s2)
    info = cho_solve(f1, np.eye(DIM)) + cho_solve(f2, np.eye(DIM))
    sigma = symmetrize(np.linalg.inv(symmetrize(info)))
    mu = sigma @ (cho_solve(f1, mu1) + cho_solve(f2, mu2))
    return mu, sigma


def fuse_pg(p1: ProjectedGaussian, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD, mc=None):
    """Fuse two PGs describing the same motion; the result is in PG0."""
    chart, (mu1, s1), (mu2, s2) = common_chart_params(p1, p2, max_angle)
    mu, sigma = fuse_gaussians(mu1, s1, mu2, s2)
    chart, mu, sigma = recenter_params(chart, mu, sigma)
    return ProjectedGaussian(chart, mu, sigma, mc or p1.mc)


def compose_pg(p2: ProjectedGaussian, p1: ProjectedGaussian, mc=None):
    """PG of the motion ``m2 o m1`` for independent ``m2 ~ p2`` and ``m1 ~ p1``.

    Inputs are recentered first. The covariance is propagated through the
    Jacobian of the composition map at the two means.
    """
    p2 = p2.recenter()
    p1 = p1.recenter()
    jac = composition_jacobian(p2.chart, p1.chart, p2.mu, p1.mu)
    chart3 = composition_chart(p2.chart, p1.chart)
    mu = composition_map(p2.chart, p1.chart, chart3, p2.mu, p1.mu)
    # rotation part of g at two PG0 means is zero up to roundoff
    mu[:3] = 0.0
    joint = np.zeros((2 * DIM, 2 * DIM))
    joint[:DIM, :DIM] = p2.sigma
    joint[DIM:, DIM:] = p1.sigma
    sigma = symmetrize(jac @ joint @ jac.T)
    return ProjectedGaussian(chart3, mu, sigma, mc or p2.mc)
