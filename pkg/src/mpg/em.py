"""Expectation maximization for mixtures of projected Gaussians.

Each component keeps its own tangent chart. The M-step estimates weighted
moments of the samples lifted into that chart and then moves the chart to
the new rotational mean, so every fitted component stays in PG0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .chart import chart_angle, chart_at, lift_array
from .exceptions import EmptyComponent, OrphanSample, TooFewSamples
from .mixture import MPG
from .projected import MCConfig, ProjectedGaussian, as_generator, recenter_params, symmetrize

logger = logging.getLogger(__name__)

INIT_STRATEGIES = ("sphere-kmeans", "random-restart")
EMPTY_MASS = 1e-6
INIT_JITTER = 1e-6


@dataclass(frozen=True)
class EmConfig:
    n_components: int = 1
    max_iters: int = 200
    loglik_tol: float = 1e-3
    param_tol: float = 1e-8
    seed: int = 0
    init_strategy: str = "sphere-kmeans"
    normalized: bool = True  # divide component densities by their normalization constant
    reg_covar: float = 1e-9
    n_restarts: int = 5
    mc: MCConfig = field(default_factory=MCConfig)

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError("n_components must be at least 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not (self.loglik_tol > 0 and self.param_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ValueError(f"init_strategy must be one of {INIT_STRATEGIES}")


@dataclass
class EmTrace:
    """Per-iteration record of an EM run.

    ``loglik[0]`` belongs to the initial mixture and ``loglik[t + 1]`` to the
    mixture after iteration ``t``. ``loglik_pre_reset[t]`` is the
    log-likelihood of the M-step estimate of iteration ``t`` before the
    charts are moved, evaluated with the normalization constants that were
    in force during that iteration's E-step.
    """

    loglik: list = field(default_factory=list)
    loglik_pre_reset: list = field(default_factory=list)
    responsibilities: np.ndarray | None = None
    n_iter: int = 0
    converged: bool = False
    warnings: list = field(default_factory=list)

    def to_csv(self):
        rows = ["iter,loglik"]
        rows += [f"{i},{ll!r}" for i, ll in enumerate(self.loglik)]
        return "\n".join(rows) + "\n"


def _align(q, ref):
    s = np.sign(q @ ref)
    s[s == 0] = 1.0
    return q * s[:, None]


def _fold_distance(q, centers):
    return np.maximum(1.0 - np.abs(q @ centers.T), 0.0)


def spherical_kmeans(quats, k, rng, max_iter=100):
    """k-means on unit quaternions with the antipodal fold ``1 - |<q, c>|``.

    Seeds with k-means++. Returns ``(centers, labels, inertia)``.
    """
    n = quats.shape[0]
    centers = [quats[rng.integers(n)]]
    for _ in range(1, k):
        d = np.min(_fold_distance(quats, np.array(centers)), axis=1)
        total = d.sum()
        if total <= 0.0:
            centers.append(quats[rng.integers(n)])
            continue
        centers.append(quats[rng.choice(n, p=d / total)])
    centers = np.array(centers)
    labels = None
    for _ in range(max_iter):
        new_labels = np.argmin(_fold_distance(quats, centers), axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = quats[labels == j]
            if len(members) == 0:
                continue
            total = _align(members, centers[j]).sum(axis=0)
            norm = np.linalg.norm(total)
            if norm > 0:
                centers[j] = total / norm
    inertia = float(np.sum(np.min(_fold_distance(quats, centers), axis=1)))
    return centers, labels, inertia


def em_init(samples, cfg: EmConfig) -> MPG:
    """Initial mixture from spherical k-means clusters of the rotations."""
    samples = np.asarray(samples, dtype=float)
    k = cfg.n_components
    if samples.shape[0] < 10 * k:
        raise TooFewSamples(f"{samples.shape[0]} samples for {k} components; need {10 * k}")
    rng = as_generator(cfg.seed)
    quats = samples[:, :4]
    restarts = cfg.n_restarts if cfg.init_strategy == "random-restart" else 1
    best = None
    for _ in range(restarts):
        result = spherical_kmeans(quats, k, rng)
        if best is None or result[2] < best[2]:
            best = result
    centers, labels, _ = best
    comps = []
    for j in range(k):
        chart = chart_at(centers[j])
        members = samples[labels == j]
        coords, valid = lift_array(chart, members)
        coords = coords[valid]
        mu = np.zeros(6)
        if len(coords) > 1:
            mu[3:] = coords[:, 3:].mean(axis=0)
            sigma = np.cov(coords, rowvar=False)
        else:
            # degenerate cluster: fall back to the spread of every liftable sample
            all_coords, all_valid = lift_array(chart, samples)
            sigma = np.cov(all_coords[all_valid], rowvar=False)
        comps.append(ProjectedGaussian(chart, mu, symmetrize(sigma) + INIT_JITTER * np.eye(6), cfg.mc))
    return MPG(np.full(k, 1.0 / k), comps)


def _component_logs(mpg: MPG, samples, normalized=True):
    logs = np.stack([pg.logpdf_array(samples, normalized) for pg in mpg.components], axis=1)
    with np.errstate(divide="ignore"):
        return logs + np.log(mpg.weights)


def _logsumexp_rows(logs):
    top = np.max(logs, axis=1)
    if not np.all(np.isfinite(top)):
        bad = int(np.flatnonzero(~np.isfinite(top))[0])
        raise OrphanSample(f"sample {bad} cannot be lifted into any component chart")
    return top + np.log(np.sum(np.exp(logs - top[:, None]), axis=1))


def log_likelihood(mpg: MPG, samples, normalized=True) -> float:
    return float(np.sum(_logsumexp_rows(_component_logs(mpg, samples, normalized))))


def e_step(mpg: MPG, samples, normalized=True):
    """Responsibilities ``(N, k)``; rows sum to one."""
    logs = _component_logs(mpg, samples, normalized)
    norm = _logsumexp_rows(logs)
    return np.exp(logs - norm[:, None])


def _weighted_moments(chart, samples, resp_i, reg_covar):
    coords, valid = lift_array(chart, samples)
    g = resp_i[valid]
    y = coords[valid]
    mass = g.sum()
    mu = g @ y / mass
    d = y - mu
    sigma = (d * g[:, None]).T @ d / mass
    return mu, symmetrize(sigma) + reg_covar * np.eye(6), mass


def m_step(samples, resp, mpg: MPG, cfg: EmConfig, trace: EmTrace | None = None):
    """Re-estimate weights and moments on each component's chart.

    Returns ``(new_mpg, pre_reset)`` where ``pre_reset`` is a list of
    ``(weight, chart, mu, sigma, old_pg)`` before recentering. Components
    whose responsibility mass is at most 1e-6 are removed.
    """
    n = samples.shape[0]
    masses = resp.sum(axis=0)
    pre_reset = []
    for i, pg in enumerate(mpg.components):
        if masses[i] <= EMPTY_MASS:
            msg = f"component {i} emptied (mass {masses[i]:.3g}); removed"
            logger.warning(msg)
            if trace is not None:
                trace.warnings.append(msg)
            continue
        mu, sigma, mass = _weighted_moments(pg.chart, samples, resp[:, i], cfg.reg_covar)
        pre_reset.append((mass / n, pg.chart, mu, sigma, pg))
    if not pre_reset:
        raise EmptyComponent("every component emptied")
    weights = np.array([p[0] for p in pre_reset])
    weights /= weights.sum()
    comps = []
    for _, chart, mu, sigma, _ in pre_reset:
        chart, mu, sigma = recenter_params(chart, mu, sigma)
        comps.append(ProjectedGaussian(chart, mu, sigma, cfg.mc))
    return MPG(weights, comps), [(w,) + p[1:] for w, p in zip(weights, pre_reset)]


def _pre_reset_loglik(pre_reset, samples, normalized):
    logs = []
    for w, chart, mu, sigma, old in pre_reset:
        tmp = ProjectedGaussian.from_state(chart, mu, sigma, old.norm_const)
        logs.append(tmp.logpdf_array(samples, normalized) + np.log(w))
    return float(np.sum(_logsumexp_rows(np.stack(logs, axis=1))))


def _param_change(a: MPG, b: MPG):
    if len(a) != len(b):
        return np.inf
    change = float(np.max(np.abs(a.weights - b.weights)))
    for pa, pb in zip(a.components, b.components):
        change = max(
            change,
            chart_angle(pa.chart, pb.chart),
            float(np.max(np.abs(pa.mu - pb.mu))),
            float(np.max(np.abs(pa.sigma - pb.sigma))),
        )
    return change


def em_fit(samples, cfg: EmConfig | None = None):
    """Fit a mixture to motion samples ``(N, 7)``. Returns ``(mpg, trace)``."""
    cfg = cfg or EmConfig()
    samples = np.asarray(samples, dtype=float)
    mpg = em_init(samples, cfg)
    trace = EmTrace()
    ll = log_likelihood(mpg, samples, cfg.normalized)
    trace.loglik.append(ll)
    for it in range(cfg.max_iters):
        resp = e_step(mpg, samples, cfg.normalized)
        new, pre_reset = m_step(samples, resp, mpg, cfg, trace)
        trace.loglik_pre_reset.append(_pre_reset_loglik(pre_reset, samples, cfg.normalized))
        new_ll = log_likelihood(new, samples, cfg.normalized)
        trace.loglik.append(new_ll)
        trace.n_iter = it + 1
        done = abs(new_ll - ll) < cfg.loglik_tol or _param_change(mpg, new) < cfg.param_tol
        mpg, ll = new, new_ll
        if done:
            trace.converged = True
            break
    trace.responsibilities = e_step(mpg, samples, cfg.normalized)
    return mpg, trace
