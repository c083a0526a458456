"""Mixture reduction: dropping light components and merging similar ones."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import chart_angle
from .exceptions import AllComponentsDropped, TargetUnreachable
from .mixture import MPG
from .projected import (
    DIM,
    FUSION_THRESHOLD,
    ProjectedGaussian,
    common_chart_params,
    recenter_params,
    symmetrize,
)


@dataclass
class ReductionReport:
    """What a drop or reduce pass removed.

    ``dropped`` holds ``(index, weight)`` with the weight at the moment of
    removal; ``merged`` holds ``(id_a, id_b, id_new, cost)`` where ids index
    the input components and merged components get fresh ids counting up
    from the input size. ``bound`` is the accumulated ``2 * sum(weight)``
    over dropped components.
    """

    dropped: list = field(default_factory=list)
    merged: list = field(default_factory=list)
    bound: float = 0.0

    def extend(self, other: "ReductionReport"):
        self.dropped.extend(other.dropped)
        self.merged.extend(other.merged)
        self.bound += other.bound
        return self

    def lines(self):
        out = [f"drop {i} weight={w!r}" for i, w in self.dropped]
        out += [f"merge {a} {b} -> {c} cost={cost!r}" for a, b, c, cost in self.merged]
        out.append(f"bound {self.bound!r}")
        return out


def _drop_lightest(mpg: MPG, keep_going):
    weights = [float(w) for w in mpg.weights]
    ids = list(range(len(mpg)))
    report = ReductionReport()
    while weights:
        k = int(np.argmin(weights))  # ties resolve to the lowest index
        w = weights[k]
        if not keep_going(w, len(report.dropped)):
            break
        if len(weights) == 1:
            raise AllComponentsDropped("every component would be dropped")
        report.dropped.append((ids[k], float(w)))
        report.bound += 2.0 * w
        del weights[k], ids[k]
        total = sum(weights)
        weights = [x / total for x in weights]
    if not report.dropped:
        return mpg, report
    comps = [mpg.components[i] for i in ids]
    return MPG.from_unnormalized(weights, comps), report


def drop_components(mpg: MPG, floor: float):
    """Remove components lighter than ``floor``, lightest first.

    Weights are renormalized after each removal, so a component just above
    the floor can survive once lighter ones are gone.
    """
    return _drop_lightest(mpg, lambda w, _: w < floor)


def drop_count(mpg: MPG, count: int):
    """Remove the ``count`` lightest components, one at a time."""
    if count >= len(mpg):
        raise AllComponentsDropped(f"cannot drop {count} of {len(mpg)} components")
    return _drop_lightest(mpg, lambda _, done: done < count)


def skl_gaussian(mu1, s1, mu2, s2):
    """Symmetric KL divergence between two 6D Gaussians on a common chart."""
    i1 = np.linalg.inv(s1)
    i2 = np.linalg.inv(s2)
    diff = np.asarray(mu1) - np.asarray(mu2)
    d = (i1 + i2) @ np.outer(diff, diff)
    return float(0.5 * np.trace(i2 @ s1 + i1 @ s2 + d) - DIM)


def skl(p1: ProjectedGaussian, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD) -> float:
    """Symmetric KL divergence of two PGs restated to their midpoint chart."""
    _, (mu1, s1), (mu2, s2) = common_chart_params(p1, p2, max_angle)
    return skl_gaussian(mu1, s1, mu2, s2)


def moment_match(w1, mu1, s1, w2, mu2, s2):
    """Single Gaussian with the first two moments of ``w1 N(mu1, s1) + w2 N(mu2, s2)``."""
    w = w1 + w2
    mu = (w1 * mu1 + w2 * mu2) / w
    d1 = mu1 - mu
    d2 = mu2 - mu
    sigma = (w1 * (s1 + np.outer(d1, d1)) + w2 * (s2 + np.outer(d2, d2))) / w
    return mu, symmetrize(sigma)


def _merge_candidate(w1, p1, w2, p2, max_angle):
    chart, (mu1, s1), (mu2, s2) = common_chart_params(p1, p2, max_angle)
    mu, sigma = moment_match(w1, mu1, s1, w2, mu2, s2)
    cost = w1 * skl_gaussian(mu1, s1, mu, sigma) + w2 * skl_gaussian(mu, sigma, mu2, s2)
    return cost, chart, mu, sigma


def merge_pair(w1, p1: ProjectedGaussian, w2, p2: ProjectedGaussian, max_angle=FUSION_THRESHOLD, mc=None):
    """Replace two weighted PGs by one moment-matched PG in PG0. Returns ``(w, pg)``."""
    _, chart, mu, sigma = _merge_candidate(w1, p1, w2, p2, max_angle)
    chart, mu, sigma = recenter_params(chart, mu, sigma)
    return w1 + w2, ProjectedGaussian(chart, mu, sigma, mc or p1.mc)


def merge_bound(w1, p1, w2, p2, max_angle=FUSION_THRESHOLD):
    """Upper bound on the sKL between a mixture and its copy with ``p1, p2`` merged."""
    cost, *_ = _merge_candidate(w1, p1, w2, p2, max_angle)
    return cost / (w1 + w2)


def reduce_mixture(mpg: MPG, target_n: int, max_angle=FUSION_THRESHOLD, mc=None):
    """Greedily merge the cheapest chart-compatible pair until ``target_n`` components remain.

    The cost of a pair is ``w1 * sKL(p1, p') + w2 * sKL(p', p2)`` where ``p'``
    is the moment-matched merge.
    """
    if target_n < 1:
        raise ValueError("target_n must be at least 1")
    report = ReductionReport()
    slots = {i: (float(w), pg) for i, (w, pg) in enumerate(mpg)}
    order = list(range(len(mpg)))  # output order; a merge takes the lower slot
    next_id = len(mpg)
    costs = {}

    def consider(a, b):
        wa, pa = slots[a]
        wb, pb = slots[b]
        if chart_angle(pa.chart, pb.chart) < max_angle:
            costs[(a, b)] = _merge_candidate(wa, pa, wb, pb, max_angle)

    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            consider(a, b)

    while len(slots) > target_n:
        if not costs:
            raise TargetUnreachable(
                f"{len(slots)} components left and no pair shares a chart (target {target_n})"
            )
        (a, b), (cost, chart, mu, sigma) = min(costs.items(), key=lambda kv: (kv[1][0], kv[0]))
        wa, pa = slots.pop(a)
        wb, _ = slots.pop(b)
        chart, mu, sigma = recenter_params(chart, mu, sigma)
        new = ProjectedGaussian(chart, mu, sigma, mc or pa.mc)
        slots[next_id] = (wa + wb, new)
        pos = order.index(a)
        order[pos] = next_id
        order.remove(b)
        report.merged.append((a, b, next_id, float(cost)))
        costs = {k: v for k, v in costs.items() if a not in k and b not in k}
        for other in order:
            if other != next_id:
                consider(*sorted((other, next_id)))
        next_id += 1

    weights = [slots[k][0] for k in order]
    comps = [slots[k][1] for k in order]
    return MPG.from_unnormalized(weights, comps), report
