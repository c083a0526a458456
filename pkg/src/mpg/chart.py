"""Tangent-space charts of the unit-quaternion sphere extended by translations.

A chart at tangent point ``q0`` has the basis ``b_i = q0 * e_i``; chart
coordinates ``(u, v, w, x, y, z)`` map to the rotation
``(b1 + u b2 + v b3 + w b4) / sqrt(1 + u^2 + v^2 + w^2)`` by central projection
and to the translation ``(x, y, z)`` unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NearOrthogonalRotation, NonUnitTangentPoint
from .quaternion import (
    RigidMotion,
    UNIT_TOL,
    canonical_sign,
    compose_arrays,
    left_matrix,
    quat_mul,
)

LIFT_GUARD = np.sin(np.deg2rad(5.0))
FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class TangentChart:
    q0: np.ndarray
    basis: np.ndarray  # columns are b1..b4

    @property
    def rotation(self):
        return self.q0

    def __repr__(self):
        return f"TangentChart(q0={self.q0.tolist()})"


def chart_at(q0) -> TangentChart:
    q0 = np.array(q0, dtype=float).reshape(4)
    if abs(np.linalg.norm(q0) - 1.0) > UNIT_TOL:
        raise NonUnitTangentPoint(f"tangent point norm is {np.linalg.norm(q0):.12g}")
    basis = left_matrix(q0)
    q0.flags.writeable = False
    basis.flags.writeable = False
    return TangentChart(q0, basis)


IDENTITY_CHART = chart_at([1.0, 0.0, 0.0, 0.0])


def project_array(chart: TangentChart, coords):
    """Map chart coordinates ``(N, 6)`` to motion arrays ``(N, 7)`` with canonical-sign rotations."""
    coords = np.asarray(coords, dtype=float)
    if not np.all(np.isfinite(coords)):
        raise ValueError("tangent coordinates must be finite")
    rot = coords[..., :3]
    homog = np.concatenate([np.ones(rot.shape[:-1] + (1,)), rot], axis=-1)
    q = homog @ chart.basis.T
    q = q / np.sqrt(1.0 + np.sum(rot * rot, axis=-1))[..., None]
    return np.concatenate([canonical_sign(q), coords[..., 3:]], axis=-1)


def project(chart: TangentChart, coords) -> RigidMotion:
    x = project_array(chart, np.asarray(coords, dtype=float).reshape(6))
    return RigidMotion(x[:4], x[4:])


def lift_array(chart: TangentChart, motions):
    """Lift motion arrays ``(N, 7)`` into the chart.

    Returns ``(coords, valid)``. Rows whose rotation is within 5 degrees of
    the chart's equator are marked invalid and their coordinates are NaN.
    """
    motions = np.asarray(motions, dtype=float)
    c = motions[..., :4] @ chart.basis  # components along b1..b4
    lead = c[..., 0]
    valid = np.abs(lead) > LIFT_GUARD
    safe = np.where(valid, lead, 1.0)
    rot = c[..., 1:] / safe[..., None]
    rot = np.where(valid[..., None], rot, np.nan)
    return np.concatenate([rot, motions[..., 4:7]], axis=-1), valid


def lift(chart: TangentChart, m: RigidMotion):
    coords, valid = lift_array(chart, m.as_array())
    if not valid:
        raise NearOrthogonalRotation(
            f"rotation {m.rotation.tolist()} is within 5 degrees of orthogonal to {chart.q0.tolist()}"
        )
    return coords


def chart_angle(a: TangentChart, b: TangentChart) -> float:
    """Angle between tangent points with the antipodal fold, in ``[0, pi/2]``."""
    return float(np.arccos(np.clip(abs(np.dot(a.q0, b.q0)), 0.0, 1.0)))


def transition_array(a: TangentChart, b: TangentChart, coords):
    moved, valid = lift_array(b, project_array(a, coords))
    if not np.all(valid):
        raise NearOrthogonalRotation("transition leaves the domain of the target chart")
    return moved


def transition(a: TangentChart, b: TangentChart, coords):
    return transition_array(a, b, np.asarray(coords, dtype=float).reshape(6))


def transition_jacobian(a: TangentChart, b: TangentChart, at, h=FD_STEP):
    """6x6 Jacobian of ``transition(a, b, .)`` at ``at`` by central differences.

    Only the rotation block is differenced; translations pass through the
    transition unchanged, so the remaining blocks are exact.
    """
    at = np.asarray(at, dtype=float).reshape(6)
    steps = np.concatenate([np.eye(3), -np.eye(3)]) * h
    probes = np.tile(at, (6, 1))
    probes[:, :3] += steps
    out = transition_array(a, b, probes)[:, :3]
    jac = np.eye(6)
    jac[:3, :3] = ((out[:3] - out[3:]) / (2.0 * h)).T
    return jac


def composition_chart(chart2: TangentChart, chart1: TangentChart) -> TangentChart:
    return chart_at(canonical_sign(quat_mul(chart2.q0, chart1.q0)))


def composition_map(chart2, chart1, chart3, y2, y1):
    """``g(y2, y1)``: compose the projected motions and lift into ``chart3``."""
    motions = compose_arrays(project_array(chart2, y2), project_array(chart1, y1))
    out, valid = lift_array(chart3, motions)
    if not np.all(valid):
        raise NearOrthogonalRotation("composed motion leaves the result chart")
    return out


def composition_jacobian(chart2: TangentChart, chart1: TangentChart, at2=None, at1=None, h=FD_STEP):
    """6x12 Jacobian of ``g`` with respect to ``(y2, y1)``.

    Differenced at ``(at2, at1)``, zero by default. The result chart is the
    one at ``q2 * q1``, where the rotation part of ``g(at2, at1)`` vanishes
    whenever both points have zero rotation coordinates.
    """
    at2 = np.zeros(6) if at2 is None else np.asarray(at2, dtype=float).reshape(6)
    at1 = np.zeros(6) if at1 is None else np.asarray(at1, dtype=float).reshape(6)
    chart3 = composition_chart(chart2, chart1)
    base = np.concatenate([at2, at1])
    probes = np.tile(base, (24, 1))
    probes += np.concatenate([np.eye(12), -np.eye(12)]) * h
    out = composition_map(chart2, chart1, chart3, probes[:, :6], probes[:, 6:])
    return ((out[:12] - out[12:]) / (2.0 * h)).T
