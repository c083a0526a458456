"""Quaternion and dual-quaternion algebra for rotations and rigid motions.

Quaternions are numpy arrays ``[a, b, c, d]`` (real part first). All
functions broadcast over leading axes, so a stack of ``N`` quaternions is an
``(N, 4)`` array. Rigid motions are stored as a unit rotation quaternion plus
a translation 3-vector; the dual quaternion form is built on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import (
    DegenerateQuaternion,
    NonUnitAxis,
    NonUnitRotationPart,
)

UNIT_TOL = 1e-9
DEGENERATE_NORM = 1e-12
SIGN_TOL = 1e-9

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_mul(p, q):
    """Hamilton product ``p * q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def quat_conj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_norm(q):
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def quat_normalize(q):
    """Return ``q / |q|``; raises DegenerateQuaternion for (near) zero input."""
    q = np.asarray(q, dtype=float)
    n = quat_norm(q)
    if np.any(n <= DEGENERATE_NORM):
        raise DegenerateQuaternion(f"cannot normalize quaternion with norm {np.min(n):.3g}")
    return q / n[..., None]


def left_matrix(p):
    """4x4 matrix ``L`` with ``L @ q == quat_mul(p, q)``."""
    a, b, c, d = np.asarray(p, dtype=float)
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    )


def canonical_sign(q):
    """Pick the representative of ``{q, -q}`` whose first significant coefficient is positive."""
    q = np.asarray(q, dtype=float)
    significant = np.abs(q) > SIGN_TOL
    first = np.argmax(significant, axis=-1)
    lead = np.take_along_axis(q, first[..., None], axis=-1)[..., 0]
    sign = np.where(lead < 0.0, -1.0, 1.0)
    return q * sign[..., None]


def axis_angle(axis, theta):
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
        raise NonUnitAxis(f"axis norm is {np.linalg.norm(axis):.12g}, expected 1")
    half = 0.5 * theta
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def rotate_point(q, p):
    """Rotate 3-vector(s) ``p`` by unit quaternion(s) ``q`` via ``q * p * conj(q)``."""
    p = np.asarray(p, dtype=float)
    pq = np.concatenate([np.zeros(p.shape[:-1] + (1,)), p], axis=-1)
    return quat_mul(quat_mul(q, pq), quat_conj(q))[..., 1:]


def _renormalize(q):
    # unit quaternions drift under long product chains
    return q / quat_norm(q)[..., None]


class DualQuaternion(NamedTuple):
    """``real + eps * dual`` with ``eps**2 == 0``."""

    real: np.ndarray
    dual: np.ndarray


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    return DualQuaternion(
        quat_mul(a.real, b.real),
        quat_mul(a.real, b.dual) + quat_mul(a.dual, b.real),
    )


def dq_conj(a: DualQuaternion) -> DualQuaternion:
    """Quaternion conjugate of both parts."""
    return DualQuaternion(quat_conj(a.real), quat_conj(a.dual))


def dq_total_conj(a: DualQuaternion) -> DualQuaternion:
    """Quaternion conjugate combined with the dual conjugate (``eps -> -eps``)."""
    return DualQuaternion(quat_conj(a.real), -quat_conj(a.dual))


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """Rotation quaternion (canonical sign) plus translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        if abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
            raise NonUnitRotationPart(f"rotation norm is {np.linalg.norm(q):.12g}")
        t = np.asarray(self.translation, dtype=float).reshape(3)
        q = canonical_sign(q)
        q.flags.writeable = False
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(IDENTITY, np.zeros(3))

    @classmethod
    def from_array(cls, x):
        """Build from a 7-vector ``[a, b, c, d, x, y, z]``; the rotation is renormalized."""
        x = np.asarray(x, dtype=float)
        return cls(_renormalize(x[:4]), x[4:7])

    def as_array(self):
        return np.concatenate([self.rotation, self.translation])

    def __matmul__(self, other):
        return compose(self, other)

    def inverse(self):
        q_inv = quat_conj(self.rotation)
        return RigidMotion(q_inv, -rotate_point(q_inv, self.translation))

    def isclose(self, other, atol=1e-12):
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"RigidMotion(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def motion_to_dq(m: RigidMotion) -> DualQuaternion:
    qt = np.concatenate([[0.0], m.translation])
    return DualQuaternion(m.rotation.copy(), 0.5 * quat_mul(qt, m.rotation))


def dq_to_motion(dq: DualQuaternion) -> RigidMotion:
    real = np.asarray(dq.real, dtype=float)
    if abs(np.linalg.norm(real) - 1.0) > UNIT_TOL:
        raise NonUnitRotationPart(f"real part norm is {np.linalg.norm(real):.12g}")
    qt = 2.0 * quat_mul(dq.dual, quat_conj(real))
    return RigidMotion(real, qt[1:])


def compose(m2: RigidMotion, m1: RigidMotion) -> RigidMotion:
    """Motion ``m2 o m1`` (apply ``m1`` first), i.e. the dual quaternion product ``dq2 * dq1``."""
    dq = dq_mul(motion_to_dq(m2), motion_to_dq(m1))
    real = _renormalize(dq.real)
    return RigidMotion(real, 2.0 * quat_mul(dq.dual, quat_conj(real))[1:])


def transform_point(m: RigidMotion, p):
    """Apply ``m`` to a point using the dual quaternion sandwich product."""
    p = np.asarray(p, dtype=float)
    dq = motion_to_dq(m)
    pd = DualQuaternion(IDENTITY, np.concatenate([[0.0], p]))
    out = dq_mul(dq_mul(dq, pd), dq_total_conj(dq))
    return out.dual[1:]


# Batched helpers on (..., 7) motion arrays [a, b, c, d, x, y, z].

def compose_arrays(x2, x1):
    """Vectorized ``compose`` on motion arrays; rotations are renormalized, not sign-canonicalized."""
    q2, t2 = x2[..., :4], x2[..., 4:]
    q1, t1 = x1[..., :4], x1[..., 4:]
    q = _renormalize(quat_mul(q2, q1))
    t = rotate_point(q2, t1) + t2
    return np.concatenate([q, t], axis=-1)

