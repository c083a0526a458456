import numpy as np
import pytest


def rotation_matrix(q):
    """Textbook quaternion-to-matrix conversion, used only as an oracle."""
    a, b, c, d = q
    return np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ])


def homogeneous(q, t):
    T = np.eye(4)
    T[:3, :3] = rotation_matrix(q)
    T[:3, 3] = t
    return T


def random_unit_quaternions(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def random_spd(rng, dim=6, scale=1.0, cond=10.0):
    a = rng.normal(size=(dim, dim))
    u, _ = np.linalg.qr(a)
    eig = scale * np.exp(rng.uniform(0.0, np.log(cond), dim))
    return (u * eig) @ u.T


def quaternion_near(rng, q0, max_angle):
    """Unit quaternion within ``max_angle`` (4D angle) of ``q0``."""
    from mpg.quaternion import quat_mul
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = rng.uniform(0.0, max_angle)
    dq = np.concatenate([[np.cos(ang)], np.sin(ang) * axis])
    return quat_mul(q0, dq)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_component_source(chart_sep_deg=60.0, sigma=0.05, weights=(0.3, 0.7), mc=None):
    """Generative mixture with tangent points ``chart_sep_deg`` apart (quaternion angle)."""
    from mpg.chart import chart_at
    from mpg.mixture import MPG
    from mpg.projected import MCConfig, ProjectedGaussian
    from mpg.quaternion import axis_angle, quat_mul
    mc = mc or MCConfig(10_000, 0)
    q1 = axis_angle(np.array([1.0, 2.0, 2.0]) / 3.0, 0.7)
    q2 = quat_mul(q1, axis_angle([0.0, 0.0, 1.0], np.deg2rad(2 * chart_sep_deg)))
    cov = sigma**2 * np.eye(6)
    comps = [
        ProjectedGaussian(chart_at(q1), [0, 0, 0, 0.1, 0.2, 0.3], cov, mc),
        ProjectedGaussian(chart_at(q2), [0, 0, 0, -0.2, 0.0, 0.5], cov, mc),
    ]
    return MPG(list(weights), comps)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
