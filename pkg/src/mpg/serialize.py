"""JSON (de)serialization of motions, projected Gaussians, mixtures and boxes.

Floats are written with ``repr`` (shortest round-trip form), so values
survive a write/read cycle bit for bit.
"""
from __future__ import annotations

import json

import numpy as np

from .chart import chart_at
from .exceptions import MPGError, SchemaError
from .grasp import ToleranceBox
from .mixture import MPG
from .projected import MCConfig, ProjectedGaussian, validate_covariance
from .quaternion import RigidMotion


def _floats(x):
    return [float(v) for v in np.asarray(x, dtype=float).reshape(-1)]


def _vector(obj, key, size, where):
    field = f"{where}.{key}" if where else key
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(field, "missing")
    value = obj[key]
    if not isinstance(value, list) or len(value) != size:
        raise SchemaError(field, f"expected a list of {size} numbers")
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(field, "entries must be numbers") from None
    if not np.all(np.isfinite(arr)):
        raise SchemaError(field, "entries must be finite")
    return arr


def _number(obj, key, where):
    field = f"{where}.{key}" if where else key
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(field, "missing")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(field, "expected a number")
    return value


def motion_to_dict(m: RigidMotion):
    return {"q": _floats(m.rotation), "t": _floats(m.translation)}


def motion_from_dict(obj, where=""):
    q = _vector(obj, "q", 4, where)
    t = _vector(obj, "t", 3, where)
    try:
        return RigidMotion(q, t)
    except MPGError as exc:
        raise SchemaError(f"{where}.q" if where else "q", str(exc)) from None


def pg_to_dict(pg: ProjectedGaussian):
    return {
        "q0": _floats(pg.chart.q0),
        "mu": _floats(pg.mu),
        "sigma": _floats(pg.sigma),
        "C": float(pg.norm_const),
        "n_mc": int(pg.norm_samples),
    }


def pg_from_dict(obj, where=""):
    q0 = _vector(obj, "q0", 4, where)
    mu = _vector(obj, "mu", 6, where)
    sigma = _vector(obj, "sigma", 36, where).reshape(6, 6)
    c = _number(obj, "C", where)
    n_mc = _number(obj, "n_mc", where)
    try:
        chart = chart_at(q0)
    except MPGError as exc:
        raise SchemaError(f"{where}.q0", str(exc)) from None
    try:
        sigma = validate_covariance(sigma)
    except MPGError as exc:
        raise SchemaError(f"{where}.sigma", str(exc)) from None
    if not c > 0:
        raise SchemaError(f"{where}.C", "must be positive")
    if n_mc < 0:
        raise SchemaError(f"{where}.n_mc", "must be nonnegative")
    return ProjectedGaussian.from_state(chart, mu, sigma, c, 0.0, int(n_mc),
                                        MCConfig(max(int(n_mc), 1000)))


def mpg_to_dict(m: MPG):
    return {"components": [{"weight": float(w), "pg": pg_to_dict(pg)} for w, pg in m]}


def mpg_from_dict(obj, where=""):
    field = f"{where}.components" if where else "components"
    if not isinstance(obj, dict) or not isinstance(obj.get("components"), list):
        raise SchemaError(field, "expected a list of components")
    if not obj["components"]:
        raise SchemaError(field, "must not be empty")
    weights, comps = [], []
    for i, item in enumerate(obj["components"]):
        at = f"{field}[{i}]"
        w = _number(item, "weight", at)
        if w < 0:
            raise SchemaError(f"{at}.weight", "must be nonnegative")
        if "pg" not in item:
            raise SchemaError(f"{at}.pg", "missing")
        weights.append(float(w))
        comps.append(pg_from_dict(item["pg"], f"{at}.pg"))
    total = sum(weights)
    if not total > 0:
        raise SchemaError(field, "weights sum to zero")
    if abs(total - 1.0) > 1e-9:
        raise SchemaError(field, f"weights sum to {total!r}, expected 1")
    return MPG(weights, comps)  # stored weights are kept bit for bit


def box_to_dict(box: ToleranceBox):
    return {"center": motion_to_dict(box.center), "half_widths": _floats(box.half_widths)}


def box_from_dict(obj, where=""):
    if not isinstance(obj, dict) or "center" not in obj:
        raise SchemaError(f"{where}.center" if where else "center", "missing")
    center = motion_from_dict(obj["center"], f"{where}.center" if where else "center")
    hw = _vector(obj, "half_widths", 6, where)
    if not np.all(hw > 0):
        raise SchemaError(f"{where}.half_widths" if where else "half_widths", "must be positive")
    return ToleranceBox(center, hw)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def motions_to_jsonl(motions) -> str:
    """One ``{"q": ..., "t": ...}`` object per line for a motion array ``(N, 7)``."""
    lines = []
    for row in np.atleast_2d(motions):
        m = RigidMotion(row[:4], row[4:7])
        lines.append(json.dumps(motion_to_dict(m), sort_keys=True))
    return "\n".join(lines) + "\n"


def motions_from_jsonl(text) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}", f"invalid JSON ({exc.msg})") from None
        rows.append(motion_from_dict(obj, f"line {lineno}").as_array())
    if not rows:
        raise SchemaError("samples", "no motions found")
    return np.array(rows)
