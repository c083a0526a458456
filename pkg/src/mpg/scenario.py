"""Feature-based object pose estimation pipeline.

Each detected feature contributes a camera-to-feature mixture and a known
feature-to-object mixture. Composing them gives one object pose estimate
per feature; estimates are then fused, thinned by dropping light components
and reduced by merging.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import chart_at
from .exceptions import MPGError, SchemaError
from .grasp import ToleranceBox, box_probability
from .mixture import MPG, compose_mpg, fuse_mpg
from .projected import MCConfig, ProjectedGaussian
from .quaternion import RigidMotion, axis_angle, compose, quat_mul
from .reduction import drop_components, drop_count, reduce_mixture
from . import serialize

STEP_OPS = ("compose", "fuse", "drop", "reduce")


class ScenarioError(MPGError):
    def __init__(self, index, op, cause):
        super().__init__(f"step {index} ({op}): {cause}")
        self.index = index
        self.op = op


@dataclass
class Feature:
    name: str
    camera_to_feature: MPG
    feature_to_object: MPG


@dataclass
class Scenario:
    features: list
    steps: list
    seed: int = 0
    mc_samples: int = 10_000
    truth: RigidMotion | None = None
    box_half_widths: np.ndarray | None = None

    @property
    def mc(self):
        return MCConfig(self.mc_samples, self.seed)


@dataclass
class ScenarioResult:
    mixtures: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)  # (step index, op, ReductionReport)
    final: str | None = None

    def counts(self):
        return {name: len(m) for name, m in self.mixtures.items()}


def sight_line_mpg(pose: RigidMotion, mc: MCConfig, cone_deg=15.0, n_tilts=6, sigma_rot=0.03,
                   sigma_along=0.03, sigma_perp=0.005, center_weight=0.25):
    """Camera-to-feature mixture for a feature seen at ``pose``.

    The roll about the sight line is taken as known; the tilt of the feature
    plane is only known to lie within a cone, so tangent points are the true
    rotation plus ``n_tilts`` tilts by half the cone angle about axes
    perpendicular to the sight line. Translation uncertainty is elongated
    along the sight line.
    """
    d = pose.translation / np.linalg.norm(pose.translation)
    e1 = np.cross(d, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(d, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    tilt = np.deg2rad(0.5 * cone_deg)
    rotations = [pose.rotation]
    for k in range(n_tilts):
        phi = 2.0 * np.pi * k / n_tilts
        axis = np.cos(phi) * e1 + np.sin(phi) * e2
        rotations.append(quat_mul(axis_angle(axis, tilt), pose.rotation))
    sigma = np.zeros((6, 6))
    sigma[:3, :3] = sigma_rot**2 * np.eye(3)
    sigma[3:, 3:] = sigma_perp**2 * np.eye(3) + (sigma_along**2 - sigma_perp**2) * np.outer(d, d)
    mu = np.concatenate([np.zeros(3), pose.translation])
    comps = [ProjectedGaussian(chart_at(q), mu, sigma, mc) for q in rotations]
    weights = [center_weight] + [(1.0 - center_weight) / n_tilts] * n_tilts
    return MPG.from_unnormalized(weights, comps)


def rigid_mpg(pose: RigidMotion, mc: MCConfig, sigma_rot=1e-3, sigma_trans=1e-3):
    """Single tight component at ``pose`` (a known transform)."""
    sigma = np.diag([sigma_rot**2] * 3 + [sigma_trans**2] * 3)
    mu = np.concatenate([np.zeros(3), pose.translation])
    return MPG.single(ProjectedGaussian(chart_at(pose.rotation), mu, sigma, mc))


def _mixture_entry(entry, key, mc, where):
    if key in entry:
        return serialize.mpg_from_dict(entry[key], f"{where}.{key}")
    model_key = f"{key}_model"
    if model_key not in entry:
        raise SchemaError(f"{where}.{key}", "missing (give a mixture or a model)")
    model = dict(entry[model_key])
    if "pose" not in model:
        raise SchemaError(f"{where}.{model_key}.pose", "missing")
    pose = serialize.motion_from_dict(model.pop("pose"), f"{where}.{model_key}.pose")
    builder = sight_line_mpg if key == "camera_to_feature" else rigid_mpg
    try:
        return builder(pose, mc, **model)
    except TypeError as exc:
        raise SchemaError(f"{where}.{model_key}", str(exc)) from None


def _check_steps(steps, names):
    defined = set()
    for i, step in enumerate(steps):
        where = f"steps[{i}]"
        if not isinstance(step, dict) or step.get("op") not in STEP_OPS:
            raise SchemaError(f"{where}.op", f"expected one of {STEP_OPS}")
        op = step["op"]
        if "out" not in step or not isinstance(step["out"], str):
            raise SchemaError(f"{where}.out", "missing output name")
        if op == "compose":
            if step.get("feature") not in names:
                raise SchemaError(f"{where}.feature", f"unknown feature {step.get('feature')!r}")
        elif op == "fuse":
            inputs = step.get("inputs")
            if not isinstance(inputs, list) or len(inputs) != 2:
                raise SchemaError(f"{where}.inputs", "expected two names")
            for name in inputs:
                if name not in defined:
                    raise SchemaError(f"{where}.inputs", f"{name!r} is not defined by an earlier step")
        else:
            if step.get("input") not in defined:
                raise SchemaError(f"{where}.input", f"{step.get('input')!r} is not defined by an earlier step")
            if op == "drop" and ("floor" in step) == ("count" in step):
                raise SchemaError(f"{where}.floor", "give exactly one of floor or count")
            if op == "reduce" and (not isinstance(step.get("target"), int) or step["target"] < 1):
                raise SchemaError(f"{where}.target", "expected a positive integer")
        defined.add(step["out"])


def scenario_from_dict(obj) -> Scenario:
    if not isinstance(obj, dict):
        raise SchemaError("scenario", "expected an object")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise SchemaError("seed", "expected a nonnegative integer")
    mc_samples = obj.get("mc_samples", 10_000)
    if not isinstance(mc_samples, int) or mc_samples < 1000:
        raise SchemaError("mc_samples", "expected an integer of at least 1000")
    mc = MCConfig(mc_samples, seed)
    feats = obj.get("features")
    if not isinstance(feats, list) or not feats:
        raise SchemaError("features", "expected a non-empty list")
    features = []
    for i, entry in enumerate(feats):
        where = f"features[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise SchemaError(f"{where}.name", "missing")
        features.append(Feature(
            entry["name"],
            _mixture_entry(entry, "camera_to_feature", mc, where),
            _mixture_entry(entry, "feature_to_object", mc, where),
        ))
    steps = obj.get("steps")
    if not isinstance(steps, list) or not steps:
        raise SchemaError("steps", "expected a non-empty list")
    _check_steps(steps, {f.name for f in features})
    truth = serialize.motion_from_dict(obj["truth"], "truth") if "truth" in obj else None
    hw = None
    if "box_half_widths" in obj:
        hw = serialize._vector(obj, "box_half_widths", 6, "")
    return Scenario(features, steps, seed, mc_samples, truth, hw)


def run_scenario(scenario: Scenario, output_dir=None) -> ScenarioResult:
    """Execute the steps in order, writing every intermediate mixture when ``output_dir`` is set."""
    features = {f.name: f for f in scenario.features}
    result = ScenarioResult()
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    mc = scenario.mc
    for i, step in enumerate(scenario.steps):
        op = step["op"]
        try:
            report = None
            if op == "compose":
                f = features[step["feature"]]
                mixture = compose_mpg(f.camera_to_feature, f.feature_to_object, mc)
            elif op == "fuse":
                a, b = (result.mixtures[n] for n in step["inputs"])
                mixture, _ = fuse_mpg(a, b, mc=mc)
            elif op == "drop":
                src = result.mixtures[step["input"]]
                if "floor" in step:
                    mixture, report = drop_components(src, step["floor"])
                else:
                    mixture, report = drop_count(src, step["count"])
            else:
                mixture, report = reduce_mixture(result.mixtures[step["input"]], step["target"], mc=mc)
        except (MPGError, ValueError, np.linalg.LinAlgError) as exc:
            raise ScenarioError(i, op, exc) from exc
        result.mixtures[step["out"]] = mixture
        result.final = step["out"]
        if report is not None:
            result.reports.append((i, op, report))
        if out is not None:
            (out / f"{i:02d}_{step['out']}.json").write_text(serialize.dumps(serialize.mpg_to_dict(mixture)))
    if out is not None:
        lines = [f"step {i} {op}: {line}" for i, op, rep in result.reports for line in rep.lines()]
        lines += [f"count {name} {n}" for name, n in result.counts().items()]
        (out / "reports.txt").write_text("\n".join(lines) + "\n")
    return result


def truth_box_probabilities(scenario: Scenario, result: ScenarioResult, names, n=20_000, seed=0):
    """Box probability around the true pose for each named mixture."""
    if scenario.truth is None or scenario.box_half_widths is None:
        raise ValueError("scenario has no truth or box_half_widths")
    box = ToleranceBox(scenario.truth, scenario.box_half_widths)
    return {name: box_probability(result.mixtures[name], box, None, n, seed) for name in names}


def demo_scenario_dict(seed=0, mc_samples=10_000):
    """Three features on a box-shaped object; two are fused, thinned, reduced, then the third joins."""
    truth = RigidMotion(axis_angle([0.0, 1.0, 0.0], np.deg2rad(20.0)), [0.05, -0.02, 0.8])
    offsets = {  # feature positions in the object frame
        "B": [-0.06, 0.04, 0.0],
        "l": [0.06, 0.03, 0.0],
        "mountain": [0.0, -0.07, 0.0],
    }
    rolls = {"B": 10.0, "l": -25.0, "mountain": 40.0}
    features = []
    for name, offset in offsets.items():
        object_to_feature = RigidMotion(axis_angle([0.0, 0.0, 1.0], np.deg2rad(rolls[name])), offset)
        camera_to_feature = compose(truth, object_to_feature)
        features.append({
            "name": name,
            "camera_to_feature_model": {"pose": serialize.motion_to_dict(camera_to_feature)},
            "feature_to_object_model": {"pose": serialize.motion_to_dict(object_to_feature.inverse())},
        })
    steps = [
        {"op": "compose", "feature": "B", "out": "B_object"},
        {"op": "compose", "feature": "l", "out": "l_object"},
        {"op": "fuse", "inputs": ["B_object", "l_object"], "out": "fused"},
        {"op": "drop", "input": "fused", "count": 10, "out": "dropped"},
        {"op": "reduce", "input": "dropped", "target": 10, "out": "reduced"},
        {"op": "compose", "feature": "mountain", "out": "mountain_object"},
        {"op": "fuse", "inputs": ["reduced", "mountain_object"], "out": "fused_all"},
        {"op": "reduce", "input": "fused_all", "target": 10, "out": "final"},
    ]
    return {
        "seed": seed,
        "mc_samples": mc_samples,
        "features": features,
        "steps": steps,
        "truth": serialize.motion_to_dict(truth),
        "box_half_widths": [0.02, 0.02, 0.02, 0.01, 0.01, 0.01],
    }


def load_scenario(path) -> Scenario:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("scenario", f"invalid JSON ({exc.msg})") from None
    return scenario_from_dict(obj)
