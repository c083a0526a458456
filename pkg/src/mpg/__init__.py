"""Mixtures of projected Gaussians: probability densities over 6D rigid motions."""
from .chart import TangentChart, chart_angle, chart_at, lift, project, transition
from .em import EmConfig, EmTrace, em_fit
from .estimator import ProjectedGaussianMixture
from .grasp import ToleranceBox, box_probability, grasp_optimize
from .mixture import MPG, compose_mpg, fuse_mpg
from .projected import MCConfig, ProjectedGaussian, compose_pg, fuse_pg
from .quaternion import DualQuaternion, RigidMotion, compose, transform_point
from .reduction import ReductionReport, drop_components, merge_pair, reduce_mixture, skl

__all__ = [
    "DualQuaternion", "EmConfig", "EmTrace", "MCConfig", "MPG", "ProjectedGaussian",
    "ProjectedGaussianMixture", "ReductionReport", "RigidMotion", "TangentChart", "ToleranceBox",
    "box_probability", "chart_angle", "chart_at", "compose", "compose_mpg", "compose_pg",
    "drop_components", "em_fit", "fuse_mpg", "fuse_pg", "grasp_optimize", "lift", "merge_pair",
    "project", "reduce_mixture", "skl", "transform_point", "transition",
]
__version__ = "0.1.0"
