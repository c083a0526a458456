"""Input checks shared by the estimator, the CLI and the library entry points."""
import numpy as np
from sklearn.utils import check_array

from .exceptions import DegenerateQuaternion
from .quaternion import DEGENERATE_NORM, canonical_sign


def check_motions(X, name="X"):
    """Validate a motion array ``(N, 7)`` of ``[a, b, c, d, x, y, z]`` rows.

    Rotations are renormalized and put in canonical sign. Accepts a single
    7-vector as one row.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, input_name=name, copy=True)
    if X.shape[1] != 7:
        raise ValueError(f"{name} must have 7 columns [a, b, c, d, x, y, z], got {X.shape[1]}")
    norms = np.linalg.norm(X[:, :4], axis=1)
    if np.any(norms <= DEGENERATE_NORM):
        bad = int(np.flatnonzero(norms <= DEGENERATE_NORM)[0])
        raise DegenerateQuaternion(f"{name}[{bad}] has a zero rotation quaternion")
    X[:, :4] = canonical_sign(X[:, :4] / norms[:, None])
    return X


def check_covariance_shape(sigma, name="sigma"):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (6, 6):
        raise ValueError(f"{name} must be 6x6, got {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise ValueError(f"{name} must be finite")
    return sigma
