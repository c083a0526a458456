"""scikit-learn compatible density estimator backed by EM on projected Gaussians."""
import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from .em import EmConfig, e_step, em_fit
from .projected import MCConfig
from .validation import check_motions


class ProjectedGaussianMixture(DensityMixin, BaseEstimator):
    """Mixture of projected Gaussians over rigid motions.

    Samples are rows ``[a, b, c, d, x, y, z]``: a rotation quaternion
    (renormalized on input) followed by a translation.

    Parameters
    ----------
    n_components : int, default=1
    max_iter : int, default=200
    tol : float, default=1e-3
        Stop when the total log-likelihood changes by less than this.
    param_tol : float, default=1e-8
        Stop when no parameter moves by more than this.
    init_strategy : {"sphere-kmeans", "random-restart"}, default="sphere-kmeans"
    n_mc_samples : int, default=10000
        Monte Carlo samples per normalization constant.
    normalized : bool, default=True
        Divide component densities by their normalization constant. Set to
        False to weigh components by the plain tangent Gaussian.
    reg_covar : float, default=1e-9
    random_state : int or None, default=None

    Attributes
    ----------
    mixture_ : MPG
    weights_ : ndarray of shape (n_components,)
    trace_ : EmTrace
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, n_components=1, max_iter=200, tol=1e-3, param_tol=1e-8,
                 init_strategy="sphere-kmeans", n_mc_samples=10_000, normalized=True,
                 reg_covar=1e-9, random_state=None):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.param_tol = param_tol
        self.init_strategy = init_strategy
        self.n_mc_samples = n_mc_samples
        self.normalized = normalized
        self.reg_covar = reg_covar
        self.random_state = random_state

    def _config(self):
        seed = 0 if self.random_state is None else self.random_state
        return EmConfig(
            n_components=self.n_components,
            max_iters=self.max_iter,
            loglik_tol=self.tol,
            param_tol=self.param_tol,
            seed=seed,
            init_strategy=self.init_strategy,
            normalized=self.normalized,
            reg_covar=self.reg_covar,
            mc=MCConfig(self.n_mc_samples, seed),
        )

    def fit(self, X, y=None):
        X = check_motions(X)
        self.mixture_, self.trace_ = em_fit(X, self._config())
        self.weights_ = np.asarray(self.mixture_.weights)
        self.n_iter_ = self.trace_.n_iter
        self.converged_ = self.trace_.converged
        self.n_features_in_ = 7
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "mixture_")
        return e_step(self.mixture_, check_motions(X), self.normalized)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score_samples(self, X):
        """Log density of each motion under the fitted mixture."""
        check_is_fitted(self, "mixture_")
        return self.mixture_.logpdf_array(check_motions(X), self.normalized)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1):
        """Draw motions and their component labels."""
        check_is_fitted(self, "mixture_")
        rng = np.random.default_rng(self.random_state)
        return self.mixture_.sample_array(n_samples, rng, return_indices=True)
