"""Scikit-learn style estimator wrappers around the ML fitters.

``SpARCH`` and ``SARSpARCH`` follow the usual estimator contract:
constructor arguments are stored verbatim, ``fit`` computes attributes
with trailing underscores, and ``get_params`` / ``set_params`` work for
grid search or cloning.  The underlying optimization lives in
:mod:`.fitting`; these classes only add the familiar interface plus
input validation.

Spatial data has one vector of observations over a fixed set of sites,
so ``SpARCH.fit`` takes that vector directly, while ``SARSpARCH.fit``
takes a covariate matrix and the response as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_matrix, as_float_vector
from .errors import error_spec_from_config
from .exceptions import UsageError
from .fitting import FitConfig, FitResult, fit_ml, fit_sar_sparch
from .weights import SparseWeights

__all__ = ["SpARCH", "SARSpARCH"]


def _check_weights(w, name: str) -> SparseWeights:
    if not isinstance(w, SparseWeights):
        raise UsageError(f"{name} must be a SparseWeights instance")
    return w


class SpARCH(BaseEstimator):
    """Spatial ARCH model ``h = alpha + rho * Wt @ y**2``.

    Parameters
    ----------
    weights : SparseWeights
        Unit-scale weights matrix ``Wt``.
    error : str, mapping, or ErrorSpec, default "gaussian"
        Innovation family.
    parameterization : {"auto", "triangular", "general"}, default "auto"
        Likelihood form; "auto" uses the triangular factorization
        whenever the weights admit a dependency order.
    rho0, alpha0 : float
        Starting values (``alpha0=None`` uses the sample variance).
    max_iter, gtol : optimizer budget.

    Attributes
    ----------
    alpha_, rho_ : float
        Estimates.
    stderr_ : dict or None
        Standard errors from the observed information, when available.
    loglik_, aic_ : float
    converged_ : bool
    rho_on_boundary_ : bool
        True when the estimate landed on the ``rho >= 0`` bound.
    result_ : FitResult
        Full fit record.
    residuals_ : ndarray
        Standardized innovations ``y / sqrt(h_hat)``.
    """

    def __init__(
        self,
        weights: SparseWeights | None = None,
        error="gaussian",
        parameterization: str = "auto",
        rho0: float = 0.1,
        alpha0: float | None = None,
        max_iter: int = 500,
        gtol: float = 1e-8,
    ):
        self.weights = weights
        self.error = error
        self.parameterization = parameterization
        self.rho0 = rho0
        self.alpha0 = alpha0
        self.max_iter = max_iter
        self.gtol = gtol

    def _config(self) -> FitConfig:
        return FitConfig(
            parameterization=self.parameterization,
            max_iter=self.max_iter,
            gtol=self.gtol,
            alpha0=self.alpha0,
            rho0=self.rho0,
        )

    def fit(self, y, X=None):
        """Fit by exact maximum likelihood.

        ``y`` is the observation vector over sites; ``X`` is accepted
        and ignored so the signature composes with generic tooling.
        """
        w = _check_weights(self.weights, "weights")
        y = as_float_vector(y, "y", n=w.n)
        result = fit_ml(y, w, error=self.error, config=self._config())
        self.result_: FitResult = result
        self.alpha_ = result.estimates["alpha"]
        self.rho_ = result.estimates["rho"]
        self.stderr_ = result.stderr
        self.loglik_ = result.loglik
        self.aic_ = result.aic
        self.converged_ = result.converged
        self.rho_on_boundary_ = result.rho_on_boundary
        self.residuals_ = result.residuals["eps"]
        self.conditional_variance_ = self.alpha_ + self.rho_ * (w.matrix @ (y * y))
        self.n_obs_ = result.n_obs
        return self

    def conditional_variance(self, y=None) -> np.ndarray:
        """``h = alpha_ + rho_ * Wt @ y**2`` at the fitted parameters;
        defaults to the training observations."""
        check_is_fitted(self, "result_")
        if y is None:
            return self.conditional_variance_
        w = _check_weights(self.weights, "weights")
        y = as_float_vector(y, "y", n=w.n)
        return self.alpha_ + self.rho_ * (w.matrix @ (y * y))

    def score(self, y, X=None) -> float:
        """Log-likelihood of ``y`` at the fitted parameters."""
        check_is_fitted(self, "result_")
        from .likelihood import loglik_general, loglik_triangular

        w = _check_weights(self.weights, "weights")
        y = as_float_vector(y, "y", n=w.n)
        error = error_spec_from_config(self.error)
        if w.solve_order() is not None and self.parameterization != "general":
            return loglik_triangular(y, self.alpha_, self.rho_, w, error)
        return loglik_general(y, self.alpha_, self.rho_, w, error)


class SARSpARCH(BaseEstimator):
    """Spatial autoregression with spatial ARCH disturbances.

    Mean model ``y = sum_k lambda_k B_k y + X beta + xi`` where ``xi``
    follows the spatial ARCH process ``h = alpha + rho * Wt @ xi**2``.
    All coefficients are estimated jointly by maximizing the exact
    likelihood.

    Parameters
    ----------
    sar_weights : SparseWeights or sequence of SparseWeights
        Autoregression matrices ``B_1 .. B_K``.
    arch_weights : SparseWeights
        Disturbance weights matrix ``Wt``.
    rho_fixed : float, optional
        Freeze ``rho``; ``0.0`` gives the plain Gaussian spatial
        autoregression with a directly comparable AIC.
    fit_intercept : bool, default True
        Prepend an all-ones column to ``X`` (required unless ``X``
        already carries one).

    Attributes
    ----------
    beta_ : ndarray of shape (m,)
    lambda_ : ndarray of shape (K,)
    alpha_, rho_ : float
    stderr_ : dict or None
    loglik_, aic_ : float
    converged_, rho_on_boundary_ : bool
    result_ : FitResult
    residuals_ : dict with "xi" (disturbances) and "eps" (standardized)
    """

    def __init__(
        self,
        sar_weights=None,
        arch_weights: SparseWeights | None = None,
        error="gaussian",
        parameterization: str = "auto",
        rho_fixed: float | None = None,
        fit_intercept: bool = True,
        rho0: float = 0.1,
        alpha0: float | None = None,
        max_iter: int = 500,
        gtol: float = 1e-8,
        lambda_bound: float = 0.99,
    ):
        self.sar_weights = sar_weights
        self.arch_weights = arch_weights
        self.error = error
        self.parameterization = parameterization
        self.rho_fixed = rho_fixed
        self.fit_intercept = fit_intercept
        self.rho0 = rho0
        self.alpha0 = alpha0
        self.max_iter = max_iter
        self.gtol = gtol
        self.lambda_bound = lambda_bound

    def _config(self) -> FitConfig:
        return FitConfig(
            parameterization=self.parameterization,
            max_iter=self.max_iter,
            gtol=self.gtol,
            alpha0=self.alpha0,
            rho0=self.rho0,
            lambda_bound=self.lambda_bound,
        )

    def _sar_list(self) -> list:
        w = self.sar_weights
        if isinstance(w, SparseWeights):
            return [w]
        if w is None:
            raise UsageError("sar_weights must be set before fitting")
        return [_check_weights(b, "sar_weights element") for b in w]

    def _design(self, X, n: int) -> np.ndarray:
        if X is None:
            return np.ones((n, 1))
        X = as_float_matrix(X, "X", rows=n)
        if self.fit_intercept:
            if X.shape[1] > 0 and np.all(X[:, 0] == 1.0):
                return X
            return np.column_stack([np.ones(n), X])
        if X.shape[1] == 0 or not np.all(X[:, 0] == 1.0):
            raise UsageError(
                "with fit_intercept=False the first column of X must be ones"
            )
        return X

    def fit(self, X, y):
        """Joint ML fit; ``X`` may be None for an intercept-only mean."""
        arch = _check_weights(self.arch_weights, "arch_weights")
        y = as_float_vector(y, "y", n=arch.n)
        Xd = self._design(X, arch.n)
        result = fit_sar_sparch(
            y,
            Xd,
            self._sar_list(),
            arch,
            error=self.error,
            config=self._config(),
            rho_fixed=self.rho_fixed,
        )
        self.result_: FitResult = result
        self.beta_ = np.asarray(result.estimates["beta"])
        self.lambda_ = np.asarray(result.estimates["lambda"])
        self.alpha_ = result.estimates["alpha"]
        self.rho_ = result.estimates["rho"]
        self.stderr_ = result.stderr
        self.loglik_ = result.loglik
        self.aic_ = result.aic
        self.converged_ = result.converged
        self.rho_on_boundary_ = result.rho_on_boundary
        self.residuals_ = dict(result.residuals)
        self.n_obs_ = result.n_obs
        return self

    def predict(self, X=None) -> np.ndarray:
        """Unconditional mean ``(I - sum_k lambda_k B_k)^{-1} X beta``.

        The autoregression ties predictions to the training sites, so
        ``X`` must have one row per site (None for intercept only).
        """
        check_is_fitted(self, "result_")
        import scipy.sparse as sp
        from scipy.sparse.linalg import splu

        arch = _check_weights(self.arch_weights, "arch_weights")
        n = arch.n
        Xd = self._design(X, n)
        if Xd.shape[1] != self.beta_.shape[0]:
            raise UsageError(
                f"X implies {Xd.shape[1]} coefficients, fitted model has "
                f"{self.beta_.shape[0]}"
            )
        S = sp.identity(n, format="csc")
        for lam, B in zip(self.lambda_, self._sar_list()):
            S = S - lam * B.matrix
        return splu(S.tocsc()).solve(Xd @ self.beta_)

    def score(self, X, y) -> float:
        """Joint log-likelihood of ``(X, y)`` at the fitted parameters."""
        check_is_fitted(self, "result_")
        from .likelihood import loglik_sar_sparch

        arch = _check_weights(self.arch_weights, "arch_weights")
        y = as_float_vector(y, "y", n=arch.n)
        Xd = self._design(X, arch.n)
        error = error_spec_from_config(self.error)
        triangular = (
            arch.solve_order() is not None and self.parameterization != "general"
        )
        return loglik_sar_sparch(
            y,
            Xd,
            self.beta_,
            self.lambda_,
            self._sar_list(),
            self.alpha_,
            self.rho_,
            arch,
            error,
            triangular=triangular,
        )
