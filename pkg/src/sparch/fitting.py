"""Maximum-likelihood fitting for the two model families.

``fit_ml`` estimates ``(alpha, rho)`` of the pure spatial ARCH model
``h = alpha + rho * Wt @ y**2`` by maximizing the exact likelihood
(triangular factorization when the weights allow it, the full
change-of-variables density otherwise).

``fit_sar_sparch`` estimates ``(beta, lambda_1..lambda_K, alpha, rho)``
of the autoregressive mean model with spatial ARCH disturbances by
maximizing the joint likelihood

    log|det(I - sum_k lambda_k B_k)| + l_xi((I - sum lambda_k B_k) y - X beta)

in one pass over all coefficients.  Setting ``rho_fixed=0`` constrains
the disturbances to be i.i.d. Gaussian, which is exactly the
quasi-maximum-likelihood spatial autoregression; its AIC is therefore
directly comparable with the unconstrained fit.

Both fitters run a projected quasi-Newton search (L-BFGS-B) under the
natural bounds, then polish with damped Newton steps on a
finite-difference Hessian until the gradient is tiny, so results are
reproducible to optimizer precision rather than line-search luck.
An estimate of ``rho`` that lands on the zero bound is reported with
``rho_on_boundary=True`` rather than dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._numdiff import central_gradient, central_hessian
from ._validation import as_float_matrix, as_float_vector
from .errors import ErrorSpec, GaussianError, error_spec_from_config
from .exceptions import (
    DegenerateInputError,
    NumericalError,
    UsageError,
)
from .likelihood import (
    aic,
    information_matrix,
    loglik_general,
    loglik_triangular,
    sar_logabsdet,
    score_triangular,
)
from .weights import SparseWeights

__all__ = ["FitConfig", "FitResult", "fit_ml", "fit_sar_sparch"]

_BIG = 1e15
_ALPHA_FLOOR = 1e-10
_BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings shared by both fitters.

    ``parameterization`` selects the likelihood for the disturbance
    process: ``"triangular"``, ``"general"``, or ``"auto"`` (triangular
    whenever the weights admit a dependency order).  ``lambda_bound``
    boxes each autoregression coefficient into
    ``[-lambda_bound, lambda_bound]``.  ``polish_max_iter`` damped
    Newton steps refine the optimum after the quasi-Newton stage (0
    disables polishing).  ``compute_stderr=False`` skips the observed
    information entirely (``stderr`` None, ``information_ok`` False),
    which saves a finite-difference Hessian in Monte Carlo loops that
    only need point estimates.
    """

    parameterization: str = "auto"
    max_iter: int = 500
    gtol: float = 1e-8
    alpha0: float | None = None
    rho0: float = 0.1
    lambda_bound: float = 0.99
    polish_max_iter: int = 8
    polish_gtol: float = 1e-9
    compute_stderr: bool = True

    def __post_init__(self) -> None:
        if self.parameterization not in ("auto", "triangular", "general"):
            raise UsageError(
                f"parameterization must be auto/triangular/general, got "
                f"{self.parameterization!r}"
            )
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")
        if self.polish_max_iter < 0:
            raise UsageError("polish_max_iter must be >= 0")
        if not (self.gtol > 0 and self.polish_gtol > 0):
            raise UsageError("tolerances must be positive")
        if not 0 < self.lambda_bound < 1:
            raise UsageError("lambda_bound must lie in (0, 1)")


@dataclass
class FitResult:
    """Outcome of a maximum-likelihood fit.

    ``estimates`` and ``stderr`` are keyed by parameter name ("alpha",
    "rho", and for the autoregressive model "beta" and "lambda" as
    lists).  ``stderr`` is None when the observed information was not
    positive definite (``information_ok`` False).  ``residuals`` holds
    the standardized innovations ``eps`` and, for the autoregressive
    model, the disturbances ``xi``.
    """

    model_kind: str
    estimates: dict
    stderr: dict | None
    loglik: float
    aic: float
    n_params: int
    n_obs: int
    converged: bool
    rho_on_boundary: bool
    information_ok: bool
    n_iter: int
    message: str
    residuals: dict = field(repr=False, default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "model": self.model_kind,
            "estimates": self.estimates,
            "stderr": self.stderr,
            "loglik": self.loglik,
            "aic": self.aic,
            "n_params": self.n_params,
            "n_obs": self.n_obs,
            "converged": self.converged,
            "rho_on_boundary": self.rho_on_boundary,
            "information_ok": self.information_ok,
            "n_iter": self.n_iter,
            "message": self.message,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def residuals_to_csv(self, path) -> None:
        names = [k for k in ("xi", "eps") if k in self.residuals]
        cols = [self.residuals[k] for k in names]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("site_index," + ",".join(names) + "\n")
            for i in range(self.n_obs):
                fh.write(
                    f"{i}," + ",".join(repr(float(c[i])) for c in cols) + "\n"
                )


def _newton_polish(negf, grad_fn, x, lower, upper, config: FitConfig):
    """Damped Newton refinement inside box bounds.

    Only accepts steps that do not increase ``negf``; returns the
    refined point, its value, the iteration count, and whether the
    gradient criterion was met.
    """
    x = x.copy()
    fx = negf(x)
    it = 0
    for it in range(1, config.polish_max_iter + 1):
        g = grad_fn(x)
        if not np.all(np.isfinite(g)):
            return x, fx, it - 1, False
        free = ~(
            ((x <= lower + 1e-14) & (g > 0)) | ((x >= upper - 1e-14) & (g < 0))
        )
        if np.max(np.abs(g[free]), initial=0.0) < config.polish_gtol:
            return x, fx, it - 1, True
        H = central_hessian(negf, x, lower=lower, upper=upper)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return x, fx, it - 1, False
        if not np.all(np.isfinite(step)):
            # an ill-conditioned finite-difference Hessian can yield a
            # non-finite solve result without raising
            return x, fx, it - 1, False
        improved = False
        t = 1.0
        for _ in range(25):
            cand = np.clip(x + t * step, lower, upper)
            fc = negf(cand)
            if fc <= fx + 1e-12 * max(1.0, abs(fx)):
                # accept equal-or-better candidates; strict increases shrink
                if fc <= fx:
                    x, fx = cand, fc
                    improved = True
                    break
            t *= 0.5
        if not improved:
            g2 = grad_fn(x)
            free = ~(
                ((x <= lower + 1e-14) & (g2 > 0))
                | ((x >= upper - 1e-14) & (g2 < 0))
            )
            return x, fx, it, bool(np.max(np.abs(g2[free]), initial=0.0) < config.polish_gtol)
    g = grad_fn(x)
    free = ~(((x <= lower + 1e-14) & (g > 0)) | ((x >= upper - 1e-14) & (g < 0)))
    return x, fx, it, bool(np.max(np.abs(g[free]), initial=0.0) < config.polish_gtol)


# -- spatial ARCH fit ---------------------------------------------------------


def fit_ml(
    y,
    weights: SparseWeights,
    error: ErrorSpec | str | dict = "gaussian",
    config: FitConfig | None = None,
) -> FitResult:
    """Maximum-likelihood estimates of ``(alpha, rho)``.

    Parameters
    ----------
    y : array_like of shape (n,)
        Observations.
    weights : SparseWeights
        Unit-scale weights matrix ``Wt`` entering
        ``h = alpha + rho * Wt @ y**2``.
    error : ErrorSpec, str, or mapping
        Innovation family (fitting is intended for distributions with a
        smooth full-interior density; the Gaussian case additionally
        gets closed-form scores and observed information).
    config : FitConfig, optional
    """
    config = config or FitConfig()
    error = error_spec_from_config(error)
    y = as_float_vector(y, "y", n=weights.n)
    n = y.shape[0]
    var_y = float(np.var(y))
    if var_y <= 0.0:
        raise DegenerateInputError("y is constant; nothing to fit")

    if config.parameterization == "auto":
        triangular = weights.solve_order() is not None
    elif config.parameterization == "triangular":
        if weights.solve_order() is None:
            raise UsageError(
                "triangular parameterization requested but the weights are "
                "not triangularizable"
            )
        triangular = True
    else:
        triangular = False

    gaussian = isinstance(error, GaussianError)
    lower = np.array([_ALPHA_FLOOR, 0.0])
    upper = np.array([np.inf, np.inf])

    if triangular:

        def negf(theta):
            a, r = theta
            try:
                return -loglik_triangular(y, a, r, weights, error, check=False)
            except (NumericalError, FloatingPointError):
                return _BIG

        def gradf(theta):
            a, r = theta
            return -score_triangular(y, a, r, weights, error, check=False)

    else:

        def negf(theta):
            a, r = theta
            try:
                return -loglik_general(y, a, r, weights, error)
            except (NumericalError, FloatingPointError):
                return _BIG

        def gradf(theta):
            return central_gradient(negf, theta, lower=lower, upper=upper)

    alpha0 = config.alpha0 if config.alpha0 is not None else var_y
    x0 = np.array([max(alpha0, _ALPHA_FLOOR), max(config.rho0, 0.0)])
    # bounded-support innovation families reject starting points whose
    # standardized values fall outside the support; inflating the
    # baseline variance shrinks them until the start is feasible
    for _ in range(60):
        if negf(x0) < _BIG:
            break
        x0[0] *= 2.0
    res = minimize(
        negf,
        x0,
        jac=gradf,
        method="L-BFGS-B",
        bounds=list(zip(lower, upper)),
        options={"maxiter": config.max_iter, "ftol": 1e-13, "gtol": config.gtol},
    )
    theta, fval, polish_iters, polished = _newton_polish(
        negf, gradf, res.x, lower, upper, config
    )
    alpha_hat, rho_hat = float(theta[0]), float(theta[1])
    loglik = -fval
    converged = bool(res.success or polished)
    boundary = rho_hat <= _BOUNDARY_TOL

    if not config.compute_stderr:
        stderr, information_ok = None, False
    else:
        if gaussian and triangular:
            info = information_matrix(y, alpha_hat, rho_hat, weights)
        else:
            info = central_hessian(negf, theta, lower=lower, upper=upper)
        stderr, information_ok = _invert_information(info, ["alpha", "rho"])

    h_hat = alpha_hat + rho_hat * (weights.matrix @ (y * y))
    eps_hat = y / np.sqrt(h_hat)
    k = 2
    message = res.message if isinstance(res.message, str) else str(res.message)
    return FitResult(
        model_kind="sparch",
        estimates={"alpha": alpha_hat, "rho": rho_hat},
        stderr=stderr,
        loglik=loglik,
        aic=aic(loglik, k),
        n_params=k,
        n_obs=n,
        converged=converged,
        rho_on_boundary=boundary,
        information_ok=information_ok,
        n_iter=int(res.nit) + polish_iters,
        message=message,
        residuals={"eps": eps_hat},
    )


def _invert_information(info: np.ndarray, names: list):
    """Invert an observed-information matrix into named standard errors.

    Returns ``(stderr_dict_or_None, ok_flag)``; ``ok`` is False when the
    matrix is not positive definite or the implied variances are not
    finite and positive.
    """
    try:
        np.linalg.cholesky(info)
        inv = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        return None, False
    var = np.diag(inv)
    if np.any(var <= 0.0) or not np.all(np.isfinite(var)):
        return None, False
    se = np.sqrt(var)
    out: dict = {}
    idx = 0
    for name in names:
        if isinstance(name, tuple):
            label, count = name
            out[label] = [float(s) for s in se[idx : idx + count]]
            idx += count
        else:
            out[name] = float(se[idx])
            idx += 1
    return out, True


# -- SAR with spatial ARCH disturbances ---------------------------------------


def _two_stage_lambda(y, X, mats, bound):
    """Two-stage least-squares starting values for the autoregression
    coefficients, with a zero fallback when the instruments are
    degenerate (for example an intercept-only design)."""
    n, m = X.shape
    K = len(mats)
    nonconst = [j for j in range(m) if np.ptp(X[:, j]) > 0]
    if not nonconst:
        return np.zeros(K)
    Z = np.column_stack([X] + [B @ y for B in mats])
    H = np.column_stack([X] + [B @ X[:, nonconst] for B in mats])
    q, _ = np.linalg.qr(H)
    Zhat = q @ (q.T @ Z)
    coef, *_ = np.linalg.lstsq(Zhat, y, rcond=None)
    lam = coef[m:]
    if not np.all(np.isfinite(lam)):
        return np.zeros(K)
    return np.clip(lam, -0.9 * bound, 0.9 * bound)


def fit_sar_sparch(
    y,
    X,
    sar_weights: list,
    arch_weights: SparseWeights,
    error: ErrorSpec | str | dict = "gaussian",
    config: FitConfig | None = None,
    rho_fixed: float | None = None,
) -> FitResult:
    """Joint maximum-likelihood fit of the autoregressive model with
    spatial ARCH disturbances.

    Parameters
    ----------
    y : array_like of shape (n,)
    X : array_like of shape (n, m) or None
        Covariates including an all-ones first column; None means
        intercept only.
    sar_weights : list of SparseWeights
        Autoregression matrices ``B_1 .. B_K``.
    arch_weights : SparseWeights
        Disturbance weights matrix ``Wt``.
    rho_fixed : float, optional
        Freeze ``rho`` at this value (``0.0`` gives the plain spatial
        autoregression with i.i.d. Gaussian disturbances, whose AIC is
        comparable with the unconstrained fit).
    """
    config = config or FitConfig()
    error = error_spec_from_config(error)
    n = arch_weights.n
    y = as_float_vector(y, "y", n=n)
    if X is None:
        X = np.ones((n, 1))
    X = as_float_matrix(X, "X", rows=n)
    if not np.all(X[:, 0] == 1.0):
        raise UsageError("the first column of X must be the intercept (all ones)")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateInputError("X is rank deficient")
    sar_weights = list(sar_weights)
    if not sar_weights:
        raise UsageError("at least one autoregression matrix is required")
    for k_, B in enumerate(sar_weights):
        if not isinstance(B, SparseWeights) or B.n != n:
            raise UsageError(f"sar_weights[{k_}] must be SparseWeights of size {n}")
    mats = [B.matrix for B in sar_weights]
    m = X.shape[1]
    K = len(mats)

    if config.parameterization == "auto":
        triangular = arch_weights.solve_order() is not None
    elif config.parameterization == "triangular":
        if arch_weights.solve_order() is None:
            raise UsageError(
                "triangular parameterization requested but the disturbance "
                "weights are not triangularizable"
            )
        triangular = True
    else:
        triangular = False

    free_rho = rho_fixed is None
    if not free_rho and rho_fixed < 0:
        raise UsageError(f"rho_fixed must be >= 0, got {rho_fixed}")

    By = [B @ y for B in mats]
    lam_bound = config.lambda_bound
    lower = np.concatenate(
        [
            np.full(m, -np.inf),
            np.full(K, -lam_bound),
            [_ALPHA_FLOOR],
            [0.0] if free_rho else [],
        ]
    )
    upper = np.concatenate(
        [
            np.full(m, np.inf),
            np.full(K, lam_bound),
            [np.inf],
            [np.inf] if free_rho else [],
        ]
    )

    lad_cache: dict = {}

    def lad(lams: np.ndarray) -> float:
        key = tuple(float(v) for v in lams)
        val = lad_cache.get(key)
        if val is None:
            val = sar_logabsdet(np.asarray(lams), mats)
            lad_cache[key] = val
        return val

    def unpack(theta):
        beta = theta[:m]
        lams = theta[m : m + K]
        alpha_v = theta[m + K]
        rho_v = theta[m + K + 1] if free_rho else rho_fixed
        return beta, lams, alpha_v, rho_v

    def xi_of(theta):
        beta, lams, _, _ = unpack(theta)
        xi = y - X @ beta
        for lam, by in zip(lams, By):
            xi = xi - lam * by
        return xi

    def negf(theta):
        beta, lams, alpha_v, rho_v = unpack(theta)
        try:
            lad_val = lad(lams)
            xi = xi_of(theta)
            if triangular:
                inner = loglik_triangular(
                    xi, alpha_v, rho_v, arch_weights, error, check=False
                )
            else:
                inner = loglik_general(xi, alpha_v, rho_v, arch_weights, error)
        except (NumericalError, FloatingPointError):
            return _BIG
        val = lad_val + inner
        if not np.isfinite(val):
            return _BIG
        return -val

    if triangular:
        Wt = arch_weights.matrix
        WtT = Wt.T.tocsr()

        def gradf(theta):
            beta, lams, alpha_v, rho_v = unpack(theta)
            xi = xi_of(theta)
            q = Wt @ (xi * xi)
            h = alpha_v + rho_v * q
            if np.any(h <= 0):
                return np.zeros_like(theta)
            sq = np.sqrt(h)
            eps = xi / sq
            u = error.score_ratio(eps)
            c = -0.5 * (u * xi / (h * sq) + 1.0 / h)
            g = u / sq + 2.0 * rho_v * xi * (WtT @ c)
            grad = np.empty_like(theta)
            grad[:m] = -(X.T @ g)
            for k_ in range(K):
                step = 1e-6 * max(1.0, abs(lams[k_]))
                lp = lams.copy()
                lp[k_] += step
                lm = lams.copy()
                lm[k_] -= step
                dlad = (lad(lp) - lad(lm)) / (2.0 * step)
                grad[m + k_] = -(By[k_] @ g) + dlad
            grad[m + K] = float(np.sum(c))
            if free_rho:
                grad[m + K + 1] = float(c @ q)
            return -grad

    else:

        def gradf(theta):
            return central_gradient(negf, theta, lower=lower, upper=upper)

    # starting values
    beta0, *_ = np.linalg.lstsq(X, y, rcond=None)
    lam0 = _two_stage_lambda(y, X, mats, lam_bound)
    xi0 = y - X @ beta0
    for lamk, by in zip(lam0, By):
        xi0 = xi0 - lamk * by
    var0 = float(np.var(xi0))
    if var0 <= 0.0:
        raise DegenerateInputError("initial disturbances are constant")
    alpha0 = config.alpha0 if config.alpha0 is not None else var0
    x0 = np.concatenate(
        [beta0, lam0, [max(alpha0, _ALPHA_FLOOR)], [config.rho0] if free_rho else []]
    )
    x0 = np.clip(x0, lower, upper)
    # as in fit_ml: inflate the baseline variance until the start is
    # feasible for bounded-support innovation families
    for _ in range(60):
        if negf(x0) < _BIG:
            break
        x0[m + K] *= 2.0

    res = minimize(
        negf,
        x0,
        jac=gradf,
        method="L-BFGS-B",
        bounds=list(zip(lower, upper)),
        options={"maxiter": config.max_iter, "ftol": 1e-13, "gtol": config.gtol},
    )
    theta, fval, polish_iters, polished = _newton_polish(
        negf, gradf, res.x, lower, upper, config
    )
    beta_hat, lam_hat, alpha_hat, rho_hat = unpack(theta)
    loglik = -fval
    converged = bool(res.success or polished)
    boundary = free_rho and float(rho_hat) <= _BOUNDARY_TOL

    if not config.compute_stderr:
        stderr, information_ok = None, False
    else:
        info = central_hessian(negf, theta, lower=lower, upper=upper)
        names = [("beta", m), ("lambda", K), "alpha"] + (["rho"] if free_rho else [])
        stderr, information_ok = _invert_information(info, names)

    xi_hat = xi_of(theta)
    h_hat = alpha_hat + rho_hat * (arch_weights.matrix @ (xi_hat * xi_hat))
    eps_hat = xi_hat / np.sqrt(h_hat)
    k_params = m + K + 1 + (1 if free_rho else 0)
    estimates = {
        "beta": [float(b) for b in beta_hat],
        "lambda": [float(lv) for lv in lam_hat],
        "alpha": float(alpha_hat),
        "rho": float(rho_hat),
    }
    message = res.message if isinstance(res.message, str) else str(res.message)
    return FitResult(
        model_kind="sarsparch",
        estimates=estimates,
        stderr=stderr,
        loglik=loglik,
        aic=aic(loglik, k_params),
        n_params=k_params,
        n_obs=n,
        converged=converged,
        rho_on_boundary=boundary,
        information_ok=information_ok,
        n_iter=int(res.nit) + polish_iters,
        message=message,
        residuals={"xi": xi_hat, "eps": eps_hat},
    )
