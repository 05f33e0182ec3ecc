"""Exact log-likelihoods, scores, and the observed information matrix.

The estimation parameterization is ``h = alpha + rho * (Wt @ y**2)``
with scalar ``alpha > 0``, scalar ``rho >= 0``, and a fixed unit-scale
weights matrix ``Wt``.

For strictly triangular ``Wt`` the joint density of ``y`` factorizes
into conditionals and the log-likelihood is simply

    sum_i [ log f_eps(y_i / sqrt(h_i)) - 0.5 * log h_i ].

For general ``Wt`` the density follows from the change of variables
``eps = y / sqrt(h(y))``, whose Jacobian determinant evaluates to

    |det J| = |det( diag(h) - diag(y) W' diag(y) )| / prod(h_i**1.5)

with ``W = rho * Wt`` and ``W'`` its transpose.  (When every ``y_i`` is
nonzero this can be rewritten by pulling ``y_i**2`` out of row and
column ``i``, giving the equivalent eigenvalue form
``sum_i 2 log|y_i| - 1.5 log h_i + sum_i log|lambda_i|`` with
``lambda_i`` the eigenvalues of ``diag(h_i / y_i**2) - W'``; the matrix
form above needs no special-casing at ``y_i = 0`` and is what the
package evaluates.)  Both forms agree with the triangular factorization
whenever ``Wt`` is triangular, because the determinant then collapses to
``prod h_i``.

Scores and the observed information matrix are specialized to the
triangular parameterization; the information matrix additionally
assumes Gaussian innovations.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._validation import as_float_vector, check_positive
from .errors import ErrorSpec, GaussianError
from .exceptions import (
    InvalidParameterError,
    InvalidPointError,
    UsageError,
)
from .weights import SparseWeights

__all__ = [
    "loglik_triangular",
    "loglik_general",
    "loglik_sar_sparch",
    "score_triangular",
    "information_matrix",
    "jacobian_logabsdet",
    "sar_logabsdet",
    "aic",
]

_DENSE_DET_CUTOFF = 32


def _conditional_variance(
    y2: np.ndarray, alpha, rho: float, weights: SparseWeights
) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0:
        alpha_vec = float(alpha)
        if alpha_vec <= 0.0:
            raise InvalidParameterError(f"alpha must be positive, got {alpha_vec}")
    else:
        alpha_vec = as_float_vector(alpha, "alpha", n=weights.n)
        if alpha_vec.min() <= 0.0:
            raise InvalidParameterError("alpha must be elementwise positive")
    if rho < 0.0 or not np.isfinite(rho):
        raise InvalidParameterError(f"rho must be nonnegative, got {rho}")
    return alpha_vec + rho * (weights.matrix @ y2)


def loglik_triangular(
    y,
    alpha,
    rho: float,
    weights: SparseWeights,
    error: ErrorSpec,
    check: bool = True,
) -> float:
    """Log-likelihood under strictly triangular weights.

    ``alpha`` may be a scalar (the estimation parameterization) or a
    per-site vector.  With ``check=True`` the weights are verified to be
    triangularizable; pass ``check=False`` inside optimization loops
    where the weights are fixed and already verified.
    """
    y = as_float_vector(y, "y", n=weights.n)
    if check and weights.solve_order() is None:
        raise UsageError(
            "weights are not triangularizable; use loglik_general instead"
        )
    h = _conditional_variance(y * y, alpha, rho, weights)
    eps = y / np.sqrt(h)
    return float(np.sum(error.logpdf(eps)) - 0.5 * np.sum(np.log(h)))


def jacobian_logabsdet(
    y: np.ndarray,
    h: np.ndarray,
    weights_full: SparseWeights,
    method: str = "lu",
) -> float:
    """``log |det d(eps)/d(y)|`` for ``eps = y / sqrt(h(y))``.

    ``weights_full`` is the complete matrix ``W = rho * Wt``.  The
    default ``lu`` method factorizes ``diag(h) - diag(y) W' diag(y)``
    (dense below a small size cutoff, sparse LU otherwise) and subtracts
    ``1.5 * sum(log h)``.  The ``eigen`` method evaluates the equivalent
    eigenvalue form; it requires every ``y_i`` to be nonzero and exists
    mainly so tests can confirm the two routes agree.
    """
    n = weights_full.n
    if method == "eigen":
        if np.any(y == 0.0):
            raise InvalidPointError(
                "the eigenvalue form of the Jacobian requires nonzero y"
            )
        y2 = y * y
        dense = np.diag(h / y2) - weights_full.matrix.T.toarray()
        eigvals = np.linalg.eigvals(dense)
        if np.any(np.abs(eigvals) == 0.0):
            raise InvalidPointError("singular Jacobian at this point")
        return float(
            np.sum(2.0 * np.log(np.abs(y)) - 1.5 * np.log(h))
            + np.sum(np.log(np.abs(eigvals)))
        )
    if method != "lu":
        raise UsageError(f"unknown Jacobian method {method!r}")
    if n <= _DENSE_DET_CUTOFF:
        M = np.diag(h) - (y[:, None] * weights_full.matrix.T.toarray() * y[None, :])
        sign, logdet = np.linalg.slogdet(M)
        if sign == 0.0 or not np.isfinite(logdet):
            raise InvalidPointError("singular Jacobian at this point")
        return float(logdet - 1.5 * np.sum(np.log(h)))
    Wt_t = weights_full.matrix.T.tocoo()
    scaled = sp.csr_matrix(
        (Wt_t.data * y[Wt_t.row] * y[Wt_t.col], (Wt_t.row, Wt_t.col)),
        shape=(n, n),
    )
    M = (sp.diags(h) - scaled).tocsc()
    try:
        lu = splu(M)
    except RuntimeError as exc:
        raise InvalidPointError(f"singular Jacobian at this point: {exc}") from exc
    diag_u = lu.U.diagonal()
    if np.any(diag_u == 0.0) or not np.all(np.isfinite(diag_u)):
        raise InvalidPointError("singular Jacobian at this point")
    return float(np.sum(np.log(np.abs(diag_u))) - 1.5 * np.sum(np.log(h)))


def loglik_general(
    y,
    alpha,
    rho: float,
    weights: SparseWeights,
    error: ErrorSpec,
) -> float:
    """Exact log-likelihood for arbitrary (not necessarily triangular)
    weights, via the change-of-variables density.

    Returns ``-inf`` when an observation falls outside the innovation
    support; raises :class:`InvalidPointError` on a singular Jacobian.
    """
    y = as_float_vector(y, "y", n=weights.n)
    h = _conditional_variance(y * y, alpha, rho, weights)
    eps = y / np.sqrt(h)
    dens = np.sum(error.logpdf(eps))
    if not np.isfinite(dens):
        return float("-inf")
    jac = jacobian_logabsdet(y, h, weights.scaled(rho))
    return float(dens + jac)


def score_triangular(
    y,
    alpha: float,
    rho: float,
    weights: SparseWeights,
    error: ErrorSpec,
    check: bool = True,
) -> np.ndarray:
    """Gradient of :func:`loglik_triangular` in ``(alpha, rho)``.

    With ``s_i = -(1/h_i + y_i * r(eps_i) / h_i**1.5) / 2`` where ``r``
    is the innovation score ratio, the components are ``sum_i s_i`` and
    ``sum_i A_i s_i`` with ``A = Wt @ y**2``.
    """
    y = as_float_vector(y, "y", n=weights.n)
    if check and weights.solve_order() is None:
        raise UsageError("weights are not triangularizable")
    alpha = check_positive(alpha, "alpha")
    A = weights.matrix @ (y * y)
    h = alpha + rho * A
    eps = y / np.sqrt(h)
    s = -0.5 * (1.0 / h + y * error.score_ratio(eps) / h**1.5)
    return np.array([float(np.sum(s)), float(np.sum(A * s))])


def information_matrix(
    y,
    alpha: float,
    rho: float,
    weights: SparseWeights,
) -> np.ndarray:
    """Observed information for ``(alpha, rho)`` under Gaussian
    innovations: the negative Hessian of the triangular log-likelihood
    with the data plugged in,

        [[ sum t_i,        sum A_i t_i   ],
         [ sum A_i t_i,    sum A_i^2 t_i ]],

    where ``t_i = y_i**2 / h_i**3 - 1 / (2 h_i**2)``.  Positive definite
    at interior optima; the caller decides what to do when it is not.
    """
    y = as_float_vector(y, "y", n=weights.n)
    alpha = check_positive(alpha, "alpha")
    A = weights.matrix @ (y * y)
    h = alpha + rho * A
    t = (y * y) / h**3 - 0.5 / (h * h)
    b11 = float(np.sum(t))
    b12 = float(np.sum(A * t))
    b22 = float(np.sum(A * A * t))
    return np.array([[b11, b12], [b12, b22]])


def sar_logabsdet(lambdas: np.ndarray, sar_matrices: list) -> float:
    """``log |det(I - sum_k lambda_k B_k)|`` via sparse LU."""
    n = sar_matrices[0].shape[0]
    S = sp.identity(n, format="csr")
    for lam, B in zip(lambdas, sar_matrices):
        S = S - lam * B
    try:
        lu = splu(S.tocsc())
    except RuntimeError as exc:
        raise InvalidPointError(
            f"I - sum(lambda_k B_k) is singular: {exc}"
        ) from exc
    diag_u = lu.U.diagonal()
    if np.any(diag_u == 0.0) or not np.all(np.isfinite(diag_u)):
        raise InvalidPointError("I - sum(lambda_k B_k) is singular")
    return float(np.sum(np.log(np.abs(diag_u))))


def loglik_sar_sparch(
    y,
    X,
    beta,
    lambdas,
    sar_weights: list,
    alpha: float,
    rho: float,
    arch_weights: SparseWeights,
    error: ErrorSpec,
    triangular: bool,
) -> float:
    """Joint log-likelihood of the SAR model with spatial ARCH noise:
    ``log|det S| + l_xi(S y - X beta)`` with ``S = I - sum lambda_k B_k``
    and ``l_xi`` the (triangular or general) disturbance likelihood."""
    y = as_float_vector(y, "y", n=arch_weights.n)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    mats = [B.matrix for B in sar_weights]
    lad = sar_logabsdet(lambdas, mats)
    S_y = y.copy()
    for lam, B in zip(lambdas, mats):
        S_y -= lam * (B @ y)
    xi = S_y - np.asarray(X, dtype=np.float64) @ np.asarray(beta, dtype=np.float64)
    if triangular:
        inner = loglik_triangular(xi, alpha, rho, arch_weights, error, check=False)
    else:
        inner = loglik_general(xi, alpha, rho, arch_weights, error)
    return float(lad + inner)


def aic(loglik: float, n_params: int) -> float:
    """Akaike information criterion ``2 k - 2 loglik``."""
    if n_params < 0:
        raise InvalidParameterError(f"n_params must be >= 0, got {n_params}")
    return 2.0 * n_params - 2.0 * float(loglik)
