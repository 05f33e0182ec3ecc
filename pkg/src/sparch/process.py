"""Core spatial ARCH process: model types, the solver, and simulators.

The observation vector satisfies ``Y = diag(h)^(1/2) eps`` with
``h = alpha + W Y^(2)``, where ``Y^(2)`` is the vector of squared
observations, ``W`` is a nonnegative zero-diagonal weights matrix, and
``eps`` are i.i.d. innovations.  Substituting one equation into the
other turns the implicit definition into a linear system for ``Y^(2)``:
with ``A = diag(eps^2) W`` and
``eta_i = eps_i^2 * (alpha_i + (W (eps^2 * alpha))_i)``,

    (I - A @ A) Y^(2) = eta.

Solving that system and keeping the componentwise-nonnegative branch
yields the realization.  Two paths are implemented:

* strictly triangular ``W`` (possibly after a permutation): forward
  recursion ``h_i = alpha_i + sum_v w_iv Y2_v``, ``Y2_i = eps_i^2 h_i``
  in a dependency-respecting site order -- always well defined;
* general ``W``: sparse LU factorization of ``I - A @ A``; tiny negative
  components in ``[-1e-10, 0)`` are clamped to zero, anything lower
  raises :class:`NonnegativityViolationError`.

A model is certified valid up front when ``W`` is triangularizable, or
when the innovations are bounded by ``a`` with ``a`` strictly below
``support_bound(W)``.  Everything else is simulated with the runtime
checks above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._validation import as_float_matrix, as_float_vector
from .errors import ErrorSpec
from .exceptions import (
    InvalidModelError,
    NonnegativityViolationError,
    SingularSystemError,
    UsageError,
)
from .weights import SparseWeights, support_bound

__all__ = [
    "SpArchModel",
    "SarSpArchModel",
    "Realization",
    "SarRealization",
    "ValidityReport",
    "build_A",
    "eta_vector",
    "solve_y2",
    "validate_model",
    "realize",
    "simulate",
    "simulate_sar_sparch",
    "closed_form_two_site",
    "spgarch_h",
]

_CLAMP_FLOOR = -1e-10


@dataclass(frozen=True)
class SpArchModel:
    """A fully specified spatial ARCH process.

    Parameters
    ----------
    alpha : array_like
        Nonnegative baseline variance levels; a scalar is broadcast to
        all sites.
    weights : SparseWeights
        The full weights matrix ``W`` (any scalar spatial-dependence
        factor is already multiplied in).
    error : ErrorSpec
        Innovation distribution.
    """

    alpha: np.ndarray
    weights: SparseWeights
    error: ErrorSpec

    def __post_init__(self) -> None:
        if not isinstance(self.weights, SparseWeights):
            raise InvalidModelError("weights must be a SparseWeights instance")
        if not isinstance(self.error, ErrorSpec):
            raise InvalidModelError("error must be an ErrorSpec instance")
        n = self.weights.n
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.ndim == 0:
            alpha = np.full(n, float(alpha))
        alpha = as_float_vector(alpha, "alpha", n=n)
        if np.any(alpha < 0.0):
            raise InvalidModelError("alpha must be nonnegative")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.weights.n


@dataclass(frozen=True)
class Realization:
    """One draw of a spatial ARCH process.

    ``y`` are the observations, ``y2`` their squares as produced by the
    solver, ``h`` the conditional variance levels, ``eps`` the
    innovations, and ``seed`` the seed that generated ``eps`` (None when
    the innovations were supplied by the caller).
    """

    y: np.ndarray
    y2: np.ndarray
    h: np.ndarray
    eps: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def to_csv(self, path) -> None:
        """Write ``site_index,y,h,eps`` rows, 0-based, repr precision."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("site_index,y,h,eps\n")
            for i in range(self.n):
                fh.write(
                    f"{i},{float(self.y[i])!r},{float(self.h[i])!r},"
                    f"{float(self.eps[i])!r}\n"
                )

    @classmethod
    def from_csv(cls, path) -> "Realization":
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        y = np.asarray(data["y"], dtype=np.float64)
        h = np.asarray(data["h"], dtype=np.float64)
        eps = np.asarray(data["eps"], dtype=np.float64)
        return cls(y=y, y2=y * y, h=h, eps=eps, seed=None)


@dataclass(frozen=True)
class SarRealization:
    """One draw of a SAR process with spatial ARCH disturbances."""

    y: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    eps: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def to_csv(self, path) -> None:
        """Write ``site_index,y,h,eps,xi`` rows (one extra column over the
        plain realization format)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("site_index,y,h,eps,xi\n")
            for i in range(self.n):
                fh.write(
                    f"{i},{float(self.y[i])!r},{float(self.h[i])!r},"
                    f"{float(self.eps[i])!r},{float(self.xi[i])!r}\n"
                )


@dataclass(frozen=True)
class SarSpArchModel:
    """SAR mean structure with spatial ARCH disturbances.

    ``Y = X beta + sum_k lambda_k B_k Y + xi`` with ``xi`` following
    ``noise``.  ``X`` must carry an all-ones first column (the
    intercept); pass a one-column ``X`` of ones for a pure intercept
    model.
    """

    X: np.ndarray
    beta: np.ndarray
    lambdas: np.ndarray
    sar_weights: tuple
    noise: SpArchModel

    def __post_init__(self) -> None:
        n = self.noise.n
        X = as_float_matrix(self.X, "X", rows=n)
        if not np.allclose(X[:, 0], 1.0, rtol=0.0, atol=0.0):
            raise InvalidModelError("the first column of X must be all ones")
        beta = as_float_vector(self.beta, "beta", n=X.shape[1])
        sar_weights = tuple(self.sar_weights)
        if not sar_weights:
            raise InvalidModelError("at least one autoregression matrix is required")
        for k, B in enumerate(sar_weights):
            if not isinstance(B, SparseWeights):
                raise InvalidModelError(f"sar_weights[{k}] must be a SparseWeights")
            if B.n != n:
                raise InvalidModelError(
                    f"sar_weights[{k}] has {B.n} sites, expected {n}"
                )
        lambdas = as_float_vector(self.lambdas, "lambdas", n=len(sar_weights))
        X.setflags(write=False)
        beta.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "sar_weights", sar_weights)

    @property
    def n(self) -> int:
        return self.noise.n


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the up-front validity analysis of a model."""

    certificate: str  # "triangular" | "bounded-support" | "unverified"
    always_valid: bool
    bound: float
    max_abs_innovation: float
    message: str = ""


# -- system assembly ---------------------------------------------------------


def build_A(weights: SparseWeights, eps: np.ndarray) -> sp.csr_matrix:
    """The row-scaled matrix ``A = diag(eps**2) W``."""
    eps = as_float_vector(eps, "eps", n=weights.n)
    A = weights.matrix.copy()
    if A.nnz:
        row_of_entry = np.repeat(
            np.arange(weights.n), np.diff(A.indptr)
        )
        A.data = A.data * (eps * eps)[row_of_entry]
    return A


def eta_vector(model: SpArchModel, eps: np.ndarray) -> np.ndarray:
    """Right-hand side ``eta_i = eps_i^2 (alpha_i + (W (eps^2 alpha))_i)``."""
    eps = as_float_vector(eps, "eps", n=model.n)
    e2 = eps * eps
    return e2 * (model.alpha + model.weights.matrix @ (e2 * model.alpha))


def _solve_triangular(model: SpArchModel, eps: np.ndarray, order: np.ndarray):
    alpha = model.alpha
    m = model.weights.matrix
    indptr, indices, data = m.indptr, m.indices, m.data
    e2 = eps * eps
    y2 = np.zeros(model.n)
    h = np.zeros(model.n)
    for i in order:
        lo, hi = indptr[i], indptr[i + 1]
        acc = alpha[i]
        if hi > lo:
            acc += data[lo:hi] @ y2[indices[lo:hi]]
        h[i] = acc
        y2[i] = e2[i] * acc
    return y2, h


def _solve_general(model: SpArchModel, eps: np.ndarray):
    A = build_A(model.weights, eps)
    n = model.n
    M = (sp.identity(n, format="csr") - A @ A).tocsc()
    try:
        lu = splu(M)
        y2 = lu.solve(eta_vector(model, eps))
    except RuntimeError as exc:
        raise SingularSystemError(
            f"the squared-observation system is singular: {exc}"
        ) from exc
    if not np.all(np.isfinite(y2)):
        raise SingularSystemError(
            "the squared-observation system produced non-finite values"
        )
    low = y2.min() if n else 0.0
    if low < _CLAMP_FLOOR:
        raise NonnegativityViolationError(
            f"squared observation {low!r} at site {int(np.argmin(y2))} is "
            f"below the clamp floor {_CLAMP_FLOOR}; the model admits no "
            "real-valued realization for these innovations"
        )
    np.clip(y2, 0.0, None, out=y2)
    h = model.alpha + model.weights.matrix @ y2
    return y2, h


def solve_y2(model: SpArchModel, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve the squared-observation system for given innovations.

    Returns ``(y2, h)``.  Strictly triangular weights (in any recorded
    or discoverable order) use the exact forward recursion; everything
    else goes through a sparse LU factorization of ``I - A @ A``.
    """
    eps = as_float_vector(eps, "eps", n=model.n)
    order = model.weights.solve_order()
    if order is not None:
        return _solve_triangular(model, eps, order)
    return _solve_general(model, eps)


def realize(model: SpArchModel, eps: np.ndarray, seed: int | None = None) -> Realization:
    """Build the realization determined by the given innovations."""
    eps = as_float_vector(eps, "eps", n=model.n)
    y2_raw, h = solve_y2(model, eps)
    y2 = eps * eps * h
    y = eps * np.sqrt(h)
    return Realization(y=y, y2=y2, h=h, eps=eps.copy(), seed=seed)


def simulate(model: SpArchModel, seed: int | None = None) -> Realization:
    """Draw innovations with ``numpy.random.default_rng(seed)`` and solve."""
    rng = np.random.default_rng(seed)
    eps = model.error.sample(rng, model.n)
    return realize(model, eps, seed=seed)


def validate_model(model: SpArchModel) -> ValidityReport:
    """Classify a model as certified valid or merely runtime-checked.

    ``triangular``: the weights admit a dependency-respecting site
    order, so every innovation draw yields a real-valued realization.
    ``bounded-support``: the innovations are bounded by ``a`` with
    ``a < support_bound(W)``, which certifies solvability and
    nonnegativity for every admissible draw.  Otherwise ``unverified``:
    simulation still works but performs per-draw checks and may raise.
    """
    bound = support_bound(model.weights)
    max_abs = model.error.max_abs()
    if model.weights.solve_order() is not None:
        return ValidityReport(
            certificate="triangular",
            always_valid=True,
            bound=bound,
            max_abs_innovation=max_abs,
            message="weights are strictly triangular under a site permutation",
        )
    if max_abs < bound:
        return ValidityReport(
            certificate="bounded-support",
            always_valid=True,
            bound=bound,
            max_abs_innovation=max_abs,
            message=(
                f"innovations bounded by {max_abs!r} < support bound {bound!r}"
            ),
        )
    return ValidityReport(
        certificate="unverified",
        always_valid=False,
        bound=bound,
        max_abs_innovation=max_abs,
        message=(
            "no validity certificate applies; simulation relies on per-draw "
            "checks"
        ),
    )


def closed_form_two_site(
    alpha, w12: float, w21: float, eps
) -> tuple[np.ndarray, bool]:
    """Closed-form squared observations for the two-site process.

    ``y2_1 = eps1^2 (a1 + a2 w12 eps2^2) / (1 - w12 w21 eps1^2 eps2^2)``
    and symmetrically for site 2.  The pair is admissible exactly when
    the shared denominator is positive, that is when
    ``eps1^2 eps2^2 < 1 / (w12 w21)``.
    """
    alpha = as_float_vector(alpha, "alpha", n=2)
    eps = as_float_vector(eps, "eps", n=2)
    if alpha.min() < 0 or w12 < 0 or w21 < 0:
        raise InvalidModelError("alpha and weights must be nonnegative")
    e1sq, e2sq = eps[0] ** 2, eps[1] ** 2
    denom = 1.0 - w12 * w21 * e1sq * e2sq
    admissible = bool(denom > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y2 = np.array(
            [
                e1sq * (alpha[0] + alpha[1] * w12 * e2sq) / denom,
                e2sq * (alpha[1] + alpha[0] * w21 * e1sq) / denom,
            ]
        )
    return y2, admissible


def simulate_sar_sparch(
    model: SarSpArchModel, seed: int | None = None
) -> SarRealization:
    """Draw ``xi`` from the disturbance process and solve the SAR system
    ``(I - sum_k lambda_k B_k) Y = X beta + xi``."""
    disturbance = simulate(model.noise, seed)
    n = model.n
    S = sp.identity(n, format="csr")
    for lam, B in zip(model.lambdas, model.sar_weights):
        S = S - lam * B.matrix
    try:
        lu = splu(S.tocsc())
        y = lu.solve(model.X @ model.beta + disturbance.y)
    except RuntimeError as exc:
        raise SingularSystemError(
            f"I - sum(lambda_k B_k) is singular: {exc}"
        ) from exc
    if not np.all(np.isfinite(y)):
        raise SingularSystemError("the SAR system produced non-finite values")
    return SarRealization(
        y=y, xi=disturbance.y, h=disturbance.h, eps=disturbance.eps, seed=seed
    )


def spgarch_h(y2, alpha, W1: SparseWeights, W2: SparseWeights) -> np.ndarray:
    """Helper for the GARCH-type extension: solve
    ``(I - W2) h = alpha + W1 y2``.

    Spectral conditions that keep ``h`` positive are the caller's
    responsibility; this helper only solves the linear system.
    """
    n = W1.n
    if W2.n != n:
        raise UsageError(f"W1 has {n} sites but W2 has {W2.n}")
    y2 = as_float_vector(y2, "y2", n=n)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0:
        alpha = np.full(n, float(alpha))
    alpha = as_float_vector(alpha, "alpha", n=n)
    rhs = alpha + W1.matrix @ y2
    M = (sp.identity(n, format="csr") - W2.matrix).tocsc()
    try:
        h = splu(M).solve(rhs)
    except RuntimeError as exc:
        raise SingularSystemError(f"I - W2 is singular: {exc}") from exc
    if not np.all(np.isfinite(h)):
        raise SingularSystemError("I - W2 solve produced non-finite values")
    return h
