"""Moran's I autocorrelation statistics and residual diagnostics.

Moran's I of a vector ``x`` under weights ``W`` is

    I = (n / S0) * (z' W z) / (z' z),        z = x - mean(x),

with ``S0`` the sum of all weights.  Inference uses the classical
normal-approximation moments: ``E(I) = -1/(n-1)`` and the
normality-assumption variance built from the sums ``S1`` and ``S2`` of
the weight structure.  Two-sided p-values come from the standard normal.

``spatial_acf`` generalizes the statistic to a sequence of lag bands:
pairs at graph distance exactly ``k`` in a contiguity graph (Queen
contiguity on lattice domains unless a base pattern is supplied), each
band row-standardized.

``residual_diagnostics`` applies Moran's I to fit residuals and their
squares, which is the working check that a mean model has removed
spatial correlation in levels while a variance model has removed it in
squares.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._validation import as_float_vector
from .domain import SpatialDomain
from .exceptions import DegenerateInputError, UsageError
from .weights import SparseWeights, _lattice_adjacency, graph_distance_bands

__all__ = [
    "MoranResult",
    "SpatialACF",
    "morans_i",
    "spatial_acf",
    "residual_diagnostics",
]


@dataclass(frozen=True)
class MoranResult:
    """Moran's I with its normal-approximation inference.

    ``std`` can be exactly zero in degenerate geometries (for example
    two sites, where the statistic is forced to -1); ``zscore`` and
    ``pvalue`` are NaN in that case.
    """

    statistic: float
    expectation: float
    std: float
    zscore: float
    pvalue: float

    def significant(self, level: float = 0.05) -> bool:
        return bool(np.isfinite(self.pvalue) and self.pvalue < level)


@dataclass(frozen=True)
class SpatialACF:
    """Moran's I per graph-distance lag band."""

    lags: tuple
    results: tuple

    def rows(self, series: str = "x"):
        """Yield ``(series, lag, MoranResult)`` triples."""
        for lag, res in zip(self.lags, self.results):
            yield series, lag, res


def morans_i(x, weights: SparseWeights) -> MoranResult:
    """Moran's I of ``x`` under ``weights`` with normal-theory moments."""
    n = weights.n
    x = as_float_vector(x, "x", n=n)
    if n < 2:
        raise DegenerateInputError("Moran's I needs at least two sites")
    z = x - x.mean()
    denom = float(z @ z)
    if denom <= 0.0:
        raise DegenerateInputError("x is constant; Moran's I is undefined")
    W = weights.matrix
    s0 = float(W.sum())
    if s0 <= 0.0:
        raise DegenerateInputError("weights have no nonzero entries")
    stat = n / s0 * float(z @ (W @ z)) / denom

    sym = W + W.T
    s1 = 0.5 * float(np.sum(sym.data * sym.data)) if sym.nnz else 0.0
    row = np.asarray(W.sum(axis=1)).ravel()
    col = np.asarray(W.sum(axis=0)).ravel()
    s2 = float(np.sum((row + col) ** 2))
    expectation = -1.0 / (n - 1)
    var = (n * n * s1 - n * s2 + 3.0 * s0 * s0) / (
        (n * n - 1.0) * s0 * s0
    ) - expectation * expectation
    var = max(var, 0.0)
    std = math.sqrt(var)
    if std > 0.0:
        zscore = (stat - expectation) / std
        pvalue = 2.0 * (1.0 - float(ndtr(abs(zscore))))
    else:
        zscore = float("nan")
        pvalue = float("nan")
    return MoranResult(
        statistic=float(stat),
        expectation=expectation,
        std=std,
        zscore=zscore,
        pvalue=pvalue,
    )


def spatial_acf(
    x,
    domain: SpatialDomain | None = None,
    max_lag: int = 5,
    base: SparseWeights | None = None,
) -> SpatialACF:
    """Moran's I over graph-distance lag bands.

    ``base`` supplies the first-order contiguity pattern; when omitted
    the domain must be a regular lattice, in which case Queen contiguity
    is used, making lag ``k`` identical to ``build_queen_lag(d, k)``.
    Bands beyond the graph diameter are dropped with a warning.
    """
    if max_lag < 1:
        raise UsageError(f"max_lag must be >= 1, got {max_lag}")
    if base is None:
        if domain is None or domain.lattice_side is None:
            raise UsageError(
                "spatial_acf needs either a lattice domain or an explicit "
                "base contiguity"
            )
        base = SparseWeights(_lattice_adjacency(domain.lattice_side, "queen"))
    x = as_float_vector(x, "x", n=base.n)
    bands = graph_distance_bands(base, max_lag)
    lags, results = [], []
    for k, band in enumerate(bands, start=1):
        if band.is_empty:
            warnings.warn(
                f"lag {k} exceeds the contiguity graph diameter; dropping "
                "it and higher lags",
                stacklevel=2,
            )
            break
        lags.append(k)
        results.append(morans_i(x, band))
    return SpatialACF(lags=tuple(lags), results=tuple(results))


def residual_diagnostics(
    fit_or_residuals,
    weights: SparseWeights,
    include_squares: bool = True,
) -> list:
    """Moran's I of residual series and (optionally) their squares.

    ``fit_or_residuals`` is either a FitResult (its ``residuals`` dict
    is used) or a mapping from series name to vector.  Returns
    ``(series_name, lag, MoranResult)`` triples with lag fixed at 1,
    ordered deterministically; squared series get a ``2`` suffix.
    """
    residuals = getattr(fit_or_residuals, "residuals", fit_or_residuals)
    if not isinstance(residuals, dict) or not residuals:
        raise UsageError("no residual series to diagnose")
    rows = []
    for name in sorted(residuals):
        series = as_float_vector(residuals[name], name, n=weights.n)
        rows.append((name, 1, morans_i(series, weights)))
        if include_squares:
            rows.append((name + "2", 1, morans_i(series * series, weights)))
    return rows
