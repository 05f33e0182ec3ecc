"""Spatial domains: finite location sets with a distance metric.

A :class:`SpatialDomain` is an ordered, finite collection of distinct
locations in ``R^dim`` together with one of three metrics (``l1``,
``l2``, ``linf``).  Site indices are 0-based and every downstream object
(weights matrices, realizations, CSV files) refers to locations by this
index order.  Regular ``d x d`` lattices are built row-major, so the
site at grid row ``i`` and column ``j`` has index ``i * d + j`` and
coordinates ``(i, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InvalidDomainError

__all__ = ["SpatialDomain", "METRICS"]

METRICS = ("l1", "l2", "linf")

_CDIST_NAME = {"l1": "cityblock", "l2": "euclidean", "linf": "chebyshev"}


@dataclass(frozen=True)
class SpatialDomain:
    """An ordered set of distinct locations with a metric.

    Parameters
    ----------
    coords : ndarray of shape (n, dim)
        Location coordinates, one row per site.
    metric : {"l1", "l2", "linf"}
        Distance used by neighborhood constructions on this domain.
    """

    coords: np.ndarray
    metric: str = "l2"
    lattice_side: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise InvalidDomainError(
                f"coords must be a nonempty (n, dim) array, got shape {coords.shape}"
            )
        if not np.all(np.isfinite(coords)):
            raise InvalidDomainError("coords contain non-finite values")
        if self.metric not in METRICS:
            raise InvalidDomainError(
                f"metric must be one of {METRICS}, got {self.metric!r}"
            )
        if len(np.unique(coords, axis=0)) != coords.shape[0]:
            raise InvalidDomainError("locations must be distinct")
        object.__setattr__(self, "coords", coords)
        coords.setflags(write=False)

    @classmethod
    def lattice(cls, d: int, metric: str = "l2") -> "SpatialDomain":
        """Regular ``d x d`` integer lattice, row-major site order."""
        if d < 1:
            raise InvalidDomainError(f"lattice side must be >= 1, got {d}")
        i, j = np.divmod(np.arange(d * d), d)
        coords = np.column_stack([i, j]).astype(np.float64)
        return cls(coords, metric, lattice_side=int(d))

    @property
    def n_sites(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def pairwise_distances(self) -> np.ndarray:
        """Dense (n, n) matrix of pairwise distances under the metric."""
        return cdist(self.coords, self.coords, metric=_CDIST_NAME[self.metric])

    def distances_to(self, point) -> np.ndarray:
        """Distances from every site to a single reference point."""
        point = np.asarray(point, dtype=np.float64).reshape(1, -1)
        if point.shape[1] != self.dim:
            raise InvalidDomainError(
                f"reference point has dimension {point.shape[1]}, expected {self.dim}"
            )
        return cdist(self.coords, point, metric=_CDIST_NAME[self.metric]).ravel()

    def center(self) -> np.ndarray:
        """Lattice center ``(floor(d/2), floor(d/2))`` for lattice domains,
        otherwise the coordinate-wise midrange."""
        if self.lattice_side is not None:
            half = self.lattice_side // 2
            return np.array([half, half], dtype=np.float64)
        return 0.5 * (self.coords.min(axis=0) + self.coords.max(axis=0))
