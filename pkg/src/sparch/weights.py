"""Sparse spatial weights: the container and its constructions.

Every weights matrix used by this package is a nonnegative square sparse
matrix with a zero diagonal, wrapped in :class:`SparseWeights` together
with structural flags (triangularity, row standardization) that the
solver and the likelihood code dispatch on.  Entry ``w[i, j]`` is the
weight with which the squared observation at site ``j`` enters the
conditional variance at site ``i``.

Constructions provided here:

* ``build_rook`` -- row-standardized rook contiguity on a d x d lattice
* ``build_queen_lag`` -- row-standardized matrix of sites at Queen graph
  distance exactly k
* ``build_knn`` -- binary q-nearest-neighbor matrix with deterministic
  tie-breaking
* ``build_inverse_distance`` -- inverse-distance weights with optional
  cutoff
* ``build_sparch_p`` -- distance-band reweighting of a base matrix with
  one coefficient per band
* ``build_oriented`` -- keep only edges pointing from sites nearer a
  reference point to sites farther away, which makes the matrix strictly
  triangular under the distance ordering
* ``build_arch_embedding`` -- strictly lower triangular embedding of a
  classical ARCH(p) recursion
* ``build_spatiotemporal`` -- block matrix stacking temporal lags of
  spatial matrices

plus ``row_standardize``, ``triangularize`` (topological permutation),
``graph_distance_bands`` and the validity bound ``support_bound``.
"""

from __future__ import annotations

import csv
import heapq
import warnings

import numpy as np
import scipy.sparse as sp

from .domain import SpatialDomain
from .exceptions import (
    InvalidParameterError,
    InvalidWeightsError,
    UsageError,
)

__all__ = [
    "SparseWeights",
    "as_sparse_weights",
    "build_rook",
    "build_queen_lag",
    "build_knn",
    "build_inverse_distance",
    "build_sparch_p",
    "build_oriented",
    "build_arch_embedding",
    "build_spatiotemporal",
    "graph_distance_bands",
    "row_standardize",
    "triangularize",
    "support_bound",
]

_ROW_SUM_TOL = 1e-12


class SparseWeights:
    """Nonnegative square sparse matrix with zero diagonal.

    Parameters
    ----------
    matrix : sparse or dense matrix of shape (n, n)
        Weights; negative entries, non-finite entries, or a nonzero
        diagonal raise :class:`InvalidWeightsError`.
    permutation : ndarray, optional
        A site order ``p`` such that ``matrix[p][:, p]`` is strictly
        lower triangular.  Constructions that know such an order (the
        oriented builder, the ARCH embedding) record it so the solver can
        use the fast recursive path without searching for one.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        Canonical CSR storage (sorted indices, duplicates summed, no
        explicit zeros).  Treated as immutable after construction.
    zero_diagonal : bool
        Always true; kept for introspection symmetry with the other flags.
    strictly_lower_triangular, strictly_upper_triangular : bool
        Whether every stored entry lies strictly below (above) the
        diagonal in the current site order.
    row_standardized : bool
        Whether every nonempty row sums to one (tolerance 1e-12).
    """

    __slots__ = (
        "matrix",
        "zero_diagonal",
        "strictly_lower_triangular",
        "strictly_upper_triangular",
        "row_standardized",
        "permutation",
    )

    def __init__(self, matrix, permutation: np.ndarray | None = None) -> None:
        m = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        if m.shape[0] != m.shape[1]:
            raise InvalidWeightsError(f"weights must be square, got shape {m.shape}")
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        if m.nnz and not np.all(np.isfinite(m.data)):
            raise InvalidWeightsError("weights contain non-finite entries")
        if m.nnz and m.data.min() < 0.0:
            raise InvalidWeightsError("weights must be nonnegative")
        if m.diagonal().any():
            raise InvalidWeightsError("weights must have a zero diagonal")

        self.matrix = m
        self.zero_diagonal = True
        coo = m.tocoo()
        self.strictly_lower_triangular = bool(np.all(coo.col < coo.row))
        self.strictly_upper_triangular = bool(np.all(coo.col > coo.row))
        row_sums = np.asarray(m.sum(axis=1)).ravel()
        occupied = np.diff(m.indptr) > 0
        self.row_standardized = bool(
            np.all(np.abs(row_sums[occupied] - 1.0) <= _ROW_SUM_TOL)
        ) and bool(occupied.any())

        if permutation is not None:
            permutation = np.asarray(permutation, dtype=np.intp)
            if sorted(permutation.tolist()) != list(range(m.shape[0])):
                raise InvalidWeightsError(
                    "permutation must be a permutation of all site indices"
                )
        self.permutation = permutation

    # -- basic introspection -------------------------------------------------

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def is_empty(self) -> bool:
        return self.matrix.nnz == 0

    def __repr__(self) -> str:
        tags = []
        if self.strictly_lower_triangular:
            tags.append("lower")
        if self.strictly_upper_triangular:
            tags.append("upper")
        if self.row_standardized:
            tags.append("row-std")
        tag = (", " + "/".join(tags)) if tags else ""
        return f"SparseWeights(n={self.n}, nnz={self.nnz}{tag})"

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self):
        """Yield entries as ``(i, j, w)`` sorted by ``(i, j)``."""
        m = self.matrix
        for i in range(self.n):
            for k in range(m.indptr[i], m.indptr[i + 1]):
                yield i, int(m.indices[k]), float(m.data[k])

    # -- algebra ---------------------------------------------------------------

    def scaled(self, rho: float) -> "SparseWeights":
        """Return ``rho * W`` as a new SparseWeights (``rho >= 0``)."""
        rho = float(rho)
        if not np.isfinite(rho) or rho < 0.0:
            raise InvalidParameterError(f"scale factor must be >= 0, got {rho}")
        return SparseWeights(self.matrix * rho, permutation=self.permutation)

    def permute(self, order: np.ndarray) -> "SparseWeights":
        """Return the matrix with rows and columns reordered by ``order``."""
        order = np.asarray(order, dtype=np.intp)
        sub = self.matrix[order][:, order]
        return SparseWeights(sub)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def solve_order(self) -> np.ndarray | None:
        """A site order in which each site's inputs precede it, or None.

        Returns the identity order for strictly lower triangular
        matrices, the reversed order for strictly upper triangular ones,
        the recorded permutation when one was attached at construction,
        and otherwise whatever :func:`triangularize` finds.
        """
        if self.strictly_lower_triangular:
            return np.arange(self.n, dtype=np.intp)
        if self.strictly_upper_triangular:
            return np.arange(self.n - 1, -1, -1, dtype=np.intp)
        if self.permutation is not None:
            return self.permutation
        return triangularize(self)

    # -- serialization -----------------------------------------------------

    def to_csv(self, path) -> None:
        """Write entries as ``i,j,w`` triplets, 0-based, sorted by (i, j).

        Weights are written with :func:`repr`, which round-trips float64
        exactly.
        """
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "w"])
            for i, j, w in self.triplets():
                writer.writerow([i, j, repr(w)])

    @classmethod
    def from_csv(cls, path, n: int | None = None) -> "SparseWeights":
        """Read a triplet CSV produced by :meth:`to_csv`.

        ``n`` overrides the inferred size (largest index + 1), which
        matters when trailing sites have no entries.
        """
        rows, cols, vals = [], [], []
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["i", "j", "w"]:
                raise UsageError(f"{path}: expected header 'i,j,w', got {header}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rows.append(int(row[0]))
                    cols.append(int(row[1]))
                    vals.append(float(row[2]))
                except (IndexError, ValueError) as exc:
                    raise UsageError(f"{path}:{lineno}: malformed triplet {row}") from exc
        if n is None:
            if not rows:
                raise UsageError(f"{path}: empty triplet file needs an explicit size")
            n = max(max(rows), max(cols)) + 1
        if rows and (min(rows) < 0 or min(cols) < 0):
            raise UsageError(f"{path}: indices must be nonnegative")
        if rows and (max(rows) >= n or max(cols) >= n):
            raise UsageError(f"{path}: index exceeds declared size {n}")
        m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(m)


def as_sparse_weights(obj, name: str = "weights") -> SparseWeights:
    """Coerce an array, scipy sparse matrix, or SparseWeights."""
    if isinstance(obj, SparseWeights):
        return obj
    if sp.issparse(obj) or isinstance(obj, np.ndarray) or isinstance(obj, (list, tuple)):
        return SparseWeights(np.asarray(obj) if not sp.issparse(obj) else obj)
    raise UsageError(f"{name} must be a SparseWeights, ndarray, or scipy sparse matrix")


# -- lattice contiguity ------------------------------------------------------


def _lattice_adjacency(d: int, neighborhood: str) -> sp.csr_matrix:
    """Binary adjacency on a d x d lattice, rook or queen neighborhood."""
    if d < 1:
        raise InvalidParameterError(f"lattice side must be >= 1, got {d}")
    if neighborhood == "rook":
        offsets = ((1, 0), (-1, 0), (0, 1), (0, -1))
    elif neighborhood == "queen":
        offsets = tuple(
            (di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)
        )
    else:  # pragma: no cover - internal
        raise ValueError(neighborhood)
    n = d * d
    i, j = np.divmod(np.arange(n), d)
    rows, cols = [], []
    for di, dj in offsets:
        ii, jj = i + di, j + dj
        ok = (ii >= 0) & (ii < d) & (jj >= 0) & (jj < d)
        rows.append(np.flatnonzero(ok))
        cols.append(ii[ok] * d + jj[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))


def build_rook(d: int) -> SparseWeights:
    """Row-standardized rook contiguity on a ``d x d`` lattice.

    Sites are rook neighbors when their L1 grid distance is exactly 1.
    Each row is divided by its neighbor count, so interior sites carry
    weight 1/4 per neighbor, edges 1/3, corners 1/2 (``d >= 2``).
    """
    adj = _lattice_adjacency(d, "rook")
    return row_standardize(SparseWeights(adj))


def build_queen_lag(d: int, k: int) -> SparseWeights:
    """Row-standardized weights linking sites at Queen graph distance k.

    The Queen graph joins lattice sites whose Chebyshev distance is 1;
    lag ``k`` keeps exactly the pairs at shortest-path distance ``k`` in
    that graph and row-standardizes the result.  A lag beyond the graph
    diameter yields an empty matrix and a warning.
    """
    if k < 1:
        raise InvalidParameterError(f"lag order must be >= 1, got {k}")
    adj = _lattice_adjacency(d, "queen")
    bands = _distance_bands(adj, k)
    band = bands[k - 1]
    if band.nnz == 0:
        warnings.warn(
            f"queen lag {k} exceeds the graph diameter of the {d}x{d} lattice; "
            "returning an empty matrix",
            stacklevel=2,
        )
    return row_standardize(SparseWeights(band))


def _distance_bands(adj: sp.csr_matrix, max_lag: int) -> list[sp.csr_matrix]:
    """Binary matrices of pairs at graph distance exactly 1..max_lag.

    Computed by boolean matrix powers: after ``k`` multiplications the
    reachability pattern covers distances <= k, and stripping everything
    already seen leaves the exact-k band.
    """
    n = adj.shape[0]
    pattern = (adj > 0).astype(np.int8).tocsr()
    seen = (pattern + sp.identity(n, dtype=np.int8, format="csr")).tocsr()
    seen.data = np.ones_like(seen.data)
    bands = [pattern.astype(np.float64)]
    reach = pattern
    for _ in range(max_lag - 1):
        reach = (reach @ pattern).tocsr()
        reach.data = np.ones_like(reach.data)
        overlap = reach.multiply(seen)
        band = (reach - overlap).tocsr()
        band.eliminate_zeros()
        bands.append(band.astype(np.float64))
        seen = (seen + band).tocsr()
        seen.data = np.ones_like(seen.data)
        if band.nnz == 0:
            # no new pairs can appear once a band is empty
            bands.extend(
                sp.csr_matrix((n, n), dtype=np.float64) for _ in range(max_lag - len(bands))
            )
            break
    return bands


def graph_distance_bands(base: SparseWeights, max_lag: int) -> list[SparseWeights]:
    """Row-standardized bands of graph distance 1..max_lag over ``base``.

    ``base`` is interpreted as a contiguity pattern (values ignored).
    """
    if max_lag < 1:
        raise InvalidParameterError(f"max_lag must be >= 1, got {max_lag}")
    bands = _distance_bands(base.matrix, max_lag)
    return [row_standardize(SparseWeights(b)) for b in bands]


# -- point-set constructions ------------------------------------------------


def build_knn(domain: SpatialDomain, q: int) -> SparseWeights:
    """Binary q-nearest-neighbor weights under the domain metric.

    Ties in distance are broken toward the lower site index, so the
    construction is deterministic.  Requires ``1 <= q < n``.
    """
    n = domain.n_sites
    if not 1 <= q < n:
        raise InvalidParameterError(f"q must satisfy 1 <= q < n={n}, got {q}")
    dist = domain.pairwise_distances()
    np.fill_diagonal(dist, np.inf)
    idx = np.arange(n)
    rows = np.repeat(idx, q)
    cols = np.empty(n * q, dtype=np.intp)
    for i in range(n):
        order = np.lexsort((idx, dist[i]))
        cols[i * q : (i + 1) * q] = order[:q]
    m = sp.csr_matrix((np.ones(n * q), (rows, cols)), shape=(n, n))
    return SparseWeights(m)


def build_inverse_distance(
    domain: SpatialDomain, power: float = 1.0, cutoff: float | None = None
) -> SparseWeights:
    """Inverse-distance weights ``w_ij = d(s_i, s_j) ** -power``.

    Pairs farther apart than ``cutoff`` (when given) get weight zero.
    """
    if power <= 0:
        raise InvalidParameterError(f"power must be positive, got {power}")
    dist = domain.pairwise_distances()
    np.fill_diagonal(dist, np.inf)
    if cutoff is not None:
        if cutoff <= 0:
            raise InvalidParameterError(f"cutoff must be positive, got {cutoff}")
        dist[dist > cutoff] = np.inf
    with np.errstate(divide="ignore"):
        w = dist ** -power
    w[~np.isfinite(w)] = 0.0
    return SparseWeights(sp.csr_matrix(w))


def build_sparch_p(
    base: SparseWeights,
    domain: SpatialDomain,
    rho: np.ndarray,
    c: float,
) -> SparseWeights:
    """Reweight ``base`` by distance band: ``w_ij = base_ij * rho[k-1]``
    where band ``k`` collects pairs with distance in ``((k-1)c, kc]``.

    Pairs beyond ``p * c`` (with ``p = len(rho)``) are dropped.  Band
    coefficients must be nonnegative.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 1 or rho.size == 0:
        raise InvalidParameterError("rho must be a nonempty vector of band weights")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise InvalidParameterError("band weights must be finite and nonnegative")
    if c <= 0:
        raise InvalidParameterError(f"band width c must be positive, got {c}")
    if base.n != domain.n_sites:
        raise UsageError(
            f"base has {base.n} sites but domain has {domain.n_sites}"
        )
    p = rho.size
    coo = base.matrix.tocoo()
    if coo.nnz == 0:
        return SparseWeights(sp.csr_matrix((base.n, base.n)))
    diffs = domain.coords[coo.row] - domain.coords[coo.col]
    if domain.metric == "l1":
        d = np.abs(diffs).sum(axis=1)
    elif domain.metric == "linf":
        d = np.abs(diffs).max(axis=1)
    else:
        d = np.sqrt((diffs * diffs).sum(axis=1))
    # distance in ((k-1)c, kc]  <=>  ceil(d / c) == k
    band = np.ceil(d / c - 1e-12).astype(np.intp)
    keep = (band >= 1) & (band <= p)
    vals = coo.data[keep] * rho[band[keep] - 1]
    m = sp.csr_matrix((vals, (coo.row[keep], coo.col[keep])), shape=base.matrix.shape)
    return SparseWeights(m)


def build_oriented(base: SparseWeights, domain: SpatialDomain, origin) -> SparseWeights:
    """Keep only entries ``w_ij`` whose row site is strictly nearer the
    reference point than the column site.

    Sorting sites by distance to ``origin`` (ties by site index) renders
    the result strictly triangular; the returned object carries the
    corresponding permutation, so the recursive solver applies directly.
    Equidistant pairs lose both directions.
    """
    if base.n != domain.n_sites:
        raise UsageError(f"base has {base.n} sites but domain has {domain.n_sites}")
    dist = domain.distances_to(origin)
    coo = base.matrix.tocoo()
    keep = dist[coo.row] < dist[coo.col]
    m = sp.csr_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=base.matrix.shape
    )
    # stable sort: distance ascending, site index breaking ties
    order = np.lexsort((np.arange(base.n), dist))
    # rows load on strictly farther columns, so evaluation must run from
    # the farthest site inward: the reversed distance order lower-
    # triangularizes the matrix.
    return SparseWeights(m, permutation=order[::-1].copy())


def build_arch_embedding(n: int, alpha_coefs: np.ndarray) -> SparseWeights:
    """Strictly lower triangular embedding of an ARCH(p) recursion.

    With sites read as time points, ``w[i, j] = alpha_coefs[i - j - 1]``
    for ``1 <= i - j <= p``; the induced process reproduces the classical
    recursion ``h_t = a0 + sum_k alpha_coefs[k-1] * y_{t-k}^2``.
    """
    alpha_coefs = np.asarray(alpha_coefs, dtype=np.float64)
    if alpha_coefs.ndim != 1 or alpha_coefs.size == 0:
        raise InvalidParameterError("alpha_coefs must be a nonempty vector")
    if np.any(alpha_coefs < 0) or not np.all(np.isfinite(alpha_coefs)):
        raise InvalidParameterError("ARCH coefficients must be finite and nonnegative")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    p = alpha_coefs.size
    diags = [np.full(n - k, alpha_coefs[k - 1]) for k in range(1, min(p, n - 1) + 1)]
    offsets = [-k for k in range(1, min(p, n - 1) + 1)]
    if not diags:
        return SparseWeights(sp.csr_matrix((n, n)))
    m = sp.diags(diags, offsets, shape=(n, n), format="csr")
    return SparseWeights(m)


def build_spatiotemporal(lag_blocks: list, n_periods: int) -> SparseWeights:
    """Block matrix stacking temporal lags of spatial weights.

    ``lag_blocks[tau]`` is the n x n spatial matrix applied at temporal
    lag ``tau`` (``tau = 0`` is simultaneous).  The result has shape
    ``(n * n_periods, n * n_periods)``; the block at block-row ``t`` and
    block-column ``t - tau`` equals ``lag_blocks[tau]``, and blocks that
    would reach before the first period are dropped.  Site ``s`` at
    period ``t`` has stacked index ``t * n + s``.

    The simultaneous block sits on the diagonal, so it must itself have a
    zero diagonal; with a pure lag-1 structure and one site per period
    this reduces exactly to :func:`build_arch_embedding`.
    """
    if n_periods < 1:
        raise InvalidParameterError(f"n_periods must be >= 1, got {n_periods}")
    if not lag_blocks:
        raise InvalidParameterError("lag_blocks must contain at least one matrix")
    mats = []
    n = None
    for tau, block in enumerate(lag_blocks):
        m = block.matrix if isinstance(block, SparseWeights) else sp.csr_matrix(
            np.asarray(block, dtype=np.float64)
        )
        if m.shape[0] != m.shape[1]:
            raise InvalidWeightsError(f"lag {tau} block is not square: {m.shape}")
        if n is None:
            n = m.shape[0]
        elif m.shape[0] != n:
            raise InvalidWeightsError(
                f"lag {tau} block has size {m.shape[0]}, expected {n}"
            )
        if tau == 0 and m.diagonal().any():
            raise InvalidWeightsError(
                "the simultaneous (lag 0) block must have a zero diagonal"
            )
        mats.append(m)
    p = len(mats) - 1
    grid = [
        [
            mats[t - u] if 0 <= t - u <= p else None
            for u in range(n_periods)
        ]
        for t in range(n_periods)
    ]
    return SparseWeights(sp.bmat(grid, format="csr"))


# -- transformations and summaries -------------------------------------------


def row_standardize(W: SparseWeights) -> SparseWeights:
    """Divide each nonempty row by its sum; empty rows stay empty.

    Idempotent: standardizing a row-standardized matrix is a no-op up to
    floating-point roundoff.
    """
    m = W.matrix.copy()
    row_sums = np.asarray(m.sum(axis=1)).ravel()
    scale = np.where(row_sums > 0, row_sums, 1.0)
    m = sp.diags(1.0 / scale) @ m
    return SparseWeights(m, permutation=W.permutation)


def triangularize(W: SparseWeights) -> np.ndarray | None:
    """Find a site order ``p`` with ``W[p][:, p]`` strictly lower
    triangular, or return None when the dependency graph has a cycle.

    Row ``i`` depends on every column ``j`` with ``w_ij > 0``, so a valid
    order is a topological sort of the graph with edges ``j -> i``.  Among
    admissible sites the smallest index is taken first, which makes the
    result deterministic; a full strictly upper triangular matrix yields
    the reversal permutation.
    """
    n = W.n
    indegree = np.diff(W.matrix.indptr).copy()
    csc = W.matrix.tocsc()
    heap = [int(i) for i in np.flatnonzero(indegree == 0)]
    heapq.heapify(heap)
    order = np.empty(n, dtype=np.intp)
    filled = 0
    while heap:
        v = heapq.heappop(heap)
        order[filled] = v
        filled += 1
        for k in range(csc.indptr[v], csc.indptr[v + 1]):
            i = int(csc.indices[k])
            indegree[i] -= 1
            if indegree[i] == 0:
                heapq.heappush(heap, i)
    if filled != n:
        return None
    return order


def support_bound(W: SparseWeights) -> float:
    """Largest innovation magnitude with guaranteed real-valued solutions.

    When every innovation satisfies ``|eps_i| <= a`` with
    ``a < (max column sum of |W @ W|) ** (-1/4)``, the squared-process
    system is solvable with nonnegative solutions regardless of the
    drawn innovations.  Returns ``inf`` when ``W @ W`` is zero (for
    example any strictly triangular W on two sites, or W = 0), since the
    Neumann series then terminates.

    The bound scales as ``support_bound(rho * W) ==
    rho ** -0.5 * support_bound(W)``.
    """
    W2 = W.matrix @ W.matrix
    norm1 = float(np.abs(W2).sum(axis=0).max()) if W2.nnz else 0.0
    if norm1 == 0.0:
        return float("inf")
    return norm1 ** -0.25
