"""JSON configuration parsing for domains, weights matrices, and models.

The command-line tools describe their inputs in small JSON documents.
This module turns those documents into package objects with error
messages that name the offending field.  Schemas (all keys lowercase):

Domain::

    {"lattice": 30, "metric": "l2"}
    {"locations": [[0.0, 0.0], [1.0, 2.0]], "metric": "l1"}

Weights (dispatch on "kind"; "row_standardize": true and "scale": s are
accepted by every kind and applied in that order after construction)::

    {"kind": "rook", "d": 50}
    {"kind": "queen_lag", "d": 30, "lag": 2}
    {"kind": "knn", "domain": D, "q": 4}
    {"kind": "inverse_distance", "domain": D, "power": 1.0, "cutoff": 2.5}
    {"kind": "sparch_p", "base": W, "domain": D, "rho": [0.3, 0.1],
     "band_width": 1.0}
    {"kind": "oriented", "base": W, "domain": D, "origin": "center"}
    {"kind": "arch_embedding", "n": 100, "coefs": [0.4, 0.2]}
    {"kind": "spatiotemporal", "lags": [W0, W1], "n_periods": 10}
    {"kind": "graph_band", "base": W, "lag": 2}
    {"kind": "csv", "path": "weights.csv", "n": 100}
    {"kind": "dense", "values": [[0, 0.5], [0.5, 0]]}

Nested ``D`` and ``W`` are domain and weights documents again.  Models::

    {"model": "sparch", "alpha": 5.0, "rho": 0.5, "weights": W,
     "error": {"kind": "truncated_gaussian", "a": 1.3}}
    {"model": "sarsparch", "beta": [1.0], "lambdas": [0.25, 0.4],
     "sar_weights": [W1, W2], "X": null, "alpha": 0.06, "rho": 0.65,
     "arch_weights": W, "error": "gaussian"}

``rho`` scales the weights matrix of the simulated process (default 1);
``X`` is null for intercept only, an inline row-major list of lists, or
a path to a numeric CSV (optional single header line), and must include
the all-ones intercept column when given.
"""

from __future__ import annotations

import json

import numpy as np

from .domain import SpatialDomain
from .errors import error_spec_from_config
from .exceptions import UsageError
from .weights import (
    SparseWeights,
    build_arch_embedding,
    build_inverse_distance,
    build_knn,
    build_oriented,
    build_queen_lag,
    build_rook,
    build_sparch_p,
    build_spatiotemporal,
    graph_distance_bands,
    row_standardize,
)

__all__ = [
    "load_json",
    "parse_domain",
    "parse_weights",
    "parse_model",
    "load_matrix_csv",
    "load_series_csv",
]


def load_json(path) -> dict:
    """Read a JSON document, raising :class:`UsageError` on problems."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: top-level JSON value must be an object")
    return doc


def _require(spec: dict, key: str, context: str):
    if key not in spec:
        raise UsageError(f"{context}: missing required field {key!r}")
    return spec[key]


def _as_int(value, key: str, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"{context}: field {key!r} must be a number, got {value!r}")
    if float(value) != int(value):
        raise UsageError(f"{context}: field {key!r} must be an integer, got {value!r}")
    return int(value)


def parse_domain(spec, context: str = "domain") -> SpatialDomain:
    """Build a :class:`SpatialDomain` from its JSON form."""
    if isinstance(spec, SpatialDomain):
        return spec
    if not isinstance(spec, dict):
        raise UsageError(f"{context}: expected an object, got {type(spec).__name__}")
    metric = spec.get("metric", "l2")
    if "lattice" in spec:
        d = _as_int(spec["lattice"], "lattice", context)
        return SpatialDomain.lattice(d, metric=metric)
    if "locations" in spec:
        return SpatialDomain(np.asarray(spec["locations"], dtype=np.float64), metric)
    raise UsageError(f"{context}: needs either 'lattice' or 'locations'")


def parse_weights(spec, domain: SpatialDomain | None = None, context: str = "weights") -> SparseWeights:
    """Build a :class:`SparseWeights` from its JSON form.

    ``domain`` supplies the geometry for kinds that need one and do not
    carry their own ``"domain"`` field.
    """
    if isinstance(spec, SparseWeights):
        return spec
    if not isinstance(spec, dict):
        raise UsageError(f"{context}: expected an object, got {type(spec).__name__}")
    kind = _require(spec, "kind", context)
    if "domain" in spec:
        domain = parse_domain(spec["domain"], context=f"{context}.domain")

    def need_domain() -> SpatialDomain:
        if domain is None:
            raise UsageError(f"{context}: kind {kind!r} requires a 'domain' field")
        return domain

    if kind == "rook":
        w = build_rook(_as_int(_require(spec, "d", context), "d", context))
    elif kind == "queen_lag":
        w = build_queen_lag(
            _as_int(_require(spec, "d", context), "d", context),
            _as_int(_require(spec, "lag", context), "lag", context),
        )
    elif kind == "knn":
        w = build_knn(need_domain(), _as_int(_require(spec, "q", context), "q", context))
    elif kind == "inverse_distance":
        w = build_inverse_distance(
            need_domain(),
            power=float(spec.get("power", 1.0)),
            cutoff=None if spec.get("cutoff") is None else float(spec["cutoff"]),
        )
    elif kind == "sparch_p":
        base = parse_weights(_require(spec, "base", context), domain, f"{context}.base")
        w = build_sparch_p(
            base,
            need_domain(),
            np.asarray(_require(spec, "rho", context), dtype=np.float64),
            float(_require(spec, "band_width", context)),
        )
    elif kind == "oriented":
        base = parse_weights(_require(spec, "base", context), domain, f"{context}.base")
        dom = need_domain()
        origin = spec.get("origin", "center")
        if isinstance(origin, str):
            if origin != "center":
                raise UsageError(
                    f"{context}: origin must be coordinates or 'center', got {origin!r}"
                )
            origin = dom.center()
        w = build_oriented(base, dom, origin)
    elif kind == "arch_embedding":
        w = build_arch_embedding(
            _as_int(_require(spec, "n", context), "n", context),
            np.asarray(_require(spec, "coefs", context), dtype=np.float64),
        )
    elif kind == "spatiotemporal":
        lag_specs = _require(spec, "lags", context)
        if not isinstance(lag_specs, list) or not lag_specs:
            raise UsageError(f"{context}: 'lags' must be a nonempty list")
        blocks = [
            parse_weights(s, domain, f"{context}.lags[{tau}]")
            for tau, s in enumerate(lag_specs)
        ]
        w = build_spatiotemporal(
            blocks, _as_int(_require(spec, "n_periods", context), "n_periods", context)
        )
    elif kind == "graph_band":
        base = parse_weights(_require(spec, "base", context), domain, f"{context}.base")
        lag = _as_int(_require(spec, "lag", context), "lag", context)
        w = graph_distance_bands(base, lag)[lag - 1]
    elif kind == "csv":
        n = spec.get("n")
        w = SparseWeights.from_csv(
            _require(spec, "path", context),
            n=None if n is None else _as_int(n, "n", context),
        )
    elif kind == "dense":
        w = SparseWeights(np.asarray(_require(spec, "values", context), dtype=np.float64))
    else:
        raise UsageError(f"{context}: unknown weights kind {kind!r}")

    if spec.get("row_standardize", False):
        w = row_standardize(w)
    if "scale" in spec:
        w = w.scaled(float(spec["scale"]))
    return w


def load_matrix_csv(path) -> np.ndarray:
    """Read a numeric CSV as a 2-D array, skipping one header line when
    the first line is not numeric."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
    except FileNotFoundError as exc:
        raise UsageError(f"matrix file not found: {path}") from exc
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",") if tok != ""]
    except ValueError:
        skip = 1
    try:
        mat = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise UsageError(f"{path}: could not parse numeric CSV: {exc}") from exc
    return mat


def load_series_csv(path, column: str = "y") -> np.ndarray:
    """Read one named column from a headed CSV (realization files work)."""
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except FileNotFoundError as exc:
        raise UsageError(f"data file not found: {path}") from exc
    if data.dtype.names is None or column not in data.dtype.names:
        names = () if data.dtype.names is None else data.dtype.names
        raise UsageError(
            f"{path}: no column named {column!r} (found {', '.join(names) or 'none'})"
        )
    values = np.atleast_1d(np.asarray(data[column], dtype=np.float64))
    if not np.all(np.isfinite(values)):
        raise UsageError(f"{path}: column {column!r} contains non-numeric entries")
    return values


def parse_model(spec: dict, context: str = "model"):
    """Build a :class:`SpArchModel` or :class:`SarSpArchModel` from JSON."""
    from .process import SarSpArchModel, SpArchModel

    if not isinstance(spec, dict):
        raise UsageError(f"{context}: expected an object, got {type(spec).__name__}")
    family = _require(spec, "model", context)
    error = error_spec_from_config(spec.get("error", "gaussian"))

    domain = None
    if "domain" in spec:
        domain = parse_domain(spec["domain"], context=f"{context}.domain")

    if family == "sparch":
        weights = parse_weights(
            _require(spec, "weights", context), domain, f"{context}.weights"
        )
        rho = float(spec.get("rho", 1.0))
        if rho != 1.0:
            weights = weights.scaled(rho)
        alpha = np.asarray(_require(spec, "alpha", context), dtype=np.float64)
        return SpArchModel(alpha=alpha, weights=weights, error=error)

    if family == "sarsparch":
        arch_weights = parse_weights(
            _require(spec, "arch_weights", context), domain, f"{context}.arch_weights"
        )
        rho = float(spec.get("rho", 1.0))
        if rho != 1.0:
            arch_weights = arch_weights.scaled(rho)
        alpha = np.asarray(_require(spec, "alpha", context), dtype=np.float64)
        noise = SpArchModel(alpha=alpha, weights=arch_weights, error=error)

        sar_specs = _require(spec, "sar_weights", context)
        if not isinstance(sar_specs, list) or not sar_specs:
            raise UsageError(f"{context}: 'sar_weights' must be a nonempty list")
        sar_weights = [
            parse_weights(s, domain, f"{context}.sar_weights[{k}]")
            for k, s in enumerate(sar_specs)
        ]
        beta = np.asarray(_require(spec, "beta", context), dtype=np.float64).ravel()
        lambdas = np.asarray(_require(spec, "lambdas", context), dtype=np.float64).ravel()

        X = spec.get("X")
        n = noise.n
        if X is None:
            Xmat = np.ones((n, 1))
        elif isinstance(X, str):
            Xmat = load_matrix_csv(X)
        else:
            Xmat = np.asarray(X, dtype=np.float64)
            if Xmat.ndim == 1:
                Xmat = Xmat[:, None]
        return SarSpArchModel(
            X=Xmat, beta=beta, lambdas=lambdas, sar_weights=sar_weights, noise=noise
        )

    raise UsageError(f"{context}: unknown model family {family!r}")
