"""Innovation distributions for the squared-observation system.

All innovations are i.i.d., symmetric around zero, and sampled through
the inverse CDF applied to one shared uniform stream.  That last point
is deliberate: runs that differ only in the innovation family (or in the
truncation point) consume the uniform stream identically, so replicate
``r`` sees "the same" randomness in every setting of equal size.

Three families are provided:

* :class:`GaussianError` -- standard normal.
* :class:`TruncatedGaussianError` -- standard normal conditioned on
  ``[-a, a]``.  By default the variance is whatever the truncation
  leaves (strictly less than one); ``unit_variance=True`` rescales the
  draw by its standard deviation, which restores unit variance at the
  price of widening the support to ``[-a/sd, a/sd]``.  The ``support``
  attribute always reports the actual support, so validity checks remain
  honest under rescaling.
* :class:`UniformError` -- uniform on ``[-a, a]``.

Each distribution checks at construction that its density integrates to
one (quadrature, tolerance 1e-8).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri
from scipy.stats import truncnorm

from .exceptions import InvalidParameterError, UsageError

__all__ = [
    "ErrorSpec",
    "GaussianError",
    "TruncatedGaussianError",
    "UniformError",
    "error_spec_from_config",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_NORMALIZATION_TOL = 1e-8


class ErrorSpec:
    """Common interface of innovation distributions.

    Attributes
    ----------
    kind : str
        Identifier used in configuration files.
    support : tuple of float or None
        ``(lo, hi)`` when the support is bounded, else None.
    variance : float
        Variance of one innovation.
    """

    kind: str = ""
    support: tuple[float, float] | None = None
    variance: float = float("nan")

    def pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_ratio(self, x: np.ndarray) -> np.ndarray:
        """The ratio f'(x) / f(x) on the interior of the support."""
        raise NotImplementedError

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF, the only route through which sampling happens."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` innovations by inverse CDF on ``rng``'s uniforms."""
        u = rng.random(n)
        tiny = np.finfo(np.float64).tiny
        return self.ppf(np.clip(u, tiny, 1.0 - 1e-16))

    def bounded(self) -> bool:
        return self.support is not None

    def max_abs(self) -> float:
        """Largest attainable |innovation| (inf when unbounded)."""
        return abs(self.support[1]) if self.support is not None else float("inf")

    def to_config(self) -> dict:
        raise NotImplementedError

    def _check_normalization(self) -> None:
        if self.support is None:
            lo, hi = -12.0, 12.0
        else:
            lo, hi = self.support
        total, _ = integrate.quad(lambda t: float(self.pdf(np.float64(t))), lo, hi)
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise InvalidParameterError(
                f"{self.kind} density integrates to {total!r}, not 1"
            )

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class GaussianError(ErrorSpec):
    """Standard normal innovations."""

    kind = "gaussian"
    support = None
    variance = 1.0

    def __init__(self) -> None:
        self._check_normalization()

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)

    def logpdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -0.5 * x * x - _LOG_SQRT_2PI

    def score_ratio(self, x):
        return -np.asarray(x, dtype=np.float64)

    def ppf(self, u):
        return ndtri(np.asarray(u, dtype=np.float64))

    def to_config(self) -> dict:
        return {"kind": self.kind}


class TruncatedGaussianError(ErrorSpec):
    """Standard normal truncated to ``[-a, a]`` and renormalized.

    Parameters
    ----------
    a : float
        Truncation point, strictly positive.
    unit_variance : bool, default False
        Rescale draws by the truncated standard deviation so the
        variance is exactly one.  The support then widens to
        ``[-a/sd, a/sd]``.
    """

    kind = "truncated_gaussian"

    def __init__(self, a: float, unit_variance: bool = False) -> None:
        a = float(a)
        if not np.isfinite(a) or a <= 0.0:
            raise InvalidParameterError(
                f"truncation point must be finite and positive, got {a}"
            )
        self.a = a
        self.unit_variance = bool(unit_variance)
        self._mass = float(2.0 * ndtr(a) - 1.0)
        base_var = float(truncnorm.var(-a, a))
        # scale applied to the truncated draw; 1 when not rescaling
        self._scale = 1.0 / math.sqrt(base_var) if self.unit_variance else 1.0
        self.variance = 1.0 if self.unit_variance else base_var
        half = a * self._scale
        self.support = (-half, half)
        self._check_normalization()

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = x / self._scale
        inside = np.abs(z) <= self.a
        vals = np.exp(-0.5 * z * z) / (
            math.sqrt(2.0 * math.pi) * self._mass * self._scale
        )
        return np.where(inside, vals, 0.0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = x / self._scale
        inside = np.abs(z) <= self.a
        vals = (
            -0.5 * z * z
            - _LOG_SQRT_2PI
            - math.log(self._mass)
            - math.log(self._scale)
        )
        return np.where(inside, vals, -np.inf)

    def score_ratio(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -x / (self._scale * self._scale)

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        lo = ndtr(-self.a)
        return self._scale * ndtri(lo + u * self._mass)

    def to_config(self) -> dict:
        return {"kind": self.kind, "a": self.a, "unit_variance": self.unit_variance}

    def __repr__(self) -> str:
        extra = ", unit_variance=True" if self.unit_variance else ""
        return f"TruncatedGaussianError(a={self.a!r}{extra})"


class UniformError(ErrorSpec):
    """Uniform innovations on ``[-a, a]``."""

    kind = "uniform"

    def __init__(self, a: float) -> None:
        a = float(a)
        if not np.isfinite(a) or a <= 0.0:
            raise InvalidParameterError(
                f"half-width must be finite and positive, got {a}"
            )
        self.a = a
        self.support = (-a, a)
        self.variance = a * a / 3.0
        self._check_normalization()

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) <= self.a, 0.5 / self.a, 0.0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) <= self.a, -math.log(2.0 * self.a), -np.inf)

    def score_ratio(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return self.a * (2.0 * u - 1.0)

    def to_config(self) -> dict:
        return {"kind": self.kind, "a": self.a}

    def __repr__(self) -> str:
        return f"UniformError(a={self.a!r})"


def error_spec_from_config(config) -> ErrorSpec:
    """Build an error distribution from a config mapping or shorthand.

    Accepts an :class:`ErrorSpec` (returned as-is), the string
    ``"gaussian"``, or a mapping with a ``kind`` key:
    ``{"kind": "gaussian"}``,
    ``{"kind": "truncated_gaussian", "a": 1.3, "unit_variance": false}``,
    ``{"kind": "uniform", "a": 1.0}``.
    """
    if isinstance(config, ErrorSpec):
        return config
    if isinstance(config, str):
        if config == "gaussian":
            return GaussianError()
        raise UsageError(
            f"unknown error distribution {config!r}; only 'gaussian' may be "
            "given as a bare string"
        )
    if not isinstance(config, dict) or "kind" not in config:
        raise UsageError("error spec must be a mapping with a 'kind' field")
    kind = config["kind"]
    if kind == "gaussian":
        return GaussianError()
    if kind == "truncated_gaussian":
        if "a" not in config:
            raise UsageError("truncated_gaussian error spec requires field 'a'")
        return TruncatedGaussianError(
            float(config["a"]), bool(config.get("unit_variance", False))
        )
    if kind == "uniform":
        if "a" not in config:
            raise UsageError("uniform error spec requires field 'a'")
        return UniformError(float(config["a"]))
    raise UsageError(f"unknown error distribution kind {kind!r}")
