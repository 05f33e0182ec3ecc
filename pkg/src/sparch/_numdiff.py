"""Central finite differences that respect box bounds.

Used for gradients of objectives whose analytic derivatives are not
worth maintaining and for observed-information Hessians at optima that
may sit on a bound (for example a spatial-dependence coefficient
estimated as exactly zero).  When a centered step would leave the box,
the evaluation point is shifted inward so the function is never called
outside its domain.
"""

from __future__ import annotations

import numpy as np

__all__ = ["central_gradient", "central_hessian", "default_steps"]


def default_steps(x: np.ndarray, scale: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return scale * np.maximum(1.0, np.abs(x))


def _bounded_pair(xi: float, step: float, lo: float, hi: float) -> tuple[float, float]:
    """Two evaluation abscissae straddling or flanking ``xi`` inside
    ``[lo, hi]``."""
    plus, minus = xi + step, xi - step
    if plus > hi:
        plus, minus = xi, xi - 2.0 * step
    if minus < lo:
        shift = lo - minus
        plus, minus = plus + shift, lo
    return plus, minus


def central_gradient(f, x, steps=None, lower=None, upper=None) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by (possibly shifted) central
    differences."""
    x = np.asarray(x, dtype=np.float64)
    p = x.size
    steps = default_steps(x) if steps is None else np.broadcast_to(steps, (p,))
    lower = np.full(p, -np.inf) if lower is None else np.broadcast_to(lower, (p,))
    upper = np.full(p, np.inf) if upper is None else np.broadcast_to(upper, (p,))
    grad = np.empty(p)
    for i in range(p):
        plus, minus = _bounded_pair(x[i], steps[i], lower[i], upper[i])
        xp = x.copy()
        xp[i] = plus
        xm = x.copy()
        xm[i] = minus
        grad[i] = (f(xp) - f(xm)) / (plus - minus)
    return grad


def central_hessian(f, x, steps=None, lower=None, upper=None) -> np.ndarray:
    """Symmetric Hessian of scalar ``f`` at ``x`` by central differences
    on a shifted-inward stencil."""
    x = np.asarray(x, dtype=np.float64)
    p = x.size
    steps = (
        default_steps(x, scale=1e-4) if steps is None else np.broadcast_to(steps, (p,))
    )
    lower = np.full(p, -np.inf) if lower is None else np.broadcast_to(lower, (p,))
    upper = np.full(p, np.inf) if upper is None else np.broadcast_to(upper, (p,))
    # per-coordinate abscissae, shifted inward where a bound interferes
    pts = [
        _bounded_pair(x[i], steps[i], lower[i], upper[i]) for i in range(p)
    ]
    hess = np.empty((p, p))
    for i in range(p):
        pi, mi = pts[i]
        for j in range(i, p):
            if i == j:
                xp = x.copy()
                xp[i] = pi
                xm = x.copy()
                xm[i] = mi
                xc = x.copy()
                xc[i] = 0.5 * (pi + mi)
                half = 0.5 * (pi - mi)
                hess[i, i] = (f(xp) - 2.0 * f(xc) + f(xm)) / (half * half)
            else:
                pj, mj = pts[j]
                xpp = x.copy()
                xpp[i], xpp[j] = pi, pj
                xpm = x.copy()
                xpm[i], xpm[j] = pi, mj
                xmp = x.copy()
                xmp[i], xmp[j] = mi, pj
                xmm = x.copy()
                xmm[i], xmm[j] = mi, mj
                val = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (
                    (pi - mi) * (pj - mj)
                )
                hess[i, j] = val
                hess[j, i] = val
    return hess
