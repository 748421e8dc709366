"""Adaptive quadrature: 1-d panels, semi-infinite rays, and soliton charts.

The base rule is the embedded Gauss(7)/Kronrod(15) pair.  Each panel
carries the error estimate ``|high - low|``; panels whose error exceeds
their fair share of the tolerance are bisected, in batches, until the
summed estimate drops below the tolerance or the panel cap is reached.
Final panel values are summed in left-to-right interval order so the
result does not depend on the refinement schedule.

Integrands are evaluated on numpy arrays of abscissae (one flat array
per refinement round).  A scalar-only callable can be adapted with
:func:`pointwise`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionUnsupported, NonFiniteIntegrand

__all__ = [
    "QuadResult",
    "TruncationPolicy",
    "integrate_1d",
    "integrate_ray",
    "integrate_chart",
    "pointwise",
]

# Gauss-Kronrod 7/15 nodes on [-1, 1] (ascending) and both weight sets.
# The Gauss weights are interleaved with zeros so that one batch of 15
# evaluations feeds both rules.
_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_W_KRONROD = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_W_GAUSS = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])

DEFAULT_MAX_PANELS = 1_000_000


@dataclass(frozen=True)
class QuadResult:
    """Value of an integral together with an error estimate.

    ``converged`` is True exactly when ``error_estimate`` came in at or
    below the requested tolerance; a failed integration is reported this
    way rather than silently returning a wrong value.
    """

    value: float
    error_estimate: float
    subdivisions: int
    converged: bool


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation box for improper chart integrals.

    ``y_inner_cut`` excludes a sliver around y = 0 where the soliton
    closed forms have a branch point; integrands without that branch
    point may use 0.  ``tail_bound`` is the caller's analytic bound on
    everything the box discards and is added to the error estimate.
    """

    x_radius: float = 10.0
    y_radius: float = 10.0
    y_inner_cut: float = 1e-6
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.x_radius <= 0 or self.y_radius <= 0:
            raise ValueError("radii must be positive")
        if not 0.0 <= self.y_inner_cut < 1.0:
            raise ValueError("y_inner_cut must lie in [0, 1)")
        if not np.isfinite(self.tail_bound) or self.tail_bound < 0:
            raise ValueError("tail_bound must be finite and nonnegative")


def pointwise(f: Callable[[float], float]) -> Callable[[np.ndarray], np.ndarray]:
    """Adapt a scalar callable to the array-in/array-out contract."""

    def wrapped(x: np.ndarray) -> np.ndarray:
        return np.array([f(float(t)) for t in np.ravel(x)])

    return wrapped


def _eval_batch(fv, lefts: np.ndarray, rights: np.ndarray):
    """Apply the embedded pair on a batch of panels.

    Returns (kronrod values, |high-low| errors) per panel.
    """
    mids = 0.5 * (lefts + rights)
    halfs = 0.5 * (rights - lefts)
    nodes = mids[:, None] + halfs[:, None] * _NODES[None, :]
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        vals = np.asarray(fv(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = nodes.ravel()[~np.isfinite(vals.ravel())][0]
        raise NonFiniteIntegrand(f"integrand not finite at x={bad!r}")
    high = (vals @ _W_KRONROD) * halfs
    low = (vals @ _W_GAUSS) * halfs
    return high, np.abs(high - low)


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    *,
    max_panels: int = DEFAULT_MAX_PANELS,
    vectorized: bool = True,
) -> QuadResult:
    """Adaptively integrate f over [a, b] to absolute tolerance tol."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    fv = f if vectorized else pointwise(f)

    lefts = np.array([a])
    rights = np.array([b])
    values, errors = _eval_batch(fv, lefts, rights)
    width_floor = 5e-13 * (b - a)

    stall = 0
    best_err = math.inf
    while True:
        total_err = float(np.sum(errors))
        if total_err <= tol:
            converged = True
            break
        if total_err < best_err * (1.0 - 1e-3):
            best_err, stall = total_err, 0
        else:
            stall += 1
            if stall >= 40:  # refinement no longer reduces the estimate
                converged = False
                break
        # Split the panels that dominate the error: everything within a
        # factor 4 of the worst offender (but above its fair share), up
        # to 256 per round.  Panels at the width floor are left alone.
        n = len(lefts)
        splittable = (rights - lefts) > width_floor
        if not np.any(splittable):
            converged = False
            break
        e_max = float(np.max(errors[splittable]))
        threshold = max(tol / (4.0 * n), 0.25 * e_max)
        split = splittable & (errors >= min(threshold, e_max))
        if np.sum(split) > 256:
            order = np.argsort(errors)[::-1]
            mask = np.zeros(n, dtype=bool)
            picked = 0
            for idx in order:
                if splittable[idx]:
                    mask[idx] = True
                    picked += 1
                    if picked == 256:
                        break
            split = mask
        n_new = int(np.sum(split))
        if n + n_new > max_panels:
            converged = False
            break
        keep = ~split
        mids = 0.5 * (lefts[split] + rights[split])
        child_l = np.concatenate([lefts[split], mids])
        child_r = np.concatenate([mids, rights[split]])
        child_v, child_e = _eval_batch(fv, child_l, child_r)
        lefts = np.concatenate([lefts[keep], child_l])
        rights = np.concatenate([rights[keep], child_r])
        values = np.concatenate([values[keep], child_v])
        errors = np.concatenate([errors[keep], child_e])

    order = np.argsort(lefts, kind="stable")
    value = float(np.sum(values[order]))
    err = float(np.sum(errors[order]))
    return QuadResult(value, err, len(lefts), converged and err <= tol)


def integrate_ray(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    tol: float,
    *,
    max_panels: int = DEFAULT_MAX_PANELS,
    vectorized: bool = True,
) -> QuadResult:
    """Integrate f over [a, infinity) assuming eventually-exponential decay.

    Uses the rational substitution t = a + u/(1-u), u in [0, 1); the decay
    of f makes the transformed integrand vanish at u -> 1.
    """
    fv = f if vectorized else pointwise(f)

    def transformed(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        onemu = 1.0 - u
        with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
            t = a + u / onemu
            jac = 1.0 / (onemu * onemu)
            vals = np.asarray(fv(t), dtype=float) * jac
        # u == 1 is never a quadrature node, but guard the limit anyway
        return np.where(onemu == 0.0, 0.0, vals)

    return integrate_1d(transformed, 0.0, 1.0, tol, max_panels=max_panels)


def _y_intervals(policy: TruncationPolicy) -> Sequence[tuple[float, float]]:
    cut, r = policy.y_inner_cut, policy.y_radius
    if cut == 0.0:
        return [(-r, 0.0), (0.0, r)]
    return [(-r, -cut), (cut, r)]


def integrate_chart(
    g,
    n: int,
    policy: TruncationPolicy,
    tol: float,
    *,
    max_panels: int = DEFAULT_MAX_PANELS,
) -> QuadResult:
    """Iterated adaptive integration over the soliton chart.

    The chart has n-1 unbounded x-variables plus y.  y runs over
    ``[-y_radius, -y_inner_cut] u [y_inner_cut, y_radius]`` (outermost),
    each x over ``[-x_radius, x_radius]``.  The integrand is called as
    ``g(xs, y)`` where ``xs`` is a tuple of n-1 entries whose *last*
    entry is an ndarray of abscissae (the innermost, vectorized axis);
    it must return an array of matching shape.  Use
    :func:`chart_pointwise` for scalar chart functions.
    """
    d = n - 1
    if d not in (1, 2, 3):
        raise DimensionUnsupported(f"chart needs n-1 in {{1,2,3}}, got n={n}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    xr = policy.x_radius
    y_parts = _y_intervals(policy)
    len_y = sum(b - a for a, b in y_parts)
    len_x = 2.0 * xr

    # Tolerance budget: half for the outer y level; inner levels get a
    # strong extra margin because a level that integrates quadrature
    # *results* sees their error as integrand jitter, which stalls its
    # own refinement unless the jitter sits well below its panel budget.
    tols = [tol / 2.0]
    length_above = len_y
    for level in range(d):
        margin = 0.005 if level == 0 else 0.1
        tols.append(max(tols[-1] * margin / length_above, 1e-13))
        length_above = len_x

    stats = {"subdivisions": 0, "converged": True, "inner_err": [0.0] * (d + 1)}

    def x_level(i: int, prefix: tuple, y: float) -> float:
        if i == d - 1:
            fv = lambda xv: np.asarray(g(prefix + (xv,), y), dtype=float)
            res = integrate_1d(fv, -xr, xr, tols[i + 1], max_panels=max_panels)
        else:
            fun = lambda t: x_level(i + 1, prefix + (float(t),), y)
            res = integrate_1d(fun, -xr, xr, tols[i + 1],
                               max_panels=max_panels, vectorized=False)
        stats["subdivisions"] += res.subdivisions
        stats["converged"] &= res.converged
        stats["inner_err"][i + 1] = max(stats["inner_err"][i + 1], res.error_estimate)
        return res.value

    outer_value = 0.0
    outer_err = 0.0
    for (ya, yb) in y_parts:
        res = integrate_1d(lambda y: x_level(0, (), float(y)), ya, yb,
                           tols[0] / 2.0, max_panels=max_panels, vectorized=False)
        stats["subdivisions"] += res.subdivisions
        stats["converged"] &= res.converged
        outer_value += res.value
        outer_err += res.error_estimate

    # Inner errors enter the outer integral scaled by the measure above them.
    err = outer_err
    measure = len_y
    for i in range(1, d + 1):
        err += stats["inner_err"][i] * measure
        measure *= len_x
    err += policy.tail_bound

    converged = stats["converged"] and err <= tol
    return QuadResult(outer_value, err, stats["subdivisions"], converged)


def chart_pointwise(g) -> Callable:
    """Adapt a scalar chart integrand g(xs_floats, y) to the array contract."""

    def wrapped(xs, y):
        last = np.ravel(xs[-1])
        head = xs[:-1]
        return np.array([g(head + (float(t),), y) for t in last])

    return wrapped
