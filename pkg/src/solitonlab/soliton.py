"""Closed-form geometry of a family of Lagrangian translating solitons.

The family is parametrized by the ambient complex dimension n >= 2, a
translation speed alpha > 0 and scale parameters a_1..a_{n-1} > 0.  A
chart (x_1..x_{n-1}, y) covers the whole submanifold; every geometric
quantity -- induced metric, area density, Lagrangian angle, mean
curvature -- has an explicit formula in the chart, and this module
evaluates all of them.

The only transcendental ingredient is the angle integral

    phi_j(y) = int_0^y dt / ((1/a_j + t^2) sqrt(P(t))),
    P(t)     = (prod_k (1 + a_k t^2) e^(alpha t^2) - 1) / t^2,

which is computed by adaptive quadrature; its limits phi_bar_j pin the
angle range.  Derivatives of phi_j and of the arg-correction gamma are
always taken from their closed forms, never by differentiating
quadrature output, so jets stay exact.

Everything here is scalar/ndarray generic: the same formulas also run
on second-order jets, which is how the jet immersion feeds the AD
geometry engine without duplicating any algebra.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

from .errors import (AlphaNotOne, BranchPoint, DomainError, NonPositive,
                     QuadratureNoConvergence)
from .geometry import Jet2
from .quadrature import integrate_1d, integrate_ray

__all__ = [
    "SolitonParams",
    "ChartPoint",
    "SolitonScalars",
    "p_of_t",
    "radicand",
    "phi_j",
    "phi_prime",
    "phi_bar",
    "gamma_of_y",
    "gamma_prime",
    "theta_of_y",
    "theta_prime",
    "immerse",
    "jet_immersion",
    "metric_closed_form",
    "mean_curvature_sq",
    "v_of_y",
    "v_bounds",
    "scalars",
    "tables",
    "standard_grid",
    "params_to_json",
    "params_from_json",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolitonParams:
    """One member of the soliton family: dimension, speed, scales."""

    n: int
    alpha: float
    a: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {self.n}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"need alpha > 0, got {self.alpha}")
        if len(self.a) != self.n - 1:
            raise DomainError(f"need {self.n - 1} scale parameters, got {len(self.a)}")
        if any(not np.isfinite(v) or v <= 0 for v in self.a):
            raise DomainError(f"scale parameters must be positive, got {self.a}")

    @property
    def translator(self) -> np.ndarray:
        """The translation vector (0, ..., 0, alpha, 0) in R^(2n)."""
        t = np.zeros(2 * self.n)
        t[-2] = self.alpha
        return t


@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates (x_1..x_{n-1}, y)."""

    x: tuple[float, ...]
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if any(not np.isfinite(v) for v in self.x) or not np.isfinite(self.y):
            raise DomainError("chart coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(self.x + (self.y,))


@dataclass(frozen=True)
class SolitonScalars:
    """Angle limits and derived constants of one soliton."""

    phi_bar: tuple[float, ...]
    theta_inf: float
    theta_sup: float
    oscillation: float
    s0: float


def params_to_json(params: SolitonParams) -> str:
    return json.dumps({"n": params.n, "alpha": params.alpha, "a": list(params.a)})


def params_from_json(text: str | dict) -> SolitonParams:
    obj = json.loads(text) if isinstance(text, str) else text
    return SolitonParams(n=int(obj["n"]), alpha=float(obj["alpha"]),
                         a=tuple(obj["a"]))


# -- scalar kernels, generic over float / ndarray / Jet2 ----------------

def _is_jet(x) -> bool:
    return isinstance(x, Jet2)


def _sqrt(x):
    return x.sqrt() if _is_jet(x) else np.sqrt(x)


def _expm1(x):
    return x.expm1() if _is_jet(x) else np.expm1(x)


def _log1p(x):
    return x.log1p() if _is_jet(x) else np.log1p(x)


def _sin(x):
    return x.sin() if _is_jet(x) else np.sin(x)


def _cos(x):
    return x.cos() if _is_jet(x) else np.cos(x)


def _growth_exponent(params: SolitonParams, t):
    """alpha t^2 + sum_k log(1 + a_k t^2); radicand = expm1 of this."""
    u = t * t
    s = params.alpha * u
    for ak in params.a:
        s = s + _log1p(ak * u)
    return s


def radicand(params: SolitonParams, t):
    """prod_k (1 + a_k t^2) e^(alpha t^2) - 1; vanishes like (alpha + sum a) t^2."""
    return _expm1(_growth_exponent(params, t))


def _p_series_coeffs(params: SolitonParams) -> tuple[float, float, float]:
    s1 = params.alpha + sum(params.a)
    s2 = -0.5 * sum(ak * ak for ak in params.a)
    s3 = sum(ak ** 3 for ak in params.a) / 3.0
    return (s1, s2 + 0.5 * s1 * s1, s3 + s1 * s2 + s1 ** 3 / 6.0)


_P_SEAM = 1e-3  # below this |t| the Taylor polynomial of P is exact to ~1e-18


def p_of_t(params: SolitonParams, t):
    """P(t) = (radicand)/t^2, extended smoothly through t = 0.

    Strictly positive for all real t; P(0) = alpha + sum_k a_k.
    """
    c0, c1, c2 = _p_series_coeffs(params)
    if _is_jet(t):
        if abs(t.value) < _P_SEAM:
            u = t * t
            return c0 + u * (c1 + u * c2)
        return radicand(params, t) / (t * t)
    t = np.asarray(t, dtype=float)
    u = t * t
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = np.expm1(params.alpha * u
                          + sum(np.log1p(ak * u) for ak in params.a)) / u
    series = c0 + u * (c1 + u * c2)
    out = np.where(np.abs(t) < _P_SEAM, series, direct)
    return out if out.ndim else float(out)


def phi_prime(params: SolitonParams, j: int, y):
    """d phi_j / dy = 1 / ((1/a_j + y^2) sqrt(P(y))); smooth and positive."""
    _check_j(params, j)
    aj = params.a[j - 1]
    return 1.0 / ((1.0 / aj + y * y) * _sqrt(p_of_t(params, y)))


def gamma_prime(params: SolitonParams, y):
    """d gamma / dy, from the closed form; smooth and strictly negative."""
    u = y * y
    s = params.alpha
    for ak in params.a:
        s = s + ak / (1.0 + ak * u)
    return -s / _sqrt(p_of_t(params, y))


def theta_prime(params: SolitonParams, y):
    """d theta / dy = -alpha / sqrt(P(y)); strictly negative everywhere."""
    return -params.alpha / _sqrt(p_of_t(params, y))


def _check_j(params: SolitonParams, j: int):
    if not 1 <= j <= params.n - 1:
        raise DomainError(f"index j must be in 1..{params.n - 1}, got {j}")


def phi_j(params: SolitonParams, j: int, y: float, tol: float = DEFAULT_TOL) -> float:
    """The angle integral phi_j(y), by adaptive quadrature; odd in y."""
    _check_j(params, j)
    if y == 0.0:
        return 0.0
    lo, hi, sign = (0.0, y, 1.0) if y > 0 else (y, 0.0, -1.0)
    res = integrate_1d(lambda t: phi_prime(params, j, t), lo, hi, tol)
    if not res.converged:
        raise QuadratureNoConvergence(f"phi_{j}({y}) did not reach tol={tol:g}")
    return sign * res.value


def phi_bar(params: SolitonParams, j: int, tol: float = DEFAULT_TOL) -> float:
    """Limit of phi_j(y) as y -> infinity; lies in (0, pi/2)."""
    _check_j(params, j)
    res = integrate_ray(lambda t: phi_prime(params, j, t), 0.0, tol)
    if not res.converged:
        raise QuadratureNoConvergence(f"phi_bar_{j} did not reach tol={tol:g}")
    return res.value


def gamma_of_y(params: SolitonParams, y):
    """Branch-correct arg(y + i P(y)^(-1/2)): pi/2 at 0, decreasing, limits (0, pi).

    The three-branch arctan(1/sqrt(radicand)) description collapses to
    the single smooth expression pi/2 - arctan(y sqrt(P(y))), which is
    what gets evaluated (identical values, no case split).
    """
    y = np.asarray(y, dtype=float)
    out = 0.5 * np.pi - np.arctan(y * np.sqrt(p_of_t(params, y)))
    return out if out.ndim else float(out)


def theta_of_y(params: SolitonParams, y, tol: float = DEFAULT_TOL):
    """Lagrangian angle theta(y) = sum_j phi_j(y) + gamma(y).

    For tol >= 1e-10 the memoized spectral tables evaluate phi_j (they
    carry a 1e-11 budget and vectorize); tighter tolerances fall back to
    direct quadrature.
    """
    if tol >= 1e-10:
        return tables(params).theta(y)
    y = float(y)
    total = sum(phi_j(params, j, y, tol / params.n) for j in range(1, params.n))
    return total + gamma_of_y(params, y)


# -- spectral tables for the angle integrals ----------------------------

class _PiecewiseCheb:
    """Chebyshev antiderivative of an odd function's derivative on [0, Y],
    extended to all of R by oddness and by saturation beyond Y."""

    def __init__(self, deriv, breaks: np.ndarray, deg: int, limit: float):
        self.breaks = breaks
        self.limit = limit
        self.pieces = []
        offset = 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            fit = Chebyshev.interpolate(deriv, deg, domain=[lo, hi])
            anti = fit.integ(lbnd=lo) + offset
            offset = anti(hi)
            self.pieces.append(anti)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        out = np.full(ay.shape, self.limit)
        idx = np.searchsorted(self.breaks, ay, side="right") - 1
        inside = ay < self.breaks[-1]
        for k, piece in enumerate(self.pieces):
            sel = inside & (idx == k)
            if np.any(sel):
                out[sel] = piece(ay[sel])
        out = out * np.sign(y)
        return out if out.ndim else float(out)


class SolitonTables:
    """Immutable per-parameter caches: angle interpolants and limits."""

    Y = 12.0
    DEG = 72

    def __init__(self, params: SolitonParams):
        self.params = params
        breaks = np.array([0.0, 0.75, 1.5, 3.0, 6.0, self.Y])
        self.phi_bars = tuple(phi_bar(params, j, 1e-12) for j in range(1, params.n))
        self.phi = tuple(
            _PiecewiseCheb(lambda t, j=j: phi_prime(params, j, t), breaks,
                           self.DEG, self.phi_bars[j - 1])
            for j in range(1, params.n))

    def phi_sum(self, y):
        total = self.phi[0](y)
        for interp in self.phi[1:]:
            total = total + interp(y)
        return total

    def theta(self, y):
        return self.phi_sum(y) + gamma_of_y(self.params, y)


@lru_cache(maxsize=16)
def tables(params: SolitonParams) -> SolitonTables:
    return SolitonTables(params)


# -- the immersion -------------------------------------------------------

def immerse(params: SolitonParams, p: ChartPoint, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Ambient position F(p) in R^(2n).

    Coordinates are paired (Re, Im) per complex direction: the first
    n-1 pairs are x_j sqrt(1/a_j + y^2) (cos phi_j, sin phi_j), the last
    pair is ((y^2 - sum x_j^2)/2, -(sum_j phi_j + gamma)/alpha).
    """
    y = p.y
    if tol >= 1e-10:
        tab = tables(params)
        phis = [tab.phi[j - 1](y) for j in range(1, params.n)]
    else:
        phis = [phi_j(params, j, y, tol) for j in range(1, params.n)]
    coords = []
    for xj, aj, ph in zip(p.x, params.a, phis):
        r = math.sqrt(1.0 / aj + y * y)
        coords.extend([xj * r * math.cos(ph), xj * r * math.sin(ph)])
    coords.append(0.5 * (y * y - sum(v * v for v in p.x)))
    coords.append(-(sum(phis) + gamma_of_y(params, y)) / params.alpha)
    return np.array(coords)


def _lift_scalar(params: SolitonParams, y_jet: Jet2, value: float, deriv_fn) -> Jet2:
    """Jet of a function of y alone given its value and closed-form derivative.

    The second derivative is obtained by differentiating the closed form
    with a one-variable jet -- still analytic, no quadrature involved.
    """
    y0 = y_jet.value
    inner = deriv_fn(Jet2.variable(y0, 0, 1))
    return y_jet.lift(value, inner.value, float(inner.grad[0]))


def jet_immersion(params: SolitonParams, tol: float = DEFAULT_TOL):
    """The immersion as a map from chart coords to 2n second-order jets."""
    tab = tables(params) if tol >= 1e-10 else None

    def immersion(u) -> list[Jet2]:
        u = np.asarray(u, dtype=float)
        m = params.n
        if u.size != m:
            raise DomainError(f"chart point needs {m} coordinates, got {u.size}")
        xs = [Jet2.variable(u[i], i, m) for i in range(m - 1)]
        yj = Jet2.variable(u[m - 1], m - 1, m)
        y0 = float(u[m - 1])

        phi_vals = ([tab.phi[j - 1](y0) for j in range(1, m)] if tab is not None
                    else [phi_j(params, j, y0, tol) for j in range(1, m)])
        phi_jets = [
            _lift_scalar(params, yj, phi_vals[j - 1],
                         lambda t, j=j: phi_prime(params, j, t))
            for j in range(1, m)]
        gamma_jet = _lift_scalar(params, yj, gamma_of_y(params, y0),
                                 lambda t: gamma_prime(params, t))

        coords = []
        for xj, aj, ph in zip(xs, params.a, phi_jets):
            r = (1.0 / aj + yj * yj).sqrt()
            coords.append(xj * r * ph.cos())
            coords.append(xj * r * ph.sin())
        sq = yj * yj
        for xj in xs:
            sq = sq - xj * xj
        coords.append(sq * 0.5)
        angle = gamma_jet
        for ph in phi_jets:
            angle = angle + ph
        coords.append(angle * (-1.0 / params.alpha))
        return coords

    return immersion


# -- closed-form metric quantities ---------------------------------------

def _bracket(params: SolitonParams, xs, y):
    """sum_j x_j^2/(1/a_j + y^2) + 1 (the recurring metric factor)."""
    u = y * y
    total = 1.0
    for xj, aj in zip(xs, params.a):
        total = total + xj * xj / (1.0 / aj + u)
    return total


def metric_closed_form(params: SolitonParams, p: ChartPoint):
    """Closed-form (metric, det g, area density) at a chart point with y != 0.

    The area density sqrt(det g) carries |y|; y = 0 is a branch point of
    these formulas (the AD frame remains valid there).
    """
    if p.y == 0.0:
        raise BranchPoint("closed-form metric has a branch point at y = 0")
    n, y = params.n, p.y
    u = y * y
    xs = np.asarray(p.x)
    rad = radicand(params, y)
    q = rad + 1.0  # prod (1 + a_k y^2) e^(alpha y^2)

    g = np.zeros((n, n))
    diag = np.array([1.0 / aj + u for aj in params.a])
    g[:n - 1, :n - 1] = np.outer(xs, xs) + np.diag(diag)
    bracket = _bracket(params, p.x, y)
    g[n - 1, n - 1] = bracket * q * u / rad

    prod_a = math.prod(params.a)
    prod_diag = math.prod(diag)
    det_g = bracket ** 2 * prod_diag ** 2 * prod_a * math.exp(params.alpha * u) * u / rad
    area = bracket * prod_diag * math.sqrt(prod_a) * math.exp(0.5 * params.alpha * u) \
        * abs(y) / math.sqrt(rad)
    return g, det_g, area


def area_density(params: SolitonParams, xs, y):
    """Vectorized area density sqrt(det g); broadcasts over xs / y arrays.

    Uses the form with |y|/sqrt(radicand) collapsed to 1/sqrt(P), which
    is smooth through y = 0 (the branch point in the displayed closed
    form is an artifact of writing sqrt(y^2)).
    """
    u = y * y
    prod_diag = 1.0
    for aj in params.a:
        prod_diag = prod_diag * (1.0 / aj + u)
    return (_bracket(params, xs, y) * prod_diag
            * math.sqrt(math.prod(params.a)) * np.exp(0.5 * params.alpha * u)
            / np.sqrt(p_of_t(params, y)))


def mean_curvature_sq(params: SolitonParams, p):
    """|H|^2 = alpha^2 / (bracket * prod(1 + a_k y^2) e^(alpha y^2)); smooth in y."""
    if isinstance(p, ChartPoint):
        xs, y = p.x, p.y
    else:
        xs, y = p
    q = radicand(params, y) + 1.0
    return params.alpha ** 2 / (_bracket(params, xs, y) * q)


def v_of_y(params: SolitonParams, y: float, tol: float = DEFAULT_TOL) -> float:
    """Angle drop v(y) = theta(y) - theta_inf = int_y^inf alpha t / sqrt(radicand) dt."""
    if y <= 0:
        raise DomainError(f"v(y) needs y > 0, got {y}")

    def integrand(t):
        return params.alpha * t / np.sqrt(radicand(params, t))

    res = integrate_ray(integrand, y, tol)
    if not res.converged:
        raise QuadratureNoConvergence(f"v({y}) did not reach tol={tol:g}")
    return res.value


def v_bounds(params: SolitonParams, y: float) -> tuple[float, float]:
    """Two-sided bound on v(y) for y >= 1 (unit speed only)."""
    if params.alpha != 1.0:
        raise AlphaNotOne("the v(y) bounds are stated for alpha = 1")
    if y < 1.0:
        raise DomainError(f"bounds require y >= 1, got {y}")
    n = params.n
    envelope = y ** (1 - n) * math.exp(-0.5 * y * y)
    lower = envelope / (n * math.sqrt(math.prod(1.0 + ak for ak in params.a)))
    upper = envelope / math.sqrt(math.prod(params.a))
    return lower, upper


def scalars(params: SolitonParams, tol: float = DEFAULT_TOL) -> SolitonScalars:
    """Angle limits, oscillation and the threshold s0 for one soliton."""
    bars = tuple(phi_bar(params, j, tol) for j in range(1, params.n))
    if any(not 0.0 < b < 0.5 * math.pi for b in bars):
        raise NonPositive(f"angle limits out of (0, pi/2): {bars}")
    theta_inf = sum(bars)
    if not theta_inf < 0.5 * math.pi:
        raise NonPositive(f"sum of angle limits must stay below pi/2, got {theta_inf}")
    s0 = math.exp(-0.5) / (params.n * math.sqrt(math.prod(1.0 + ak for ak in params.a)))
    return SolitonScalars(phi_bar=bars, theta_inf=theta_inf,
                          theta_sup=math.pi - theta_inf,
                          oscillation=math.pi - 2.0 * theta_inf, s0=s0)


# -- vectorized frame pieces (for the flow integrands) -------------------

def position(params: SolitonParams, xs, y):
    """Vectorized immersion; xs entries and y broadcast, returns (..., 2n)."""
    tab = tables(params)
    u = y * y
    phis = [tab.phi[j - 1](y) for j in range(1, params.n)]
    comps = []
    for xj, aj, ph in zip(xs, params.a, phis):
        r = np.sqrt(1.0 / aj + u)
        comps.append(xj * r * np.cos(ph))
        comps.append(xj * r * np.sin(ph))
    sumsq = 0.0
    for xj in xs:
        sumsq = sumsq + xj * xj
    comps.append(0.5 * (u - sumsq))
    comps.append(-(sum(phis) + gamma_of_y(params, y)) / params.alpha)
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def standard_grid(params: SolitonParams, count: int | None = None,
                  x_range: tuple[float, float] = (-3.0, 3.0),
                  y_range: tuple[float, float] = (0.1, 4.0)):
    """The verification grid: x in [-3,3]^(n-1), y in [-4,-0.1] u [0.1,4].

    ``y_range`` gives (inner, outer) bounds of |y|.  Returns a list of
    ChartPoint; 20 points per axis for n = 2 and 6 for n = 3 unless
    ``count`` overrides it.
    """
    if count is None:
        count = 20 if params.n == 2 else 6
    xs = np.linspace(x_range[0], x_range[1], count)
    half = np.linspace(y_range[0], y_range[1], max(1, count // 2))
    ys = np.concatenate([-half[::-1], half])
    axes = [xs] * (params.n - 1) + [ys]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    return [ChartPoint(x=tuple(row[:-1]), y=float(row[-1])) for row in flat]
