"""Gaussian-density functionals on translated flows and the divergence sweep.

Contents: the backward Gaussian kernel, the weighted density functional
Phi_f on an exactly translated surface, a two-sided check of its time
derivative against the monotonicity identity, the log-log test family
f_delta(v) = log(A - log(v + delta)) with its curvature certificate, the
Bessel-weighted necessary-condition integral obtained by integrating the
translated kernel in time, and the delta-sweep that exhibits its
divergence as delta -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

from . import soliton
from .errors import DomainError, NonPositive, TimeOrder
from .quadrature import QuadResult, TruncationPolicy, integrate_chart, integrate_ray
from .specfun import bessel_k, scaled_bessel_k

__all__ = [
    "KernelArgs",
    "FDeltaParams",
    "NecessaryConditionSpec",
    "SolitonSurface",
    "PlaneSurface",
    "as_surface",
    "backward_kernel",
    "phi_f",
    "monotonicity_residual",
    "monotonicity_check",
    "MonotonicityCheck",
    "f_delta",
    "f_delta_second",
    "epsilon_for_f",
    "epsilon_for_family",
    "necessary_lhs",
    "delta_sweep",
    "SweepRow",
    "sweep_verdict",
    "heat_kernel_bessel_identity",
]


@dataclass(frozen=True)
class KernelArgs:
    """Center, terminal time and evaluation time of the backward kernel."""

    x0: np.ndarray
    t0: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.ndim != 1 or self.x0.size % 2 != 0:
            raise DomainError("kernel center must be a vector in R^(2n)")
        if not self.t < self.t0:
            raise TimeOrder(f"need t < t0, got t={self.t}, t0={self.t0}")


def backward_kernel(k: KernelArgs, x: np.ndarray) -> np.ndarray | float:
    """Gaussian density (4 pi (t0-t))^(-n/2) exp(-|x-x0|^2 / (4(t0-t))).

    n is the *submanifold* dimension, half the ambient one; the kernel
    then integrates to 1 over any n-plane through the center.
    """
    if not k.t < k.t0:
        raise TimeOrder(f"need t < t0, got t={k.t}, t0={k.t0}")
    n = k.x0.size // 2
    gap = k.t0 - k.t
    x = np.asarray(x, dtype=float)
    d2 = np.sum((x - k.x0) ** 2, axis=-1)
    out = (4.0 * math.pi * gap) ** (-0.5 * n) * np.exp(-d2 / (4.0 * gap))
    return out if np.ndim(out) else float(out)


# -- surfaces over the standard chart ------------------------------------

class SolitonSurface:
    """Vectorized closed-form geometry of one soliton, chart-parametrized."""

    def __init__(self, params: soliton.SolitonParams):
        self.params = params
        self.n = params.n
        self.translator = params.translator
        self.tab = soliton.tables(params)
        self.theta_inf = float(sum(self.tab.phi_bars))

    def default_policy(self, tail_bound: float = 0.0) -> TruncationPolicy:
        # All surface quantities are evaluated in their smooth-through-y=0
        # forms, so no sliver needs excluding.
        return TruncationPolicy(x_radius=10.0, y_radius=10.0, y_inner_cut=0.0,
                                tail_bound=tail_bound)

    def position(self, xs, y):
        return soliton.position(self.params, xs, y)

    def theta(self, y):
        return self.tab.theta(y)

    def density(self, xs, y):
        return soliton.area_density(self.params, xs, y)

    def h_sq(self, xs, y):
        return soliton.mean_curvature_sq(self.params, (xs, y))

    def _frame_arrays(self, xs, y):
        """Stacked tangent rows (..., n, 2n) plus metric helpers."""
        p = self.params
        n = p.n
        u = y * y
        inv_sqrt_p = 1.0 / np.sqrt(soliton.p_of_t(p, y))
        shape = np.broadcast(*xs, y).shape
        tang = np.zeros(shape + (n, 2 * n))
        diag = np.empty(shape + (n - 1,))
        for j, (xj, aj) in enumerate(zip(xs, p.a)):
            dj = 1.0 / aj + u
            r = np.sqrt(dj)
            ph = self.tab.phi[j](y)
            cph, sph = np.cos(ph), np.sin(ph)
            tang[..., j, 2 * j] = r * cph
            tang[..., j, 2 * j + 1] = r * sph
            tang[..., j, 2 * n - 2] = -np.asarray(xj, dtype=float)
            tang[..., n - 1, 2 * j] = xj * (y * cph - sph * inv_sqrt_p) / r
            tang[..., n - 1, 2 * j + 1] = xj * (y * sph + cph * inv_sqrt_p) / r
            diag[..., j] = dj
        tang[..., n - 1, 2 * n - 2] = y
        tang[..., n - 1, 2 * n - 1] = inv_sqrt_p
        bracket = soliton._bracket(p, xs, y)
        g_yy = bracket * (soliton.radicand(p, y) + 1.0) * inv_sqrt_p ** 2
        return tang, diag, np.broadcast_to(np.asarray(g_yy), shape), inv_sqrt_p

    def h_vector(self, xs, y):
        """Mean curvature vector: (theta'/g_yy) J0 F_y, vectorized."""
        p = self.params
        tang, _, g_yy, inv_sqrt_p = self._frame_arrays(xs, y)
        f_y = tang[..., self.n - 1, :]
        j0_fy = np.empty_like(f_y)
        j0_fy[..., 0::2] = -f_y[..., 1::2]
        j0_fy[..., 1::2] = f_y[..., 0::2]
        coef = -p.alpha * inv_sqrt_p / g_yy
        return coef[..., None] * j0_fy if np.ndim(coef) else coef * j0_fy

    def project_normal(self, xs, y, w):
        """w minus its tangential part, via the block metric inverse."""
        tang, diag, g_yy, _ = self._frame_arrays(xs, y)
        c = np.einsum("...ij,...j->...i", tang, w)
        cx, cy = c[..., :-1], c[..., -1]
        x_arr = np.stack(np.broadcast_arrays(
            *[np.asarray(v, dtype=float) + 0.0 * np.asarray(y, dtype=float)
              for v in xs]), axis=-1)
        # (D + x x^T)^(-1) c by Sherman-Morrison
        cd = cx / diag
        xd = x_arr / diag
        lam_x = cd - xd * (np.sum(x_arr * cd, axis=-1)
                           / (1.0 + np.sum(x_arr * xd, axis=-1)))[..., None]
        lam_y = cy / g_yy
        lam = np.concatenate([lam_x, lam_y[..., None]], axis=-1)
        return w - np.einsum("...i,...ij->...j", lam, tang)


class PlaneSurface:
    """Flat Lagrangian n-plane spanned by the real axes through a point."""

    def __init__(self, n: int, origin=None, theta_value: float = 0.0,
                 translator=None):
        self.n = n
        self.origin = (np.zeros(2 * n) if origin is None
                       else np.asarray(origin, dtype=float))
        self.theta_value = theta_value
        self.translator = (np.zeros(2 * n) if translator is None
                           else np.asarray(translator, dtype=float))
        if np.any(self.translator[1::2] != 0.0):
            raise DomainError("plane translator must be tangent (real axes)")

    def default_policy(self, tail_bound: float = 0.0) -> TruncationPolicy:
        return TruncationPolicy(x_radius=10.0, y_radius=10.0, y_inner_cut=0.0,
                                tail_bound=tail_bound)

    def position(self, xs, y):
        comps = list(xs) + [y]
        shape = np.broadcast(*comps).shape
        out = np.zeros(shape + (2 * self.n,)) + self.origin
        for i, c in enumerate(comps):
            out[..., 2 * i] = out[..., 2 * i] + c
        return out

    def theta(self, y):
        return self.theta_value + 0.0 * np.asarray(y, dtype=float)

    def density(self, xs, y):
        return np.ones(np.broadcast(*xs, y).shape)

    def h_sq(self, xs, y):
        return np.zeros(np.broadcast(*xs, y).shape)

    def h_vector(self, xs, y):
        return np.zeros(np.broadcast(*xs, y).shape + (2 * self.n,))

    def project_normal(self, xs, y, w):
        out = np.array(np.broadcast_to(w, np.broadcast(*xs, y).shape + (2 * self.n,)))
        out[..., 0::2] = 0.0
        return out


def as_surface(obj) -> SolitonSurface | PlaneSurface:
    if isinstance(obj, soliton.SolitonParams):
        return SolitonSurface(obj)
    return obj


# -- weighted Gaussian density functional ---------------------------------

def phi_f(surface, f, k: KernelArgs, tol: float = 1e-9,
          policy: TruncationPolicy | None = None) -> QuadResult:
    """Phi_f = int f(theta) rho(F + t T) d(mu) over the translated surface."""
    srf = as_surface(surface)
    if policy is None:
        policy = srf.default_policy()
    shift = k.t * srf.translator

    def integrand(xs, y):
        pos = srf.position(xs, y) + shift
        return f(srf.theta(y)) * backward_kernel(k, pos) * srf.density(xs, y)

    return integrate_chart(integrand, srf.n, policy, tol)


@dataclass(frozen=True)
class MonotonicityCheck:
    """Both sides of the monotonicity identity and their difference."""

    ddt_phi: float
    rhs: float
    residual: float
    error_budget: float


def monotonicity_check(surface, f, f_second, k: KernelArgs,
                       dt: float | None = None, tol: float = 1e-9,
                       rhs_tol: float = 1e-6,
                       policy: TruncationPolicy | None = None) -> MonotonicityCheck:
    """Compare d/dt Phi_f with its closed-form value on a translated flow.

    The derivative is a central difference of Phi_f; the right-hand side
    is -int f rho |H + (X-X0)^perp / (2(t0-t))|^2 - int f'' |H|^2 rho.
    """
    srf = as_surface(surface)
    if policy is None:
        policy = srf.default_policy()
    gap = k.t0 - k.t
    if dt is None:
        dt = 1e-4 * gap
    if not (dt > 0 and k.t + dt < k.t0):
        raise TimeOrder("need 0 < dt with t + dt < t0")

    up = phi_f(srf, f, KernelArgs(k.x0, k.t0, k.t + dt), tol, policy)
    dn = phi_f(srf, f, KernelArgs(k.x0, k.t0, k.t - dt), tol, policy)
    ddt = (up.value - dn.value) / (2.0 * dt)

    shift = k.t * srf.translator

    def drive_term(xs, y):
        pos = srf.position(xs, y) + shift
        rel = pos - k.x0
        perp = srf.project_normal(xs, y, rel)
        drive = srf.h_vector(xs, y) + perp / (2.0 * gap)
        mag = np.sum(drive * drive, axis=-1)
        return f(srf.theta(y)) * backward_kernel(k, pos) * mag * srf.density(xs, y)

    def curvature_term(xs, y):
        pos = srf.position(xs, y) + shift
        return (f_second(srf.theta(y)) * srf.h_sq(xs, y)
                * backward_kernel(k, pos) * srf.density(xs, y))

    drive = integrate_chart(drive_term, srf.n, policy, rhs_tol)
    curv = integrate_chart(curvature_term, srf.n, policy, rhs_tol)
    rhs = -drive.value - curv.value
    residual = abs(ddt - rhs)
    budget = ((up.error_estimate + dn.error_estimate) / (2.0 * dt)
              + drive.error_estimate + curv.error_estimate)
    return MonotonicityCheck(ddt, rhs, residual, budget)


def monotonicity_residual(surface, f, f_second, k: KernelArgs,
                          dt: float | None = None, tol: float = 1e-9,
                          rhs_tol: float = 1e-6) -> float:
    return monotonicity_check(surface, f, f_second, k, dt, tol, rhs_tol).residual


# -- the log-log test family ----------------------------------------------

@dataclass(frozen=True)
class FDeltaParams:
    """Parameters of f(v) = log(A - log(v + delta)) on v in [0, D]."""

    delta: float
    cap_a: float
    oscillation: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"need 0 < delta <= 1, got {self.delta}")
        if self.oscillation <= 0:
            raise DomainError("oscillation must be positive")
        # cap_a = log(D+1) + 2 keeps A - log(v + delta) >= 2 - log((D+1+delta)/(D+1)) > 1
        if self.cap_a - math.log(self.oscillation + self.delta) <= 0:
            raise DomainError("cap too small: A - log(v + delta) must stay positive")

    @classmethod
    def for_oscillation(cls, oscillation: float, delta: float) -> "FDeltaParams":
        return cls(delta=delta, cap_a=math.log(oscillation + 1.0) + 2.0,
                   oscillation=oscillation)


def f_delta(v, p: FDeltaParams):
    """log(A - log(v + delta)); positive on [0, D] by the choice of A."""
    arg = np.asarray(v, dtype=float) + p.delta
    if np.any(np.log(arg) >= p.cap_a):
        raise DomainError("v + delta >= e^A: outside the family's domain")
    out = np.log(p.cap_a - np.log(arg))
    return out if out.ndim else float(out)


def f_delta_second(v, p: FDeltaParams):
    """Second derivative: (1/[A - log(v+d)] - 1/[A - log(v+d)]^2) / (v+d)^2."""
    arg = np.asarray(v, dtype=float) + p.delta
    bracket = p.cap_a - np.log(arg)
    if np.any(bracket <= 0):
        raise DomainError("v + delta >= e^A: outside the family's domain")
    out = (1.0 / bracket - 1.0 / bracket ** 2) / arg ** 2
    return out if out.ndim else float(out)


def epsilon_for_family(f, f_second, oscillation: float, grid: int = 256) -> float:
    """sqrt(min f''/f) over [0, D] for an arbitrary test family.

    Returns 0.0 exactly for a degenerate (e.g. constant) family with
    f'' == 0; negative minima clamp to 0 as well.
    """
    if grid < 10:
        raise ValueError("grid must be >= 10")
    vs = np.linspace(0.0, oscillation, grid)
    ratio = np.asarray(f_second(vs), dtype=float) / np.asarray(f(vs), dtype=float)
    return math.sqrt(max(float(np.min(ratio)), 0.0))


def epsilon_for_f(p: FDeltaParams, grid: int = 256) -> float:
    """Curvature certificate epsilon = sqrt(min f''/f) for the log-log family.

    Must come out strictly positive; a nonpositive minimum would falsify
    the divergence mechanism and raises NonPositive loudly.
    """
    if grid < 10:
        raise ValueError("grid must be >= 10")
    vs = np.linspace(0.0, p.oscillation, grid)
    ratio = f_delta_second(vs, p) / f_delta(vs, p)
    low = float(np.min(ratio))
    if low <= 0.0:
        raise NonPositive(
            f"curvature certificate failed: min f''/f = {low:g} <= 0 "
            f"(this would falsify the divergence mechanism)")
    return math.sqrt(low)


# -- the Bessel-weighted necessary-condition integral ----------------------

@dataclass(frozen=True)
class NecessaryConditionSpec:
    """What to integrate: soliton, kernel offset, translator, f'' mode."""

    params: soliton.SolitonParams
    offset_a: np.ndarray | None = None
    t_vec: np.ndarray | None = None
    use_epsilon_term: bool = False
    epsilon: float | None = None
    null_family: bool = False

    def __post_init__(self):
        a = (np.zeros(2 * self.params.n) if self.offset_a is None
             else np.asarray(self.offset_a, dtype=float))
        t = (self.params.translator if self.t_vec is None
             else np.asarray(self.t_vec, dtype=float))
        object.__setattr__(self, "offset_a", a)
        object.__setattr__(self, "t_vec", t)
        if a.size != 2 * self.params.n or t.size != 2 * self.params.n:
            raise DomainError("offset and translator must live in R^(2n)")
        if self.epsilon is not None and self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")


@lru_cache(maxsize=32)
def _log_scaled_k_cheb(nu: float, s_lo: float, s_hi: float, deg: int = 96) -> Chebyshev:
    """Chebyshev fit of s -> log(sqrt(z) e^z K_nu(z)), z = e^s.

    Built from the quadrature evaluator once per (order, range); keeps
    the chart integration from re-integrating the Bessel function at
    every node.
    """

    def target(s):
        return np.array([math.log(scaled_bessel_k(nu, math.exp(float(v)), 1e-13))
                         for v in np.atleast_1d(s)])

    return Chebyshev.interpolate(target, deg, domain=[s_lo, s_hi])


def _lhs_tail_bound(spec: NecessaryConditionSpec, p: FDeltaParams | None,
                    policy: TruncationPolicy, srf: SolitonSurface,
                    c_k: float, z_lo: float) -> float:
    """Bound the integrand mass the truncation box (and y-sliver) discards.

    Pointwise the integrand is f''(v(y)) |H|^2 density e^(<X-a,T>/2)
    K(z) q^(-nu).  Since K(z) <= c_k z^(-1/2) e^(-z) on [z_lo, inf) and
    z >= |T|(sum x^2 + y^2)/4 - O(|a|), the kernel factors are at most
    front * e^(-alpha sum_j x_j^2 / 2), leaving the explicit y-profile

        w(y) = f''(v(y)) alpha^2 |y| e^(-alpha y^2/2) / sqrt(prod_a * R(y)).

    w is maximized on a dense grid over the box (that is where the mass
    actually lives); the x-tail, the y-tail (where f'' has saturated at
    its 1/delta^2 plateau but w has collapsed) and the sliver are then
    one-dimensional Gaussian estimates.  Generous constant factors are
    absorbed into the front factor.
    """
    if spec.null_family or p is None:
        return 0.0
    prm = spec.params
    alpha, yr, xr = prm.alpha, policy.y_radius, policy.x_radius
    t_norm = float(np.linalg.norm(spec.t_vec))
    nu = 0.5 * prm.n - 1.0
    q_lo_nu = max(srf.theta_inf - float(np.linalg.norm(spec.offset_a)), 1e-6) ** (-nu)
    prod_a = math.prod(prm.a)
    offset_slack = math.exp(0.5 * (abs(float(spec.offset_a @ spec.t_vec))
                                   + t_norm * float(np.linalg.norm(spec.offset_a))))

    def profile(y):
        v = np.maximum(srf.theta(y) - srf.theta_inf, 0.0)
        rad = soliton.radicand(prm, y)
        return (f_delta_second(v, p) * alpha ** 2 * np.abs(y)
                * np.exp(-0.5 * alpha * y * y) / math.sqrt(prod_a) / np.sqrt(rad))

    ys = np.linspace(max(policy.y_inner_cut, 1e-3), yr, 600)
    m_y = float(np.max(profile(ys)))
    front = 4.0 * c_k / math.sqrt(z_lo) * q_lo_nu * offset_slack
    gauss_full = math.sqrt(2.0 * math.pi / alpha)
    gauss_tail = math.sqrt(0.5 * math.pi / alpha) * math.erfc(xr * math.sqrt(0.5 * alpha))
    d = prm.n - 1
    x_tail = (m_y * front * 2.0 * yr * d * 2.0 * gauss_tail
              * gauss_full ** max(d - 1, 0))

    a_min = p.cap_a - math.log(p.oscillation + p.delta)
    fpp_plateau = 1.0 / (a_min * p.delta ** 2)
    y_tail = (fpp_plateau * front * gauss_full ** d * alpha
              * math.exp(-alpha * yr * yr) / (prod_a * yr ** (prm.n - 1)))

    sliver = 0.0
    if policy.y_inner_cut > 0:
        near = np.linspace(policy.y_inner_cut * 1e-3 + 1e-12, policy.y_inner_cut, 16)
        sliver = (2.0 * policy.y_inner_cut * float(np.max(profile(near)))
                  * front * gauss_full ** d)

    return x_tail + y_tail + sliver


def necessary_lhs(spec: NecessaryConditionSpec, p: FDeltaParams | None,
                  tol: float = 1e-7,
                  policy: TruncationPolicy | None = None) -> QuadResult:
    """The weighted curvature integral of the necessary condition.

    Integrates (f'' - eps^2 f) |H|^2 |X-a|^(1-n/2) e^(<X-a,T>/2)
    K_(n/2-1)(|T||X-a|/2) over the soliton; with ``use_epsilon_term``
    unset only f'' enters.  ``null_family`` swaps in f == 1 (zero
    integrand, a sanity mode).
    """
    srf = SolitonSurface(spec.params)
    box = policy if policy is not None else srf.default_policy()
    nu = 0.5 * spec.params.n - 1.0
    t_norm = float(np.linalg.norm(spec.t_vec))
    if t_norm <= 0:
        raise DomainError("translator must be nonzero")
    theta_inf = srf.theta_inf

    if spec.null_family:
        zero = lambda xs, y: np.zeros(np.broadcast(*xs, y).shape)
        return integrate_chart(zero, srf.n, box, tol)
    if p is None:
        raise DomainError("necessary_lhs needs FDeltaParams unless null_family is set")

    eps = spec.epsilon
    if spec.use_epsilon_term and eps is None:
        eps = epsilon_for_f(p)

    # Bessel argument range over the truncation box, with slack
    off = float(np.linalg.norm(spec.offset_a))
    x_max_sq = ((spec.params.n - 1) * box.x_radius ** 2 + box.y_radius ** 2)
    q_hi = math.sqrt((0.5 * x_max_sq) ** 2
                     + sum(box.x_radius ** 2 / ak for ak in spec.params.a)
                     + math.pi ** 2) + off
    q_lo = max(theta_inf - off, 0.0)
    z_lo = max(0.40 * t_norm * max(q_lo, 1e-6), 1e-8)
    z_hi = 1.05 * 0.5 * t_norm * q_hi
    cheb = _log_scaled_k_cheb(nu, math.log(z_lo), math.log(z_hi))
    z_guard = z_lo * 0.999

    if policy is None:
        c_k = float(np.max(np.exp(cheb(np.linspace(math.log(z_lo),
                                                   math.log(z_hi), 257)))))
        c_k = 1.001 * max(c_k, math.sqrt(0.5 * math.pi))
        policy = srf.default_policy(
            tail_bound=_lhs_tail_bound(spec, p, box, srf, c_k, z_lo))
    else:
        policy = box

    def integrand(xs, y):
        v = max(float(srf.theta(y)) - theta_inf, 0.0)
        factor = f_delta_second(v, p)
        if spec.use_epsilon_term:
            factor -= eps * eps * f_delta(v, p)
        pos = srf.position(xs, y) - spec.offset_a
        q = np.sqrt(np.sum(pos * pos, axis=-1))
        z = 0.5 * t_norm * q
        if np.any(z < z_guard):
            raise DomainError(
                f"Bessel argument below guard: {float(np.min(z)):g} < {z_guard:g}")
        log_z = np.log(z)
        # e^(<X-a,T>/2) * K_nu(z) * q^(-nu), assembled in log space
        expo = (0.5 * np.einsum("...i,i->...", pos, spec.t_vec)
                + cheb(log_z) - 0.5 * log_z - z - nu * np.log(q))
        return (factor * srf.h_sq(xs, y) * srf.density(xs, y) * np.exp(expo))

    return integrate_chart(integrand, srf.n, policy, tol)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    lhs: float
    lhs_error: float
    log_log_weight: float
    ratio: float


def delta_sweep(spec: NecessaryConditionSpec, deltas, tol: float = 1e-7,
                policy: TruncationPolicy | None = None) -> list[SweepRow]:
    """Evaluate the necessary-condition integral along a decreasing delta list.

    Each row records the weight log(A - log delta) and the ratio
    LHS / weight; as delta -> 0 the ratio should stabilize at a positive
    constant, which is the divergence mechanism in action.
    """
    deltas = [float(d) for d in deltas]
    if any(not 0.0 < d < 1.0 for d in deltas):
        raise DomainError("deltas must lie in (0, 1)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])) and len(deltas) > 1:
        raise DomainError("deltas must be strictly decreasing")
    osc = soliton.scalars(spec.params).oscillation
    rows = []
    for d in deltas:
        p = FDeltaParams.for_oscillation(osc, d)
        if spec.null_family:
            res = necessary_lhs(spec, None, tol, policy)
        else:
            res = necessary_lhs(spec, p, tol, policy)
        weight = math.log(p.cap_a - math.log(d))
        rows.append(SweepRow(delta=d, lhs=res.value, lhs_error=res.error_estimate,
                             log_log_weight=weight, ratio=res.value / weight))
    return rows


def sweep_verdict(rows: list[SweepRow]) -> str | None:
    """DIVERGENT / NULL / NOT_DIVERGENT, or None for a single-row table."""
    if len(rows) < 2:
        return None
    if all(r.lhs == 0.0 for r in rows):
        return "NULL"
    increasing = all(b.lhs > a.lhs for a, b in zip(rows, rows[1:]))
    tail = rows[-3:] if len(rows) >= 3 else rows
    positive = all(r.ratio > 0 for r in tail)
    spread_ok = all(
        abs(x.ratio - y.ratio) <= 0.15 * min(abs(x.ratio), abs(y.ratio))
        for i, x in enumerate(tail) for y in tail[i + 1:])
    return "DIVERGENT" if (increasing and positive and spread_ok) else "NOT_DIVERGENT"


def heat_kernel_bessel_identity(q: float, m: float, n: int,
                                tol: float = 1e-10) -> float:
    """Residual of the time-integral-to-Bessel collapse.

    |int_0^inf tau^(-n/2) exp(-q^2/(4 tau) - m^2 tau / 4) d tau
     - 2 (m/q)^(n/2-1) K_(n/2-1)(m q / 2)|
    """
    if q <= 0 or m <= 0:
        raise DomainError("need q, m > 0")
    half_n = 0.5 * n

    def integrand(tau):
        tau = np.asarray(tau, dtype=float)
        with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
            expo = -q * q / (4.0 * tau) - 0.25 * m * m * tau - half_n * np.log(tau)
            vals = np.exp(expo)
        return np.where(tau > 0.0, vals, 0.0)

    lhs = integrate_ray(integrand, 0.0, tol)
    nu = half_n - 1.0
    rhs = 2.0 * (m / q) ** nu * bessel_k(nu, 0.5 * m * q, tol)
    return abs(lhs.value - rhs)
