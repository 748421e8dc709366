"""Differential geometry of an immersed chart in R^(2n) by forward AD.

A second-order jet (value, gradient, Hessian) is propagated through the
immersion; everything geometric -- induced metric, area density, mean
curvature vector, and the phase of the complex determinant of the
tangent frame -- is then assembled from the jets.  This engine is
deliberately generic: it never sees the soliton closed forms, so it can
serve as an independent check against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchJump, DegenerateMetric, LengthMismatch

__all__ = [
    "Jet2",
    "GeometryFrame",
    "apply_j0",
    "frame_at",
    "normal_projection",
    "lagrangian_defect",
    "translator_residual",
    "h_equals_j_grad_theta_residual",
]


class Jet2:
    """Truncated second-order Taylor data of a scalar in m chart variables."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @staticmethod
    def variable(value: float, index: int, m: int) -> "Jet2":
        g = np.zeros(m)
        g[index] = 1.0
        return Jet2(value, g, np.zeros((m, m)))

    @staticmethod
    def constant(value: float, m: int) -> "Jet2":
        return Jet2(value, np.zeros(m), np.zeros((m, m)))

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.grad + other.grad,
                        self.hess + other.hess)
        return Jet2(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value - other.value, self.grad - other.grad,
                        self.hess - other.hess)
        return Jet2(self.value - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            cross = np.outer(self.grad, other.grad)
            # parenthesized so the Hessian stays bitwise symmetric
            return Jet2(self.value * other.value,
                        self.grad * other.value + self.value * other.grad,
                        (self.hess * other.value + self.value * other.hess)
                        + (cross + cross.T))
        return Jet2(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def _reciprocal(self):
        inv = 1.0 / self.value
        return self.lift(inv, -inv * inv, 2.0 * inv ** 3)

    def __pow__(self, p):
        v = self.value
        return self.lift(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    # -- chain rule ---------------------------------------------------

    def lift(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Compose with an outer scalar function given f, f', f'' at self.value."""
        return Jet2(f0, f1 * self.grad,
                    f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def sqrt(self):
        r = math.sqrt(self.value)
        return self.lift(r, 0.5 / r, -0.25 / (r * self.value))

    def exp(self):
        e = math.exp(self.value)
        return self.lift(e, e, e)

    def expm1(self):
        e = math.exp(self.value)
        return self.lift(math.expm1(self.value), e, e)

    def log1p(self):
        d = 1.0 / (1.0 + self.value)
        return self.lift(math.log1p(self.value), d, -d * d)

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.lift(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self.lift(c, -s, -c)

    def __repr__(self):
        return f"Jet2({self.value!r}, grad={self.grad!r})"


@dataclass(frozen=True)
class GeometryFrame:
    """First and second order geometric data at one chart point."""

    tangent: np.ndarray        # (n, 2n) rows F_1 .. F_n
    metric: np.ndarray         # (n, n)
    metric_inv: np.ndarray     # (n, n)
    area_density: float        # sqrt(det g)
    mean_curvature: np.ndarray  # (2n,)
    cos_theta: float
    sin_theta: float


def apply_j0(v: np.ndarray) -> np.ndarray:
    """Standard complex structure: rotate each (Re, Im) pair (a, b) -> (-b, a)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2 != 0:
        raise LengthMismatch(f"need an even number of coordinates, got {v.shape[-1]}")
    pairs = v.reshape(v.shape[:-1] + (-1, 2))
    rotated = np.stack([-pairs[..., 1], pairs[..., 0]], axis=-1)
    return rotated.reshape(v.shape)


def normal_projection(tangent: np.ndarray, metric_inv: np.ndarray,
                      w: np.ndarray) -> np.ndarray:
    """Project w onto the normal space: w - g^{ij} <w, F_i> F_j."""
    coeff = metric_inv @ (tangent @ w)
    return w - tangent.T @ coeff


def frame_at(immersion, p) -> GeometryFrame:
    """Assemble the geometric frame from second-order jets of the immersion.

    ``immersion(p)`` must return the 2n ambient coordinates as Jet2 in
    the n chart variables.
    """
    jets = immersion(p)
    ambient = len(jets)
    n = ambient // 2
    if ambient != 2 * n or len(jets[0].grad) != n:
        raise LengthMismatch(
            f"immersion must map an n-chart into R^(2n); got {ambient} coords "
            f"with {len(jets[0].grad)} chart variables")

    tangent = np.array([j.grad for j in jets]).T        # (n, 2n)
    metric = tangent @ tangent.T
    det_g = float(np.linalg.det(metric))
    scale = float(np.trace(metric)) / n
    if det_g <= 1e-14 * scale ** n:
        raise DegenerateMetric(f"det g = {det_g:g} at {p!r}")
    metric_inv = np.linalg.inv(metric)

    hess = np.array([j.hess for j in jets])             # (2n, n, n)
    traced = np.einsum("ij,kij->k", metric_inv, hess)
    mean_curvature = normal_projection(tangent, metric_inv, traced)

    # phase of the complex determinant of the tangent frame; for a
    # Lagrangian frame its modulus equals the area density.  A frame
    # whose complex determinant (nearly) vanishes is far from Lagrangian
    # and carries no calibrated phase: report nan rather than fail, so
    # defect/translator diagnostics still work on such frames.
    area = math.sqrt(det_g)
    columns = tangent[:, 0::2] + 1j * tangent[:, 1::2]  # row i = tangent_i as C^n
    det_c = complex(np.linalg.det(columns.T))
    mod = abs(det_c)
    if mod > 1e-12 * area:
        cos_t, sin_t = det_c.real / mod, det_c.imag / mod
    else:
        cos_t = sin_t = math.nan

    return GeometryFrame(tangent, metric, metric_inv, area,
                         mean_curvature, cos_t, sin_t)


def lagrangian_defect(frame: GeometryFrame) -> float:
    """Largest symplectic pairing |<J0 F_i, F_j>| over tangent pairs i < j."""
    n = frame.tangent.shape[0]
    worst = 0.0
    for i in range(n):
        ji = apply_j0(frame.tangent[i])
        for j in range(i + 1, n):
            worst = max(worst, abs(float(ji @ frame.tangent[j])))
    return worst


def translator_residual(frame: GeometryFrame, t_vec: np.ndarray) -> float:
    """Norm of (normal part of t_vec) - mean curvature; zero on a translator."""
    t_vec = np.asarray(t_vec, dtype=float)
    if t_vec.shape != frame.mean_curvature.shape:
        raise LengthMismatch("translator vector has wrong ambient dimension")
    perp = normal_projection(frame.tangent, frame.metric_inv, t_vec)
    return float(np.linalg.norm(perp - frame.mean_curvature))


def _angle_between(cos_a: float, sin_a: float, cos_b: float, sin_b: float) -> float:
    """Angle of e^{i(a-b)} in (-pi, pi]; branch-free difference a - b."""
    return math.atan2(sin_a * cos_b - cos_a * sin_b, cos_a * cos_b + sin_a * sin_b)


def h_equals_j_grad_theta_residual(immersion, p, step: float = 1e-5) -> float:
    """Residual |H - J0 grad(theta)| with grad(theta) from central differences.

    The angle is differenced through (cos, sin) pairs, so no global
    branch choice is needed; a jump larger than pi/2 across the stencil
    raises BranchJump (the step is too large for the local angle scale).
    """
    p = np.asarray(p, dtype=float)
    center = frame_at(immersion, p)
    n = p.size
    dtheta_chart = np.zeros(n)
    for i in range(n):
        shift = np.zeros(n)
        shift[i] = step
        plus = frame_at(immersion, p + shift)
        minus = frame_at(immersion, p - shift)
        d_plus = _angle_between(plus.cos_theta, plus.sin_theta,
                                center.cos_theta, center.sin_theta)
        d_minus = _angle_between(minus.cos_theta, minus.sin_theta,
                                 center.cos_theta, center.sin_theta)
        if max(abs(d_plus), abs(d_minus)) > math.pi / 2:
            raise BranchJump(f"angle moved more than pi/2 over step {step:g}")
        dtheta_chart[i] = (d_plus - d_minus) / (2.0 * step)

    grad_theta = center.tangent.T @ (center.metric_inv @ dtheta_chart)
    return float(np.linalg.norm(center.mean_curvature - apply_j0(grad_theta)))
