import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonlab import soliton
from solitonlab.errors import (BranchJump, DegenerateMetric, LengthMismatch)
from solitonlab.geometry import (Jet2, apply_j0, frame_at,
                                 h_equals_j_grad_theta_residual,
                                 lagrangian_defect, normal_projection,
                                 translator_residual)

# Frozen (Simpson-Richardson / high-precision quadrature of the angle
# integrand): phi_1(1) for (n=2, a=1, alpha=1).
PHI1_AT_1 = 0.5023147166769941


def flat_plane(m: int):
    """(u_1..u_m) -> (u_1, 0, u_2, 0, ...): a Lagrangian m-plane."""

    def immersion(u):
        u = np.asarray(u, dtype=float)
        jets = []
        for k in range(m):
            jets.append(Jet2.variable(u[k], k, m))
            jets.append(Jet2.constant(0.0, m))
        return jets

    return immersion


def graph_plane(m: int):
    """(u_1, u_2) -> (u_1, u_2, 0, 0): NOT Lagrangian for the pairing."""

    def immersion(u):
        u = np.asarray(u, dtype=float)
        return [Jet2.variable(u[0], 0, m), Jet2.variable(u[1], 1, m),
                Jet2.constant(0.0, m), Jet2.constant(0.0, m)]

    return immersion


# -- second-order jets ---------------------------------------------------

def test_jet_arithmetic_matches_finite_differences():
    def f(x, y):
        return np.sin(x * y) * np.exp(x) / (1.0 + y * y) + (x - y) ** 3

    x0, y0 = 0.7, -0.4
    jx = Jet2.variable(x0, 0, 2)
    jy = Jet2.variable(y0, 1, 2)
    jet = (jx * jy).sin() * jx.exp() / (1.0 + jy * jy) + (jx - jy) ** 3

    h = 1e-5
    fd_x = (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h)
    fd_y = (f(x0, y0 + h) - f(x0, y0 - h)) / (2 * h)
    fd_xx = (f(x0 + h, y0) - 2 * f(x0, y0) + f(x0 - h, y0)) / h ** 2
    fd_xy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h)
             - f(x0 - h, y0 + h) + f(x0 - h, y0 - h)) / (4 * h * h)

    assert abs(jet.value - f(x0, y0)) <= 1e-14
    assert abs(jet.grad[0] - fd_x) <= 1e-9
    assert abs(jet.grad[1] - fd_y) <= 1e-9
    assert abs(jet.hess[0, 0] - fd_xx) <= 1e-5
    assert abs(jet.hess[0, 1] - fd_xy) <= 1e-5


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 2))
@settings(max_examples=25, deadline=None)
def test_jet_hessian_symmetric(a, b, c):
    jx = Jet2.variable(a, 0, 2)
    jy = Jet2.variable(b, 1, 2)
    jet = (jx * jy + c).exp() * (jx + jy * jy).sin() + jx / (jy * jy + c)
    assert np.array_equal(jet.hess, jet.hess.T)


def test_jet_scalar_function_helpers():
    j = Jet2.variable(0.3, 0, 1)
    assert abs((j.log1p()).value - math.log1p(0.3)) < 1e-15
    assert abs((j.expm1()).value - math.expm1(0.3)) < 1e-15
    assert abs((j.sqrt() * j.sqrt()).value - 0.3) < 1e-15


# -- the complex structure -----------------------------------------------

def test_j0_on_basis_vector():
    assert np.allclose(apply_j0(np.array([1.0, 0.0, 0.0, 0.0])),
                       [0.0, 1.0, 0.0, 0.0])


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
@settings(max_examples=30, deadline=None)
def test_j0_squares_to_minus_identity(coords):
    v = np.array(coords)
    assert np.allclose(apply_j0(apply_j0(v)), -v)


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6),
       st.lists(st.floats(-5, 5), min_size=6, max_size=6))
@settings(max_examples=30, deadline=None)
def test_j0_is_an_isometry(u, v):
    u, v = np.array(u), np.array(v)
    assert abs(apply_j0(u) @ apply_j0(v) - u @ v) <= 1e-9


def test_j0_rejects_odd_length():
    with pytest.raises(LengthMismatch):
        apply_j0(np.zeros(5))


# -- frames ----------------------------------------------------------------

def test_flat_plane_frame():
    fr = frame_at(flat_plane(3), np.array([0.3, -1.2, 2.0]))
    assert np.allclose(fr.metric, np.eye(3), atol=1e-14)
    assert np.allclose(fr.mean_curvature, 0.0, atol=1e-14)
    assert abs(fr.cos_theta - 1.0) <= 1e-14
    assert abs(fr.sin_theta) <= 1e-14
    assert lagrangian_defect(fr) <= 1e-14


def test_soliton_metric_closed_form(params2):
    fr = frame_at(soliton.jet_immersion(params2), np.array([0.7, 1.3]))
    x, y = 0.7, 1.3
    assert abs(fr.metric[0, 0] - (1.0 + x * x + y * y)) <= 1e-10
    assert abs(fr.metric[0, 1]) <= 1e-12
    g, det_g, area = soliton.metric_closed_form(params2,
                                            soliton.ChartPoint(x=(x,), y=y))
    assert np.max(np.abs(fr.metric - g)) <= 1e-10
    assert abs(fr.area_density - area) <= 1e-10 * area


def test_soliton_mean_curvature_value(params2):
    fr = frame_at(soliton.jet_immersion(params2), np.array([0.0, 1.0]))
    h_sq = float(fr.mean_curvature @ fr.mean_curvature)
    assert abs(h_sq - 1.0 / (2.0 * math.e)) <= 1e-8
    # H is orthogonal to every tangent vector
    assert np.max(np.abs(fr.tangent @ fr.mean_curvature)) <= 1e-10


def test_frame_angle_normalized(params2, rng):
    imm = soliton.jet_immersion(params2)
    for _ in range(10):
        p = rng.uniform(-2, 2, size=2)
        fr = frame_at(imm, p)
        assert abs(fr.cos_theta ** 2 + fr.sin_theta ** 2 - 1.0) <= 1e-12
        assert np.max(np.abs(fr.metric @ fr.metric_inv - np.eye(2))) <= 1e-12


def test_lagrangian_defect_flags_non_lagrangian():
    fr = frame_at(graph_plane(2), np.array([0.4, 0.9]))
    assert abs(lagrangian_defect(fr) - 1.0) <= 1e-14


def test_soliton_defect_small(params2):
    fr = frame_at(soliton.jet_immersion(params2), np.array([0.7, 1.3]))
    assert lagrangian_defect(fr) <= 1e-10


def test_translator_on_plane():
    fr = frame_at(flat_plane(2), np.array([1.0, -2.0]))
    # a vector inside the plane has no normal part; H = 0
    assert translator_residual(fr, np.array([3.0, 0.0, -1.0, 0.0])) <= 1e-14


def test_translator_identity_on_grid(params2):
    imm = soliton.jet_immersion(params2)
    t_vec = params2.translator
    worst = 0.0
    for p in soliton.standard_grid(params2, count=8):
        fr = frame_at(imm, p.as_array())
        worst = max(worst, translator_residual(fr, t_vec))
    assert worst <= 1e-6


def test_wrong_translator_detected(params2):
    fr = frame_at(soliton.jet_immersion(params2), np.array([0.0, 1.0]))
    assert translator_residual(fr, np.array([1.0, 0.0, 0.0, 0.0])) >= 0.1


def test_h_equals_j_grad_theta_plane():
    res = h_equals_j_grad_theta_residual(flat_plane(2), np.array([0.2, 0.4]))
    assert res <= 1e-12


@pytest.mark.parametrize("point", [(0.0, 1.0), (0.5, -1.2)])
def test_h_equals_j_grad_theta_soliton(params2, point):
    res = h_equals_j_grad_theta_residual(soliton.jet_immersion(params2),
                                         np.array(point), 1e-5)
    assert res <= 1e-5


def test_h_equals_j_grad_theta_matches_analytic_gradient(params2):
    # |grad theta|^2 equals the closed-form |H|^2 on the soliton
    p = np.array([0.0, 1.0])
    fr = frame_at(soliton.jet_immersion(params2), p)
    h_sq = float(fr.mean_curvature @ fr.mean_curvature)
    assert abs(h_sq - soliton.mean_curvature_sq(
        params2, soliton.ChartPoint(x=(0.0,), y=1.0))) <= 1e-8


def test_normal_part_of_translator_equals_h(params2, params3):
    # |T_perp|^2 agrees with the closed-form |H|^2, pointwise
    for params in (params2, params3):
        imm = soliton.jet_immersion(params)
        t_vec = params.translator
        for p in soliton.standard_grid(params, count=3):
            fr = frame_at(imm, p.as_array())
            perp = normal_projection(fr.tangent, fr.metric_inv, t_vec)
            assert float(perp @ perp) == pytest.approx(
                soliton.mean_curvature_sq(params, p), rel=1e-8)


def test_branch_jump_detected(params2):
    with pytest.raises(BranchJump):
        h_equals_j_grad_theta_residual(soliton.jet_immersion(params2),
                                       np.array([0.0, -1.5]), 3.0)


def test_degenerate_metric_detected():
    def collapsed(u):
        u = np.asarray(u, dtype=float)
        s = Jet2.variable(u[0], 0, 2) + Jet2.variable(u[1], 1, 2)
        z = Jet2.constant(0.0, 2)
        return [s, z, s, z]

    with pytest.raises(DegenerateMetric):
        frame_at(collapsed, np.array([0.5, 0.5]))


def test_normal_projection_annihilates_tangents(params2, rng):
    fr = frame_at(soliton.jet_immersion(params2), np.array([0.8, -0.6]))
    for _ in range(5):
        w = rng.normal(size=4)
        perp = normal_projection(fr.tangent, fr.metric_inv, w)
        assert np.max(np.abs(fr.tangent @ perp)) <= 1e-12


def test_jet_immersion_tangent_display(params2):
    # first tangent vector at (x=0, y=1): (sqrt(2) cos phi_1(1), sqrt(2) sin phi_1(1), 0, 0)
    jets = soliton.jet_immersion(params2)(np.array([0.0, 1.0]))
    t1 = np.array([j.grad[0] for j in jets])
    r = math.sqrt(2.0)
    expect = np.array([r * math.cos(PHI1_AT_1), r * math.sin(PHI1_AT_1), 0.0, 0.0])
    assert np.max(np.abs(t1 - expect)) <= 1e-9
