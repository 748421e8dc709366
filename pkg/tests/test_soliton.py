import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonlab import geometry, soliton
from solitonlab.errors import (AlphaNotOne, BranchPoint, DomainError,
                               QuadratureNoConvergence)
from solitonlab.soliton import ChartPoint, SolitonParams

# Frozen oracle values (composite Simpson + Richardson / 40-digit
# quadrature of the displayed integrands):
PHI1_AT_1 = 0.5023147166769941        # phi_1(1), n=2 a=1
PHI1_AT_5 = 0.6103857962284838        # phi_1(5), n=2 a=1
PHI_BAR_N2_A1 = 0.6103858215921914    # limit, n=2 a=1
PHI_BAR_N2_A4 = 0.9940453795874671    # limit, n=2 a=4
PHI_BARS_N3 = (0.3801723759036754, 0.6421747884294624)  # n=3 a=(1,2)
V_AT_1_N2 = 0.3351836431018449
V_AT_1_N3 = 0.1418080844229138


# -- parameter and chart validation ---------------------------------------

def test_params_validation():
    with pytest.raises(DomainError):
        SolitonParams(n=1, alpha=1.0, a=())
    with pytest.raises(DomainError):
        SolitonParams(n=2, alpha=0.0, a=(1.0,))
    with pytest.raises(DomainError):
        SolitonParams(n=2, alpha=1.0, a=(1.0, 2.0))
    with pytest.raises(DomainError):
        SolitonParams(n=2, alpha=1.0, a=(-1.0,))


def test_params_json_round_trip(params3):
    text = soliton.params_to_json(params3)
    assert soliton.params_from_json(text) == params3


def test_translator_vector(params2, params3):
    assert np.allclose(params2.translator, [0.0, 0.0, 1.0, 0.0])
    assert np.allclose(params3.translator, [0, 0, 0, 0, 1.0, 0])


# -- P(t) -------------------------------------------------------------------

def test_p_at_zero(params2):
    assert soliton.p_of_t(params2, 0.0) == pytest.approx(2.0, abs=1e-14)


def test_p_at_one(params2):
    assert soliton.p_of_t(params2, 1.0) == pytest.approx(2.0 * math.e - 1.0,
                                                     rel=1e-13)
    # series oracle near t = 1: P = (prod(1+a t^2) e^(t^2) - 1)/t^2 directly
    t = 1.0 + 1e-7
    direct = ((1 + t * t) * math.exp(t * t) - 1.0) / (t * t)
    assert soliton.p_of_t(params2, t) == pytest.approx(direct, rel=1e-12)


@given(st.floats(-6, 6))
@settings(max_examples=40, deadline=None)
def test_p_even(t):
    params = SolitonParams(n=2, alpha=1.0, a=(1.0,))
    assert soliton.p_of_t(params, t) == soliton.p_of_t(params, -t)


def test_p_seam_continuity(params3):
    below = soliton.p_of_t(params3, 0.9999999e-3)
    above = soliton.p_of_t(params3, 1.0000001e-3)
    assert abs(below - above) <= 1e-10


def test_p_positive_on_grid(params3):
    ts = np.linspace(-8.0, 8.0, 81)
    assert np.all(soliton.p_of_t(params3, ts) > 0.0)


# -- the angle integrals ----------------------------------------------------

def test_phi_at_zero(params2):
    assert soliton.phi_j(params2, 1, 0.0) == 0.0


@given(st.floats(0.01, 8.0))
@settings(max_examples=20, deadline=None)
def test_phi_odd(y):
    params = SolitonParams(n=2, alpha=1.0, a=(1.0,))
    assert soliton.phi_j(params, 1, -y, 1e-11) == pytest.approx(
        -soliton.phi_j(params, 1, y, 1e-11), abs=1e-10)


def test_phi_frozen_values(params2):
    assert soliton.phi_j(params2, 1, 1.0, 1e-11) == pytest.approx(PHI1_AT_1,
                                                              abs=1e-10)
    assert soliton.phi_j(params2, 1, 5.0, 1e-11) == pytest.approx(PHI1_AT_5,
                                                              abs=1e-10)


def test_phi_strictly_increasing(params2):
    ys = np.linspace(-3.0, 3.0, 13)
    vals = [soliton.phi_j(params2, 1, float(y), 1e-10) for y in ys]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_phi_prime_positive_and_matches_fd(params2):
    for y in (-2.0, -0.5, 0.0, 0.7, 3.1):
        p = soliton.phi_prime(params2, 1, y)
        assert p > 0.0
        h = 1e-6
        fd = (soliton.phi_j(params2, 1, y + h, 1e-12)
              - soliton.phi_j(params2, 1, y - h, 1e-12)) / (2 * h)
        assert p == pytest.approx(fd, abs=1e-8)


def test_phi_limit_reached_by_twelve(params2):
    bar = soliton.phi_bar(params2, 1, 1e-12)
    assert soliton.phi_j(params2, 1, 12.0, 1e-12) == pytest.approx(bar, abs=1e-9)
    assert bar == pytest.approx(PHI_BAR_N2_A1, abs=1e-11)
    assert 0.0 < bar < 0.5 * math.pi


def test_phi_bar_monotone_in_scale():
    a1 = soliton.phi_bar(SolitonParams(n=2, alpha=1.0, a=(1.0,)), 1)
    a4 = soliton.phi_bar(SolitonParams(n=2, alpha=1.0, a=(4.0,)), 1)
    assert a4 == pytest.approx(PHI_BAR_N2_A4, abs=1e-11)
    assert a4 > a1


def test_phi_bar_symmetry_and_sum():
    params = SolitonParams(n=3, alpha=1.0, a=(1.0, 1.0))
    b1 = soliton.phi_bar(params, 1)
    b2 = soliton.phi_bar(params, 2)
    assert b1 == pytest.approx(b2, abs=1e-10)
    assert b1 < 0.25 * math.pi
    assert b1 + b2 < 0.5 * math.pi


def test_phi_bar_n3_frozen(params3):
    assert soliton.phi_bar(params3, 1, 1e-12) == pytest.approx(PHI_BARS_N3[0],
                                                           abs=1e-11)
    assert soliton.phi_bar(params3, 2, 1e-12) == pytest.approx(PHI_BARS_N3[1],
                                                           abs=1e-11)


def test_phi_index_validation(params2):
    with pytest.raises(DomainError):
        soliton.phi_j(params2, 2, 1.0)
    with pytest.raises(DomainError):
        soliton.phi_bar(params2, 0)


def test_interpolant_matches_quadrature(params2, params3, rng):
    for params in (params2, params3):
        tab = soliton.tables(params)
        worst = 0.0
        for y in rng.uniform(-11.9, 11.9, 100):
            for j in range(1, params.n):
                worst = max(worst, abs(tab.phi[j - 1](float(y))
                                       - soliton.phi_j(params, j, float(y), 1e-13)))
        assert worst <= 1e-11


# -- gamma and theta ---------------------------------------------------------

def test_gamma_branch_values(params2):
    assert soliton.gamma_of_y(params2, 0.0) == pytest.approx(0.5 * math.pi,
                                                         abs=1e-15)
    assert soliton.gamma_of_y(params2, 40.0) == pytest.approx(0.0, abs=1e-12)
    assert soliton.gamma_of_y(params2, -40.0) == pytest.approx(math.pi, abs=1e-12)
    # matches the two-branch arctan description away from 0
    for y in (0.4, 1.7, 5.0):
        rad = soliton.radicand(params2, y)
        assert soliton.gamma_of_y(params2, y) == pytest.approx(
            math.atan(1.0 / math.sqrt(rad)), rel=1e-14)
        assert soliton.gamma_of_y(params2, -y) == pytest.approx(
            math.pi - math.atan(1.0 / math.sqrt(rad)), rel=1e-14)


@given(st.floats(-9, 9))
@settings(max_examples=30, deadline=None)
def test_gamma_reflection(y):
    params = SolitonParams(n=2, alpha=1.0, a=(1.0,))
    assert soliton.gamma_of_y(params, y) + soliton.gamma_of_y(params, -y) == \
        pytest.approx(math.pi, abs=1e-13)


def test_gamma_decreasing(params3):
    ys = np.linspace(-5.0, 5.0, 41)
    vals = soliton.gamma_of_y(params3, ys)
    assert np.all(np.diff(vals) < 0.0)


def test_theta_center_and_limits(params2):
    assert soliton.theta_of_y(params2, 0.0) == pytest.approx(0.5 * math.pi,
                                                         abs=1e-14)
    sc = soliton.scalars(params2)
    assert soliton.theta_of_y(params2, 12.0) == pytest.approx(sc.theta_inf,
                                                          abs=1e-11)
    assert soliton.theta_of_y(params2, -12.0) == pytest.approx(sc.theta_sup,
                                                           abs=1e-11)


def test_theta_strictly_decreasing(params2):
    ys = np.linspace(-6.0, 6.0, 49)
    vals = [float(soliton.theta_of_y(params2, float(y))) for y in ys]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_theta_prime_matches_fd(params2):
    h = 1e-6
    for y in (1.5, -0.8, 0.0):
        fd = (float(soliton.theta_of_y(params2, y + h))
              - float(soliton.theta_of_y(params2, y - h))) / (2 * h)
        assert soliton.theta_prime(params2, y) == pytest.approx(fd, abs=1e-7)


def test_theta_prime_at_zero_limit(params3):
    s1 = params3.alpha + sum(params3.a)
    assert soliton.theta_prime(params3, 0.0) == pytest.approx(
        -params3.alpha / math.sqrt(s1), rel=1e-14)


def test_derivative_telescoping(params3):
    for y in (-3.3, -1.0, 0.0, 0.2, 2.8):
        total = sum(soliton.phi_prime(params3, j, y) for j in (1, 2)) \
            + soliton.gamma_prime(params3, y)
        assert total == pytest.approx(soliton.theta_prime(params3, y), abs=1e-12)


# -- the immersion ------------------------------------------------------------

def test_immerse_origin(params2):
    pos = soliton.immerse(params2, ChartPoint(x=(0.0,), y=0.0))
    assert np.allclose(pos, [0.0, 0.0, 0.0, -0.5 * math.pi], atol=1e-14)


def test_position_norm_identity(params3, rng):
    for _ in range(10):
        x = tuple(rng.uniform(-3, 3, size=2))
        y = float(rng.uniform(-4, 4))
        pos = soliton.immerse(params3, ChartPoint(x=x, y=y))
        theta = float(soliton.theta_of_y(params3, y))
        sum_sq = sum(v * v for v in x)
        expect = ((0.5 * (sum_sq + y * y)) ** 2
                  + sum(v * v / a for v, a in zip(x, params3.a))
                  + theta * theta)
        assert float(pos @ pos) == pytest.approx(expect, rel=1e-12)


def test_vectorized_position_matches_immerse(params2, rng):
    xs = rng.uniform(-3, 3, size=7)
    y = 1.3
    batch = soliton.position(params2, (xs,), y)
    for k, xv in enumerate(xs):
        single = soliton.immerse(params2, ChartPoint(x=(float(xv),), y=y))
        assert np.max(np.abs(batch[k] - single)) <= 1e-12


def test_jet_immersion_consistent_with_immerse(params3, rng):
    imm = soliton.jet_immersion(params3)
    u = np.array([0.4, -0.8, 1.1])
    jets = imm(u)
    pos = soliton.immerse(params3, ChartPoint(x=(0.4, -0.8), y=1.1))
    assert np.max(np.abs(np.array([j.value for j in jets]) - pos)) <= 1e-12


# -- closed-form metric quantities --------------------------------------------

def test_metric_closed_form_values(params2):
    g, det_g, area = soliton.metric_closed_form(params2, ChartPoint(x=(0.0,), y=1.0))
    assert det_g == pytest.approx(4.0 * math.e / (2.0 * math.e - 1.0), rel=1e-13)
    assert g[0, 1] == 0.0 and g[1, 0] == 0.0
    assert area == pytest.approx(math.sqrt(det_g), rel=1e-13)


def test_metric_branch_point(params2):
    with pytest.raises(BranchPoint):
        soliton.metric_closed_form(params2, ChartPoint(x=(0.3,), y=0.0))


def test_detg_continuous_through_zero(params2):
    # the displayed closed form looks singular at y = 0 but its limit is
    # positive (radicand ~ (alpha + sum a) y^2 cancels the y^2 factor);
    # the AD frame at y = 0 confirms the limit
    _, det_small, _ = soliton.metric_closed_form(params2, ChartPoint(x=(0.0,), y=1e-7))
    fr = geometry.frame_at(soliton.jet_immersion(params2), np.array([0.0, 0.0]))
    det_ad = float(np.linalg.det(fr.metric))
    assert det_ad == pytest.approx(0.5, rel=1e-12)
    assert det_small == pytest.approx(det_ad, rel=1e-6)


def test_area_density_matches_closed_form(params3, rng):
    for _ in range(8):
        x = tuple(rng.uniform(-3, 3, size=2))
        y = float(rng.uniform(0.2, 4.0)) * (1 if rng.uniform() < 0.5 else -1)
        _, _, area = soliton.metric_closed_form(params3, ChartPoint(x=x, y=y))
        vec = soliton.area_density(params3, tuple(np.array([v]) for v in x),
                               np.array([y]))
        assert float(vec[0]) == pytest.approx(area, rel=1e-12)


def test_mean_curvature_sq(params2):
    assert soliton.mean_curvature_sq(params2, ChartPoint(x=(0.0,), y=0.0)) == \
        pytest.approx(params2.alpha ** 2, rel=1e-14)
    assert soliton.mean_curvature_sq(params2, ChartPoint(x=(0.0,), y=1.0)) == \
        pytest.approx(1.0 / (2.0 * math.e), rel=1e-13)
    vals = [soliton.mean_curvature_sq(params2, ChartPoint(x=(x,), y=0.7))
            for x in (0.0, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# -- v(y) and its bounds -------------------------------------------------------

def test_v_decays(params2):
    assert soliton.v_of_y(params2, 6.0, 1e-12) < 1e-8
    assert soliton.v_of_y(params2, 1.0, 1e-12) == pytest.approx(V_AT_1_N2,
                                                            abs=1e-11)


def test_v_requires_positive_y(params2):
    with pytest.raises(DomainError):
        soliton.v_of_y(params2, -1.0)


def test_v_bounds_endpoints(params2):
    lo, hi = soliton.v_bounds(params2, 1.0)
    assert lo == pytest.approx(math.exp(-0.5) / (2.0 * math.sqrt(2.0)),
                               rel=1e-14)
    assert hi == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert lo <= V_AT_1_N2 <= hi


@pytest.mark.parametrize("fixture", ["params2", "params3"])
def test_v_bounds_strict_on_grid(fixture, request):
    params = request.getfixturevalue(fixture)
    for y in np.arange(1.0, 6.01, 0.5):
        v = soliton.v_of_y(params, float(y), 1e-10)
        lo, hi = soliton.v_bounds(params, float(y))
        assert lo < v < hi


def test_v_bounds_tighter_variant_fails_beyond_two(params2):
    # the seemingly sharper upper envelope (divide by sqrt(prod(1+a)))
    # is violated from y = 2 on; only the stated one holds
    y = 2.0
    v = soliton.v_of_y(params2, y, 1e-12)
    _, hi = soliton.v_bounds(params2, y)
    tighter = hi / math.sqrt(2.0)
    assert v < hi
    assert v > tighter


def test_v_bounds_guards(params2):
    with pytest.raises(DomainError):
        soliton.v_bounds(params2, 0.5)
    with pytest.raises(AlphaNotOne):
        soliton.v_bounds(SolitonParams(n=2, alpha=2.0, a=(1.0,)), 2.0)


def test_v_equals_theta_drop(params3):
    sc = soliton.scalars(params3, 1e-12)
    for y in (1.0, 2.0, 3.0):
        v = soliton.v_of_y(params3, y, 1e-11)
        drop = float(soliton.theta_of_y(params3, y)) - sc.theta_inf
        assert v == pytest.approx(drop, abs=1e-9)


def test_general_alpha_v_consistent():
    params = SolitonParams(n=2, alpha=2.0, a=(1.0,))
    sc = soliton.scalars(params, 1e-12)
    v = soliton.v_of_y(params, 1.5, 1e-11)
    drop = float(soliton.theta_of_y(params, 1.5)) - sc.theta_inf
    assert v == pytest.approx(drop, abs=1e-9)


# -- scalars -------------------------------------------------------------------

def test_scalars_structure(params2):
    sc = soliton.scalars(params2)
    assert sc.s0 == pytest.approx(math.exp(-0.5) / (2.0 * math.sqrt(2.0)),
                                  rel=1e-14)
    assert sc.theta_inf + sc.theta_sup == pytest.approx(math.pi, abs=1e-14)
    assert sc.oscillation == pytest.approx(math.pi - 2.0 * sc.theta_inf,
                                           abs=1e-14)
    assert soliton.v_of_y(params2, 1.0, 1e-11) >= sc.s0


def test_oscillation_shrinks_with_scale():
    d1 = soliton.scalars(SolitonParams(n=2, alpha=1.0, a=(1.0,))).oscillation
    d4 = soliton.scalars(SolitonParams(n=2, alpha=1.0, a=(4.0,))).oscillation
    assert d4 < d1


def test_scalars_n3(params3):
    sc = soliton.scalars(params3, 1e-12)
    assert sc.theta_inf == pytest.approx(sum(PHI_BARS_N3), abs=1e-10)
    assert sc.s0 == pytest.approx(math.exp(-0.5) / (3.0 * math.sqrt(6.0)),
                                  rel=1e-14)
