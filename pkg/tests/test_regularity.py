import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetic_fredholm import geometry as geo
from kinetic_fredholm.fields import PhaseSpaceField
from kinetic_fredholm.regularity import (angular_closed_form, gamma_derivative_check, holder_pairs,
                                         holder_seminorm, solution_evaluator, w1p_check, weighted_norms)
from kinetic_fredholm.solver_linear import solve_linear
from kinetic_fredholm.velocity import VelocityGrid
from kinetic_fredholm.collision import assemble_kernel_table


def _gauss(alpha):
    return lambda x, z: np.exp(-alpha * np.sum(z * z, -1)) * np.ones(np.shape(x)[:-1])


def test_weighted_norm_examples(small_problem):
    sp, vg = small_problem.space, small_problem.vgrid
    f = PhaseSpaceField.from_function(sp, vg, _gauss(0.25))
    n = weighted_norms(f, 0.25)
    assert n["linf_alpha"] == pytest.approx(1.0, rel=1e-12)
    zero = PhaseSpaceField.zeros(sp, vg)
    n0 = weighted_norms(zero, 0.25)
    assert n0["linf_alpha"] == n0["w_alpha"] == n0["w_alpha_tilde"] == 0.0
    with pytest.raises(ValueError):
        weighted_norms(f, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(-1, 1), st.floats(0.1, 1.0))
def test_norm_ordering(alpha, slope, width):
    dom = geo.ball()
    rng = np.random.default_rng(0)
    x = geo.sample_interior(dom, 40, rng, margin=0.01)
    z = rng.normal(size=(40, 3))
    f = lambda X, Z: (1 + slope * X[..., 0]) * np.exp(-width * np.sum(Z * Z, -1))
    n = weighted_norms(f, alpha, dom, points=(x, z))
    assert n["linf_alpha"] <= n["w_alpha"] <= n["w_alpha_tilde"]


def test_gradient_matches_analytic():
    dom = geo.ball()
    rng = np.random.default_rng(1)
    x = geo.sample_interior(dom, 30, rng, margin=0.05)
    z = rng.normal(size=(30, 3))
    f = lambda X, Z: (1 + 0.5 * X[..., 0]) * np.exp(-0.3 * np.sum(Z * Z, -1))
    n = weighted_norms(f, 0.25, dom, points=(x, z), hx=1e-4)
    w = geo.weight_w(dom, x, z)
    exact = np.max(0.5 * np.exp(-0.05 * np.sum(z * z, 1)) * w)
    assert n["grad_x_sup"] == pytest.approx(exact, rel=1e-6)


def test_holder_constant_in_x_is_zero(unit_ball):
    f = _gauss(0.3)
    res = holder_seminorm(f, 1.0, 0.25, unit_ball, np.array([[0.5, 0, 0], [1, 1, 0]]), n_pairs=50)
    assert res["seminorm"] == 0.0
    assert res["statement"] == "no violation found at 100 samples"


def test_holder_pairs_cover_scales(unit_ball):
    x, y = holder_pairs(unit_ball, n_pairs=200, seed=0)
    sep = np.linalg.norm(x - y, axis=1) / unit_ball.diameter
    assert sep.min() < 2.0**-10 and sep.max() > 2.0**-3
    d = geo.boundary_distance(unit_ball, x)
    assert d.min() < 0.1 and d.max() > 0.5
    assert np.all(geo.is_interior(unit_ball, y))


def test_holder_embedding(unit_ball):
    # |x-y| <= diam and w_s = |z|^s/(1+|z|) N give an explicit embedding constant
    f = lambda X, Z: np.sin(2 * X[..., 0] + X[..., 1]) * np.exp(-0.3 * np.sum(Z * Z, -1))
    pairs = holder_pairs(unit_ball, n_pairs=200, seed=4)
    vel = np.array([[0.05, 0, 0], [0.3, 0.4, 0], [1.5, -1, 0.5]])
    s1, s2 = 0.5, 1.0
    h1 = holder_seminorm(f, s1, 0.25, unit_ball, vel, sample_pairs=pairs)["seminorm"]
    h2 = holder_seminorm(f, s2, 0.25, unit_ball, vel, sample_pairs=pairs)["seminorm"]
    C = unit_ball.diameter ** (s2 - s1) * max(1.0, 0.05 ** (s1 - s2))
    assert 0 < h1 <= C * h2


def test_solution_holder_finite(unit_ball, small_problem, gaussian_f0):
    F, _ = solve_linear(unit_ball, small_problem.table, gaussian_f0, problem=small_problem)
    ev = solution_evaluator(small_problem, F.values, gaussian_f0)
    vel = small_problem.vgrid.nodes[::40]
    res = holder_seminorm(ev, 0.75, 0.25, unit_ball, vel, n_pairs=100, seed=1)
    assert np.isfinite(res["seminorm"]) and res["seminorm"] > 0
    n = weighted_norms(ev, 0.25, unit_ball, points=(small_problem.space.points[::5],
                                                    small_problem.vgrid.nodes[:len(small_problem.space.points[::5])]))
    assert np.isfinite(n["w_alpha_tilde"])


def test_gamma_derivative_maxwellian(hs_table, unit_ball):
    m = lambda x, z: 0.7 * np.pi**-0.75 * np.exp(-0.5 * np.sum(z * z, -1)) + 0 * x[..., 0]
    res = gamma_derivative_check(hs_table, unit_ball, m, m, n_samples=8)
    assert res["gamma_sup"] < 1e-6
    assert res["pointwise"] < 1e-5 and res["grad_x"] < 1e-3


def bimodal_field(x, z):
    # two displaced gaussians: not an equilibrium, so Gamma is O(1)
    a = np.array([1.0, 0.0, 0.0])
    bumps = np.exp(-0.3 * np.sum((z - a) ** 2, -1)) + np.exp(-0.3 * np.sum((z + a) ** 2, -1))
    return bumps * (1 + 0.2 * x[..., 0])


def test_gamma_derivative_refinement(unit_ball, hs_table):
    g = bimodal_field
    coarse = gamma_derivative_check(hs_table, unit_ball, g, g, n_samples=16, seed=5)
    fine_tab = assemble_kernel_table(hs_table.cross_section, VelocityGrid(n_radial=12, angular_order=7),
                                     certify=False)
    fine = gamma_derivative_check(fine_tab, unit_ball, g, g, n_samples=16, seed=5)
    for k in ("pointwise", "grad_x", "grad_z"):
        assert np.isfinite(coarse[k])
        assert abs(fine[k] - coarse[k]) <= 0.25 * abs(fine[k])


def test_w1p_examples(unit_ball):
    assert angular_closed_form(2.0) == 1.0
    assert angular_closed_form(2.5) == 2.0
    r2 = w1p_check(unit_ball, 0.25, 2.0)
    assert r2["finite"] and r2["angular_closed_form"] == 1.0
    r25 = w1p_check(unit_ball, 0.25, 2.5)
    assert r25["finite"] and r25["rel_change"] <= 0.01
    assert r25["numeric_integral"][-1] == pytest.approx(r25["ball_exact"], rel=1e-3)
    r3 = w1p_check(unit_ball, 0.25, 3.0)
    assert not r3["finite"] and r3["monotone_growth"]
    with pytest.raises(ValueError):
        w1p_check(unit_ball, 0.0, 2.0)


def test_w1p_ellipsoid(ellipsoid211):
    r = w1p_check(ellipsoid211, 0.25, 1.5)
    assert r["finite"]
    assert r["angular_rel_error"] <= 1e-8
