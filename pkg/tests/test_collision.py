import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetic_fredholm.collision import (SQRT_M_NORM, CrossSection, GammaOperator, apply_K, assemble_kernel_table,
                                        collision_frequency, collision_frequency_hard_sphere, e_delta,
                                        e_delta_factored, gamma_bilinear, gamma_loss, kernel_k,
                                        maxwellian_sqrt, post_collision, reference_apply_K,
                                        sigma_post_collision, smooth_test_functions, sphere_min_integral)
from kinetic_fredholm.errors import DegenerateCollision, GridError
from kinetic_fredholm.velocity import VelocityGrid
from kinetic_fredholm.verify import apply_k_decay_check, kernel_table_check

# Kh(z) for h(v) = exp(-0.3|v - c|^2)(1 + v_1), c = (0.5, 0, 0.2), B0 = 1, from a
# brute-force 5D quadrature of the gain/loss collision integrals (z_* on a
# Lebedev x Gauss polar rule, omega on a Gauss x trapezoid hemisphere)
BRUTE_KH = {
    (1.0, (0.3, -0.2, 0.5)): 5.091008477300273,
    (1.0, (1.5, 0.4, -0.7)): 8.60992559588511,
    (0.5, (0.3, -0.2, 0.5)): 4.39209102444353,
    (0.5, (1.5, 0.4, -0.7)): 5.982780752420172,
    (0.0, (0.3, -0.2, 0.5)): 3.972470588257677,
    (0.0, (1.5, 0.4, -0.7)): 4.2819834381846595,
}
# k((1,0,0), (0,1,0)), B0 = 1, from a separate script that evaluates the reduced
# kernel with its own 200-point Gauss rule for the line integral
SPOT_K = {1.0: 0.19041612269080688, 0.5: 0.11423005502132252, 0.0: 0.06374568057057228}


def test_post_collision_examples():
    z, zs = np.array([0.3, -1.0, 0.2]), np.array([1.1, 0.4, -0.5])
    a, b = post_collision(z, zs, 0.0, 0.7)
    np.testing.assert_allclose(a, zs, atol=1e-15)
    np.testing.assert_allclose(b, z, atol=1e-15)
    a, b = post_collision(z, zs, np.pi / 2, 0.7)
    np.testing.assert_allclose(a, z, atol=1e-15)
    np.testing.assert_allclose(b, zs, atol=1e-15)
    a, b = post_collision([0, 0, 0], [0, 0, 2], np.pi / 4, 0.0, basis_choice=[1, 0, 0])
    np.testing.assert_allclose(a, [1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(b, [-1, 0, 1], atol=1e-15)


def test_sigma_post_collision_examples():
    z, zs = np.array([0.3, -1.0, 0.2]), np.array([1.1, 0.4, -0.5])
    u = (zs - z) / np.linalg.norm(zs - z)
    np.testing.assert_allclose(sigma_post_collision(z, zs, u)[0], zs, atol=1e-15)
    np.testing.assert_allclose(sigma_post_collision(z, zs, -u)[0], z, atol=1e-15)
    np.testing.assert_allclose(sigma_post_collision([0, 0, 0], [0, 0, 2], [1, 0, 0])[0], [1, 0, 1])
    with pytest.raises(DegenerateCollision):
        sigma_post_collision(z, z, u)


@pytest.mark.parametrize("z,zs,expected", [
    ((1, 0, 0), (-1, 0, 0), np.pi),
    ((2, 0, 0), (0, 0, 0), np.pi),
    ((1, 0, 0), (0, 1, 0), 2 * np.pi / np.sqrt(2)),
])
def test_sphere_min_integral_examples(z, zs, expected):
    for which in ("prime", "star"):
        closed, num = sphere_min_integral(np.array(z, float), np.array(zs, float), which)
        assert closed == pytest.approx(expected, rel=1e-14)
        assert num == pytest.approx(expected, rel=1e-8)


def test_collision_frequency_closed_forms():
    assert np.allclose(collision_frequency(CrossSection(1.0, 0.0), [0, 0.5, 3.0]), np.pi, rtol=1e-10)
    assert collision_frequency(CrossSection(2.0, 1.0), 0.0) == pytest.approx(2 * 2 * np.sqrt(np.pi), rel=1e-12)
    nu = collision_frequency(CrossSection(1.0, 1.0), 50.0)
    assert nu / 50.0 == pytest.approx(np.pi, rel=0.02)
    s = np.array([0.1, 0.7, 2.0, 5.0])
    np.testing.assert_allclose(collision_frequency(CrossSection(1.0, 1.0), s),
                               collision_frequency_hard_sphere(1.0, s), rtol=1e-10)


def test_e_delta_examples():
    z = np.array([1.0, 0.0, 0.0])
    zs = np.array([0.0, 0.0, 1.0])
    assert e_delta(z, zs, 0.25) == pytest.approx(np.exp(-0.75 * 2.0 / 4.0))
    assert e_delta(z, np.array([3.0, 1.0, -2.0]), 1.0 - 1e-12) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        e_delta_factored(z, zs, 0.25, 0.4)


@pytest.mark.parametrize("gamma", [1.0, 0.5, 0.0])
def test_kernel_spot_value(gamma):
    k = kernel_k(CrossSection(1.0, gamma), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert k == pytest.approx(SPOT_K[gamma], rel=1e-9)


@pytest.mark.parametrize("key", sorted(BRUTE_KH))
def test_kernel_reproduces_collision_integral(key):
    gamma, z = key
    h = smooth_test_functions()[1]
    val = reference_apply_K(CrossSection(1.0, gamma), h, np.array(z), order=23)
    assert val == pytest.approx(BRUTE_KH[key], rel=1e-8)


@pytest.mark.parametrize("gamma", [1.0, 0.5, 0.0])
def test_k_maps_sqrt_maxwellian_to_nu_times_it(gamma):
    # K M^{1/2} = nu M^{1/2} since L annihilates the collision invariants
    cs = CrossSection(1.0, gamma)
    z = np.array([0.7, 0.2, -0.1])
    val = reference_apply_K(cs, maxwellian_sqrt, z, order=23)
    expected = collision_frequency(cs, np.linalg.norm(z)) * maxwellian_sqrt(z)
    assert val == pytest.approx(expected, rel=1e-8)


def test_kernel_singular_diagonal():
    with pytest.raises(DegenerateCollision):
        kernel_k(CrossSection(), np.ones(3), np.ones(3))


def test_table_symmetry_and_bound(hs_table):
    assert hs_table.symmetry_defect() <= 1e-6
    chk = kernel_table_check(hs_table)
    assert chk["passed"] and chk["fitted_C_delta"] < 100


def test_table_conservative_operator(hs_table):
    # the solver operator keeps K M^{1/2} = nu M^{1/2} exactly
    m = hs_table.grid.maxwellian_sqrt()
    np.testing.assert_allclose(hs_table.kop @ m, hs_table.nu * m, atol=1e-12)


def test_apply_k_examples(hs_table, rng):
    n = hs_table.size
    assert np.all(apply_K(hs_table, np.zeros(n)) == 0.0)
    h1, h2 = rng.normal(size=(2, n))
    lhs = apply_K(hs_table, 2.0 * h1 - 3.0 * h2)
    rhs = 2.0 * apply_K(hs_table, h1) - 3.0 * apply_K(hs_table, h2)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert apply_k_decay_check(hs_table)["passed"]
    with pytest.raises(GridError):
        apply_K(hs_table, np.zeros(n + 1))


def test_gamma_examples(hs_table, hs_gamma):
    grid = hs_table.grid
    zero = np.zeros(grid.size)
    assert np.all(hs_gamma(zero, zero) == 0.0)
    m = 0.7 * grid.maxwellian_sqrt()
    assert np.max(np.abs(hs_gamma(m, m)) * np.exp(0.25 * grid.speeds**2)) <= 1e-5 * 0.49


def test_gamma_loss_maxwell_molecules():
    grid = VelocityGrid(n_radial=8, angular_order=5)
    cs = CrossSection(1.3, 0.0)
    one = np.ones(grid.size)
    loss = gamma_loss(cs, grid, one, one)
    np.testing.assert_allclose(loss, np.pi * 1.3 * (2 * np.pi) ** 1.5, rtol=1e-6)
    with pytest.raises(GridError):
        gamma_bilinear(cs, grid, one[:-1], one[:-1])


def test_nystrom_and_product_tables_agree_on_smooth_fields():
    cs = CrossSection(1.0, 1.0)
    grid = VelocityGrid(n_radial=8, angular_order=5)
    prod = assemble_kernel_table(cs, grid, certify=False)
    h = np.exp(-0.3 * grid.speeds**2)
    ref = np.array([reference_apply_K(cs, lambda v: np.exp(-0.3 * np.sum(v * v, -1)), z, order=17)
                    for z in grid.nodes[::23]])
    got = (prod.kop @ h)[::23]
    # the outermost nodes lose the part of the kernel beyond the grid cutoff
    np.testing.assert_allclose(got, ref, rtol=0, atol=0.05 * np.max(np.abs(ref)))


# ------------------------------------------------------------ properties

vec = st.tuples(*[st.floats(-4, 4, allow_nan=False)] * 3).map(np.array)


@settings(max_examples=300, deadline=None)
@given(vec, vec, st.floats(0, np.pi / 2), st.floats(0, 2 * np.pi))
def test_post_collision_conserves(z, zs, th, ph):
    if np.linalg.norm(z - zs) < 1e-6:
        return
    a, b = post_collision(z, zs, th, ph)
    np.testing.assert_allclose(a + b, z + zs, atol=1e-12)
    assert abs(a @ a + b @ b - z @ z - zs @ zs) <= 1e-12 * (1 + z @ z + zs @ zs)


@settings(max_examples=300, deadline=None)
@given(vec, vec, st.floats(0.0, 0.9), st.floats(0.0, 1.0))
def test_e_delta_factorisation(z, zs, delta, frac):
    if np.linalg.norm(z - zs) < 1e-3:
        return
    a = frac * 0.5 * (1 - delta) * 0.999
    d, f = e_delta(z, zs, delta), e_delta_factored(z, zs, delta, a)
    assert f == pytest.approx(d, rel=1e-9, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(vec, vec)
def test_sphere_min_closed_form(z, zs):
    if np.linalg.norm(z - zs) < 1e-2 or np.linalg.norm(z + zs) < 1e-2:
        return
    closed, num = sphere_min_integral(z, zs)
    assert num == pytest.approx(closed, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.sampled_from([0.0, 0.5, 1.0]))
def test_kernel_symmetric(z, v, gamma):
    if np.linalg.norm(z - v) < 1e-3:
        return
    cs = CrossSection(1.0, gamma)
    a, b = kernel_k(cs, z, v), kernel_k(cs, v, z)
    assert a == pytest.approx(b, rel=1e-6, abs=1e-300)


def test_cross_section_validation():
    with pytest.raises(ValueError):
        CrossSection(1.0, 1.5)
    with pytest.raises(ValueError):
        CrossSection(0.0, 1.0)


def test_gamma_operator_off_grid_points(hs_table):
    grid = hs_table.grid
    pts = grid.nodes[:5] + 0.01
    op = GammaOperator(hs_table.cross_section, grid, at=pts)
    m = grid.maxwellian_sqrt()
    assert np.max(np.abs(op(m, m))) < 1e-4


# Gamma(h, h) for two displaced gaussians, from an independent dense quadrature
# (Lebedev 47 in both v-direction and sigma, 80-point Gauss-Legendre in |v - z|
# up to 12, field evaluated exactly); frozen values.
BIMODAL_AT = np.array([[0.3, -0.2, 0.5], [1.2, 0.4, -0.7], [0.0, 1.5, 0.0]])
BIMODAL_GAMMA = np.array([0.06927648056244516, -1.0156564337941434, 0.9798619143833386]) * np.pi**0.75


def _bimodal(z):
    a = np.array([1.0, 0.0, 0.0])
    return np.exp(-0.3 * np.sum((z - a) ** 2, -1)) + np.exp(-0.3 * np.sum((z + a) ** 2, -1))


def test_gamma_matches_dense_oracle_under_refinement():
    errs = []
    for nr, ao in ((10, 5), (16, 11)):
        op = GammaOperator(CrossSection(1.0, 1.0), VelocityGrid(n_radial=nr, angular_order=ao), at=BIMODAL_AT)
        H = _bimodal(op.grid.nodes)
        got = SQRT_M_NORM * (op.gain(H, H) - op.loss(H, H, h1_at=_bimodal(BIMODAL_AT)))
        errs.append(np.max(np.abs(got - BIMODAL_GAMMA)))
    assert errs[1] < 0.5 * errs[0]
    assert errs[1] <= 0.1 * np.max(np.abs(BIMODAL_GAMMA))
