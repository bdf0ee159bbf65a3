import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetic_fredholm.collision import GammaOperator
from kinetic_fredholm.errors import InsufficientData, NonContractiveError
from kinetic_fredholm.solver_nonlinear import (PicardConfig, contraction_threshold, nodal_gamma,
                                               nonlinear_residual, picard_solve, quadratic_bound_fit,
                                               write_iterations_csv)
from kinetic_fredholm.transport import constant_source, BoundarySource


@pytest.fixture(scope="module")
def small_gamma(small_table):
    return GammaOperator(small_table.cross_section, small_table.grid)


def _picard(prob, op, f0, **kw):
    cfg = PicardConfig(**kw)
    return picard_solve(prob.dom, prob.table, f0, cfg, problem=prob, gamma_op=op)


def test_zero_data(small_problem, small_gamma):
    zero = BoundarySource(constant_source(0.0), 0.0, "zero")
    F, rep = _picard(small_problem, small_gamma, zero)
    assert rep.flags["converged"] and rep.iterations == 1
    assert np.all(F.values == 0.0)


def test_small_data_contracts(small_problem, small_gamma, gaussian_f0):
    f0 = gaussian_f0.scaled(0.01)
    F, rep = _picard(small_problem, small_gamma, f0)
    assert rep.flags["converged"]
    assert max(rep.extra["ratios"]) <= 0.5
    assert rep.extra["nonlinear_residual"] <= 1e-6
    op = small_gamma
    assert nonlinear_residual(small_problem, op, F.values, f0, 0.25) == pytest.approx(
        rep.extra["nonlinear_residual"])
    fit = quadratic_bound_fit(rep.extra["iterate_norms"], rep.final_norms["f0_linf_alpha"])
    assert fit["C"] > 1.0 and fit["small_data"] and fit["iterates_within_bound"]


def test_large_data_not_contractive(small_problem, small_gamma, gaussian_f0):
    with pytest.raises(NonContractiveError) as info:
        _picard(small_problem, small_gamma, gaussian_f0.scaled(5.0), max_steps=30)
    assert len(info.value.history) >= 3


def test_quadratic_fit_examples():
    # hand-computed: ratios 0.1/0.1, 0.11/(0.1 + 0.01), 0.111/(0.1 + 0.0121)
    fit = quadratic_bound_fit([0.1, 0.11, 0.111], 0.1)
    np.testing.assert_allclose(fit["ratios"], [1.0, 1.0, 0.111 / 0.1121])
    assert fit["C"] == pytest.approx(1.0)
    assert fit["iterate_bound"] == pytest.approx(0.25)
    zero = quadratic_bound_fit([0.0, 0.0, 0.0], 0.0)
    assert zero["C"] == 1.0 and zero["implication_holds"]
    with pytest.raises(InsufficientData):
        quadratic_bound_fit([0.1, 0.2], 0.1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=12), st.floats(1e-6, 1.0))
def test_quadratic_fit_is_a_bound(norms, f0):
    fit = quadratic_bound_fit(norms, f0)
    prev = [0.0] + norms[:-1]
    for cur, p in zip(norms, prev):
        assert cur <= fit["C"] * (f0 + p * p) * (1 + 1e-12)
    assert fit["C"] >= 1.0


def test_constant_stable_across_resolutions(small_problem, small_gamma, hs_problem, hs_gamma, gaussian_f0):
    f0 = gaussian_f0.scaled(0.01)
    Cs = []
    for prob, op in ((small_problem, small_gamma), (hs_problem, hs_gamma)):
        _, rep = _picard(prob, op, f0)
        Cs.append(quadratic_bound_fit(rep.extra["iterate_norms"], rep.final_norms["f0_linf_alpha"])["C"])
    assert abs(Cs[1] - Cs[0]) / Cs[0] <= 0.2


def test_contraction_threshold(small_problem, small_gamma, gaussian_f0):
    res = contraction_threshold(small_problem.dom, small_problem.table, gaussian_f0,
                                PicardConfig(max_steps=30), problem=small_problem, gamma_op=small_gamma,
                                bisections=2)
    assert res["bracketed"] and 0 < res["threshold"] < res["upper"]


def test_nodal_gamma_shape(small_problem, small_gamma, rng):
    F = rng.normal(size=small_problem.shape) * 1e-2
    G = nodal_gamma(small_gamma, F)
    assert G.shape == F.shape
    np.testing.assert_allclose(G[3], small_gamma(F[3], F[3]), rtol=1e-12, atol=1e-18)


def test_iterations_csv(tmp_path):
    steps = [{"step": 1, "norm": 0.1, "increment": 0.1, "ratio": float("nan"), "wall_time": 0.5},
             {"step": 2, "norm": 0.11, "increment": 0.01, "ratio": 0.1, "wall_time": 1.0}]
    p = tmp_path / "iterations.csv"
    write_iterations_csv(p, steps, seed=3)
    lines = p.read_text().splitlines()
    assert lines[0] == "# kinetic-fredholm v1 seed=3"
    assert lines[1] == "step,norm,increment,ratio,wall_time"
    assert lines[3].startswith("2,0.11,0.01,0.1,")
