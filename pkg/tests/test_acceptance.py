"""Acceptance suite: each scenario runs once through the CLI entry point with
default settings, then every criterion re-checks the recorded numbers at its
stated tolerance and prints one PASS/FAIL line."""
import json
import time

import numpy as np
import pytest

from kinetic_fredholm.cli import REPORT_NAMES, main

SCENARIOS = ("verify-geometry", "verify-collision", "solve-linear", "solve-nonlinear", "regularity-report")


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    out = {}
    for scenario in SCENARIOS:
        d = tmp_path_factory.mktemp(scenario)
        t0 = time.perf_counter()
        code = main(["--scenario", scenario, "--out", str(d), "--seed", "0"])
        wall = time.perf_counter() - t0
        with open(d / f"{REPORT_NAMES[scenario]}_report.json") as fh:
            rep = json.load(fh)
        out[scenario] = {"exit": code, "wall": wall, "report": rep,
                         "checks": {}, "all": rep["checks"]}
        for c in rep["checks"]:
            out[scenario]["checks"].setdefault(c["name"], c)
    return out


def check(reports, scenario, name):
    return reports[scenario]["checks"][name]


def test_criterion_01_sphere_integral(reports, acceptance):
    c = check(reports, "verify-collision", "sphere_min_integral")
    ok = c["pairs"] >= 1000 and c["max_rel_error"] <= 1e-6 and c["seconds"] < 30.0
    acceptance(1, "sphere min-integral closed form", ok,
               f"max rel err {c['max_rel_error']:.2e} on {c['pairs']} pairs (both primes), {c['seconds']:.1f}s")


def test_criterion_02_e_delta(reports, acceptance):
    c = check(reports, "verify-collision", "e_delta_factorisation")
    ok = c["samples"] >= 100000 and c["max_rel_error"] <= 1e-12 and c["seconds"] < 5.0
    acceptance(2, "E_delta factorisation", ok,
               f"max rel err {c['max_rel_error']:.2e} on {c['samples']} inputs, {c['seconds']:.2f}s")


def test_criterion_03_conservation(reports, acceptance):
    c = check(reports, "verify-collision", "collision_conservation")
    m = check(reports, "verify-collision", "maxwellian_equilibrium")
    ok = (c["samples"] >= 100000 and c["momentum_error"] <= 1e-12 and c["energy_error"] <= 1e-12
          and m["weighted_sup"] <= 1e-5 * m["c"] ** 2)
    acceptance(3, "collision conservation", ok,
               f"momentum {c['momentum_error']:.1e}, energy {c['energy_error']:.1e}, "
               f"|Gamma(cM^1/2, cM^1/2)| {m['weighted_sup']:.1e} (c={m['c']})")


def test_criterion_04_kernel_symmetry(reports, acceptance):
    c = check(reports, "verify-collision", "kernel_symmetry_and_bound")
    ok = c["symmetry_defect"] <= 1e-6 and np.isfinite(c["fitted_C_delta"])
    acceptance(4, "kernel symmetry and bound", ok,
               f"symmetry defect {c['symmetry_defect']:.1e}, C_delta {c['fitted_C_delta']:.3g} over {c['pairs']} pairs")


def test_criterion_05_geometry(reports, acceptance):
    r = reports["verify-geometry"]
    shapes = {}
    for c in r["all"]:
        key = json.dumps(c["domain"], sort_keys=True)
        shapes.setdefault(key, []).append(c)
    ok = len(shapes) >= 2 and r["exit"] == 0
    parts = []
    for key, cs in shapes.items():
        viol = sum(int(c.get("violations", 0)) for c in cs)
        rt = next(c for c in cs if c["name"] == "geometry_runtime")
        ok &= all(c["passed"] for c in cs) and viol == 0 and rt["samples"] >= 10000 and rt["seconds"] < 60.0
        parts.append(f"{json.loads(key)['shape']} {viol} violations in {rt['seconds']:.1f}s")
    doms = {json.loads(k)["shape"] for k in shapes}
    ok &= doms == {"ball", "ellipsoid"}
    acceptance(5, "geometry inequality suite", ok, "; ".join(parts))


def test_criterion_06_nu_closed_forms(reports, acceptance):
    c = check(reports, "verify-collision", "collision_frequency_closed_forms")
    ok = c["gamma0_rel_error"] <= 1e-8 and c["gamma1_origin_rel_error"] <= 1e-6
    acceptance(6, "collision frequency closed forms", ok,
               f"gamma=0 rel err {c['gamma0_rel_error']:.1e}, nu(0) gamma=1 rel err {c['gamma1_origin_rel_error']:.1e}")


def test_criterion_07_linear_solve(reports, acceptance):
    r = reports["solve-linear"]
    c = check(reports, "solve-linear", "linear_convergence")
    z = check(reports, "solve-linear", "zero_data_zero_solution")
    f = check(reports, "solve-linear", "stability_constant_refinement")
    ok = (c["residual"] <= 1e-8 and c["iterations"] <= 500 and z["sup"] == 0.0
          and f["rel_change"] <= 0.15 and r["wall"] < 600.0)
    acceptance(7, "linear solve", ok,
               f"residual {c['residual']:.1e} in {c['iterations']} iterations, zero data -> sup {z['sup']}, "
               f"C {f['coarse']:.4g} -> {f['fine']:.4g} ({100 * f['rel_change']:.1f}%), scenario {r['wall']:.0f}s")


def test_criterion_08_tail(reports, acceptance):
    c = check(reports, "solve-linear", "tail_decay")
    ok = list(c["R"]) == [1, 2, 3, 4, 5] and c["slope"] <= -0.8
    acceptance(8, "tail bound", ok, f"log-log slope {c['slope']:.3f} over R={c['R']}")


def test_criterion_09_smoothing(reports, acceptance):
    c = check(reports, "solve-linear", "smoothing_modulus")
    ok = abs(c["trend_slope"]) <= 0.1
    acceptance(9, "smoothing modulus", ok, f"trend slope {c['trend_slope']:.3f} across {len(c['k'])} dyadic scales")


def test_criterion_10_coercivity(reports, acceptance):
    c = check(reports, "solve-linear", "coercivity")
    ok = c["invariant_ratio"] <= 1e-6 and c["samples"] >= 100 and c["c0"] > 0
    acceptance(10, "coercivity", ok,
               f"invariants -<Lf,f>/|f|^2 <= {c['invariant_ratio']:.1e}, c0 {c['c0']:.3g} from {c['samples']} fields")


def test_criterion_11_injectivity(reports, acceptance):
    c = check(reports, "solve-linear", "injectivity")
    ok = c["unknowns"] <= 20000 and c["sigma_min"] > 0
    acceptance(11, "injectivity", ok, f"sigma_min {c['sigma_min']:.3g} on {c['unknowns']} unknowns")


def test_criterion_12_nonlinear(reports, acceptance):
    p = check(reports, "solve-nonlinear", "picard_contraction")
    res = check(reports, "solve-nonlinear", "nonlinear_residual")
    q = check(reports, "solve-nonlinear", "quadratic_bound")
    late = p["ratios"][1:]  # ratios start at step 2; keep steps i >= 3
    ok = (all(r <= 0.55 for r in late) and res["residual"] <= 1e-6 and q["C"] > 1.0
          and q["implication_holds"])
    acceptance(12, "nonlinear contraction", ok,
               f"max ratio i>=3 {max(late) if late else float('nan'):.3f}, residual {res['residual']:.1e}, "
               f"C {q['C']:.3g}, small data {q['small_data']}, iterates within 1/(4C) {q['iterates_within_bound']}")


def test_criterion_13_w1p(reports, acceptance):
    checks = reports["regularity-report"]["checks"]
    parts = []
    ok = True
    for p in (1.5, 2.0, 2.5):
        c = checks[f"w1p_p{p:g}"]
        ok &= c["finite"] and c["rel_change"] <= 0.01 and c["angular_rel_error"] <= 1e-8
        parts.append(f"p={p:g} finite, change {100 * c['rel_change']:.2f}%, closed-form err {c['angular_rel_error']:.0e}")
    c3 = checks["w1p_p3"]
    ok &= (not c3["finite"]) and c3["monotone_growth"]
    parts.append(f"p=3 divergent (log slope {c3['log_slope']:.2f})")
    acceptance(13, "W^{1,p} threshold", ok, "; ".join(parts))
