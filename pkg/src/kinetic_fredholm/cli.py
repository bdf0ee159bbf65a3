"""Command-line harness: ``run --config cfg.json --scenario <name>``.

A run configuration is one JSON document merged over ``DEFAULT_CONFIG``;
``--set a.b=value`` and the dedicated flags override single keys.  Every
scenario writes ``<name>_report.json`` holding one entry per check (with its
anchor string) and exits 0 only if all checks pass.
"""
import argparse
import copy
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import verify
from .cache import table_from_config
from .collision import (CrossSection, GammaOperator, assemble_kernel_table, invariant_basis,
                        maxwellian_sqrt)
from .errors import ConfigError, KineticError, NonContractiveError
from .fields import write_field_csv
from .regularity import (gamma_derivative_check, holder_seminorm, solution_evaluator,
                         w1p_check, weighted_norms)
from .solver_linear import (LinearProblem, SolveConfig, _jsonable, coercivity_probe,
                            fit_coercivity, injectivity_probe, smoothing_probe, solve_linear,
                            tail_norm_probe)
from .solver_nonlinear import (PicardConfig, nodal_gamma, picard_solve, quadratic_bound_fit,
                               contraction_threshold, write_iterations_csv)
from .spatial import SpatialGrid
from .transport import source_from_config
from .velocity import VelocityGrid

log = logging.getLogger("kinetic_fredholm")

SCENARIOS = ("verify-geometry", "verify-collision", "verify-transport", "solve-linear",
             "solve-nonlinear", "regularity-report", "full-suite")
REPORT_NAMES = {"verify-geometry": "geometry", "verify-collision": "collision",
                "verify-transport": "transport", "solve-linear": "linear",
                "solve-nonlinear": "nonlinear", "regularity-report": "regularity",
                "full-suite": "full_suite"}

DEFAULT_CONFIG = {
    "domain": {"shape": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0},
    "cross_section": {"b0": 1.0, "gamma": 1.0},
    "alpha": 0.25,
    "velocity": {"cutoff": 6.0, "n_radial": 10, "angular_order": 5, "zeta_min": 0.05},
    "spatial": {"n_shells": 9, "n_polar": 4, "n_azimuth": 8},
    "kernel": {},
    "gamma_interp": {"radial_order": 3, "sigma_order": None},
    "tolerances": {"linear": 1e-8, "nonlinear": 1e-7, "quadrature": 1e-6},
    "boundary": {"family": "gaussian", "alpha": 0.25, "amplitude": 1.0},
    "source": None,
    "seed": 0,
    "scale": None,
    "output_dir": ".",
    "geometry": {"samples": 10000, "line_rays": 200,
                 "extra_domains": [{"shape": "ellipsoid", "semi_axes": [2.0, 1.0, 1.0]}]},
    "collision": {"pairs": 1000, "samples": 100000},
    "linear": {"max_iter": 500, "refine": True, "probes": True, "tail_R": [1, 2, 3, 4, 5],
               "injectivity_grid": {"velocity": {"n_radial": 8, "angular_order": 5},
                                    "spatial": {"n_shells": 5, "n_polar": 4, "n_azimuth": 6}}},
    "nonlinear": {"scale": 0.01, "max_steps": 50, "ratio_limit": 0.55, "residual_limit": 1e-6,
                  "threshold_search": False},
    "regularity": {"p_values": [1.5, 2.0, 2.5, 3.0], "sigmas": [0.5, 1.0], "holder_pairs": 400,
                   "holder_velocities": 7, "gamma_samples": 24},
}

# smallest discretisation accepted by the validator
MIN_ORDERS = {"velocity.n_radial": 4, "velocity.angular_order": 3, "spatial.n_shells": 3,
              "spatial.n_polar": 2, "spatial.n_azimuth": 4}


# ------------------------------------------------------------ configuration

def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _get(cfg, dotted):
    node = cfg
    for part in dotted.split("."):
        node = node[part]
    return node


def set_dotted(cfg, dotted, value):
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class RunConfig:
    data: dict
    scenario: str
    out: Path

    @property
    def seed(self):
        return int(self.data["seed"])

    @property
    def alpha(self):
        return float(self.data["alpha"])

    def validate(self):
        d = self.data
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not 0.0 <= self.alpha < 0.5:
            raise ConfigError(f"alpha must satisfy 0 <= alpha < 1/2, got {self.alpha}")
        g = float(d["cross_section"].get("gamma", 1.0))
        if not 0.0 <= g <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {g}")
        if not float(d["cross_section"].get("b0", 1.0)) > 0:
            raise ConfigError("b0 must be positive")
        for key, lo in MIN_ORDERS.items():
            try:
                v = _get(d, key)
            except KeyError:
                continue
            if int(v) < lo:
                raise ConfigError(f"{key} = {v} is below the minimum {lo}")
        gi = d.get("gamma_interp") or {}
        if int(gi.get("radial_order", 3)) not in (0, 1, 3):
            raise ConfigError("gamma_interp.radial_order must be 0, 1 or 3")
        for key in ("linear", "nonlinear", "quadrature"):
            if not float(d["tolerances"][key]) > 0:
                raise ConfigError(f"tolerance {key} must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        geo.domain_from_config(d["domain"])
        try:
            VelocityGrid(**d["velocity"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad velocity grid: {exc}") from exc
        return self


def load_config(args):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        set_dotted(cfg, k.strip(), _parse_value(v))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.scale is not None:
        cfg["scale"] = args.scale
    if args.p is not None:
        cfg["regularity"]["p_values"] = [args.p]
    if args.out is not None:
        cfg["output_dir"] = args.out
    try:
        return RunConfig(cfg, args.scenario, Path(cfg["output_dir"])).validate()
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ConfigError(f"invalid config: {exc!r}") from exc


# ------------------------------------------------------------ shared state

class Context:
    """Lazily built objects shared between scenarios of one run."""

    def __init__(self, rc):
        self.rc = rc
        self.cfg = rc.data
        self.dom = geo.domain_from_config(self.cfg["domain"])
        self.cs = CrossSection(**self.cfg["cross_section"])
        self._table = None
        self._prob = None
        self._gamma = None
        self.cache_info = None
        self.nonlinear = None

    @property
    def table(self):
        if self._table is None:
            self._table, self.cache_info = table_from_config(self.cfg)
            log.info("kernel table %s (cache hit: %s)", self.cache_info["path"], self.cache_info["hit"])
        return self._table

    def problem(self):
        if self._prob is None:
            self._prob = LinearProblem(self.dom, self.table, SpatialGrid(self.dom, **self.cfg["spatial"]))
        return self._prob

    def gamma_op(self):
        if self._gamma is None:
            self._gamma = GammaOperator(self.cs, self.table.grid, **self.gamma_kw())
        return self._gamma

    def gamma_kw(self):
        gi = self.cfg.get("gamma_interp") or {}
        so = gi.get("sigma_order")
        return {"radial_order": int(gi.get("radial_order", 3)), "sigma_order": None if so is None else int(so)}

    def boundary(self, scale):
        f0 = source_from_config(self.cfg["boundary"], "boundary")
        return f0.scaled(scale) if scale != 1.0 else f0

    def phi(self):
        spec = self.cfg.get("source")
        return None if not spec else source_from_config(spec, "volume")

    def solve_config(self, **kw):
        t = self.cfg["tolerances"]
        base = {"alpha": self.rc.alpha, "tol": float(t["linear"]),
                "max_iter": int(self.cfg["linear"]["max_iter"])}
        base.update(kw)
        return SolveConfig(**base)


def _fail(name, anchor, exc):
    return verify._check(name, anchor, False, error=f"{type(exc).__name__}: {exc}")


# ------------------------------------------------------------ scenarios

def scenario_geometry(ctx):
    g = ctx.cfg["geometry"]
    domains = [ctx.dom] + [geo.domain_from_config(s) for s in g.get("extra_domains") or []]
    checks = []
    for dom in domains:
        t0 = time.perf_counter()
        res = verify.geometry_suite(dom, n=int(g["samples"]), seed=ctx.rc.seed, n_line=int(g["line_rays"]))
        dt = time.perf_counter() - t0
        for c in res:
            c["domain"] = dom.to_dict()
        checks += res
        checks.append(verify._check("geometry_runtime", "geometry suite finishes within 60 s", dt < 60.0,
                                    seconds=dt, domain=dom.to_dict(), samples=int(g["samples"])))
    return checks, {}


def scenario_collision(ctx):
    c = ctx.cfg["collision"]
    checks = verify.collision_suite(ctx.cs, ctx.table, n_pairs=int(c["pairs"]),
                                    n_samples=int(c["samples"]), seed=ctx.rc.seed, gamma_op=ctx.gamma_op())
    return checks, {"kernel_metadata": ctx.table.metadata}


def scenario_transport(ctx):
    return verify.transport_suite(ctx.dom, seed=ctx.rc.seed), {}


def _linear_probes(ctx, prob, field_):
    lin = ctx.cfg["linear"]
    a = ctx.rc.alpha
    checks = []
    tail = tail_norm_probe(prob, lin["tail_R"], alpha=a, seed=ctx.rc.seed)
    checks.append(verify._check("tail_decay", "||(1 - chi_R) K S K|| <= C/(1+R)", tail["slope"] <= -0.8, **tail))
    rng = np.random.default_rng(ctx.rc.seed)
    # +-1 noise with unit L^inf_alpha norm
    rand = rng.choice([-1.0, 1.0], size=prob.shape) / prob.weight(a)
    sm = smoothing_probe(prob, rand, alpha=a, seed=ctx.rc.seed)
    checks.append(verify._check("smoothing_modulus", "|G(x) - G(y)| <= C |x-y| (1 + |log|x-y||)",
                                abs(sm["trend_slope"]) <= 0.1, **sm))
    tab = ctx.table
    basis = invariant_basis(tab.grid)
    inv = [coercivity_probe(tab, b) for b in basis.T]
    worst = max(abs(c["dirichlet"]) / c["norm2"] for c in inv)
    fit = fit_coercivity(tab, seed=ctx.rc.seed)
    checks.append(verify._check("coercivity", "-<Lf, f> >= c0 ||(I - P) f||^2",
                                worst <= 1e-6 and fit["c0"] > 0, invariant_ratio=worst, c0=fit["c0"],
                                samples=len(fit["ratios"])))
    ig = lin["injectivity_grid"]
    vcfg = _merge(ctx.cfg["velocity"], ig.get("velocity", {}))
    ctab = assemble_kernel_table(ctx.cs, VelocityGrid(**vcfg), certify=False, **ctx.cfg.get("kernel", {}))
    cprob = LinearProblem(ctx.dom, ctab, SpatialGrid(ctx.dom, **_merge(ctx.cfg["spatial"], ig.get("spatial", {}))))
    inj = injectivity_probe(cprob, seed=ctx.rc.seed)
    checks.append(verify._check("injectivity", "sigma_min(I - S K) > 0", inj["sigma_min"] > 0, **inj))
    return checks


def scenario_linear(ctx):
    lin = ctx.cfg["linear"]
    prob = ctx.problem()
    scale = 1.0 if ctx.cfg["scale"] is None else float(ctx.cfg["scale"])
    f0 = ctx.boundary(scale)
    phi = ctx.phi()
    scfg = ctx.solve_config()
    checks = []
    field_, rep = solve_linear(ctx.dom, ctx.table, f0, phi, scfg, problem=prob)
    res = rep.residual_history[-1]
    checks.append(verify._check("linear_convergence", "fixed point f = J f0 + S phi + S K f",
                                rep.flags["converged"] and res <= scfg.tol, iterations=rep.iterations,
                                residual=res, stability_constant=rep.fitted_stability_constant,
                                observed_rate=rep.extra["observed_rate"], seconds=rep.extra["seconds"]))
    zero, zrep = solve_linear(ctx.dom, ctx.table, None, None, scfg, problem=prob)
    zmax = float(np.max(np.abs(zero.values)))
    checks.append(verify._check("zero_data_zero_solution", "f0 = phi = 0 gives f = 0", zmax == 0.0, sup=zmax))
    extra = {"solve": rep.to_dict()}
    if lin.get("refine"):
        fine_space = prob.space.refined()
        vcfg = dict(ctx.cfg["velocity"])
        vcfg["n_radial"] = int(vcfg.get("n_radial", 10)) + 2
        vcfg["angular_order"] = int(vcfg.get("angular_order", 5)) + 2
        ftab, _ = table_from_config({**ctx.cfg, "velocity": vcfg})
        fprob = LinearProblem(ctx.dom, ftab, fine_space)
        _, frep = solve_linear(ctx.dom, ftab, f0, phi, scfg, problem=fprob)
        c0, c1 = rep.fitted_stability_constant, frep.fitted_stability_constant
        rel = abs(c1 - c0) / abs(c0) if c0 else float("inf")
        checks.append(verify._check("stability_constant_refinement", "||f|| <= C (||f0|| + ||phi||), C grid-stable",
                                    rel <= 0.15 and frep.flags["converged"], coarse=c0, fine=c1,
                                    rel_change=rel, fine_unknowns=fprob.transport.n_unknowns))
    if lin.get("probes"):
        checks += _linear_probes(ctx, prob, field_)
    return checks, extra, {"field": field_}


def _run_picard(ctx):
    if ctx.nonlinear is not None:
        return ctx.nonlinear
    nl = ctx.cfg["nonlinear"]
    scale = float(nl["scale"]) if ctx.cfg["scale"] is None else float(ctx.cfg["scale"])
    t = ctx.cfg["tolerances"]
    pcfg = PicardConfig(alpha=ctx.rc.alpha, tol=float(t["nonlinear"]), max_steps=int(nl["max_steps"]))
    f0 = ctx.boundary(scale)
    field_, rep = picard_solve(ctx.dom, ctx.table, f0, pcfg, problem=ctx.problem(), gamma_op=ctx.gamma_op())
    ctx.nonlinear = (field_, rep, f0, scale, pcfg)
    return ctx.nonlinear


def scenario_nonlinear(ctx):
    nl = ctx.cfg["nonlinear"]
    checks = []
    try:
        field_, rep, f0, scale, pcfg = _run_picard(ctx)
    except NonContractiveError as exc:
        checks.append(_fail("picard_contraction", "||f_{i+1} - f_i|| <= 1/2 ||f_i - f_{i-1}||", exc))
        return checks, {"history": exc.history}, {}
    steps = rep.extra["steps"]
    late = [s["ratio"] for s in steps if s["step"] >= 3]
    limit = float(nl["ratio_limit"])
    checks.append(verify._check("picard_contraction", "||f_{i+1} - f_i|| <= 1/2 ||f_i - f_{i-1}||",
                                rep.flags["converged"] and all(r <= limit for r in late),
                                ratios=rep.extra["ratios"], max_late_ratio=max(late) if late else None,
                                limit=limit, steps=len(steps), scale=scale))
    res = rep.extra["nonlinear_residual"]
    checks.append(verify._check("nonlinear_residual", "f = J f0 + S (K f + Gamma(f, f))",
                                res <= float(nl["residual_limit"]), residual=res))
    try:
        fit = quadratic_bound_fit(rep.extra["iterate_norms"], rep.final_norms["f0_linf_alpha"])
        checks.append(verify._check("quadratic_bound", "||f_{i+1}|| <= C (||f0|| + ||f_i||^2); small data keeps iterates below 1/(4C)",
                                    fit["C"] > 1.0 and fit["implication_holds"], **fit))
    except KineticError as exc:
        checks.append(_fail("quadratic_bound", "||f_{i+1}|| <= C (||f0|| + ||f_i||^2)", exc))
    extra = {"solve": rep.to_dict()}
    if nl.get("threshold_search"):
        extra["contraction_threshold"] = contraction_threshold(
            ctx.dom, ctx.table, ctx.boundary(1.0), PicardConfig(alpha=ctx.rc.alpha, max_steps=30),
            problem=ctx.problem(), gamma_op=ctx.gamma_op())
    return checks, extra, {"field": field_, "steps": steps}


def scenario_regularity(ctx):
    r = ctx.cfg["regularity"]
    a = ctx.rc.alpha
    seed = ctx.rc.seed
    checks = []
    extra = {}
    try:
        field_, rep, f0, scale, _ = _run_picard(ctx)
        prob = ctx.problem()
        G = nodal_gamma(ctx.gamma_op(), field_.values)
        ev = solution_evaluator(prob, field_.values, f0, G)
        rng = np.random.default_rng(seed)
        sub_x = prob.space.points[rng.choice(prob.space.size, 32, replace=False)]
        vg = prob.vgrid
        sub_z = vg.nodes[rng.choice(vg.size, 16, replace=False)]
        pts = (np.repeat(sub_x, len(sub_z), axis=0), np.tile(sub_z, (len(sub_x), 1)))
        norms = weighted_norms(ev, a, ctx.dom, points=pts, seed=seed)
        # how much the slowest shell drives the derivative norms
        slow = np.linalg.norm(pts[1], axis=1) <= vg.radii[0] * (1 + 1e-12)
        if slow.any() and (~slow).any():
            fast = weighted_norms(ev, a, ctx.dom, points=(pts[0][~slow], pts[1][~slow]), seed=seed)
            extra["zeta_min_sensitivity"] = {
                "zeta_min": float(ctx.cfg["velocity"].get("zeta_min", 0.05)), "slowest_speed": float(vg.radii[0]),
                "w_alpha_tilde_all": norms["w_alpha_tilde"], "w_alpha_tilde_without_slowest": fast["w_alpha_tilde"],
                "rel_change": abs(norms["w_alpha_tilde"] - fast["w_alpha_tilde"]) / norms["w_alpha_tilde"]}
        checks.append(verify._check("weighted_norms", "||f||_Linf_a <= ||f||_W_a <= ||f||_W~_a, all finite",
                                    all(np.isfinite(v) for v in (norms["linf_alpha"], norms["w_alpha"],
                                                                 norms["w_alpha_tilde"])), **norms))
        vel = vg.nodes[rng.choice(vg.size, int(r["holder_velocities"]), replace=False)]
        hold = {}
        for s in r["sigmas"]:
            hold[s] = holder_seminorm(ev, float(s), a, ctx.dom, vel, n_pairs=int(r["holder_pairs"]), seed=seed)
            checks.append(verify._check(f"holder_sigma_{s}", "|f(x,z) - f(y,z)| e^{a|z|^2} <= C (d^{-1/2} + w_s^{-1})(1+|z|)|x-y|^s",
                                        np.isfinite(hold[s]["seminorm"]), **hold[s]))
        extra["scale"] = scale
    except NonContractiveError as exc:
        checks.append(_fail("regularity_solution", "nonlinear solution exists for small data", exc))
    tab = ctx.table

    def gauss(x, z):
        # two displaced gaussians; a single centred one is an equilibrium and Gamma vanishes
        a = np.array([1.0, 0.0, 0.0])
        bumps = np.exp(-0.3 * np.sum((z - a) ** 2, -1)) + np.exp(-0.3 * np.sum((z + a) ** 2, -1))
        return bumps * (1.0 + 0.2 * x[..., 0])

    def maxw(x, z):
        return 0.7 * maxwellian_sqrt(z) + 0.0 * x[..., 0]

    gd = gamma_derivative_check(tab, ctx.dom, gauss, gauss, alpha=a, n_samples=int(r["gamma_samples"]), seed=seed,
                                **ctx.gamma_kw())
    checks.append(verify._check("gamma_derivative_bounds",
                                "|Gamma|, |grad Gamma| <= C (d^{-1/2} + w^{-1}) (1+|z|)^g e^{-a|z|^2} ||h1|| ||h2||",
                                all(np.isfinite(gd[k]) for k in ("pointwise", "grad_x", "grad_z")),
                                **{k: v for k, v in gd.items() if k != "norms"}))
    gm = gamma_derivative_check(tab, ctx.dom, maxw, maxw, alpha=a, n_samples=8, seed=seed, **ctx.gamma_kw())
    checks.append(verify._check("gamma_vanishes_at_maxwellian", "Gamma(c M^{1/2}, c M^{1/2}) = 0",
                                gm["gamma_sup"] <= 1e-5, gamma_sup=gm["gamma_sup"]))
    w_alpha = a if a > 0 else 0.25
    for p in r["p_values"]:
        p = float(p)
        res = w1p_check(ctx.dom, w_alpha, p)
        if p < 3:
            ok = res["finite"] and res["angular_rel_error"] <= 1e-8
            anchor = "w^{-1} e^{-a|z|^2} in L^p for 1 <= p < 3"
        else:
            ok = (not res["finite"]) and res["monotone_growth"]
            anchor = "w^{-1} e^{-a|z|^2} not in L^p for p >= 3"
        res["status"] = "finite" if res["finite"] else "divergent"
        checks.append(verify._check(f"w1p_p{p:g}", anchor, ok, **res))
    return checks, extra, {}


def _as_triple(result):
    return result if len(result) == 3 else (result[0], result[1], {})


RUNNERS = {"verify-geometry": scenario_geometry, "verify-collision": scenario_collision,
           "verify-transport": scenario_transport, "solve-linear": scenario_linear,
           "solve-nonlinear": scenario_nonlinear, "regularity-report": scenario_regularity}


def write_report(path, scenario, rc, checks, extra, seconds, cache_info):
    failing = [c for c in checks if not c["passed"]]
    report = {"scenario": scenario, "seed": rc.seed, "passed": not failing,
              "failing": [{"name": c["name"], "anchor": c["anchor"]} for c in failing],
              "checks": checks, "config": rc.data, "seconds": seconds, "kernel_cache": cache_info,
              **extra}
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2)
    return report


def run_scenario(ctx, scenario):
    rc = ctx.rc
    t0 = time.perf_counter()
    checks, extra, arts = _as_triple(RUNNERS[scenario](ctx))
    rc.out.mkdir(parents=True, exist_ok=True)
    if "field" in arts:
        write_field_csv(rc.out / "field.csv", arts["field"], seed=rc.seed)
    if "steps" in arts:
        write_iterations_csv(rc.out / "iterations.csv", arts["steps"], seed=rc.seed)
    path = rc.out / f"{REPORT_NAMES[scenario]}_report.json"
    return write_report(path, scenario, rc, checks, extra, time.perf_counter() - t0, ctx.cache_info)


def run(rc):
    """Execute the configured scenario; returns the process exit status."""
    ctx = Context(rc)
    names = [s for s in SCENARIOS if s != "full-suite"] if rc.scenario == "full-suite" else [rc.scenario]
    reports = [run_scenario(ctx, s) for s in names]
    if rc.scenario == "full-suite":
        checks = [dict(c, scenario=r["scenario"]) for r in reports for c in r["checks"]]
        reports = [write_report(rc.out / "full_suite_report.json", "full-suite", rc, checks, {},
                                sum(r["seconds"] for r in reports), ctx.cache_info)]
    failing = [f for r in reports for f in r["failing"]]
    for f in failing:
        print(f"FAIL {f['name']}: {f['anchor']}", file=sys.stderr)
    if not failing:
        print(f"{rc.scenario}: all checks passed")
    return 1 if failing else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="run", description="Run a kinetic-fredholm scenario.")
    ap.add_argument("--config", help="JSON run configuration (defaults are used if omitted)")
    ap.add_argument("--scenario", required=True, choices=SCENARIOS)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--scale", type=float, help="boundary-data scale factor")
    ap.add_argument("--p", type=float, help="single exponent for the W^{1,p} check")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a config entry by dotted path (value parsed as JSON)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = load_config(args)
    except ConfigError as exc:
        print(f"run: error: {exc}", file=sys.stderr)
        return 2
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
