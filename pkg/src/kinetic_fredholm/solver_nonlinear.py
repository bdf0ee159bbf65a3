"""Picard iteration for the weakly nonlinear problem f = J f0 + S (K f + Gamma(f, f))."""
from dataclasses import dataclass, field
import csv
import logging
import time

import numpy as np

from .collision import GammaOperator
from .errors import InsufficientData, NonContractiveError
from .fields import CSV_VERSION, PhaseSpaceField
from .solver_linear import LinearProblem, SolveConfig, SolveReport, solve_linear

log = logging.getLogger(__name__)

ITERATION_HEADER = ["step", "norm", "increment", "ratio", "wall_time"]


@dataclass
class PicardConfig:
    alpha: float = 0.25
    tol: float = 1e-7
    max_steps: int = 50
    # consecutive non-contracting steps tolerated before giving up
    patience: int = 3
    # inner solves must be well below the Picard increments being compared
    linear: SolveConfig = field(default_factory=lambda: SolveConfig(tol=1e-11, max_iter=2000))


def nodal_gamma(op, F):
    """Gamma(F, F) at every spatial node; F is (n_space, n_velocity)."""
    return op(F.T, F.T).T


def picard_solve(dom, table, f0, config=None, problem=None, gamma_op=None):
    """Picard iteration f_{i+1} = solve_linear(f0, Gamma(f_i, f_i)).

    Each inner solve is warm-started from the previous iterate.  Returns
    (PhaseSpaceField, SolveReport); per-step diagnostics are in
    ``report.extra["steps"]``.
    """
    cfg = config or PicardConfig()
    lin = cfg.linear
    lin.alpha = cfg.alpha
    prob = problem or LinearProblem(dom, table, n_ray=lin.n_ray)
    op = gamma_op or GammaOperator(table.cross_section, table.grid)
    a = cfg.alpha
    t0 = time.perf_counter()
    rep = SolveReport()
    f0_norm = prob.boundary_norm(f0, a)

    field_, r1 = solve_linear(dom, table, f0, None, lin, problem=prob)
    F = field_.values
    steps = [{"step": 1, "norm": prob.norm(F, a), "increment": prob.norm(F, a), "ratio": float("nan"),
              "wall_time": time.perf_counter() - t0, "inner_iterations": r1.iterations}]
    hist = [steps[0]["increment"]]
    iterates = [F]
    bad = 0
    if hist[0] <= cfg.tol:
        rep.flags["converged"] = True
    for step in range(2, cfg.max_steps + 1):
        if rep.flags["converged"]:
            break
        G = nodal_gamma(op, F)
        new, r = solve_linear(dom, table, f0, G, lin, problem=prob, x0=F)
        Fn = new.values
        inc = prob.norm(Fn - F, a)
        ratio = inc / hist[-1] if hist[-1] > 0 else 0.0
        steps.append({"step": step, "norm": prob.norm(Fn, a), "increment": inc, "ratio": ratio,
                      "wall_time": time.perf_counter() - t0, "inner_iterations": r.iterations})
        log.info("picard step %d: increment %.3e ratio %.3f", step, inc, ratio)
        hist.append(inc)
        F = Fn
        iterates.append(F)
        bad = bad + 1 if ratio >= 1.0 else 0
        if bad >= cfg.patience or not np.isfinite(inc):
            rep.flags["diverged"] = True
            raise NonContractiveError("Picard ratio >= 1 for %d consecutive steps" % bad,
                                      spectral_radius=ratio, history=hist)
        if inc <= cfg.tol:
            rep.flags["converged"] = True
    else:
        rep.flags["max_iter"] = not rep.flags["converged"]

    res = nonlinear_residual(prob, op, F, f0, a)
    norms = [s["norm"] for s in steps]
    rep.iterations = len(steps)
    rep.residual_history = hist
    rep.final_norms = {"linf_alpha": prob.norm(F, a), "f0_linf_alpha": f0_norm}
    rep.fitted_stability_constant = prob.norm(F, a) / f0_norm if f0_norm > 0 else 0.0
    rep.extra = {"steps": steps, "ratios": [s["ratio"] for s in steps[1:]],
                 "nonlinear_residual": res, "iterate_norms": norms, "alpha": a, "tol": cfg.tol,
                 "seconds": time.perf_counter() - t0, "gamma_truncated_points": op.truncated}
    return PhaseSpaceField(prob.space, prob.vgrid, F), rep


def nonlinear_residual(prob, op, F, f0, alpha):
    """sup-norm of f - J f0 - S Gamma(f, f) - S K f."""
    G = nodal_gamma(op, F)
    R = F - prob.rhs(f0, G) - prob.SK(F)
    return prob.norm(R, alpha)


def quadratic_bound_fit(norms, f0_norm):
    """Smallest C with ||f_{i+1}|| <= C (||f0|| + ||f_i||^2) over the history.

    ``norms`` are the iterate norms ||f_1||, ||f_2||, ...; the first step is
    checked against f_0 = 0.  The returned C is at least 1.
    """
    norms = [float(v) for v in norms]
    if len(norms) < 3:
        raise InsufficientData("need at least three iterates, got %d" % len(norms))
    prev = [0.0] + norms[:-1]
    ratios = []
    for cur, p in zip(norms, prev):
        rhs = f0_norm + p * p
        if rhs > 0:
            ratios.append(cur / rhs)
        elif cur > 0:
            ratios.append(float("inf"))
    raw = max(ratios) if ratios else 0.0
    C = max(1.0, raw)
    small = f0_norm < 1.0 / (8.0 * C * C)
    bound = 1.0 / (4.0 * C)
    return {"C": C, "C_raw": raw, "ratios": ratios, "f0_norm": f0_norm,
            "small_data": bool(small), "iterate_bound": bound,
            "iterates_within_bound": bool(max(norms) <= bound),
            "implication_holds": bool((not small) or max(norms) <= bound)}


def contraction_threshold(dom, table, f0, config=None, problem=None, gamma_op=None,
                          start=1.0, max_doublings=12, bisections=4):
    """Empirical smallness threshold: largest scale s for which Picard on s*f0 converges.

    The scale is doubled until the iteration fails, then bisected (in log
    scale) between the last success and the first failure.
    """
    cfg = config or PicardConfig(max_steps=30)
    prob = problem or LinearProblem(dom, table, n_ray=cfg.linear.n_ray)
    op = gamma_op or GammaOperator(table.cross_section, table.grid)

    def ok(s):
        try:
            _, rep = picard_solve(dom, table, f0.scaled(s), cfg, problem=prob, gamma_op=op)
        except NonContractiveError:
            return False
        return rep.flags["converged"]

    lo, hi = None, None
    s = start
    for _ in range(max_doublings):
        if ok(s):
            lo = s
            s *= 2.0
        else:
            hi = s
            break
    if lo is None:
        # even the starting scale fails: search downward
        s = start
        while lo is None and s > start * 2.0**-max_doublings:
            s *= 0.5
            if ok(s):
                lo = s
            else:
                hi = s
    if lo is None or hi is None:
        return {"threshold": lo, "upper": hi, "bracketed": False}
    for _ in range(bisections):
        mid = np.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return {"threshold": lo, "upper": hi, "bracketed": True,
            "f0_norm_at_threshold": prob.boundary_norm(f0.scaled(lo), cfg.alpha)}


def write_iterations_csv(path, steps, seed=None):
    with open(path, "w", newline="") as fh:
        fh.write(f"# kinetic-fredholm v{CSV_VERSION}" + (f" seed={seed}" if seed is not None else "") + "\n")
        w = csv.writer(fh)
        w.writerow(ITERATION_HEADER)
        for s in steps:
            w.writerow([s["step"]] + [repr(float(s[k])) for k in ITERATION_HEADER[1:]])
