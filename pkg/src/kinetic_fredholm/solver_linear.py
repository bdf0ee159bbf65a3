"""Fixed-point solution of f = J f0 + S phi + S K f and operator probes."""
from dataclasses import dataclass, field, asdict
import json
import logging
import time

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .collision import apply_K, invariant_projector
from .errors import NonContractiveError, ProbeInconclusive
from .fields import PhaseSpaceField, write_field_csv, read_field_csv  # noqa: F401
from . import geometry as geo
from .spatial import SpatialGrid
from .transport import DiscreteTransport, FrequencyProvider, VolumetricSource

log = logging.getLogger(__name__)


@dataclass
class SolveConfig:
    alpha: float = 0.25
    tol: float = 1e-8
    max_iter: int = 500
    damping: float = 0.5
    stagnation_window: int = 5
    stagnation_reduction: float = 0.01
    divergence_window: int = 10
    n_ray: int = 8


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    final_norms: dict = field(default_factory=dict)
    fitted_stability_constant: float = float("nan")
    flags: dict = field(default_factory=lambda: {"converged": False, "diverged": False, "max_iter": False})
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


class LinearProblem:
    """Kernel table, spatial grid and discrete transport bundled together."""

    def __init__(self, dom, table, space=None, n_ray=8):
        self.dom = dom
        self.table = table
        self.vgrid = table.grid
        self.space = space or SpatialGrid(dom)
        self.nu_provider = FrequencyProvider(table.cross_section)
        self.transport = DiscreteTransport(self.space, self.vgrid, table.nu, n_ray=n_ray)

    @property
    def shape(self):
        return self.transport.shape

    def K(self, F):
        """K applied in velocity at every spatial node; F is (n_space, n_velocity[, batch])."""
        F = np.asarray(F)
        if F.ndim == 2:
            return F @ self.table.kop.T
        return np.einsum("ab,xb...->xa...", self.table.kop, F)

    def K_T(self, F):
        F = np.asarray(F)
        if F.ndim == 2:
            return F @ self.table.kop
        return np.einsum("ba,xb...->xa...", self.table.kop, F)

    def SK(self, F):
        return self.transport.apply_S(self.K(F))

    def KSK(self, F):
        return self.K(self.transport.apply_S(self.K(F)))

    def weight(self, alpha):
        return np.exp(alpha * self.vgrid.speeds**2)[None, :]

    def norm(self, F, alpha):
        return float(np.max(np.abs(np.asarray(F) * self.weight(alpha))))

    def boundary_norm(self, f0, alpha):
        """sup |f0(q, z)| e^{alpha|z|^2} over the exit points of the grid rays."""
        if f0 is None:
            return 0.0
        return self.norm(self.transport.J(f0) * np.exp(self.table.nu[None, :] * self.transport.tau), alpha)

    def source_norm(self, phi, alpha):
        """sup |phi| e^{alpha|z|^2}/(1+|z|) at the nodes."""
        if phi is None:
            return 0.0
        vals = phi if isinstance(phi, np.ndarray) else phi(
            *np.broadcast_arrays(self.space.points[:, None, :], self.vgrid.nodes[None, :, :]))
        return self.norm(vals / (1.0 + self.vgrid.speeds)[None, :], alpha)

    def rhs(self, f0=None, phi=None):
        g = np.zeros(self.shape)
        if f0 is not None:
            g += self.transport.J(f0)
        if phi is not None:
            if isinstance(phi, np.ndarray):
                g += self.transport.apply_S(phi)
            else:
                g += self.transport.S_source(phi)
        return g


def solve_linear(dom, table, f0=None, phi=None, config=None, problem=None, space=None, x0=None):
    """Fixed-point iteration for f = J f0 + S phi + S K f.

    ``phi`` may be an analytic source (callable) or nodal values
    (n_space, n_velocity).  ``x0`` is an optional starting field.
    Returns (PhaseSpaceField, SolveReport).
    """
    cfg = config or SolveConfig()
    prob = problem or LinearProblem(dom, table, space=space, n_ray=cfg.n_ray)
    t0 = time.perf_counter()
    g = prob.rhs(f0, phi)
    a = cfg.alpha
    f = g.copy() if x0 is None else np.array(x0, dtype=float, copy=True)
    hist = []
    rep = SolveReport()
    damped = False
    growth = 0
    for it in range(1, cfg.max_iter + 1):
        T = g + prob.SK(f)
        res = prob.norm(f - T, a)
        hist.append(res)
        if res <= cfg.tol:
            rep.flags["converged"] = True
            break
        if len(hist) > 1 and res > hist[-2]:
            growth += 1
        else:
            growth = 0
        if growth >= cfg.divergence_window:
            rho = hist[-1] / hist[-2]
            rep.flags["diverged"] = True
            raise NonContractiveError("residual grew for %d consecutive iterations" % growth,
                                      spectral_radius=rho, history=hist)
        w = len(hist) - 1 - cfg.stagnation_window
        if not damped and w >= 0 and hist[-1] > (1.0 - cfg.stagnation_reduction) * hist[w]:
            damped = True
            log.info("stagnation at iteration %d, switching to damping %.2f", it, cfg.damping)
        f = (1.0 - cfg.damping) * f + cfg.damping * T if damped else T
    else:
        rep.flags["max_iter"] = True
    rep.iterations = len(hist)
    rep.residual_history = hist
    ratios = [hist[k + 1] / hist[k] for k in range(len(hist) - 1) if hist[k] > 0]
    rate = float(np.exp(np.mean(np.log(ratios[-20:])))) if ratios else 0.0
    fnorm = prob.norm(f, a)
    dnorm = prob.boundary_norm(f0, a) + prob.source_norm(phi, a)
    rep.final_norms = {"linf_alpha": fnorm, "f0_linf_alpha": prob.boundary_norm(f0, a),
                       "phi_linf_alpha_1": prob.source_norm(phi, a)}
    rep.fitted_stability_constant = fnorm / dnorm if dnorm > 0 else 0.0
    rep.extra = {"observed_rate": rate, "damped": damped, "seconds": time.perf_counter() - t0,
                 "unknowns": prob.transport.n_unknowns, "alpha": a, "tol": cfg.tol}
    return PhaseSpaceField(prob.space, prob.vgrid, f), rep


def fixed_point_residual(prob, F, f0=None, phi=None, alpha=0.25):
    return prob.norm(F - prob.rhs(f0, phi) - prob.SK(F), alpha)


# ---------------------------------------------------------------- probes

def _weighted_tail_operator(prob, alpha, mask):
    """B = E D_R (K S K) E^{-1} on flattened fields (E = velocity weight)."""
    E = prob.weight(alpha)
    shape = prob.shape
    n = prob.transport.n_unknowns

    def mv(v):
        F = v.reshape(shape) / E
        return (prob.KSK(F) * E * mask).reshape(-1)

    def rmv(v):
        F = v.reshape(shape) * mask * E
        out = prob.K_T(prob.transport.apply_S_transpose(prob.K_T(F)))
        return (out / E).reshape(-1)
    return LinearOperator((n, n), matvec=mv, rmatvec=rmv, dtype=float)


def tail_norm_probe(prob, R_list, alpha=0.25, n_random=16, per_shell=4, seed=0):
    """Weighted sup-norm estimates of (1 - chi_R) K S K for each R.

    Rows are screened with random sign fields, then the exact l1 norm of the
    best few rows of every velocity shell is computed through the transpose.
    Estimates are lower bounds of the discrete operator norm.
    """
    rng = np.random.default_rng(seed)
    R_list = list(R_list)
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be increasing")
    shape = prob.shape
    vg = prob.vgrid
    E = prob.weight(alpha)
    full = _weighted_tail_operator(prob, alpha, np.ones(shape))
    batch = np.concatenate([np.ones((1,) + shape), rng.choice([-1.0, 1.0], size=(n_random,) + shape)])
    screen = np.zeros(shape)
    for v in batch:
        screen = np.maximum(screen, np.abs(full.matvec(v.reshape(-1)).reshape(shape)))
    shell_best = {}
    for k, r in enumerate(vg.radii):
        cols = np.nonzero(vg.radial_index == k)[0]
        sub = screen[:, cols]
        order = np.argsort(sub, axis=None)[::-1][:per_shell]
        best = 0.0
        for flat in order:
            i, jj = np.unravel_index(flat, sub.shape)
            e = np.zeros(shape)
            e[i, cols[jj]] = 1.0
            row = full.rmatvec(e.reshape(-1))
            best = max(best, float(np.sum(np.abs(row))))
        shell_best[k] = best
    est = []
    for R in R_list:
        vals = [shell_best[k] for k, r in enumerate(vg.radii) if r > R]
        est.append(max(vals) if vals else 0.0)
    est = np.array(est)
    good = est > 0
    slope = intercept = float("nan")
    if np.count_nonzero(good) >= 2:
        slope, intercept = np.polyfit(np.log1p(np.array(R_list)[good]), np.log(est[good]), 1)
    return {"R": R_list, "estimates": est.tolist(), "slope": float(slope),
            "intercept": float(intercept), "shell_norms": [shell_best[k] for k in range(len(vg.radii))],
            "shell_radii": vg.radii.tolist(), "alpha": alpha}


def _pair_samples(dom, scales, per_scale, rng):
    """Pairs (x, y) with |x - y| = scale*diam, x spread over boundary-distance bands."""
    xs, ys, ss = [], [], []
    diam = dom.diameter
    inr = float(np.min(dom.axes))
    for s in scales:
        sep = s * diam
        got = 0
        band = 0
        while got < per_scale:
            x = geo.sample_interior(dom, 8 * per_scale, rng)
            d = np.asarray(geo.boundary_distance(dom, x, check=False))
            # cycle through ten boundary-distance bands
            lo, hi = band / 10.0 * inr, (band + 1) / 10.0 * inr
            x = x[(d >= lo) & (d < hi)]
            y = x + sep * geo.random_directions(len(x), rng)
            take = np.nonzero(geo.is_interior(dom, y))[0][:1]
            band = (band + 1) % 10
            if len(take) == 0:
                continue
            xs.append(x[take])
            ys.append(y[take])
            ss.append(sep)
            got += 1
    return np.vstack(xs), np.vstack(ys), np.array(ss)


def _offgrid_nodal(prob, pts, G):
    """S[G](x, z_j) for every velocity node j at arbitrary points x."""
    vg = prob.vgrid
    n = pts.shape[0]
    X = np.repeat(pts, vg.size, axis=0)
    Z = np.tile(vg.nodes, (n, 1))
    vals = prob.transport.evaluate(X, Z, None, G, prob.nu_provider)
    return vals.reshape(n, vg.size)


def smoothing_probe(prob, f, alpha=0.25, ks=range(2, 13), per_scale=12, seed=0):
    """Modulus of continuity of G = K S K f against |x-y|(1+|log|x-y||)."""
    rng = np.random.default_rng(seed)
    F = f.values if isinstance(f, PhaseSpaceField) else np.asarray(f)
    ks = list(ks)
    scales = [2.0**-k for k in ks]
    x, y, sep = _pair_samples(prob.dom, scales, per_scale, rng)
    KF = prob.K(F)
    Gx = _offgrid_nodal(prob, x, KF) @ prob.table.kop.T
    Gy = _offgrid_nodal(prob, y, KF) @ prob.table.kop.T
    w = prob.weight(alpha)
    diff = np.max(np.abs(Gx - Gy) * w, axis=1)
    modulus = sep * (1.0 + np.abs(np.log(sep)))
    ratio = diff / modulus
    per_k = [float(np.max(ratio[np.isclose(sep, s * prob.dom.diameter)])) for s in scales]
    rel = np.array(per_k) / max(per_k)
    slope = float(np.polyfit(ks, rel, 1)[0])
    return {"k": ks, "ratios": per_k, "normalized": rel.tolist(), "trend_slope": slope,
            "bound": max(per_k), "pairs": int(len(sep)), "alpha": alpha}


def compactness_probe(prob, n_fields=50, alpha=0.25, R=3.0, ks=range(2, 13, 2), per_scale=2, seed=0):
    """Images of random unit fields under (S K)^2: x-modulus and velocity tail.

    Each field is +-1 noise scaled to unit L^inf_alpha norm.  For H = S K S K f
    the report gives, per field, the max of |H(x,z) - H(y,z)| e^{alpha|z|^2}
    / (|x-y|(1+|log|x-y||)) over a fixed pair sample, and the weighted sup of
    H over speeds above R.
    """
    rng = np.random.default_rng(seed)
    scales = [2.0**-k for k in ks]
    x, y, sep = _pair_samples(prob.dom, scales, per_scale, rng)
    w = prob.weight(alpha)
    modulus = sep * (1.0 + np.abs(np.log(sep)))
    tail_cols = prob.vgrid.speeds > R
    moduli, tails = [], []
    for _ in range(n_fields):
        F = rng.choice([-1.0, 1.0], size=prob.shape) / w
        src = prob.K(prob.SK(F))
        H = prob.transport.apply_S(src)
        diff = np.abs(_offgrid_nodal(prob, x, src) - _offgrid_nodal(prob, y, src)) * w
        moduli.append(float(np.max(np.max(diff, axis=1) / modulus)))
        tails.append(float(np.max(np.abs(H[:, tail_cols]) * w[:, tail_cols])) if tail_cols.any() else 0.0)
    moduli, tails = np.array(moduli), np.array(tails)
    return {"moduli": moduli.tolist(), "tails": tails.tolist(), "max_modulus": float(moduli.max()),
            "median_modulus": float(np.median(moduli)), "max_tail": float(tails.max()),
            "R": R, "fields": n_fields, "pairs": int(len(sep)), "alpha": alpha}


def coercivity_probe(table, f):
    """-<Lf, f> and ||(I - P) f||^2 in the grid inner product."""
    f = np.asarray(f, dtype=float)
    w = table.grid.weights
    P = invariant_projector(table.grid)
    Lf = table.kop @ f - table.nu * f
    g = f - P @ f
    return {"dirichlet": float(-np.sum(w * Lf * f)), "defect": float(np.sum(w * g * g)),
            "norm2": float(np.sum(w * f * f))}


def fit_coercivity(table, n_samples=100, seed=0):
    rng = np.random.default_rng(seed)
    grid = table.grid
    P = invariant_projector(grid)
    ratios = []
    for _ in range(n_samples):
        g = rng.standard_normal(grid.size) * np.exp(-0.25 * grid.speeds**2)
        f = g - P @ g
        c = coercivity_probe(table, f)
        ratios.append(c["dirichlet"] / c["defect"])
    return {"c0": float(min(ratios)), "ratios": ratios}


def _weighted_system(prob):
    """B = W^{1/2} (I - S K) W^{-1/2} in the L^2 inner product of the grids."""
    wx = prob.space.weights[:, None]
    wv = prob.vgrid.weights[None, :]
    sq = np.sqrt(wx * wv)
    shape = prob.shape
    n = prob.transport.n_unknowns

    def mv(v):
        F = v.reshape(shape) / sq
        return ((F - prob.SK(F)) * sq).reshape(-1)

    def rmv(v):
        F = v.reshape(shape) * sq
        out = F - prob.K_T(prob.transport.apply_S_transpose(F))
        return (out / sq).reshape(-1)
    return LinearOperator((n, n), matvec=mv, rmatvec=rmv, dtype=float)


def injectivity_probe(prob, max_unknowns=20000, tol=1e-6, max_iter=60, seed=0):
    """Smallest singular value of I - S K by inverse iteration on B^T B."""
    n = prob.transport.n_unknowns
    if n > max_unknowns:
        raise ValueError(f"{n} unknowns exceeds the probe limit {max_unknowns}")
    B = _weighted_system(prob)
    BT = LinearOperator(B.shape, matvec=B.rmatvec, rmatvec=B.matvec, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    sigma_prev = None
    history = []
    for it in range(max_iter):
        # z = (B^T B)^{-1} x, so x tends to the smallest right singular vector
        y, i1 = gmres(BT, x, rtol=1e-12, atol=0.0, restart=200, maxiter=50)
        z, i2 = gmres(B, y, rtol=1e-12, atol=0.0, restart=200, maxiter=50)
        if i1 or i2:
            raise ProbeInconclusive("inner GMRES solve failed", estimate=sigma_prev)
        nz = np.linalg.norm(z)
        x = z / nz
        sigma = float(np.linalg.norm(B.matvec(x)))
        history.append(sigma)
        if sigma_prev is not None and abs(sigma - sigma_prev) <= tol * sigma:
            break
        sigma_prev = sigma
    else:
        raise ProbeInconclusive("inverse iteration did not converge", estimate=history[-1])
    zero = np.linalg.norm(B.matvec(np.zeros(n)))
    return {"sigma_min": history[-1], "iterations": len(history), "history": history,
            "unknowns": n, "image_of_zero": float(zero)}
