"""Weighted norms, Hoelder seminorms, derivative bounds for Gamma and the
W^{1,p} integrability check of the inverse weight."""
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from . import geometry as geo
from .collision import GammaOperator, SQRT_M_NORM
from .transport import chord_time
from .velocity import VelocityInterpolator, sphere_rule

log = logging.getLogger(__name__)


# ------------------------------------------------------------ evaluators

def field_evaluator(field):
    """Off-grid values of a nodal field: shell interpolation in x, grid rule in z."""
    vi = VelocityInterpolator(field.velocity)
    F = field.values

    def ev(x, z):
        x, z = np.broadcast_arrays(np.atleast_2d(np.asarray(x, dtype=float)),
                                   np.atleast_2d(np.asarray(z, dtype=float)))
        P = field.space.interpolation_matrix(x).tocoo()
        idx, wts = vi.stencil(z)
        r, m = P.row, P.col
        vals = np.sum(wts[r] * F[m[:, None], idx[r]], axis=1)
        return np.bincount(r, weights=P.data * vals, minlength=len(x))
    return ev


def solution_evaluator(prob, F, f0=None, G=None, n_ray=24):
    """Off-grid values of J f0 + S[K F + G] (the integral form of a solution).

    Unlike plain interpolation this is smooth in x along every ray, so finite
    differences of it see the transport structure rather than the mesh.
    """
    src = prob.K(F)
    if G is not None:
        src = src + G

    def ev(x, z):
        x, z = np.broadcast_arrays(np.atleast_2d(np.asarray(x, dtype=float)),
                                   np.atleast_2d(np.asarray(z, dtype=float)))
        return prob.transport.evaluate(x, z, f0, src, prob.nu_provider, n_ray=n_ray)
    return ev


def _as_evaluator(f):
    if callable(f):
        return f
    return field_evaluator(f)


# ------------------------------------------------------------ norms

def _gradients(dom, ev, x, z, hx, hv):
    """Central differences in x and z; one-sided in x where the stencil leaves the domain."""
    n = len(x)
    gx = np.zeros((n, 3))
    gz = np.zeros((n, 3))
    one_sided = np.zeros(n, dtype=bool)
    f = ev(x, z)
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        xp, xm = x + hx * e, x - hx * e
        inp, inm = geo.is_interior(dom, xp), geo.is_interior(dom, xm)
        both = inp & inm
        fp = np.where(inp, ev(np.where(inp[:, None], xp, x), z), f)
        fm = np.where(inm, ev(np.where(inm[:, None], xm, x), z), f)
        span = np.where(both, 2.0 * hx, hx)
        gx[:, k] = (fp - fm) / span
        one_sided |= ~both
        hz = hv[:, None] * e
        gz[:, k] = (ev(x, z + hz) - ev(x, z - hz)) / (2.0 * hv)
    return f, gx, gz, one_sided


def weighted_norms(f, alpha, dom=None, points=None, max_points=2000, seed=0, hx=None):
    """sup-norm, W_alpha and tilde-W_alpha estimates over sampled nodes.

    ``f`` is a PhaseSpaceField or an evaluator (x, z) -> values; in the
    latter case ``points`` = (x, z) arrays must be given.  Gradients use
    central differences: spatial step from the shell spacing, velocity step
    1e-4 (1 + |z|).
    """
    if not (0.0 <= alpha < 0.5):
        raise ValueError("alpha must lie in [0, 1/2)")
    if points is None:
        space, vg = f.space, f.velocity
        dom = dom or space.domain
        rng = np.random.default_rng(seed)
        n_all = space.size * vg.size
        pick = np.arange(n_all) if n_all <= max_points else rng.choice(n_all, max_points, replace=False)
        ix, iv = np.unravel_index(pick, (space.size, vg.size))
        x, z = space.points[ix], vg.nodes[iv]
        if hx is None:
            hx = 0.5 * float(np.min(np.diff(space.shells))) * float(np.min(dom.axes))
        linf_all = f.linf_alpha(alpha)
    else:
        x, z = (np.asarray(p, dtype=float) for p in points)
        linf_all = None
        if hx is None:
            hx = 1e-3 * dom.diameter
    ev = _as_evaluator(f)
    speed = np.linalg.norm(z, axis=1)
    hv = 1e-4 * (1.0 + speed)
    vals, gx, gz, one_sided = _gradients(dom, ev, x, z, hx, hv)
    ew = np.exp(alpha * speed**2)
    w = np.asarray(geo.weight_w(dom, x, z, check=False))
    linf = float(np.max(np.abs(vals) * ew)) if linf_all is None else max(linf_all, float(np.max(np.abs(vals) * ew)))
    sx = float(np.max(np.linalg.norm(gx, axis=1) * w * ew))
    sz = float(np.max(np.linalg.norm(gz, axis=1) * w * ew))
    out = {"linf_alpha": linf, "w_alpha": linf + sx, "w_alpha_tilde": linf + sx + sz,
           "grad_x_sup": sx, "grad_z_sup": sz, "samples": int(len(x)),
           "one_sided": int(np.count_nonzero(one_sided)), "hx": hx, "alpha": alpha}
    assert out["linf_alpha"] <= out["w_alpha"] <= out["w_alpha_tilde"]
    return out


def holder_pairs(dom, n_pairs=2000, k_range=(2, 12), seed=0):
    """Pairs stratified over dyadic separations and boundary-distance deciles."""
    rng = np.random.default_rng(seed)
    ks = np.arange(k_range[0], k_range[1] + 1)
    inr = float(np.min(dom.axes))
    xs, ys = [], []
    slot = 0
    while len(xs) < n_pairs:
        k = ks[slot % len(ks)]
        band = (slot // len(ks)) % 10
        sep = 2.0**-k * dom.diameter
        cand = geo.sample_interior(dom, 64, rng)
        d = np.asarray(geo.boundary_distance(dom, cand, check=False))
        cand = cand[(d >= band * inr / 10) & (d < (band + 1) * inr / 10)]
        y = cand + sep * geo.random_directions(len(cand), rng)
        ok = np.nonzero(geo.is_interior(dom, y))[0]
        if len(ok):
            xs.append(cand[ok[0]])
            ys.append(y[ok[0]])
            slot += 1
    return np.array(xs), np.array(ys)


def holder_seminorm(f, sigma, alpha, dom, velocities, sample_pairs=None, n_pairs=2000, seed=0):
    """Max over sampled pairs of the weighted Hoelder quotient in x.

    The quotient is |f(x,z) - f(y,z)| e^{alpha|z|^2} divided by
    (d_{x,y}^{-1/2} + w_sigma^{-1}) (1 + |z|) |x - y|^sigma.
    ``velocities`` is an (m, 3) array; every pair is tested at every z.
    """
    ev = _as_evaluator(f)
    if sample_pairs is None:
        sample_pairs = holder_pairs(dom, n_pairs, seed=seed)
    x, y = sample_pairs
    Z = np.atleast_2d(np.asarray(velocities, dtype=float))
    n, m = len(x), len(Z)
    X = np.repeat(x, m, axis=0)
    Y = np.repeat(y, m, axis=0)
    ZZ = np.tile(Z, (n, 1))
    diff = np.abs(ev(X, ZZ) - ev(Y, ZZ))
    pg = geo.pair_geometry(dom, X, Y, ZZ, sigma, check=False)
    speed = np.linalg.norm(ZZ, axis=1)
    sep = np.linalg.norm(X - Y, axis=1)
    denom = (np.asarray(pg.d_min) ** -0.5 + 1.0 / np.asarray(pg.w_sigma)) * (1.0 + speed) * sep**sigma
    q = diff * np.exp(alpha * speed**2) / denom
    j = int(np.argmax(q))
    return {"seminorm": float(q[j]), "pairs": int(n), "velocities": int(m), "sigma": sigma,
            "alpha": alpha, "worst": {"x": X[j].tolist(), "y": Y[j].tolist(), "z": ZZ[j].tolist()},
            "statement": f"no violation found at {n * m} samples"}


# ------------------------------------------------------------ Gamma bounds

def gamma_derivative_check(table, dom, h1, h2, alpha=0.25, n_samples=24, seed=0,
                           norms=None, hx=1e-3, hz=2e-2, sigma_order=None, radial_order=3):
    """Fitted constants in the pointwise bounds for Gamma and its gradients.

    ``h1``/``h2`` are analytic fields h(x, Z) evaluated on velocity arrays.
    Returns the max over samples of |Gamma| / (|h1|_inf |h2|_inf e^{-alpha|z|^2}(1+|z|)^g)
    and of the x- and z-gradient norms against
    (d_x^{-1/2} + w^{-1}) ||h1||~ ||h2||~ e^{-alpha|z|^2} (1+|z|)^g.
    """
    cs, grid = table.cross_section, table.grid
    rng = np.random.default_rng(seed)
    x = geo.sample_interior(dom, n_samples, rng, margin=4 * hx)
    # velocity samples do not depend on the grid so refinements are comparable
    z = rng.standard_normal((n_samples, 3))
    z *= np.minimum(1.0, 0.5 * grid.cutoff / np.linalg.norm(z, axis=1))[:, None]
    # Gamma is piecewise linear in z at the mesh scale; step well above it
    hv = hz * (1.0 + np.linalg.norm(z, axis=1))
    # evaluation points: z itself and the six velocity offsets
    offs = [np.zeros(3)] + [s * e for e in np.eye(3) for s in (1.0, -1.0)]
    at = np.concatenate([z + hv[:, None] * o for o in offs])
    op = GammaOperator(cs, grid, sigma_order=sigma_order, radial_order=radial_order, at=at)
    nodes = grid.nodes

    def gamma_at(xi, rows):
        H1 = np.stack([h1(np.broadcast_to(p, nodes.shape), nodes) for p in xi], axis=1)
        H2 = np.stack([h2(np.broadcast_to(p, nodes.shape), nodes) for p in xi], axis=1)
        g = SQRT_M_NORM * (op.gain(H1, H2) - op.loss(H1, H2))
        return g[rows, np.arange(len(xi))]

    n = n_samples
    base = np.arange(n)
    G0 = gamma_at(x, base)
    gx = np.zeros((n, 3))
    gz = np.zeros((n, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = hx
        gx[:, k] = (gamma_at(x + e, base) - gamma_at(x - e, base)) / (2 * hx)
        gz[:, k] = (gamma_at(x, base + (2 * k + 1) * n) - gamma_at(x, base + (2 * k + 2) * n)) / (2 * hv)
    if norms is None:
        norms = []
        xs = geo.sample_interior(dom, 2000, rng)
        zs = rng.uniform(-1.0, 1.0, (2000, 3)) * (0.5 * grid.cutoff)
        for h in (h1, h2):
            norms.append(weighted_norms(h, alpha, dom, points=(xs, zs)))
    n1, n2 = norms
    speed = np.linalg.norm(z, axis=1)
    shape = np.exp(-alpha * speed**2) * (1.0 + speed) ** cs.gamma
    d = np.asarray(geo.boundary_distance(dom, x, check=False))
    w = np.asarray(geo.weight_w(dom, x, z, check=False))
    geo_w = d**-0.5 + 1.0 / w
    big = n1["w_alpha_tilde"] * n2["w_alpha_tilde"]
    small = n1["linf_alpha"] * n2["linf_alpha"]

    def ratio(num, den):
        return float(np.max(num / den)) if den.any() and np.all(den > 0) else 0.0

    return {"pointwise": ratio(np.abs(G0), small * shape),
            "grad_x": ratio(np.linalg.norm(gx, axis=1), big * geo_w * shape),
            "grad_z": ratio(np.linalg.norm(gz, axis=1), big * geo_w * shape),
            "samples": n, "norms": {"h1": n1, "h2": n2}, "gamma_sup": float(np.max(np.abs(G0)))}


# ------------------------------------------------------------ W^{1,p}

def _graded_rule(J, npts=8, top=1.0):
    """Gauss rule on [top 2^-J, top] with geometric panels [2^-(j+1), 2^-j]*top."""
    x, w = leggauss(npts)
    nodes, wts = [], []
    for j in range(J):
        a, b = top * 2.0 ** -(j + 1), top * 2.0**-j
        nodes.append(0.5 * (b - a) * (x + 1) + a)
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(wts)


def _radial_factor(p, alpha, J, rho_split=1.0, n_tail=48):
    """int_0^inf (1+r)^p r^{2-p} e^{-alpha p r^2} dr with the lower end cut at 2^-J."""
    rn, rw = _graded_rule(J, top=rho_split)
    top = rho_split + np.sqrt(40.0 / (alpha * p))
    x, w = leggauss(n_tail)
    rt = 0.5 * (top - rho_split) * (x + 1) + rho_split
    r = np.concatenate([rn, rt])
    wr = np.concatenate([rw, 0.5 * (top - rho_split) * w])
    return float(np.sum(wr * (1 + r) ** p * r ** (2 - p) * np.exp(-alpha * p * r * r)))


def _boundary_angular_factor(dom, p, J, surface_order=17, n_phi=16):
    """int over the boundary and incoming hemisphere of chord(y, w) mu^{1-p}."""
    U, wU = sphere_rule(surface_order)
    Y = dom.origin + dom.axes * U
    dS = geo.surface_element(dom, U) * wU
    normals = geo.outward_normal(dom, Y)
    mu, wmu = _graded_rule(J)
    ph = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    s = np.sqrt(1 - mu * mu)
    total = 0.0
    for y, nrm, ds in zip(Y, normals, dS):
        e2 = np.cross(nrm, [1.0, 0.0, 0.0] if abs(nrm[0]) < 0.9 else [0.0, 1.0, 0.0])
        e2 /= np.linalg.norm(e2)
        e3 = np.cross(nrm, e2)
        om = (-mu[:, None, None] * nrm + s[:, None, None] * (np.cos(ph)[None, :, None] * e2
                                                           + np.sin(ph)[None, :, None] * e3))
        L = chord_time(dom, y, om.reshape(-1, 3)).reshape(len(mu), n_phi)
        total += ds * float(np.sum(wmu[:, None] * (2 * np.pi / n_phi) * L * mu[:, None] ** (1 - p)))
    return total


def angular_closed_form(p):
    """int_0^1 mu^{2-p} d mu = 1/(3-p) for p < 3, infinite otherwise."""
    return 1.0 / (3.0 - p) if p < 3 else float("inf")


def w1p_check(dom, alpha, p, levels=(8, 16, 24, 32), conv_tol=0.01):
    """Integral of (w^{-1} e^{-alpha|z|^2})^p over Omega x R^3 by the boundary form.

    The phase-space integral is rewritten over incoming boundary pairs and
    travel time; it factors into a boundary/angular part and a speed part.
    Both are integrated on geometric panels reaching down to 2^-J, for each
    J in ``levels``.  Finite means the last two levels agree to ``conv_tol``.
    """
    if alpha <= 0 or p < 1:
        raise ValueError("need alpha > 0 and p >= 1")
    vals = []
    for J in levels:
        vals.append(_boundary_angular_factor(dom, p, J) * _radial_factor(p, alpha, J))
    vals = np.array(vals)
    rel = float(abs(vals[-1] - vals[-2]) / abs(vals[-1]))
    growth = bool(np.all(np.diff(vals) > 0))
    slope = float(np.polyfit(np.log(levels), np.log(vals), 1)[0])
    closed = angular_closed_form(p)
    out = {"p": p, "alpha": alpha, "levels": list(levels), "numeric_integral": vals.tolist(),
           "rel_change": rel, "monotone_growth": growth, "log_slope": slope,
           "angular_closed_form": closed, "finite": bool(p < 3 and rel <= conv_tol)}
    if p < 3:
        num, _ = quad(lambda m: m ** (2.0 - p), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
        out["angular_numeric"] = num
        out["angular_rel_error"] = abs(num - closed) / closed
    if dom.shape == "ball" and p < 3:
        R = dom.radius
        rad, _ = quad(lambda r: (1 + r) ** p * r ** (2 - p) * np.exp(-alpha * p * r * r), 0, np.inf,
                      epsabs=0, epsrel=1e-12, limit=200)
        out["ball_exact"] = 4 * np.pi * R**2 * 2 * R * 2 * np.pi * closed * rad
    return out
