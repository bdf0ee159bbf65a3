"""Collision operator pieces for the cross section B0 |u|^gamma sin(t) cos(t).

The linearised kernel ``k`` is evaluated from a Carleman-type reduction of
the gain terms: for z = v - zeta, n = z/|z| and b = |zeta - (zeta.n) n|,

    k_gain = 2 B0 pi^{-3/2} / |z| * exp(-((v.n)^2 + (zeta.n)^2) / 2) * I_gamma(|z|, b)
    I_gamma(a, b) = 2 pi int_0^inf s (a^2 + s^2)^{(gamma-1)/2} exp(-(s-b)^2) i0e(2 s b) ds

with I_1 = pi.  The loss contribution is pi B0 M^{1/2}(zeta) M^{1/2}(v) |z|^gamma.
"""
from dataclasses import dataclass, field
import logging
import time

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import ellipk, erf, gamma as gamma_fn, i0e

from .errors import DegenerateCollision, GridError, QuadratureError
from .velocity import VelocityGrid, VelocityInterpolator, sphere_rule

log = logging.getLogger(__name__)

SQRT_M_NORM = np.pi**-0.75


@dataclass(frozen=True)
class CrossSection:
    b0: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError("b0 must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


def maxwellian(z):
    z = np.asarray(z, dtype=float)
    return np.pi**-1.5 * np.exp(-np.sum(z * z, axis=-1))


def maxwellian_sqrt(z):
    z = np.asarray(z, dtype=float)
    return SQRT_M_NORM * np.exp(-0.5 * np.sum(z * z, axis=-1))


def orthonormal_completion(u, basis_choice=None):
    """Unit vectors e2, e3 completing the unit vector u.

    ``basis_choice`` may be a vector to project into the plane orthogonal to u
    (it becomes e2), or an angle rotating the default completion.
    """
    u = np.asarray(u, dtype=float)
    if basis_choice is None or np.isscalar(basis_choice):
        ref = np.where(np.abs(u[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        e2 = np.cross(u, ref)
        e2 /= np.linalg.norm(e2, axis=-1, keepdims=True)
        e3 = np.cross(u, e2)
        if basis_choice is not None:
            c, s = np.cos(basis_choice), np.sin(basis_choice)
            e2, e3 = c * e2 + s * e3, -s * e2 + c * e3
        return e2, e3
    ref = np.asarray(basis_choice, dtype=float)
    e2 = ref - np.sum(ref * u, axis=-1, keepdims=True) * u
    e2 /= np.linalg.norm(e2, axis=-1, keepdims=True)
    return e2, np.cross(u, e2)


def _relative(z, zs):
    u = np.asarray(zs, dtype=float) - np.asarray(z, dtype=float)
    un = np.linalg.norm(u, axis=-1)
    if np.any(un == 0.0):
        raise DegenerateCollision("coincident velocities")
    return u, un


def post_collision(z, zs, theta, phi, basis_choice=None):
    """zeta' = zeta + ((zeta_* - zeta).omega) omega and its partner."""
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    u, un = _relative(z, zs)
    uh = u / un[..., None]
    e2, e3 = orthonormal_completion(uh, basis_choice)
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    omega = np.cos(theta) * uh + np.sin(theta) * (np.cos(phi) * e2 + np.sin(phi) * e3)
    proj = np.sum(u * omega, axis=-1, keepdims=True) * omega
    return z + proj, zs - proj


def sigma_post_collision(z, zs, sigma):
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    _, un = _relative(z, zs)
    mid = 0.5 * (z + zs)
    half = 0.5 * un[..., None] * np.asarray(sigma, dtype=float)
    return mid + half, mid - half


def sphere_min_closed_form(z, zs):
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    _relative(z, zs)
    plus = np.linalg.norm(z + zs, axis=-1)
    minus = np.linalg.norm(z - zs, axis=-1)
    with np.errstate(divide="ignore"):
        return 2.0 * np.pi * np.minimum(np.where(plus > 0, 1.0 / plus, np.inf), 1.0 / minus)


def _sphere_theta_integrand(theta, p0, uh, e2, e3, un, sign):
    c, s = np.cos(theta), np.sin(theta)
    p = p0 + sign * un * c * c * uh
    q = un * c * s
    A = p @ p + q * q
    B = 2.0 * abs(q) * np.hypot(p @ e2, p @ e3)
    if A + B <= 0.0:
        return 0.0
    # m = 1 only where the ring passes through 0 (a log singularity of measure zero)
    m = min(2.0 * B / (A + B), 1.0 - 1e-16)
    return s * c * 4.0 * ellipk(m) / np.sqrt(A + B)


def sphere_min_integral(z, zs, which="prime", epsrel=1e-10):
    """Integral of sin(t)cos(t)/|post velocity| over the collision hemisphere.

    The azimuthal integral is done exactly (complete elliptic integral), the
    polar one adaptively.  Returns (closed_form, quadrature).
    """
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    u, un = _relative(z, zs)
    uh = u / un
    e2, e3 = orthonormal_completion(uh)
    if which == "prime":
        p0, sign = z, 1.0
    elif which == "star":
        p0, sign = zs, -1.0
    else:
        raise ValueError("which must be 'prime' or 'star'")
    # the ring of post velocities can pass through 0 where its centre has no
    # component along uh; split the polar integral there
    c2 = -sign * float(p0 @ uh) / un
    pts = [float(np.arccos(np.sqrt(c2)))] if 0.0 < c2 < 1.0 else None
    val, err = quad(_sphere_theta_integrand, 0.0, 0.5 * np.pi, points=pts,
                    args=(p0, uh, e2, e3, un, sign), epsabs=0.0, epsrel=epsrel, limit=400)
    return float(sphere_min_closed_form(z, zs)), val


def _nu_radial(r, g):
    if r == 0.0:
        return 4.0 * np.pi * 0.5 * gamma_fn(1.5 + 0.5 * g)

    def f(s):
        return s ** (1.0 + g) * np.exp(-(s - r) ** 2) * (-np.expm1(-4.0 * s * r))
    lo = max(0.0, r - 40.0)
    val, err = quad(f, lo, r + 40.0, points=[r] if r > lo else None,
                    epsabs=0.0, epsrel=1e-13, limit=400)
    return np.pi / r * val


def collision_frequency(cs, speed):
    """nu(|zeta|) = B0 pi^{-1/2} int exp(-|u|^2) |zeta - u|^gamma du.

    Angular part integrated exactly; the radial integral adaptively.
    """
    speed = np.asarray(speed, dtype=float)
    flat = speed.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.array([_nu_radial(float(r), cs.gamma) for r in uniq])
    out = cs.b0 * np.pi**-0.5 * vals[inv].reshape(speed.shape)
    return out.item() if out.ndim == 0 else out


def collision_frequency_hard_sphere(b0, speed):
    """Closed form of nu for gamma = 1."""
    r = np.asarray(speed, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    val = np.exp(-r * r) + (2.0 * r + 1.0 / safe) * 0.5 * np.sqrt(np.pi) * erf(r)
    val = np.where(r > 0, val, 2.0)
    return b0 * np.sqrt(np.pi) * val


def e_delta(z, zs, delta):
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    u, un = _relative(z, zs)
    e = np.sum(z * z, axis=-1) - np.sum(zs * zs, axis=-1)
    return np.exp(-0.25 * (1.0 - delta) * (un * un + (e / un) ** 2))


def e_delta_factored(z, zs, delta, a):
    if not 0.0 <= a < 0.5 * (1.0 - delta):
        raise ValueError("need 0 <= a < (1 - delta)/2")
    z = np.asarray(z, dtype=float)
    zs = np.asarray(zs, dtype=float)
    d = z - zs
    dn = np.linalg.norm(d, axis=-1)
    if np.any(dn == 0.0):
        raise DegenerateCollision("coincident velocities")
    a1 = (1 - delta + 2 * a) * (1 - delta - 2 * a) / (4 * (1 - delta))
    a2 = (1 - delta - 2 * a) / (2 * (1 - delta))
    t = np.sum(d * zs, axis=-1) / dn + a2 * dn
    return (np.exp(-a * np.sum(z * z, axis=-1)) * np.exp(-a1 * dn * dn)
            * np.exp(-(1 - delta) * t * t) * np.exp(a * np.sum(zs * zs, axis=-1)))


def _i_gamma(a, b, g, npts):
    """2 pi int_0^inf s (a^2+s^2)^{(g-1)/2} exp(-(s-b)^2) i0e(2sb) ds on graded panels."""
    width = 8.0
    lo = np.maximum(b - width, 0.0)
    hi = b + width
    geo = a[:, None] * 2.0 ** np.arange(24)[None, :]
    brk = np.concatenate([np.zeros_like(a)[:, None], lo[:, None], b[:, None],
                          hi[:, None], np.minimum(geo, 1.0)], axis=1)
    brk = np.sort(np.clip(brk, 0.0, hi[:, None]), axis=1)
    x, w = leggauss(npts)
    left, right = brk[:, :-1], brk[:, 1:]
    half = 0.5 * (right - left)
    s = (left + half)[..., None] + half[..., None] * x
    ws = half[..., None] * w
    bb = b[:, None, None]
    aa = a[:, None, None]
    f = s * (aa * aa + s * s) ** (0.5 * (g - 1.0)) * np.exp(-(s - bb) ** 2) * i0e(2.0 * s * bb)
    return 2.0 * np.pi * np.sum(f * ws, axis=(1, 2))


def kernel_parts(cs, z, v, rtol=1e-6, fast_path=True, i_gamma=None):
    """Return (gain, loss) parts of k(z, v); k = gain - loss.

    ``i_gamma`` optionally replaces the panel quadrature of I_gamma by a
    precomputed interpolant (a, b) -> I.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    z, v = np.broadcast_arrays(z, v)
    shp = z.shape[:-1]
    z = z.reshape(-1, 3)
    v = v.reshape(-1, 3)
    d = v - z
    a = np.linalg.norm(d, axis=1)
    if np.any(a == 0.0):
        raise DegenerateCollision("kernel is singular at coincident velocities")
    n = d / a[:, None]
    zn = np.sum(z * n, axis=1)
    vn = zn + a
    b = np.linalg.norm(z - zn[:, None] * n, axis=1)
    g = cs.gamma
    if g == 1.0 and fast_path:
        I = np.full_like(a, np.pi)
    elif i_gamma is not None:
        I = i_gamma(a, b)
    else:
        I = np.empty_like(a)
        for lo in range(0, len(a), 4096):
            sl = slice(lo, lo + 4096)
            coarse = _i_gamma(a[sl], b[sl], g, 16)
            fine = _i_gamma(a[sl], b[sl], g, 32)
            rel = np.abs(fine - coarse) / np.abs(fine)
            if np.any(rel > rtol):
                bad = int(np.argmax(rel))
                raise QuadratureError("kernel quadrature did not converge",
                                      {"rel_change": float(rel[bad]), "a": float(a[sl][bad]),
                                       "b": float(b[sl][bad]), "gamma": g})
            I[sl] = fine
    gain = 2.0 * cs.b0 * np.pi**-1.5 / a * np.exp(-0.5 * (vn * vn + zn * zn)) * I
    loss = np.pi * cs.b0 * np.pi**-1.5 * np.exp(-0.5 * (np.sum(z * z, 1) + np.sum(v * v, 1))) * a**g
    return gain.reshape(shp), loss.reshape(shp)


def kernel_k(cs, z, v, **kw):
    gain, loss = kernel_parts(cs, z, v, **kw)
    out = gain - loss
    return out.item() if out.ndim == 0 else out


def reference_apply_K(cs, h, z, order=11, n_rho=64, rho_max=14.0):
    """Kh(z) by polar quadrature centred at z (removes the 1/|z-v| singularity).

    ``h`` is a callable on arrays of velocities.
    """
    e, we = sphere_rule(order)
    x, w = leggauss(n_rho)
    rho = 0.5 * rho_max * (x + 1.0)
    wr = 0.5 * rho_max * w * rho**2
    z = np.asarray(z, dtype=float)
    v = z + rho[:, None, None] * e[None]
    k = kernel_k(cs, np.broadcast_to(z, v.shape), v)
    return float(np.sum(wr[:, None] * we[None] * k * h(v)))


def smooth_test_functions():
    c = np.array([0.5, 0.0, 0.2])
    return [
        lambda v: maxwellian_sqrt(v),
        lambda v: np.exp(-0.3 * np.sum((v - c) ** 2, axis=-1)) * (1.0 + v[..., 0]),
    ]


CERTIFY_ORDERS = (17, 23, 35, 47, 59, 71)


def certify_kernel_quadrature(cs, points, orders=CERTIFY_ORDERS, tol=1e-6):
    """K applied to smooth functions at successive sphere orders.

    Each point passes once two consecutive orders agree to ``tol``; the
    peak of k narrows like 1/|zeta|, so fast nodes need finer rules.
    Returns per-point (order pair, relative difference).
    """
    report = []
    for z in np.atleast_2d(points):
        prev = None
        ok = False
        for o in orders:
            vals = np.array([reference_apply_K(cs, h, z, order=o) for h in smooth_test_functions()])
            if prev is not None:
                rel = float(np.max(np.abs(vals - prev) / np.abs(vals)))
                if rel <= tol:
                    report.append({"point": z.tolist(), "orders": [po, o], "rel_diff": rel})
                    ok = True
                    break
            prev, po = vals, o
        if not ok:
            raise QuadratureError("kernel quadrature certification failed",
                                  {"point": z.tolist(), "rel_diff": rel, "orders": list(orders)})
    return report


@dataclass
class CollisionKernelTable:
    grid: VelocityGrid
    cross_section: CrossSection
    nu: np.ndarray
    kmat: np.ndarray
    kop: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.grid.size

    def symmetry_defect(self):
        k = self.kmat
        return float(np.max(np.abs(k - k.T) / (1.0 + np.abs(k))))

    def linearized(self):
        """Matrix of L = -nu + K on the grid."""
        return self.kop - np.diag(self.nu)


def invariant_basis(grid):
    m = grid.maxwellian_sqrt()
    z = grid.nodes
    return np.column_stack([m, z[:, 0] * m, z[:, 1] * m, z[:, 2] * m, grid.speeds**2 * m])


def invariant_projector(grid, max_cond=1e8):
    from .errors import BasisError
    phi = invariant_basis(grid)
    w = grid.weights
    gram = phi.T @ (w[:, None] * phi)
    cond = np.linalg.cond(gram)
    if cond > max_cond:
        raise BasisError(f"invariant Gram matrix condition {cond:.3g} exceeds {max_cond:g}")
    return phi @ np.linalg.solve(gram, phi.T * w[None, :])


class _IGammaTable:
    """I_gamma(a, b) for a fixed set of a values, cubic in b on [0, b_max]."""

    def __init__(self, g, a_values, b_max, nb=97):
        from scipy.interpolate import CubicSpline
        self.a_values = np.asarray(a_values)
        bb = np.linspace(0.0, max(b_max, 1e-3), nb)
        A, B = np.meshgrid(self.a_values, bb, indexing="ij")
        vals = _i_gamma(A.ravel(), B.ravel(), g, 32).reshape(A.shape)
        check = _i_gamma(A.ravel(), B.ravel(), g, 16).reshape(A.shape)
        rel = float(np.max(np.abs(vals - check) / np.abs(vals)))
        if rel > 1e-6:
            raise QuadratureError("kernel quadrature did not converge", {"rel_change": rel, "gamma": g})
        self.splines = CubicSpline(bb, vals.T, axis=0)

    def __call__(self, a, b):
        # a is recomputed from coordinates, so match to the nearest stored value
        av = self.a_values
        col = np.clip(np.searchsorted(av, a), 1, len(av) - 1)
        col = np.where(np.abs(av[col - 1] - a) < np.abs(av[col] - a), col - 1, col)
        return self.splines(b)[np.arange(len(b)), col]


def product_integration_matrix(cs, grid, order=35, n_rho=48, radial_order=1):
    """Matrix of h -> int k(z_i, v) (Pi h)(v) dv, Pi the velocity interpolant.

    Each row is integrated in polar coordinates centred at z_i, which
    absorbs the 1/|z_i - v| singularity, so no node pair is excluded.
    """
    interp = VelocityInterpolator(grid, radial_order)
    e, we = sphere_rule(order)
    x, w = leggauss(n_rho)
    n = grid.size
    K = np.zeros((n, n))
    na = grid.n_angular
    for k, r in enumerate(grid.radii):
        rho_max = grid.cutoff + r
        rho = 0.5 * rho_max * (x + 1.0)
        wr = 0.5 * rho_max * w * rho**2
        wq = (wr[:, None] * we[None]).ravel()
        table = None
        if cs.gamma != 1.0:
            table = _IGammaTable(cs.gamma, np.sort(rho), r * 1.0001)
        for i in range(k * na, (k + 1) * na):
            z = grid.nodes[i]
            v = (z + rho[:, None, None] * e[None]).reshape(-1, 3)
            kv = kernel_k(cs, np.broadcast_to(z, v.shape), v, i_gamma=table)
            idx, wts = interp.stencil(v)
            K[i] = np.bincount(idx.ravel(), weights=(wts * (wq * kv)[:, None]).ravel(), minlength=n)
    return K, interp.truncated


def _finish_operator(grid, nu, kraw, conservative=True):
    """Mass correction on the diagonal, then projection onto exact invariants."""
    m = grid.maxwellian_sqrt()
    c = nu - (kraw @ m) / m
    kd = kraw + np.diag(c)
    ld = kd - np.diag(nu)
    phi = invariant_basis(grid)
    meta = {"invariant_defect_raw": float(np.max(np.abs(ld @ phi)) / np.max(np.abs(nu[:, None] * phi))),
            "mass_correction_max_rel": float(np.max(np.abs(c) / nu))}
    if not conservative:
        return kd, meta
    P = invariant_projector(grid)
    Q = np.eye(grid.size) - P
    return Q @ ld @ Q + np.diag(nu), meta


def assemble_kernel_table(cs, grid, conservative=True, certify=True, fast_path=True,
                          method="product", order=35, n_rho=48):
    """Pointwise kernel table plus the discrete operator used by solvers.

    ``kmat`` holds k(z_i, z_j) with a zero diagonal.  ``kop`` is built by
    product integration (``method="product"``) or by the node rule with
    diagonal singularity subtraction (``method="nystrom"``).
    """
    t0 = time.perf_counter()
    n = grid.size
    nu = collision_frequency(cs, grid.speeds)
    iu, ju = np.triu_indices(n, k=1)
    vals = kernel_k(cs, grid.nodes[iu], grid.nodes[ju], fast_path=fast_path)
    kmat = np.zeros((n, n))
    kmat[iu, ju] = vals
    kmat[ju, iu] = kernel_k(cs, grid.nodes[ju], grid.nodes[iu], fast_path=fast_path)
    meta = {"method": method}
    if method == "product":
        kraw, trunc = product_integration_matrix(cs, grid, order, n_rho)
        meta.update({"product_order": order, "product_n_rho": n_rho, "truncated_points": trunc})
    elif method == "nystrom":
        kraw = kmat * grid.weights[None, :]
    else:
        raise ValueError(f"unknown kernel method {method!r}")
    kop, extra = _finish_operator(grid, nu, kraw, conservative)
    meta.update(extra)
    meta.update({"gamma": cs.gamma, "b0": cs.b0, "grid": grid.params(),
                 "conservative": conservative, "fast_path": fast_path})
    if certify:
        pts = grid.nodes[[0, grid.size // 2, grid.size - 1]]
        meta["certification"] = certify_kernel_quadrature(cs, pts)
    meta["assembly_seconds"] = time.perf_counter() - t0
    table = CollisionKernelTable(grid, cs, nu, kmat, kop, meta)
    meta["symmetry_defect"] = table.symmetry_defect()
    log.info("assembled %d x %d kernel table in %.2fs", n, n, meta["assembly_seconds"])
    return table


def apply_K(table, h, mode="nystrom"):
    """(Kh)_i = sum_j w_j k(z_i, z_j) h_j; ``mode="operator"`` uses the solver operator."""
    h = np.asarray(h, dtype=float)
    if h.shape[0] != table.size:
        raise GridError(f"field has {h.shape[0]} velocity values, grid has {table.size}")
    if mode == "operator":
        return table.kop @ h
    if mode == "nystrom":
        return (table.kmat * table.grid.weights[None, :]) @ h
    raise ValueError(f"unknown mode {mode!r}")


class GammaOperator:
    """Quadratic collision term on a velocity grid.

    Gain uses the sigma representation: for each evaluation velocity and each
    grid partner, the post-collision pair is interpolated from grid values.
    Partner stencils are precomputed per evaluation velocity.
    """

    def __init__(self, cs, grid, sigma_order=None, radial_order=3, at=None):
        self.cs = cs
        self.grid = grid
        self.interp = VelocityInterpolator(grid, radial_order)
        sig, wsig = sphere_rule(sigma_order or grid.angular_order)
        self.sigma, self.sigma_w = sig, wsig
        self.points = grid.nodes if at is None else np.atleast_2d(np.asarray(at, dtype=float))
        zj = grid.nodes
        rel = np.linalg.norm(self.points[:, None, :] - zj[None], axis=-1)
        g = cs.gamma
        rel_g = rel**g if g > 0 else np.ones_like(rel)
        self.loss_matrix = np.pi * cs.b0 * grid.weights[None] * np.exp(-0.5 * grid.speeds**2)[None] * rel_g
        self._gain_w = []
        self._p1 = []
        self._p2 = []
        ns = len(wsig)
        base = 0.25 * cs.b0 * grid.weights * np.exp(-0.5 * grid.speeds**2)
        for i, zi in enumerate(self.points):
            mid = 0.5 * (zi + zj)
            half = 0.5 * rel[i][:, None, None] * sig[None]
            zp = (mid[:, None, :] + half).reshape(-1, 3)
            zsp = (mid[:, None, :] - half).reshape(-1, 3)
            w = (base * rel_g[i])[:, None] * wsig[None, :]
            w[rel[i] == 0.0] = 0.0
            self._gain_w.append(w.reshape(-1))
            self._p1.append(self.interp.matrix(zp))
            self._p2.append(self.interp.matrix(zsp))
        self.truncated = self.interp.truncated
        self.n_sigma = ns

    def gain(self, h1, h2):
        h1 = np.asarray(h1, dtype=float)
        h2 = np.asarray(h2, dtype=float)
        out = np.empty((len(self.points),) + h1.shape[1:])
        for i in range(len(self.points)):
            a = self._p1[i] @ h1
            b = self._p2[i] @ h2
            out[i] = np.tensordot(self._gain_w[i], a * b, axes=(0, 0))
        return out

    def loss(self, h1, h2, h1_at=None):
        h2 = np.asarray(h2, dtype=float)
        if h1_at is None:
            h1 = np.asarray(h1, dtype=float)
            if self.points is self.grid.nodes:
                h1_at = h1
            else:
                h1_at = self.interp(h1, self.points)
        return h1_at * (self.loss_matrix @ h2)

    def __call__(self, h1, h2):
        return SQRT_M_NORM * (self.gain(h1, h2) - self.loss(h1, h2))


def gamma_gain(cs, grid, h1, h2, op=None):
    op = op or GammaOperator(cs, grid)
    return op.gain(h1, h2)


def gamma_loss(cs, grid, h1, h2, op=None):
    op = op or GammaOperator(cs, grid)
    return op.loss(h1, h2)


def gamma_bilinear(cs, grid, h1, h2, op=None):
    op = op or GammaOperator(cs, grid)
    if np.asarray(h1).shape[0] != grid.size or np.asarray(h2).shape[0] != grid.size:
        raise GridError("fields must be sampled on the velocity grid")
    out = op(h1, h2)
    if op.interp.truncated:
        log.warning("%d post-collision velocities beyond the cutoff were set to zero",
                    op.interp.truncated)
    return out
