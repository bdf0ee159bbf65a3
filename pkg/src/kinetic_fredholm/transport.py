"""Free streaming along backward characteristics.

    J f0(x, z)  = exp(-nu(|z|) tau(x, z)) f0(q(x, z), z)
    S h(x, z)   = int_0^tau exp(-nu(|z|) s) h(x - s z, z) ds

The discrete operator substitutes u = 1 - exp(-nu s), which turns the
exponential weight into the Lebesgue measure on [0, 1 - exp(-nu tau)].
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.sparse import coo_matrix, csr_matrix

from . import geometry as geo
from .collision import collision_frequency
from .errors import ConfigError, QuadratureError

log = logging.getLogger(__name__)


class ConstantNu:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, speed):
        return np.full(np.shape(speed), self.value) if np.ndim(speed) else self.value


class FrequencyProvider:
    """nu(|z|) from the cross section, memoised per speed value."""

    def __init__(self, cs):
        self.cs = cs
        self._memo = {}

    def __call__(self, speed):
        s = np.asarray(speed, dtype=float)
        flat = s.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        missing = [u for u in uniq if u not in self._memo]
        if missing:
            vals = np.atleast_1d(collision_frequency(self.cs, np.array(missing)))
            self._memo.update(zip(missing, vals))
        out = np.array([self._memo[u] for u in uniq])[inv].reshape(s.shape)
        return out.item() if out.ndim == 0 else out


@dataclass
class BoundarySource:
    evaluator: object
    alpha: float = 0.0
    name: str = "custom"

    def __call__(self, X, z):
        return self.evaluator(np.asarray(X, dtype=float), np.asarray(z, dtype=float))

    def scaled(self, s):
        ev = self.evaluator
        return BoundarySource(lambda X, z: s * ev(X, z), self.alpha, f"{s}*{self.name}")


@dataclass
class VolumetricSource:
    evaluator: object
    alpha: float = 0.0
    name: str = "custom"

    def __call__(self, x, z):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(z, dtype=float))


def _speed2(z):
    return np.sum(z * z, axis=-1)


def constant_source(c=1.0):
    return lambda x, z: np.full(np.broadcast_shapes(x.shape[:-1], z.shape[:-1]), float(c))


def gaussian_source(alpha, amplitude=1.0):
    return lambda x, z: amplitude * np.exp(-alpha * _speed2(z)) * np.ones(x.shape[:-1])


def separable_source(alpha, amplitude=1.0, slope=(0.0, 0.0, 0.0), offset=1.0):
    slope = np.asarray(slope, dtype=float)
    return lambda x, z: amplitude * (offset + x @ slope) * np.exp(-alpha * _speed2(z))


def source_from_config(spec, kind="boundary"):
    fam = spec.get("family", "gaussian")
    alpha = float(spec.get("alpha", 0.0))
    amp = float(spec.get("amplitude", 1.0))
    if fam == "constant":
        ev = constant_source(amp)
    elif fam == "gaussian":
        ev = gaussian_source(alpha, amp)
    elif fam == "separable":
        ev = separable_source(alpha, amp, spec.get("slope", (0.0, 0.0, 0.0)), spec.get("offset", 1.0))
    elif fam == "zero":
        ev = constant_source(0.0)
    else:
        raise ConfigError(f"unknown source family {fam!r}")
    cls = BoundarySource if kind == "boundary" else VolumetricSource
    return cls(ev, alpha, fam)


def apply_J(dom, nu, f0, x, z):
    ex = geo.exit_data(dom, x, z)
    speed = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
    zz = np.broadcast_to(np.asarray(z, dtype=float), np.shape(ex.q))
    return np.exp(-nu(speed) * ex.tau_minus) * f0(ex.q, zz)


def _graded_panels(tau, n_panels):
    """Breakpoints on [0, tau] halving toward the exit end."""
    # beyond 2^-44 tau the breakpoints would round onto tau itself
    k = np.minimum(np.arange(n_panels), 44)
    b = tau * (1.0 - 0.5**k)
    return np.unique(np.append(b, tau))


def ray_integral(fn, tau, rtol=1e-9, atol=1e-300, npts=10, start_panels=8, max_panels=512):
    """int_0^tau fn(t) dt with geometric grading toward t = tau.

    The panel count doubles until two successive results agree to ``rtol``.
    """
    x, w = leggauss(npts)
    prev = None
    n = start_panels
    while n <= max_panels:
        b = _graded_panels(tau, n)
        half = 0.5 * np.diff(b)
        t = (0.5 * (b[:-1] + b[1:]))[:, None] + half[:, None] * x
        val = float(np.sum(fn(t.ravel()).reshape(t.shape) * half[:, None] * w))
        if prev is not None and abs(val - prev) <= max(rtol * abs(val), atol):
            return val, abs(val - prev)
        prev = val
        n *= 2
    raise QuadratureError("ray quadrature did not converge",
                          {"tau": tau, "last": prev, "panels": n // 2})


def apply_S(dom, nu, h, x, z, rtol=1e-9):
    """S h(x, z) for a single point by adaptive graded Gauss-Legendre panels."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    tau = geo.tau_minus(dom, x, z)
    n = nu(float(np.linalg.norm(z)))

    def fn(t):
        pts = x[None, :] - t[:, None] * z[None, :]
        return np.exp(-n * t) * h(pts, np.broadcast_to(z, pts.shape))
    val, _ = ray_integral(fn, tau, rtol=rtol)
    return val


def chord_time(dom, y, z):
    """Forward travel time from boundary point y along z until the far side."""
    p = (np.asarray(y, dtype=float) - dom.origin) / dom.axes
    v = np.asarray(z, dtype=float) / dom.axes
    return np.maximum(-2.0 * np.sum(p * v, axis=-1) / np.sum(v * v, axis=-1), 0.0)


def _hemisphere_rule(n_mu, n_phi):
    x, w = leggauss(n_mu)
    c = 0.5 * (x + 1.0)  # cos of angle to the inward normal, in (0, 1)
    wc = 0.5 * w
    ph = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    s = np.sqrt(1.0 - c * c)
    return c, s, wc, ph, 2.0 * np.pi / n_phi


def phase_space_integral(dom, vgrid, f, n_space=24, n_boundary=(16, 24), n_hemi=(12, 16), n_chord=24):
    """Integral of f over Omega x R^3 computed two ways.

    ``f`` is a vectorised callable f(x, z).  The direct form uses a dense
    tensor rule in the reference ball; the boundary form parametrises
    Omega x R^3 by incoming boundary points, incoming velocities and the
    forward travel time, with Jacobian |n.z|.
    Radial velocity nodes are shared between both forms.
    """
    # direct form
    xr, wr = leggauss(n_space)
    rr = 0.5 * (xr + 1.0)
    wrr = 0.5 * wr * rr**2
    mu, wmu = leggauss(n_space)
    nph = 2 * n_space
    ph = 2.0 * np.pi * (np.arange(nph) + 0.5) / nph
    sin = np.sqrt(1 - mu**2)
    dirs = np.stack([sin[:, None] * np.cos(ph), sin[:, None] * np.sin(ph),
                     np.broadcast_to(mu[:, None], (n_space, nph))], -1).reshape(-1, 3)
    wd = (wmu[:, None] * np.full(nph, 2 * np.pi / nph)).reshape(-1)
    ref = (rr[:, None, None] * dirs[None]).reshape(-1, 3)
    wx = (wrr[:, None] * wd[None]).reshape(-1) * np.prod(dom.axes)
    X = dom.origin + dom.axes * ref
    direct = 0.0
    for lo in range(0, X.shape[0], 2000):
        xs = X[lo:lo + 2000]
        vals = f(xs[:, None, :], vgrid.nodes[None, :, :])
        direct += float(wx[lo:lo + 2000] @ vals @ vgrid.weights)

    # boundary form
    bm, bwm = leggauss(n_boundary[0])
    bph = 2.0 * np.pi * (np.arange(n_boundary[1]) + 0.5) / n_boundary[1]
    bs = np.sqrt(1 - bm**2)
    U = np.stack([bs[:, None] * np.cos(bph), bs[:, None] * np.sin(bph),
                  np.broadcast_to(bm[:, None], (len(bm), len(bph)))], -1).reshape(-1, 3)
    wU = (bwm[:, None] * np.full(len(bph), 2 * np.pi / len(bph))).reshape(-1)
    Y = dom.origin + dom.axes * U
    dS = geo.surface_element(dom, U) * wU
    normals = geo.outward_normal(dom, Y)
    c, s, wc, hph, wph = _hemisphere_rule(*n_hemi)
    tx, tw = leggauss(n_chord)
    radii, wrad = vgrid.radii, vgrid.radial_weights
    boundary = 0.0
    for y, n, ds in zip(Y, normals, dS):
        e2 = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
        e2 /= np.linalg.norm(e2)
        e3 = np.cross(n, e2)
        loc = (-c[:, None, None] * n + s[:, None, None] * (np.cos(hph)[None, :, None] * e2
                                                          + np.sin(hph)[None, :, None] * e3)).reshape(-1, 3)
        wl = (wc[:, None] * np.full(len(hph), wph)).reshape(-1)
        cosn = np.repeat(c, len(hph))
        Z = (radii[:, None, None] * loc[None]).reshape(-1, 3)
        wz = (wrad[:, None] * wl[None]).reshape(-1)
        # |n.z| = r cos; travel time scales as 1/r
        cz = (radii[:, None] * cosn[None]).reshape(-1)
        T = chord_time(dom, y, Z)
        t = 0.5 * T[:, None] * (tx[None, :] + 1.0)
        wt = 0.5 * T[:, None] * tw[None, :]
        pts = y[None, None, :] + t[..., None] * Z[:, None, :]
        vals = f(pts, np.broadcast_to(Z[:, None, :], pts.shape))
        boundary += ds * float(np.sum(wz * cz * np.sum(wt * vals, axis=1)))
    return {"direct": direct, "boundary": boundary,
            "rel_diff": abs(direct - boundary) / max(abs(direct), 1e-300) if direct else abs(boundary)}


class DiscreteTransport:
    """Sparse S and nodal J on a (spatial grid x velocity grid) product.

    Flattening is C-order on (spatial node, velocity node).
    """

    def __init__(self, space, vgrid, nu_nodes, n_ray=8):
        self.space = space
        self.vgrid = vgrid
        self.dom = space.domain
        self.nu = np.asarray(nu_nodes, dtype=float)
        self.n_ray = n_ray
        nx, nv = space.size, vgrid.size
        self.shape = (nx, nv)
        x, w = leggauss(n_ray)
        self._gl = (x, w)
        ex = geo.exit_data(self.dom, space.points[:, None, :], vgrid.nodes[None, :, :], check=False)
        self.tau = np.asarray(ex.tau_minus)
        self.exit_points = ex.q
        self.exit_cos = np.asarray(ex.n_cos)
        rows, cols, vals = [], [], []
        ii = np.arange(nx)
        for j in range(nv):
            pts, wts = self._ray_nodes(space.points, vgrid.nodes[j], self.nu[j], self.tau[:, j], n_ray)
            P = space.interpolation_matrix(pts.reshape(-1, 3)).tocoo()
            r = P.row // n_ray
            v = P.data * wts.reshape(-1)[P.row]
            rows.append(r * nv + j)
            cols.append(P.col * nv + j)
            vals.append(v)
        N = nx * nv
        S = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
        self.S = S.tocsr()
        self.S.sum_duplicates()
        self.S_T = self.S.T.tocsr()
        log.info("transport operator: %d unknowns, %d nonzeros", N, self.S.nnz)

    @staticmethod
    def _ray_nodes(x, z, nu, tau, m):
        xg, wg = leggauss(m)
        U = -np.expm1(-nu * tau)
        u = 0.5 * U[:, None] * (xg[None, :] + 1.0)
        wu = 0.5 * U[:, None] * wg[None, :] / nu
        t = -np.log1p(-u) / nu
        pts = x[:, None, :] - t[..., None] * np.asarray(z)[None, None, :]
        return pts, wu

    @property
    def n_unknowns(self):
        return self.shape[0] * self.shape[1]

    def apply_S(self, F):
        F = np.asarray(F)
        if F.ndim == 2 and F.shape == self.shape:
            return (self.S @ F.reshape(-1)).reshape(self.shape)
        flat = F.reshape(self.n_unknowns, -1)
        return (self.S @ flat).reshape(F.shape)

    def apply_S_transpose(self, F):
        flat = np.asarray(F).reshape(self.n_unknowns, -1)
        return (self.S_T @ flat).reshape(np.shape(F))

    def J(self, f0):
        """Nodal J f0, exact."""
        Z = np.broadcast_to(self.vgrid.nodes[None], self.exit_points.shape)
        return np.exp(-self.nu[None, :] * self.tau) * f0(self.exit_points, Z)

    def S_source(self, phi, n_ray=16):
        """Nodal S phi for an analytic volumetric source."""
        nx, nv = self.shape
        out = np.empty(self.shape)
        for j in range(nv):
            z = self.vgrid.nodes[j]
            pts, wts = self._ray_nodes(self.space.points, z, self.nu[j], self.tau[:, j], n_ray)
            vals = phi(pts, np.broadcast_to(z, pts.shape))
            out[:, j] = np.sum(vals * wts, axis=1)
        return out

    def evaluate(self, x, z, f0, G, nu, n_ray=24):
        """Off-grid values J f0(x, z) + S[G](x, z) for a nodal field G.

        G is interpolated in space (shell rule) and in velocity (grid rule).
        ``x`` and ``z`` are (n, 3); ``nu`` is a frequency provider.
        """
        from .velocity import VelocityInterpolator
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        x, z = np.broadcast_arrays(x, z)
        n = x.shape[0]
        speed = np.linalg.norm(z, axis=1)
        nuv = np.atleast_1d(nu(speed))
        ex = geo.exit_data(self.dom, x, z, check=False)
        tau = np.atleast_1d(ex.tau_minus)
        out = np.exp(-nuv * tau) * f0(ex.q, z) if f0 is not None else np.zeros(n)
        xg, wg = leggauss(n_ray)
        U = -np.expm1(-nuv * tau)
        u = 0.5 * U[:, None] * (xg[None, :] + 1.0)
        wu = 0.5 * U[:, None] * wg[None, :] / nuv[:, None]
        t = -np.log1p(-u) / nuv[:, None]
        pts = x[:, None, :] - t[..., None] * z[:, None, :]
        idx, vw = VelocityInterpolator(self.vgrid).stencil(z)
        for lo in range(0, n, 512):
            sl = slice(lo, lo + 512)
            P = self.space.interpolation_matrix(pts[sl].reshape(-1, 3))
            cols = np.repeat(idx[sl], n_ray, axis=0)  # (rows, 6)
            wts = np.repeat(vw[sl], n_ray, axis=0)
            uniq, pos = np.unique(cols, return_inverse=True)
            pos = pos.reshape(cols.shape)
            A = P @ G[:, uniq]
            vals = np.sum(A[np.arange(A.shape[0])[:, None], pos] * wts, axis=1)
            out[sl] += np.sum(vals.reshape(-1, n_ray) * wu[sl], axis=1)
        return out
