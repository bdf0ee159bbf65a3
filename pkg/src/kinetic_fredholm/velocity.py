"""Truncated velocity-space quadrature and off-grid interpolation."""
from dataclasses import dataclass, field
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import lebedev_rule
from scipy.linalg import eigh_tridiagonal
from scipy.spatial import ConvexHull
from scipy.special import erf

from .errors import GridError

log = logging.getLogger(__name__)


def maxwell_radial_rule(n, cutoff, n_fine=600):
    """Gauss rule on [0, cutoff] for the weight r^2 exp(-r^2/2).

    Recurrence coefficients come from the Stieltjes procedure on a fine
    Gauss-Legendre discretisation of the weight; nodes and weights from the
    Golub-Welsch eigenproblem.
    """
    xf, wf = leggauss(n_fine)
    rf = 0.5 * cutoff * (xf + 1.0)
    mu = 0.5 * cutoff * wf * rf**2 * np.exp(-0.5 * rf**2)
    total = mu.sum()
    p_prev = np.zeros_like(rf)
    p = np.full_like(rf, 1.0 / np.sqrt(total))
    alpha, beta = [], []
    for _ in range(n):
        a = np.sum(mu * rf * p * p)
        q = (rf - a) * p - (beta[-1] if beta else 0.0) * p_prev
        b = np.sqrt(np.sum(mu * q * q))
        alpha.append(a)
        beta.append(b)
        p_prev, p = p, q / b
    nodes, vecs = eigh_tridiagonal(np.array(alpha), np.array(beta[:-1]))
    weights = total * vecs[0] ** 2
    return nodes, weights


def truncated_gaussian_mass(cutoff):
    """Integral of exp(-|z|^2) over the ball |z| <= cutoff."""
    R = cutoff
    return np.pi**1.5 * erf(R) - 2.0 * np.pi * R * np.exp(-R * R)


def sphere_rule(order):
    pts, w = lebedev_rule(order)
    return np.ascontiguousarray(pts.T), w


@dataclass
class VelocityGrid:
    """Radial Gauss nodes times a Lebedev sphere rule.

    Flattened node index is ``k * n_ang + m`` for radial node k and
    direction m.  ``weights`` already include the r^2 Jacobian.
    """
    cutoff: float = 6.0
    n_radial: int = 10
    angular_order: int = 5
    zeta_min: float = 0.05
    radial_rule: str = "maxwell"
    radii: np.ndarray = field(init=False, repr=False)
    radial_weights: np.ndarray = field(init=False, repr=False)
    directions: np.ndarray = field(init=False, repr=False)
    angular_weights: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.cutoff <= 0 or self.n_radial < 2:
            raise GridError("need a positive cutoff and at least two radial nodes")
        if self.radial_rule == "maxwell":
            r, wr = maxwell_radial_rule(self.n_radial, self.cutoff)
            wr = wr * np.exp(0.5 * r * r)
        elif self.radial_rule == "legendre":
            x, w = leggauss(self.n_radial)
            r = 0.5 * self.cutoff * (x + 1.0)
            wr = 0.5 * self.cutoff * w * r * r
        else:
            raise GridError(f"unknown radial rule {self.radial_rule!r}")
        if r[0] < self.zeta_min:
            raise GridError(f"smallest speed {r[0]:.3g} is below zeta_min={self.zeta_min}")
        self.radii, self.radial_weights = r, wr
        self.directions, self.angular_weights = sphere_rule(self.angular_order)
        na = len(self.angular_weights)
        self.nodes = (r[:, None, None] * self.directions[None]).reshape(-1, 3)
        self.weights = (wr[:, None] * self.angular_weights[None]).reshape(-1)
        self.speeds = np.repeat(r, na)
        self.radial_index = np.repeat(np.arange(len(r)), na)

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def n_angular(self):
        return self.directions.shape[0]

    def params(self):
        return {"cutoff": self.cutoff, "n_radial": self.n_radial,
                "angular_order": self.angular_order, "zeta_min": self.zeta_min,
                "radial_rule": self.radial_rule}

    def maxwellian_sqrt(self):
        return np.pi**-0.75 * np.exp(-0.5 * self.speeds**2)

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def self_test(self, tol=1e-8):
        """Relative error of the grid integral of exp(-|z|^2) on the truncated ball."""
        exact = truncated_gaussian_mass(self.cutoff)
        approx = float(np.sum(self.weights * np.exp(-self.speeds**2)))
        err = abs(approx - exact) / exact
        return {"exact": exact, "approx": approx, "rel_error": err, "passed": err <= tol,
                "truncated_mass": np.pi**1.5 - exact}

    def same_as(self, other):
        return self.params() == other.params()


class VelocityInterpolator:
    """Interpolation of grid values at arbitrary velocities.

    Radially the weighted values h*exp(|z|^2/2) are interpolated linearly or,
    with ``radial_order=3``, by local four-point Lagrange (constant extrapolation below the first and above the last node; zero
    beyond the cutoff).  Angularly, barycentric weights on the convex hull of
    the sphere nodes are used.  Functions proportional to exp(-|z|^2/2) are
    reproduced exactly inside the cutoff.
    """

    def __init__(self, grid, radial_order=1):
        if radial_order not in (0, 1, 3):
            raise GridError("radial interpolation order must be 0, 1 or 3")
        if radial_order == 3 and grid.n_radial < 4:
            raise GridError("cubic radial interpolation needs four radial nodes")
        self.grid = grid
        self.radial_order = radial_order
        hull = ConvexHull(grid.directions)
        self.faces = hull.simplices
        eq = hull.equations  # n.x + d = 0 with outward n, d < 0
        self._face_dir = eq[:, :3] / (-eq[:, 3:4])
        verts = grid.directions[self.faces]  # (F, 3 vertices, 3)
        self._face_inv = np.linalg.inv(np.transpose(verts, (0, 2, 1)))
        self.truncated = 0

    def stencil(self, points):
        """Return (index, weight) arrays of shape (n, 6) or (n, 12) for the given velocities."""
        g = self.grid
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        r = np.linalg.norm(pts, axis=1)
        safe = np.where(r > 0, r, 1.0)
        u = pts / safe[:, None]
        u[r == 0] = g.directions[0]
        face = np.argmax(u @ self._face_dir.T, axis=1)
        lam = np.einsum("nij,nj->ni", self._face_inv[face], u)
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum(axis=1, keepdims=True)
        ang = self.faces[face]

        rad = g.radii
        nr = len(rad)
        rc = np.clip(r, rad[0], rad[-1])  # constant extrapolation of g
        if self.radial_order == 3:
            k0 = np.clip(np.searchsorted(rad, rc) - 2, 0, nr - 4)
            ks = k0[:, None] + np.arange(4)[None]
            xs = rad[ks]
            lag = np.ones_like(xs)
            for j in range(4):
                for m in range(4):
                    if m != j:
                        lag[:, j] *= (rc - xs[:, m]) / (xs[:, j] - xs[:, m])
        else:
            k = np.clip(np.searchsorted(rad, r) - 1, 0, nr - 2)
            t = np.clip((r - rad[k]) / (rad[k + 1] - rad[k]), 0.0, 1.0)
            if self.radial_order == 0:
                t = np.where(t < 0.5, 0.0, 1.0)
            ks = np.stack([k, k + 1], axis=1)
            lag = np.stack([1.0 - t, t], axis=1)
        # weighted variable: h = exp(-r^2/2) * g with g interpolated in r
        srad = lag * np.exp(0.5 * (rad[ks] ** 2 - (r * r)[:, None]))
        outside = r > g.cutoff
        n_out = int(np.count_nonzero(outside))
        if n_out:
            self.truncated += n_out
            srad[outside] = 0.0
        na = g.n_angular
        idx = (ks[:, :, None] * na + ang[:, None, :]).reshape(len(r), -1)
        wts = (srad[:, :, None] * lam[:, None, :]).reshape(len(r), -1)
        return idx, wts

    def matrix(self, points):
        from scipy.sparse import csr_matrix
        idx, wts = self.stencil(points)
        n = idx.shape[0]
        rows = np.repeat(np.arange(n), idx.shape[1])
        return csr_matrix((wts.ravel(), (rows, idx.ravel())), shape=(n, self.grid.size))

    def __call__(self, values, points):
        idx, wts = self.stencil(points)
        values = np.asarray(values)
        if values.ndim == 1:
            return np.sum(values[idx] * wts, axis=1)
        return np.einsum("nk,nk...->n...", wts, values[idx])
