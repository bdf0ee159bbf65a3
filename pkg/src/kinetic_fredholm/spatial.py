"""Shell grid on the reference ball and its interpolation rule.

Points are stored in physical coordinates; the reference coordinates are
(x - c)/a, so an ellipsoid is handled exactly like the unit ball.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.sparse import csr_matrix

from .geometry import DomainGeometry


@dataclass
class SpatialGrid:
    domain: DomainGeometry
    n_shells: int = 9
    n_polar: int = 4
    n_azimuth: int = 8
    shells: np.ndarray = field(init=False, repr=False)
    mu: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if min(self.n_shells, self.n_polar) < 2 or self.n_azimuth < 3:
            raise ValueError("spatial grid too small")
        x, w = leggauss(self.n_shells)
        self.shells = 0.5 * (x + 1.0)
        wr = 0.5 * w * self.shells**2
        self.mu, wmu = leggauss(self.n_polar)
        self.phi = 2.0 * np.pi * (np.arange(self.n_azimuth) + 0.5) / self.n_azimuth
        wphi = np.full(self.n_azimuth, 2.0 * np.pi / self.n_azimuth)
        sin = np.sqrt(1.0 - self.mu**2)
        dirs = np.stack([sin[:, None] * np.cos(self.phi)[None, :],
                         sin[:, None] * np.sin(self.phi)[None, :],
                         np.broadcast_to(self.mu[:, None], (self.n_polar, self.n_azimuth))], axis=-1)
        self.unit_dirs = dirs.reshape(-1, 3)
        self.angular_weights = (wmu[:, None] * wphi[None, :]).reshape(-1)
        ref = self.shells[:, None, None] * self.unit_dirs[None]
        self.reference = ref.reshape(-1, 3)
        self.points = self.domain.origin + self.domain.axes * self.reference
        jac = float(np.prod(self.domain.axes))
        self.weights = jac * (wr[:, None] * self.angular_weights[None]).reshape(-1)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def n_angular(self):
        return self.n_polar * self.n_azimuth

    def params(self):
        return {"domain": self.domain.to_dict(), "n_shells": self.n_shells,
                "n_polar": self.n_polar, "n_azimuth": self.n_azimuth}

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def _angular_weights(self, mu, ph):
        """Dense weights over the angular nodes of one shell, shape (n, n_ang)."""
        n = mu.shape[0]
        npol, naz = self.n_polar, self.n_azimuth
        out = np.zeros((n, npol, naz))
        # azimuth bracket (periodic, nodes offset by half a step)
        s = ph / (2.0 * np.pi) * naz - 0.5
        j0 = np.floor(s).astype(int)
        tp = s - j0
        j0 %= naz
        j1 = (j0 + 1) % naz
        rows = np.arange(n)
        m = self.mu
        k = np.searchsorted(m, mu) - 1
        inner = (k >= 0) & (k < npol - 1)
        kk = np.clip(k, 0, npol - 2)
        tm = (mu - m[kk]) / (m[kk + 1] - m[kk])
        for r_idx, wt in ((kk, 1.0 - tm), (kk + 1, tm)):
            wt = np.where(inner, wt, 0.0)
            np.add.at(out, (rows, r_idx, j0), wt * (1.0 - tp))
            np.add.at(out, (rows, r_idx, j1), wt * tp)
        # polar caps: blend the end ring with its average (the pole value)
        for cap, ring, pole_mu in ((k < 0, 0, -1.0), (k >= npol - 1, npol - 1, 1.0)):
            if not np.any(cap):
                continue
            t = (mu - m[ring]) / (pole_mu - m[ring])
            t = np.where(cap, np.clip(t, 0.0, 1.0), 0.0)
            base = np.where(cap, 1.0 - t, 0.0)
            np.add.at(out, (rows, np.full(n, ring), j0), base * (1.0 - tp))
            np.add.at(out, (rows, np.full(n, ring), j1), base * tp)
            out[:, ring, :] += (t / naz)[:, None]
        return out.reshape(n, -1)

    def interpolation_matrix(self, points, chunk=4000):
        """Sparse matrix mapping node values to values at ``points``.

        Trilinear in (r, mu, phi); the centre value is the shell-1 angular
        mean and points beyond the last shell take that shell's value.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        blocks = []
        for lo in range(0, pts.shape[0], chunk):
            blocks.append(self._interp_block(pts[lo:lo + chunk]))
        from scipy.sparse import vstack
        return vstack(blocks).tocsr() if len(blocks) > 1 else blocks[0]

    def _interp_block(self, pts):
        ref = (pts - self.domain.origin) / self.domain.axes
        r = np.linalg.norm(ref, axis=1)
        safe = np.where(r > 0, r, 1.0)
        mu = np.clip(ref[:, 2] / safe, -1.0, 1.0)
        ph = np.mod(np.arctan2(ref[:, 1], ref[:, 0]), 2.0 * np.pi)
        ang = self._angular_weights(mu, ph)
        nang = self.n_angular
        sh = self.shells
        k = np.searchsorted(sh, r) - 1
        n = pts.shape[0]
        W = np.zeros((n, self.n_shells, nang))
        rows = np.arange(n)
        centre = k < 0
        beyond = k >= self.n_shells - 1
        mid = ~centre & ~beyond
        if np.any(mid):
            km = k[mid]
            t = (r[mid] - sh[km]) / (sh[km + 1] - sh[km])
            W[rows[mid], km] += (1.0 - t)[:, None] * ang[mid]
            W[rows[mid], km + 1] += t[:, None] * ang[mid]
        if np.any(beyond):
            W[rows[beyond], -1] += ang[beyond]
        if np.any(centre):
            t = r[centre] / sh[0]
            mean = self.angular_weights / self.angular_weights.sum()
            W[rows[centre], 0] += t[:, None] * ang[centre] + (1.0 - t)[:, None] * mean[None]
        W = W.reshape(n, -1)
        nz = np.nonzero(W)
        return csr_matrix((W[nz], nz), shape=(n, self.size))

    def interpolate(self, values, points):
        return self.interpolation_matrix(points) @ np.asarray(values)

    def refined(self):
        """One refinement step (used by the refinement studies)."""
        return SpatialGrid(self.domain, self.n_shells + 4, self.n_polar + 2, self.n_azimuth + 4)
