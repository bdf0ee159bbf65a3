"""Ray geometry for balls and ellipsoids.

Every query accepts a single point (shape ``(3,)``) or a batch
(shape ``(..., 3)``); outputs broadcast accordingly.  Ellipsoids are mapped
to the unit sphere by axis scaling, so exit times are closed-form roots of a
quadratic.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVelocity, DomainError, ConfigError

BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class DomainGeometry:
    shape: str
    center: tuple
    semi_axes: tuple

    def __post_init__(self):
        if self.shape not in ("ball", "ellipsoid"):
            raise ConfigError(f"unknown domain shape {self.shape!r}")
        if len(self.center) != 3 or len(self.semi_axes) != 3:
            raise ConfigError("center and semi_axes need three components")
        if min(self.semi_axes) <= 0:
            raise ConfigError("radius and semi-axes must be positive")

    @property
    def axes(self):
        return np.asarray(self.semi_axes, dtype=float)

    @property
    def origin(self):
        return np.asarray(self.center, dtype=float)

    @property
    def radius(self):
        if self.shape != "ball":
            raise AttributeError("radius is only defined for a ball")
        return self.semi_axes[0]

    @property
    def diameter(self):
        return 2.0 * max(self.semi_axes)

    @property
    def volume(self):
        a, b, c = self.semi_axes
        return 4.0 * np.pi / 3.0 * a * b * c

    def to_dict(self):
        if self.shape == "ball":
            return {"shape": "ball", "center": list(self.center),
                    "radius": float(self.semi_axes[0])}
        return {"shape": "ellipsoid", "center": list(self.center),
                "semi_axes": list(self.semi_axes)}


def ball(center=(0.0, 0.0, 0.0), radius=1.0):
    r = float(radius)
    return DomainGeometry("ball", tuple(float(c) for c in center), (r, r, r))


def ellipsoid(semi_axes, center=(0.0, 0.0, 0.0)):
    return DomainGeometry("ellipsoid", tuple(float(c) for c in center),
                          tuple(float(a) for a in semi_axes))


def domain_from_config(spec):
    try:
        shape = spec["shape"]
        center = spec.get("center", (0.0, 0.0, 0.0))
        if shape == "ball":
            return ball(center, spec["radius"])
        if shape == "ellipsoid":
            return ellipsoid(spec["semi_axes"], center)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad domain spec {spec!r}") from exc
    raise ConfigError(f"unknown domain shape {shape!r}")


@dataclass
class ExitData:
    tau_minus: np.ndarray
    q: np.ndarray
    normal: np.ndarray
    n_cos: np.ndarray


@dataclass
class PairGeometry:
    n_min: np.ndarray
    d_min: np.ndarray
    w_sigma: np.ndarray


def _scalarize(v):
    v = np.asarray(v)
    return v.item() if v.ndim == 0 else v


def implicit_level(dom, x):
    """|(x - c)/a|^2 - 1; negative inside."""
    p = (np.asarray(x, dtype=float) - dom.origin) / dom.axes
    return np.sum(p * p, axis=-1) - 1.0


def outward_normal(dom, q):
    g = (np.asarray(q, dtype=float) - dom.origin) / dom.axes**2
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _ellipsoid_distance(axes, y):
    """Distance from interior points to an axis-aligned centred ellipsoid.

    Solves for the Lagrange parameter t in (-a_min^2, 0] by bisection; the
    closest point is a_i^2 y_i / (t + a_i^2). The unknown is s = t + a_min^2 so
    the denominators keep full relative precision when the root is near the pole.
    """
    y = np.abs(np.atleast_2d(y))
    a2 = axes**2
    amin2 = a2.min()
    gap = a2 - amin2

    def F(s):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sum((axes * y / (s[:, None] + gap)) ** 2, axis=1) - 1.0

    n = y.shape[0]
    # degenerate branch: the min-axis components are (numerically) zero and the
    # root sits on the pole; those components are <= tiny there, so dropping
    # them moves the distance by at most tiny
    minax = np.isclose(a2, amin2)
    tiny = 1e-13 * amin2
    lo = np.full(n, tiny)
    hi = np.full(n, amin2)
    degenerate = F(lo) <= 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        pos = F(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        if np.all(hi - lo <= 1e-15 * hi):
            break
    sm = 0.5 * (lo + hi)
    x = a2 * y / (sm[:, None] + gap)
    d = np.linalg.norm(x - y, axis=1)
    if np.any(degenerate):
        yd = y[degenerate]
        xd = np.where(minax, 0.0, a2 * yd / np.where(minax, 1.0, a2 - amin2))
        rem = 1.0 - np.sum(np.where(minax, 0.0, (xd / axes) ** 2), axis=1)
        rem = amin2 * np.clip(rem, 0.0, None)
        d[degenerate] = np.sqrt(np.sum((xd - np.where(minax, 0.0, yd)) ** 2, axis=1) + rem)
    return d


def boundary_distance(dom, x, check=True):
    """d_x = dist(x, boundary) for interior x."""
    x = np.asarray(x, dtype=float)
    shp = x.shape[:-1]
    flat = x.reshape(-1, 3)
    if check and np.any(implicit_level(dom, flat) >= 0.0):
        raise DomainError("point is not strictly inside the domain")
    y = flat - dom.origin
    if dom.shape == "ball":
        d = dom.semi_axes[0] - np.linalg.norm(y, axis=1)
    else:
        d = _ellipsoid_distance(dom.axes, y)
    if check and np.any(d <= BOUNDARY_EPS):
        raise DomainError("point lies within 1e-9 of the boundary")
    return _scalarize(d.reshape(shp))


def is_interior(dom, x):
    x = np.asarray(x, dtype=float)
    inside = implicit_level(dom, x) < 0.0
    out = np.zeros(inside.shape, dtype=bool)
    if np.any(inside):
        d = np.asarray(boundary_distance(dom, x[inside], check=False))
        out[inside] = d > BOUNDARY_EPS
    return out


def _exit_time(dom, x, zeta):
    p = (x - dom.origin) / dom.axes
    v = zeta / dom.axes
    vv = np.sum(v * v, axis=-1)
    pv = np.sum(p * v, axis=-1)
    c = 1.0 - np.sum(p * p, axis=-1)  # > 0 inside
    disc = np.sqrt(np.maximum(pv * pv + vv * c, 0.0))
    # positive root of vv s^2 - 2 pv s - c = 0, written without cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(pv >= 0.0, (pv + disc) / vv, c / (disc - pv))
    return s


def exit_data(dom, x, zeta, check=True):
    """Backward exit time, exit point, outward normal and normal cosine."""
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    x, zeta = np.broadcast_arrays(x, zeta)
    speed = np.linalg.norm(zeta, axis=-1)
    if np.any(speed == 0.0):
        raise DegenerateVelocity("zero velocity has no characteristic")
    if check:
        boundary_distance(dom, x)
    tau = _exit_time(dom, x, zeta)
    q = x - tau[..., None] * zeta
    nrm = outward_normal(dom, q)
    ncos = np.abs(np.sum(nrm * zeta, axis=-1)) / speed
    return ExitData(_scalarize(tau), q, nrm, _scalarize(ncos))


def tau_minus(dom, x, zeta, check=True):
    return exit_data(dom, x, zeta, check=check).tau_minus


def normal_cosine(dom, x, zeta, check=True):
    return exit_data(dom, x, zeta, check=check).n_cos


def weight_w(dom, x, zeta, check=True):
    """|zeta|/(1+|zeta|) N(x, zeta)."""
    s = np.linalg.norm(np.asarray(zeta, dtype=float), axis=-1)
    return _scalarize(s / (1.0 + s) * exit_data(dom, x, zeta, check=check).n_cos)


def pair_geometry(dom, x, y, zeta, sigma=1.0, check=True):
    if not 0.0 < sigma <= 1.0:
        raise ValueError("sigma must lie in (0, 1]")
    nx = np.asarray(normal_cosine(dom, x, zeta, check=check))
    ny = np.asarray(normal_cosine(dom, y, zeta, check=check))
    n_min = np.minimum(nx, ny)
    d_min = np.minimum(np.asarray(boundary_distance(dom, x, check=check)),
                       np.asarray(boundary_distance(dom, y, check=check)))
    s = np.linalg.norm(np.asarray(zeta, dtype=float), axis=-1)
    w_sigma = s**sigma / (1.0 + s) * n_min
    return PairGeometry(_scalarize(n_min), _scalarize(d_min), _scalarize(w_sigma))


def grad_zeta_tau(dom, x, zeta, check=True):
    """Central-difference gradient of tau_minus in zeta, step 1e-5 max(1,|zeta|).

    Accepts batches; the interior check is done once, not per stencil point.
    """
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if check:
        boundary_distance(dom, x)
    h = 1e-5 * np.maximum(1.0, np.linalg.norm(zeta, axis=-1))
    g = np.empty(np.broadcast_shapes(x.shape, zeta.shape))
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        step = np.asarray(h)[..., None] * e
        g[..., k] = (tau_minus(dom, x, zeta + step, check=False)
                     - tau_minus(dom, x, zeta - step, check=False)) / (2 * h)
    return g


def sample_interior(dom, n, rng, margin=1e-6):
    """Uniform samples in the domain, kept at least ``margin`` from the boundary."""
    if margin >= float(np.min(dom.axes)):
        raise DomainError(f"margin {margin} leaves no interior points")
    out = np.empty((0, 3))
    while out.shape[0] < n:
        u = rng.standard_normal((2 * n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.random(2 * n) ** (1.0 / 3.0)
        pts = dom.origin + dom.axes * (u * r[:, None])
        keep = is_interior(dom, pts)
        if margin > BOUNDARY_EPS:
            keep[keep] &= np.asarray(boundary_distance(dom, pts[keep], check=False)) > margin
        out = np.vstack([out, pts[keep]])
    return out[:n]


def sample_boundary(dom, n, rng):
    u = rng.standard_normal((n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return dom.origin + dom.axes * u


def random_directions(n, rng):
    u = rng.standard_normal((n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def surface_element(dom, unit_dirs):
    """Area element dS/dOmega for the map u -> c + a*u of the unit sphere."""
    a = dom.axes
    u = np.asarray(unit_dirs, dtype=float)
    return np.prod(a) * np.linalg.norm(u / a, axis=-1)
