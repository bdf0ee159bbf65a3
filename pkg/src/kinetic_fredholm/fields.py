"""Phase-space fields on (spatial node x velocity node) grids and CSV I/O."""
from dataclasses import dataclass
import csv

import numpy as np

CSV_VERSION = 1
CSV_HEADER = ["x1", "x2", "x3", "z1", "z2", "z3", "value"]


@dataclass
class PhaseSpaceField:
    space: object  # SpatialGrid
    velocity: object  # VelocityGrid
    values: np.ndarray  # (n_space, n_velocity)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        want = (self.space.size, self.velocity.size)
        if self.values.shape != want:
            raise ValueError(f"field shape {self.values.shape} does not match grids {want}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_function(cls, space, velocity, fn):
        x = space.points[:, None, :]
        z = velocity.nodes[None, :, :]
        x, z = np.broadcast_arrays(x, z)
        return cls(space, velocity, fn(x, z))

    @classmethod
    def zeros(cls, space, velocity):
        return cls(space, velocity, np.zeros((space.size, velocity.size)))

    def weighted(self, alpha):
        return self.values * np.exp(alpha * self.velocity.speeds**2)[None, :]

    def linf_alpha(self, alpha):
        """sup |f| exp(alpha |zeta|^2) over the nodes."""
        return float(np.max(np.abs(self.weighted(alpha))))

    def copy_with(self, values):
        return PhaseSpaceField(self.space, self.velocity, values)

    def __add__(self, other):
        return self.copy_with(self.values + other.values)

    def __sub__(self, other):
        return self.copy_with(self.values - other.values)

    def __mul__(self, s):
        return self.copy_with(self.values * s)

    __rmul__ = __mul__

    def at_points(self, points):
        """Spatial interpolation for every velocity node, shape (n_points, n_velocity)."""
        return self.space.interpolate(self.values, points)


def write_field_csv(path, field, seed=None):
    x = np.repeat(field.space.points, field.velocity.size, axis=0)
    z = np.tile(field.velocity.nodes, (field.space.size, 1))
    v = field.values.reshape(-1)
    with open(path, "w", newline="") as fh:
        fh.write(f"# kinetic-fredholm v{CSV_VERSION}" + (f" seed={seed}" if seed is not None else "") + "\n")
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in zip(x[:, 0], x[:, 1], x[:, 2], z[:, 0], z[:, 1], z[:, 2], v):
            w.writerow([repr(float(c)) for c in row])


def read_field_csv(path):
    """Return (points, velocities, values) arrays from a field CSV."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# kinetic-fredholm v"):
            raise ValueError("missing kinetic-fredholm version header")
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0:3], data[:, 3:6], data[:, 6]
