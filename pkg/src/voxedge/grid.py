"""Regular voxel grids, coordinate transforms and synthetic density fields.

Arrays are indexed ``values[i, j, k]`` with ``i`` along x.  The canonical flat
storage order (files, ``DensityGrid.flat``) is x-fastest, i.e. the linear index
of voxel ``(i, j, k)`` is ``i + nx*j + nx*ny*k``.  Voxel indices map to cell
centres; ``origin`` is the world position (mm) of voxel ``(0, 0, 0)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import BoundsError, ConfigurationError

MIN_FILTER_DIM = 3


def _triple(value, name, cast=float):
    try:
        out = tuple(cast(v) for v in value)
    except TypeError:
        out = (cast(value),) * 3
    if len(out) != 3:
        raise ConfigurationError(f"{name} must have three components, got {value!r}")
    return out


def _frozen(arr):
    arr = np.asarray(arr)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Scalar field sampled on a regular lattice, immutable after construction."""

    values: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 3:
            raise ConfigurationError(f"values must be 3D, got shape {values.shape}")
        if min(values.shape) < 1:
            raise ConfigurationError(f"every axis needs at least one voxel, got {values.shape}")
        if values.dtype.kind not in "fiu":
            raise ConfigurationError(f"values must be numeric, got {values.dtype}")
        if values.dtype.kind != "f":
            values = values.astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("density values must be finite")
        spacing = _triple(self.spacing, "spacing")
        if not all(s > 0 and np.isfinite(s) for s in spacing):
            raise ConfigurationError(f"spacing must be strictly positive, got {spacing}")
        origin = _triple(self.origin, "origin")
        if not all(np.isfinite(o) for o in origin):
            raise ConfigurationError(f"origin must be finite, got {origin}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def from_flat(cls, flat, dims, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        """Build a grid from an x-fastest flat array of length nx*ny*nz."""
        dims = _triple(dims, "dims", int)
        flat = np.asarray(flat)
        if flat.ndim != 1 or flat.size != dims[0] * dims[1] * dims[2]:
            raise ConfigurationError(
                f"expected {dims[0] * dims[1] * dims[2]} values for dims {dims}, got {flat.size}"
            )
        return cls(flat.reshape(dims, order="F"), spacing, origin)

    @property
    def dims(self):
        return tuple(int(n) for n in self.values.shape)

    @property
    def flat(self):
        """Values in x-fastest storage order."""
        return self.values.ravel(order="F")

    @property
    def geometry(self):
        return self.dims, self.spacing, self.origin

    def same_geometry(self, other):
        return self.geometry == other.geometry

    def with_values(self, values):
        """New grid with identical placement and different values."""
        return DensityGrid(values, self.spacing, self.origin)

    def index_to_world(self, index):
        return index_to_world(self, index)

    def sample(self, index):
        return sample(self, index)

    def world_coordinates(self, indices):
        """Vectorised index -> world transform for an (N, 3) integer array."""
        idx = np.asarray(indices, dtype=np.float64).reshape(-1, 3)
        return np.asarray(self.origin) + idx * np.asarray(self.spacing)

    def center(self):
        """World position of the geometric centre of the lattice."""
        return grid_center(self.dims, self.spacing, self.origin)


@dataclass(frozen=True, eq=False)
class ColorGrid:
    """Per-voxel RGB colours (uint8) sharing a density grid's placement."""

    rgb: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        rgb = np.asarray(self.rgb)
        if rgb.ndim != 4 or rgb.shape[3] != 3:
            raise ConfigurationError(f"rgb must have shape (nx, ny, nz, 3), got {rgb.shape}")
        if rgb.dtype != np.uint8:
            if not np.all(np.isfinite(rgb)):
                raise ConfigurationError("colour values must be finite")
            rgb = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
        object.__setattr__(self, "rgb", _frozen(rgb))
        object.__setattr__(self, "spacing", _triple(self.spacing, "spacing"))
        object.__setattr__(self, "origin", _triple(self.origin, "origin"))

    @property
    def dims(self):
        return tuple(int(n) for n in self.rgb.shape[:3])

    @property
    def geometry(self):
        return self.dims, self.spacing, self.origin


def _check_index(grid, index):
    index = _triple(index, "index", int)
    for a, (i, n) in enumerate(zip(index, grid.dims)):
        if not 0 <= i < n:
            raise BoundsError(f"index {index} out of range on axis {a} (size {n})")
    return index


def index_to_world(grid, index):
    """World position (mm) of the centre of voxel ``index``."""
    index = _check_index(grid, index)
    return tuple(o + i * s for o, i, s in zip(grid.origin, index, grid.spacing))


def sample(grid, index):
    """Stored density at a lattice site."""
    i, j, k = _check_index(grid, index)
    return float(grid.values[i, j, k])


def grid_center(dims, spacing, origin):
    dims = _triple(dims, "dims", int)
    spacing = _triple(spacing, "spacing")
    origin = _triple(origin, "origin")
    return tuple(o + 0.5 * (n - 1) * s for o, n, s in zip(origin, dims, spacing))


SHAPES = ("sphere", "box", "two-spheres")


@dataclass(frozen=True)
class SyntheticSpec:
    """Analytic test object whose density rises smoothly from outside to inside.

    ``sphere`` uses ``radius``; ``box`` uses ``half_extents``; ``two-spheres``
    uses ``radii`` and ``centers`` (offsets from the shape centre).  ``center``
    is the world position of the shape; ``None`` means the centre of whatever
    grid it is rendered into.
    """

    shape: str = "sphere"
    radius: float = 10.0
    half_extents: tuple = (8.0, 8.0, 8.0)
    radii: tuple = (6.0, 6.0)
    centers: tuple = ((-5.0, 0.0, 0.0), (5.0, 0.0, 0.0))
    amplitude: float = 100.0
    ramp_width: float = 0.5
    noise_sigma: float = 0.0
    seed: int = 0
    center: tuple = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"unsupported shape {self.shape!r}; choose from {SHAPES}")
        if not self.amplitude > 0:
            raise ConfigurationError("amplitude must be > 0")
        if not self.ramp_width > 0:
            raise ConfigurationError("ramp_width must be > 0")
        if not self.noise_sigma >= 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if self.shape == "sphere" and not self.radius > 0:
            raise ConfigurationError("radius must be > 0")
        if self.shape == "box":
            he = _triple(self.half_extents, "half_extents")
            if min(he) <= 0:
                raise ConfigurationError("half_extents must be > 0")
            object.__setattr__(self, "half_extents", he)
        if self.shape == "two-spheres":
            radii = tuple(float(r) for r in self.radii)
            centers = tuple(_triple(c, "centers") for c in self.centers)
            if len(radii) != 2 or len(centers) != 2 or min(radii) <= 0:
                raise ConfigurationError("two-spheres needs two positive radii and two centers")
            object.__setattr__(self, "radii", radii)
            object.__setattr__(self, "centers", centers)
        if self.center is not None:
            object.__setattr__(self, "center", _triple(self.center, "center"))

    def to_dict(self):
        out = {
            "shape": self.shape,
            "amplitude": self.amplitude,
            "ramp_width": self.ramp_width,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "center": list(self.center) if self.center is not None else None,
        }
        if self.shape == "sphere":
            out["radius"] = self.radius
        elif self.shape == "box":
            out["half_extents"] = list(self.half_extents)
        else:
            out["radii"] = list(self.radii)
            out["centers"] = [list(c) for c in self.centers]
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if data.get("centers") is not None:
            data["centers"] = tuple(tuple(c) for c in data["centers"])
        for key in ("half_extents", "radii", "center"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def signed_distance(self, points, center):
        """Signed distance (mm, negative inside) of world points to the surface."""
        p = np.asarray(points, dtype=np.float64) - np.asarray(center, dtype=np.float64)
        if self.shape == "sphere":
            return np.linalg.norm(p, axis=-1) - self.radius
        if self.shape == "box":
            q = np.abs(p) - np.asarray(self.half_extents)
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
            inside = np.minimum(np.max(q, axis=-1), 0.0)
            return outside + inside
        d = [np.linalg.norm(p - np.asarray(c), axis=-1) - r for c, r in zip(self.centers, self.radii)]
        return np.minimum(d[0], d[1])


def _lattice_points(dims, spacing, origin):
    axes = [o + s * np.arange(n) for n, s, o in zip(dims, spacing, origin)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def generate_synthetic(spec, dims, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    """Render ``spec`` as ``A * logistic(-signed_distance / s)`` plus Gaussian noise."""
    dims = _triple(dims, "dims", int)
    if min(dims) < MIN_FILTER_DIM:
        raise ConfigurationError(
            f"every axis needs at least {MIN_FILTER_DIM} voxels for 3x3x3 filters, got {dims}"
        )
    spacing = _triple(spacing, "spacing")
    if min(spacing) <= 0:
        raise ConfigurationError(f"spacing must be strictly positive, got {spacing}")
    origin = _triple(origin, "origin")
    center = spec.center if spec.center is not None else grid_center(dims, spacing, origin)

    sd = spec.signed_distance(_lattice_points(dims, spacing, origin), center)
    values = spec.amplitude * expit(-sd / spec.ramp_width)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        # drawn in x-fastest order so the noise pattern matches the file layout
        noise = rng.normal(0.0, spec.noise_sigma, size=dims[0] * dims[1] * dims[2])
        values = values + noise.reshape(dims, order="F")
    return DensityGrid(values, spacing, origin)


def _unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # a zero triple has probability zero but would divide by zero
    bad = norms[:, 0] == 0
    while np.any(bad):
        v[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        bad = norms[:, 0] == 0
    return v / norms


def _box_surface(rng, half, n):
    hx, hy, hz = half
    # face pairs normal to x, y, z, weighted by area
    areas = np.array([hy * hz, hx * hz, hx * hy])
    axis = rng.choice(3, size=n, p=areas / areas.sum())
    side = rng.choice([-1.0, 1.0], size=n)
    pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * np.asarray(half)
    pts[np.arange(n), axis] = side * np.asarray(half)[axis]
    return pts


def _two_sphere_surface(rng, spec, n):
    (c0, c1), (r0, r1) = spec.centers, spec.radii
    c0, c1 = np.asarray(c0), np.asarray(c1)
    chunks, have = [], 0
    w0 = r0 * r0 / (r0 * r0 + r1 * r1)
    while have < n:
        m = max(2 * (n - have), 64)
        which = rng.random(m) >= w0
        dirs = _unit_vectors(rng, m)
        pts = np.where(which[:, None], c1 + r1 * dirs, c0 + r0 * dirs)
        # drop points buried inside the other sphere
        keep = np.where(
            which,
            np.linalg.norm(pts - c0, axis=1) >= r0,
            np.linalg.norm(pts - c1, axis=1) >= r1,
        )
        pts = pts[keep]
        chunks.append(pts)
        have += len(pts)
    return np.concatenate(chunks)[:n]


def analytic_surface_points(spec, count, seed=0, center=None):
    """``count`` points distributed uniformly over the analytic surface of ``spec``.

    The shape is placed at ``center`` if given, else at ``spec.center``.
    """
    from .extract import PointCloud

    count = int(count)
    if count <= 0:
        raise ConfigurationError("count must be > 0")
    if spec.shape not in SHAPES:
        raise ConfigurationError(f"unsupported shape {spec.shape!r}")
    if center is None:
        center = spec.center
    if center is None:
        raise ConfigurationError("shape centre unknown: pass center= or set spec.center")
    center = np.asarray(_triple(center, "center"))

    rng = np.random.default_rng(seed)
    if spec.shape == "sphere":
        pts = spec.radius * _unit_vectors(rng, count)
    elif spec.shape == "box":
        pts = _box_surface(rng, spec.half_extents, count)
    else:
        pts = _two_sphere_surface(rng, spec, count)
    return PointCloud(pts + center)
