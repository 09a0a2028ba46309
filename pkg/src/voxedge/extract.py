"""Turn density grids, gradient fields and edge masks into point clouds.

Every extracted point sits exactly at a voxel centre and clouds are ordered by
ascending x-fastest linear voxel index.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_SOBEL_REL_THRESHOLD = 0.25


@dataclass(frozen=True, eq=False)
class PointCloud:
    """World-space points (mm) with optional per-point RGB colours.

    ``lattice`` records ``(dims, spacing, origin)`` of the grid a cloud was
    extracted from, which lets ``colorize`` look up voxel colours.
    """

    points: np.ndarray
    colors: np.ndarray = None
    lattice: tuple = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ConfigurationError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)
        if self.colors is not None:
            cols = np.asarray(self.colors)
            if cols.size == 0:
                cols = cols.reshape(0, 3)
            if cols.shape != pts.shape:
                raise ConfigurationError(
                    f"colors shape {cols.shape} does not match points shape {pts.shape}"
                )
            object.__setattr__(self, "colors", cols.astype(np.uint8))

    def __len__(self):
        return int(self.points.shape[0])

    @property
    def has_colors(self):
        return self.colors is not None

    def take(self, index):
        cols = None if self.colors is None else self.colors[index]
        return PointCloud(self.points[index], cols, self.lattice)

    def equals(self, other):
        """Exact equality of coordinates and colours."""
        if self.points.shape != other.points.shape or not np.array_equal(self.points, other.points):
            return False
        if (self.colors is None) != (other.colors is None):
            return False
        return self.colors is None or np.array_equal(self.colors, other.colors)


def _cloud_from_mask(mask, spacing, origin):
    dims = mask.shape
    linear = np.flatnonzero(mask.ravel(order="F"))
    idx = np.stack(np.unravel_index(linear, dims, order="F"), axis=1)
    pts = np.asarray(origin, dtype=np.float64) + idx * np.asarray(spacing, dtype=np.float64)
    return PointCloud(pts, lattice=(tuple(dims), tuple(spacing), tuple(origin)))


def extract_by_threshold(grid, delta_t):
    """One point per voxel with density >= ``delta_t``."""
    return _cloud_from_mask(grid.values >= delta_t, grid.spacing, grid.origin)


def extract_by_gradient(field, rel_threshold=DEFAULT_SOBEL_REL_THRESHOLD):
    """One point per voxel whose gradient magnitude reaches ``rel_threshold`` of the maximum."""
    if not 0 < rel_threshold <= 1:
        raise ConfigurationError(f"rel_threshold must lie in (0, 1], got {rel_threshold}")
    mag = field.magnitude
    peak = float(mag.max())
    if peak <= 0:
        return _cloud_from_mask(np.zeros(mag.shape, dtype=bool), field.spacing, field.origin)
    return _cloud_from_mask(mag >= rel_threshold * peak, field.spacing, field.origin)


def extract_by_mask(mask):
    return _cloud_from_mask(mask.mask, mask.spacing, mask.origin)


def colorize(cloud, color_grid=None):
    """Attach the colour of each point's voxel; no colour grid leaves the cloud unchanged."""
    if color_grid is None:
        return cloud
    dims, spacing, origin = color_grid.geometry
    if cloud.lattice is not None:
        c_dims, c_spacing, c_origin = cloud.lattice
        if (tuple(c_dims), tuple(map(float, c_spacing)), tuple(map(float, c_origin))) != (dims, spacing, origin):
            raise ConfigurationError(
                f"colour grid geometry {color_grid.geometry} does not match source grid {cloud.lattice}"
            )
    if len(cloud) == 0:
        return PointCloud(cloud.points, np.zeros((0, 3), dtype=np.uint8), cloud.lattice)
    idx_f = (cloud.points - np.asarray(origin)) / np.asarray(spacing)
    idx = np.rint(idx_f).astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(dims)) or np.abs(idx_f - idx).max() > 1e-6:
        raise ConfigurationError("cloud points do not lie on the colour grid's voxel centres")
    cols = color_grid.rgb[idx[:, 0], idx[:, 1], idx[:, 2]]
    return PointCloud(cloud.points, cols, cloud.lattice)
