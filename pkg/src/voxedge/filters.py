"""3D edge detectors on density grids: Sobel, Canny and Laplacian of Gaussian.

The first-derivative detectors look for maxima of the density gradient, the
second-derivative detector for zero crossings of the smoothed Laplacian.  All
thresholds are relative to the strongest response in the field, so the
resulting edge sets do not depend on the absolute density scale.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .convolution import Kernel3D, as_grid, convolve, gaussian_kernel_1d, gaussian_smooth
from .errors import ConfigurationError
from .grid import MIN_FILTER_DIM, DensityGrid

DERIVATIVE = np.array([-1.0, 0.0, 1.0])
SMOOTHING = np.array([1.0, 2.0, 1.0])
SOBEL_GAIN = 32.0  # response of each Sobel kernel to a unit-slope ramp

DOG_RATIO = 1.6


def sobel_kernels():
    """The x, y and z 3D Sobel kernels with raw integer weights.

    ``kx.weights[a]`` is the x-slice at offset ``a - 1``: all negative
    (centre -4) at -1, zero at 0, positive at +1.
    """
    kx = Kernel3D.separable(DERIVATIVE, SMOOTHING, SMOOTHING)
    ky = Kernel3D.separable(SMOOTHING, DERIVATIVE, SMOOTHING)
    kz = Kernel3D.separable(SMOOTHING, SMOOTHING, DERIVATIVE)
    return kx, ky, kz


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-voxel gradient components and their Euclidean magnitude."""

    gx: np.ndarray
    gy: np.ndarray
    gz: np.ndarray
    magnitude: np.ndarray
    spacing: tuple
    origin: tuple

    @classmethod
    def from_components(cls, gx, gy, gz, spacing, origin):
        mag = np.sqrt(gx * gx + gy * gy + gz * gz)
        return cls(gx, gy, gz, mag, tuple(spacing), tuple(origin))

    @property
    def dims(self):
        return tuple(int(n) for n in self.magnitude.shape)

    def magnitude_grid(self):
        return DensityGrid(self.magnitude, self.spacing, self.origin)

    def physical(self):
        """Gradient in density units per mm (diagnostics only)."""
        sx, sy, sz = (SOBEL_GAIN * s for s in self.spacing)
        return GradientField.from_components(
            self.gx / sx, self.gy / sy, self.gz / sz, self.spacing, self.origin
        )


@dataclass(frozen=True, eq=False)
class EdgeMask:
    """Boolean edge classification over a grid, tagged with how it was produced."""

    mask: np.ndarray
    spacing: tuple
    origin: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 3:
            raise ConfigurationError(f"mask must be 3D, got shape {m.shape}")
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def dims(self):
        return tuple(int(n) for n in self.mask.shape)

    @property
    def count(self):
        return int(np.count_nonzero(self.mask))

    def __len__(self):
        return self.count


def _require_dims(grid, minimum, what):
    if min(grid.dims) < minimum:
        raise ConfigurationError(f"{what} needs at least {minimum} voxels per axis, got {grid.dims}")


def sobel_gradient(grid, border="replicate"):
    """Sobel gradient components and magnitude with unnormalised kernels.

    The kernels are applied as correlations, so on a field that increases
    along +x the x component is positive (``+32`` per unit slope).
    """
    grid = as_grid(grid)
    _require_dims(grid, MIN_FILTER_DIM, "the Sobel filter")
    comps = [convolve(grid, k.flipped(), border).values for k in sobel_kernels()]
    return GradientField.from_components(*comps, grid.spacing, grid.origin)


@dataclass(frozen=True)
class CannyParams:
    """Canny settings; thresholds are fractions of the maximum gradient magnitude."""

    gaussian_sigma: float = 0.1
    low_rel: float = 0.0005
    high_rel: float = 0.002
    nms_enabled: bool = False

    def __post_init__(self):
        if not (self.gaussian_sigma > 0 and math.isfinite(self.gaussian_sigma)):
            raise ConfigurationError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if not 0 < self.low_rel <= 1 or not 0 < self.high_rel <= 1:
            raise ConfigurationError("relative thresholds must lie in (0, 1]")
        if self.low_rel > self.high_rel:
            raise ConfigurationError(f"low_rel ({self.low_rel}) must not exceed high_rel ({self.high_rel})")

    def to_dict(self):
        return {
            "gaussian_sigma": self.gaussian_sigma,
            "low_rel": self.low_rel,
            "high_rel": self.high_rel,
            "nms_enabled": self.nms_enabled,
        }


def non_maximum_suppression(field, where=None):
    """Keep voxels whose magnitude is not below either neighbour along the gradient.

    Neighbour magnitudes are trilinearly interpolated one voxel step forward
    and backward along the unit gradient direction (index space).  Only voxels
    in ``where`` (default: all) are tested; the rest come back False.
    """
    mag = field.magnitude
    keep = np.zeros(mag.shape, dtype=bool)
    test = mag > 0
    if where is not None:
        test &= where
    idx = np.nonzero(test)
    if idx[0].size == 0:
        return keep
    m = mag[idx]
    pos = np.stack(idx).astype(np.float64)
    step = np.stack([field.gx[idx], field.gy[idx], field.gz[idx]]) / m
    upper = (np.asarray(mag.shape, dtype=np.float64) - 1)[:, None]
    # clamping equals replicate extension for linear interpolation, and a
    # sample clamped back onto the voxel itself then returns m exactly
    fwd = ndimage.map_coordinates(mag, np.clip(pos + step, 0, upper), order=1, mode="nearest")
    bwd = ndimage.map_coordinates(mag, np.clip(pos - step, 0, upper), order=1, mode="nearest")
    keep[idx] = (m >= fwd) & (m >= bwd)
    return keep


def hysteresis(strong, weak):
    """``strong`` plus every weak voxel 26-connected to it through weak/strong voxels."""
    candidates = strong | weak
    labels, n = ndimage.label(candidates, structure=np.ones((3, 3, 3), dtype=bool))
    if n == 0:
        return np.zeros(strong.shape, dtype=bool)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return seeded[labels]


def canny_edges(grid, params=None, border="replicate"):
    """3D Canny: Gaussian smoothing, Sobel gradient, optional NMS, double threshold, hysteresis."""
    params = params or CannyParams()
    grid = as_grid(grid)
    _require_dims(grid, MIN_FILTER_DIM, "the Canny filter")
    # truncate the Gaussian to fit small grids rather than reject them
    radius = min(max(1, math.ceil(3.0 * params.gaussian_sigma)), (min(grid.dims) - 1) // 2)
    smoothed = gaussian_smooth(grid, params.gaussian_sigma, radius, border=border)
    field = sobel_gradient(smoothed, border)
    mag = field.magnitude
    provenance = {"detector": "canny", **params.to_dict()}

    peak = float(mag.max())
    if peak <= 0:
        return EdgeMask(np.zeros(mag.shape, dtype=bool), grid.spacing, grid.origin, provenance)

    candidates = mag >= params.low_rel * peak
    if params.nms_enabled:
        candidates = non_maximum_suppression(field, candidates)
    strong = candidates & (mag >= params.high_rel * peak)
    weak = candidates & ~strong
    edges = hysteresis(strong, weak)
    return EdgeMask(edges, grid.spacing, grid.origin, provenance)


@dataclass(frozen=True)
class LogParams:
    """Laplacian-of-Gaussian settings; ``mode`` is ``"log"`` or ``"dog"``."""

    mask_size: int = 7
    sigma: float = 7.0
    mode: str = "log"
    dog_ratio: float = DOG_RATIO
    contrast_min: float = 0.0

    def __post_init__(self):
        if int(self.mask_size) != self.mask_size or self.mask_size < 3 or self.mask_size % 2 == 0:
            raise ConfigurationError(f"mask_size must be an odd integer >= 3, got {self.mask_size}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError(f"sigma must be > 0, got {self.sigma}")
        if self.mode not in ("log", "dog"):
            raise ConfigurationError(f"mode must be 'log' or 'dog', got {self.mode!r}")
        if not self.dog_ratio > 1:
            raise ConfigurationError("dog_ratio must be > 1")
        if not self.contrast_min >= 0:
            raise ConfigurationError("contrast_min must be >= 0")

    def to_dict(self):
        return {
            "mask_size": int(self.mask_size),
            "sigma": self.sigma,
            "mode": self.mode,
            "dog_ratio": self.dog_ratio,
            "contrast_min": self.contrast_min,
        }


def log_kernel(mask_size, sigma):
    """Sampled 3D Laplacian of Gaussian, shifted to zero sum.

    The closed form is ``G(r) * (r^2 - 3 sigma^2) / sigma^4``; subtracting the
    mean removes the DC leak of the truncated mask while keeping the kernel
    symmetric, so affine fields still map to zero.
    """
    r = int(mask_size) // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    x, y, z = np.meshgrid(t, t, t, indexing="ij")
    rr = x * x + y * y + z * z
    s2 = sigma * sigma
    g = np.exp(-rr / (2.0 * s2)) / ((2.0 * np.pi) ** 1.5 * sigma**3)
    w = g * (rr - 3.0 * s2) / (s2 * s2)
    w -= w.mean()
    return Kernel3D(w)


def dog_kernel(mask_size, sigma, ratio=DOG_RATIO):
    """Dense ``G(sigma) - G(ratio * sigma)`` on the mask lattice."""
    r = int(mask_size) // 2
    narrow = Kernel3D.separable(*[gaussian_kernel_1d(sigma, r)] * 3)
    wide = Kernel3D.separable(*[gaussian_kernel_1d(ratio * sigma, r)] * 3)
    return Kernel3D(narrow.weights - wide.weights)


def _round_off_floor(grid, abs_kernel_sum, taps):
    # bound on accumulated rounding error of one output sample
    scale = float(np.abs(grid.values).max()) * abs_kernel_sum
    return 4.0 * taps * np.finfo(np.float64).eps * scale


def log_response(grid, params=None, border="replicate"):
    """Convolve with an LoG (or DoG) kernel.

    Responses whose magnitude is below the floating-point error bound of the
    convolution are set to exactly zero so round-off cannot fabricate sign
    changes on flat or affine fields.
    """
    params = params or LogParams()
    grid = as_grid(grid)
    _require_dims(grid, max(MIN_FILTER_DIM, int(params.mask_size)), "the LoG mask")
    radius = int(params.mask_size) // 2
    if params.mode == "log":
        kernel = log_kernel(params.mask_size, params.sigma)
        out = convolve(grid, kernel, border).values
        floor = _round_off_floor(grid, np.abs(kernel.weights).sum(), kernel.weights.size)
    else:
        g1 = gaussian_kernel_1d(params.sigma, radius)
        g2 = gaussian_kernel_1d(params.dog_ratio * params.sigma, radius)
        out = (
            convolve(grid, Kernel3D.separable(g1, g1, g1), border).values
            - convolve(grid, Kernel3D.separable(g2, g2, g2), border).values
        )
        floor = _round_off_floor(grid, 2.0, 3 * (2 * radius + 1))
    out = np.where(np.abs(out) <= floor, 0.0, out)
    return grid.with_values(out)


def zero_crossings(response, contrast_min=0.0, provenance=None):
    """Mark voxels on the smaller-magnitude side of each sign change between face neighbours."""
    if contrast_min < 0:
        raise ConfigurationError("contrast_min must be >= 0")
    response = as_grid(response)
    r = np.asarray(response.values, dtype=np.float64)
    marked = np.zeros(r.shape, dtype=bool)
    for axis in range(3):
        n = r.shape[axis]
        if n < 2:
            continue
        a = np.take(r, np.arange(n - 1), axis=axis)
        b = np.take(r, np.arange(1, n), axis=axis)
        crossing = (np.sign(a) * np.sign(b) < 0) & (np.abs(a - b) >= contrast_min)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        marked[tuple(lo)] |= crossing & (np.abs(a) <= np.abs(b))
        marked[tuple(hi)] |= crossing & (np.abs(b) <= np.abs(a))
    tag = {"detector": "zero-crossing", "contrast_min": contrast_min}
    if provenance:
        tag.update(provenance)
    return EdgeMask(marked, response.spacing, response.origin, tag)


def log_edges(grid, params=None, border="replicate", exclude_border=True):
    """LoG/DoG response followed by zero-crossing detection.

    With ``exclude_border`` crossings inside the shell of one mask radius
    along the grid faces are dropped: there the padded border, not the data,
    shapes the second derivative (an affine field bends at replicated corners).
    """
    params = params or LogParams()
    response = log_response(grid, params, border)
    edges = zero_crossings(response, params.contrast_min, {"detector": "log", **params.to_dict()})
    if not exclude_border:
        return edges
    r = int(params.mask_size) // 2
    inner = np.zeros(edges.dims, dtype=bool)
    inner[r : edges.dims[0] - r, r : edges.dims[1] - r, r : edges.dims[2] - r] = True
    return EdgeMask(edges.mask & inner, edges.spacing, edges.origin, {**edges.provenance, "border_margin": r})
