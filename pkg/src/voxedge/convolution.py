"""3D kernels and (separable) convolution with replicate or zero borders."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._parallel import run_slabs
from .errors import ConfigurationError
from .grid import DensityGrid

BORDERS = {"replicate": "nearest", "zero": "constant"}


@dataclass(frozen=True, eq=False)
class Kernel3D:
    """Dense 3D kernel indexed ``weights[a, b, c]`` with offset ``(a, b, c) - radius``.

    ``factors`` optionally holds three 1D vectors whose outer product equals
    ``weights``; convolution then runs as three 1D passes.
    """

    weights: np.ndarray
    factors: tuple = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 3:
            raise ConfigurationError(f"kernel weights must be 3D, got shape {w.shape}")
        if any(n < 1 or n % 2 == 0 for n in w.shape):
            raise ConfigurationError(f"kernel sizes must be odd and >= 1, got {w.shape}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.factors is not None:
            fs = tuple(np.array(f, dtype=np.float64).ravel() for f in self.factors)
            if len(fs) != 3 or tuple(f.size for f in fs) != w.shape:
                raise ConfigurationError("separable factors must be three vectors matching the kernel shape")
            outer = np.einsum("i,j,k->ijk", *fs)
            scale = max(np.abs(w).max(), np.finfo(float).tiny)
            if np.abs(outer - w).max() > 1e-12 * scale:
                raise ConfigurationError("separable factors do not reproduce the dense weights")
            for f in fs:
                f.flags.writeable = False
            object.__setattr__(self, "factors", fs)

    @classmethod
    def separable(cls, fx, fy, fz):
        return cls(np.einsum("i,j,k->ijk", *(np.asarray(f, dtype=np.float64) for f in (fx, fy, fz))), (fx, fy, fz))

    @property
    def size(self):
        return self.weights.shape

    @property
    def radius(self):
        return tuple(n // 2 for n in self.weights.shape)

    @property
    def is_separable(self):
        return self.factors is not None

    def flipped(self):
        """Point reflection ``k[-o]``; convolving with it is correlation with ``k``."""
        factors = None if self.factors is None else tuple(f[::-1] for f in self.factors)
        return Kernel3D(self.weights[::-1, ::-1, ::-1], factors)

    def flat(self):
        return self.weights.ravel(order="F")


def gaussian_kernel_1d(sigma, radius=None):
    """Sampled Gaussian on ``[-radius, radius]``, normalised to unit sum."""
    sigma = float(sigma)
    if not sigma > 0 or not math.isfinite(sigma):
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    if radius is None:
        radius = max(1, math.ceil(3.0 * sigma))
    radius = int(radius)
    if radius < 0:
        raise ConfigurationError(f"radius must be >= 0, got {radius}")
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_kernel(sigma, radius=None):
    g = gaussian_kernel_1d(sigma, radius)
    return Kernel3D.separable(g, g, g)


def _mode(border):
    try:
        return BORDERS[border]
    except KeyError:
        raise ConfigurationError(f"unknown border policy {border!r}; choose from {sorted(BORDERS)}") from None


def _convolve1d(data, weights, axis, mode):
    out = np.empty(data.shape, dtype=np.float64)
    # slab along an axis orthogonal to the filter direction: no halo required
    slab_axis = 0 if axis != 0 else 1

    def work(a, b):
        sl = [slice(None)] * 3
        sl[slab_axis] = slice(a, b)
        sl = tuple(sl)
        out[sl] = ndimage.convolve1d(data[sl], weights, axis=axis, mode=mode, cval=0.0)

    run_slabs(work, data.shape[slab_axis])
    return out


def _convolve_dense(data, weights, mode):
    out = np.empty(data.shape, dtype=np.float64)
    r = weights.shape[0] // 2
    n = data.shape[0]

    def work(a, b):
        lo, hi = max(0, a - r), min(n, b + r)
        # the halo is cropped away; true borders keep the chosen mode
        part = ndimage.convolve(data[lo:hi], weights, mode=mode, cval=0.0)
        out[a:b] = part[a - lo : a - lo + (b - a)]

    run_slabs(work, n)
    return out


def convolve(grid, kernel, border="replicate", method="auto"):
    """Discrete convolution ``out[v] = sum_o kernel[o] * grid[v - o]``.

    ``method`` is ``"auto"`` (separable when factors exist), ``"separable"`` or
    ``"dense"``.  Returns a float64 grid with the input's placement.
    """
    mode = _mode(border)
    if any(k > n for k, n in zip(kernel.size, grid.dims)):
        raise ConfigurationError(f"kernel {kernel.size} larger than grid {grid.dims}")
    if method not in ("auto", "separable", "dense"):
        raise ConfigurationError(f"unknown convolution method {method!r}")
    if method == "separable" and not kernel.is_separable:
        raise ConfigurationError("kernel has no separable factorization")

    data = np.asarray(grid.values, dtype=np.float64)
    if method == "dense" or (method == "auto" and not kernel.is_separable):
        out = _convolve_dense(data, kernel.weights, mode)
    else:
        out = data
        for axis, f in enumerate(kernel.factors):
            if f.size == 1 and f[0] == 1.0:
                continue
            out = _convolve1d(out, f, axis, mode)
        if out is data:
            out = data.copy()
    return grid.with_values(out)


def convolve_separable(grid, fx, fy, fz, border="replicate"):
    """Convolve with the outer product of three 1D kernels."""
    return convolve(grid, Kernel3D.separable(fx, fy, fz), border, method="separable")


def gaussian_smooth(grid, sigma, radius=None, border="replicate"):
    g = gaussian_kernel_1d(sigma, radius)
    return convolve_separable(grid, g, g, g, border)


def as_grid(obj):
    """Accept a DensityGrid or a bare 3D array."""
    return obj if isinstance(obj, DensityGrid) else DensityGrid(obj)
