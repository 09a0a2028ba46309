"""Four ways to turn a density grid into surface voxels.

Global thresholding keeps every voxel denser than delta_t, so it fills the
interior.  Sobel, Canny and LoG react to change in density instead and
concentrate on the boundary shell.
"""
import numpy as np

from voxedge import (
    CannyParams,
    DensityGrid,
    LogParams,
    SyntheticSpec,
    canny_edges,
    extract_by_gradient,
    extract_by_mask,
    extract_by_threshold,
    generate_synthetic,
    log_edges,
    sobel_gradient,
    sobel_kernels,
)

kx, _, _ = sobel_kernels()
print("Sobel x-kernel, slices at x-offsets -1, 0, +1:")
for a in range(3):
    print(kx.weights[a].astype(int))

# A unit ramp along x produces a gradient of exactly 32 (the summed kernel gain).
ramp = np.indices((8, 8, 8))[0].astype(float)
g = sobel_gradient(DensityGrid(ramp))
print("\nSobel magnitude on a unit x-ramp (interior):", np.unique(g.magnitude[1:-1, 1:-1, 1:-1]))

spec = SyntheticSpec("sphere", radius=8.0, noise_sigma=2.0, seed=1)
grid = generate_synthetic(spec, dims=48, spacing=0.5)
center = np.asarray(grid.center())


def describe(name, cloud):
    r = np.linalg.norm(cloud.points - center, axis=1)
    print(f"{name:14s} {len(cloud):6d} points   radius mean {r.mean():5.2f} mm  spread {r.std():4.2f} mm")


print(f"\nnoisy sphere, true radius {spec.radius} mm")
for dt in (25, 50, 100):
    describe(f"threshold {dt}", extract_by_threshold(grid, dt))
describe("sobel", extract_by_gradient(sobel_gradient(grid), rel_threshold=0.25))
# sigma is in voxels; thresholds are fractions of the strongest gradient
describe("canny", extract_by_mask(canny_edges(grid, CannyParams(1.0, 0.1, 0.4, nms_enabled=True))))
describe("canny no-nms", extract_by_mask(canny_edges(grid, CannyParams(1.0, 0.1, 0.4))))
# contrast_min drops weak crossings; responses here peak near 5
describe("log", extract_by_mask(log_edges(grid, LogParams(7, 1.5, contrast_min=1.0))))
describe("dog", extract_by_mask(log_edges(grid, LogParams(7, 1.5, mode="dog", contrast_min=1.0))))

# Canny thresholds are relative, so rescaling the densities changes nothing.
p = CannyParams(1.0, 0.1, 0.4, nms_enabled=True)
same = np.array_equal(canny_edges(grid, p).mask, canny_edges(grid.with_values(grid.values * 1000), p).mask)
print("\nCanny mask unchanged after scaling densities by 1000:", same)
