"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line in the run summary.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section
"acceptance criteria" lists every criterion with its wall time.
"""
import itertools
import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_completeness_counts, brute_nn, direct_convolve
from voxedge.cli import main
from voxedge.convolution import Kernel3D, convolve
from voxedge.errors import BadMagicError, PLYFormatError, TruncatedPayloadError, VersionMismatchError
from voxedge.evaluate import completeness, evaluate, nn_distances
from voxedge.extract import PointCloud, extract_by_gradient, extract_by_mask, extract_by_threshold
from voxedge.fileio import grid_to_bytes, read_grid, read_json, read_ply, write_grid, write_ply
from voxedge.filters import CannyParams, LogParams, canny_edges, log_edges, sobel_gradient, sobel_kernels
from voxedge.grid import ColorGrid, DensityGrid, SyntheticSpec, analytic_surface_points, generate_synthetic

FIXTURES = Path(__file__).parent / "fixtures"

# Canny settings for the synthetic sphere: sigma in voxels, thresholds relative to the max magnitude
SPHERE_CANNY = CannyParams(gaussian_sigma=1.0, low_rel=0.1, high_rel=0.4, nms_enabled=True)


def test_c01_sobel_kernels(criterion):
    with criterion(1, "Sobel kernel entries, zero sums, exact factorization", 1.0):
        kx, ky, kz = sobel_kernels()
        printed = (
            [[-1, -2, -1], [-2, -4, -2], [-1, -2, -1]],
            [[0, 0, 0], [0, 0, 0], [0, 0, 0]],
            [[1, 2, 1], [2, 4, 2], [1, 2, 1]],
        )
        checked = 0
        for a, b, c in itertools.product(range(3), repeat=3):
            assert kx.weights[a, b, c] == printed[a][b][c]
            checked += 1
        assert checked == 27
        for k in (kx, ky, kz):
            assert k.weights.sum() == 0
            assert k.is_separable
            np.testing.assert_array_equal(np.einsum("i,j,k->ijk", *k.factors), k.weights)
        np.testing.assert_array_equal(ky.weights, kx.weights.transpose(1, 0, 2))
        np.testing.assert_array_equal(kz.weights, kx.weights.transpose(2, 1, 0))


def test_c02_convolution_oracle(criterion):
    rng = np.random.default_rng(2)
    with criterion(2, "separable and dense convolution vs triple-loop oracle (1e-9 rel)", 30.0) as c:
        pairs, worst = 0, 0.0
        while pairs < 120:
            dims = tuple(int(rng.integers(1, hi + 1)) for hi in (9, 11, 13))
            size = tuple(int(rng.choice([s for s in (1, 3, 5, 7) if s <= d])) for d in dims)
            values = rng.normal(scale=10.0 ** rng.uniform(-3, 3), size=dims)
            factors = [rng.normal(size=s) for s in size]
            sep = Kernel3D.separable(*factors)
            dense = Kernel3D(rng.normal(size=size))
            border = ("replicate", "zero")[pairs % 2]
            for kernel, method in ((sep, "separable"), (sep, "dense"), (dense, "dense"), (dense, "auto")):
                got = convolve(DensityGrid(values), kernel, border=border, method=method).values
                want = direct_convolve(values, kernel.weights, border)
                scale = np.abs(kernel.weights).sum() * np.abs(values).max()
                err = np.abs(got - want).max() / scale
                worst = max(worst, err)
                assert err <= 1e-9, (dims, size, method, border, err)
            pairs += 1
        c.note(f"{pairs} pairs, worst relative error {worst:.1e}")


def test_c03_sobel_analytic(criterion):
    with criterion(3, "Sobel on constant, x-ramp and diagonal ramp fields", 5.0):
        shape = (9, 10, 11)
        idx = np.indices(shape).astype(float)
        inner = (slice(1, -1),) * 3
        for border in ("replicate", "zero"):
            const = sobel_gradient(DensityGrid(np.full(shape, 7.5)), border)
            if border == "replicate":
                assert np.all(const.magnitude == 0)
            assert np.all(const.magnitude[inner] == 0)
        ramp = sobel_gradient(DensityGrid(idx[0]))
        assert np.all(ramp.magnitude[inner] == 32.0)
        assert np.all(ramp.gx[inner] == 32.0)
        diag = sobel_gradient(DensityGrid(idx[0] + idx[1]))
        np.testing.assert_allclose(diag.magnitude[inner], 32.0 * math.sqrt(2.0), rtol=1e-9, atol=0)


def test_c04_scale_invariance(criterion):
    rng = np.random.default_rng(4)
    with criterion(4, "Canny masks and gradient extraction unchanged under c*delta", 60.0) as c:
        marked = []
        for trial in range(20):
            dims = tuple(int(d) for d in rng.integers(12, 25, size=3))
            values = rng.random(dims) * 100.0
            assert np.unique(values).size == values.size  # tie-free
            base = DensityGrid(values, spacing=0.5)
            params = CannyParams(1.0, 0.1, 0.4, nms_enabled=bool(trial % 2))
            ref_mask = canny_edges(base, params).mask
            ref_cloud = extract_by_gradient(sobel_gradient(base))
            marked.append(int(ref_mask.sum()))
            for k in (0.01, 1.0, 1000.0):
                scaled = base.with_values(k * values)
                np.testing.assert_array_equal(canny_edges(scaled, params).mask, ref_mask)
                cloud = extract_by_gradient(sobel_gradient(scaled))
                assert cloud.equals(ref_cloud)
        assert min(marked) > 0
        c.note(f"Canny voxels per grid {min(marked)}..{max(marked)}")


def test_c05_nn_oracle(criterion):
    rng = np.random.default_rng(5)
    with criterion(5, "kd-tree distances and completeness vs brute force", 60.0) as c:
        for trial in range(60):
            n, m = (int(x) for x in rng.integers(1, 1001, size=2))
            data = rng.normal(size=(n, 3)) * rng.uniform(0.1, 5)
            ref = rng.normal(size=(m, 3)) * rng.uniform(0.1, 5)
            if trial % 5 == 0:
                data = np.round(data, 1)  # exact duplicates and ties
                ref = np.round(ref, 1)
            np.testing.assert_allclose(nn_distances(data, ref), brute_nn(data, ref), rtol=0, atol=1e-9)
            np.testing.assert_allclose(nn_distances(ref, data), brute_nn(ref, data), rtol=0, atol=1e-9)
            thresholds = sorted(rng.uniform(0.05, 2.0, size=3))
            got = [e.covered_count for e in completeness(PointCloud(data), PointCloud(ref), thresholds)]
            assert got == brute_completeness_counts(data, ref, thresholds)
            rep = evaluate(PointCloud(data), PointCloud(ref), thresholds)
            assert math.isclose(rep.data_to_reference_mean, brute_nn(data, ref).mean(), rel_tol=0, abs_tol=1e-9)
            assert math.isclose(rep.reference_to_data_mean, brute_nn(ref, data).mean(), rel_tol=0, abs_tol=1e-9)
        c.note(f"{trial + 1} pairs")


def test_c06_sphere_reconstruction(criterion, sphere_scene):
    _, grid, _, reference = sphere_scene
    with criterion(6, "noiseless sphere: Canny accuracy and threshold completeness", 120.0) as c:
        canny = evaluate(extract_by_mask(canny_edges(grid, SPHERE_CANNY)), reference)
        thresh = evaluate(extract_by_threshold(grid, 50.0), reference)
        cov = lambda rep: next(e.covered_percent for e in rep.completeness if e.threshold == 1.0)
        c.note(
            f"canny d->r {canny.data_to_reference_mean:.3f} mm, cov@1mm {cov(canny):.2f} %; "
            f"threshold_50 d->r {thresh.data_to_reference_mean:.3f} mm, cov@1mm {cov(thresh):.2f} %"
        )
        assert canny.data_to_reference_mean <= 1.0
        assert cov(canny) >= 95.0
        assert cov(thresh) >= 99.0
        assert thresh.data_to_reference_mean > canny.data_to_reference_mean


def _step_grid(n=32, mid=15.3, ramp=1.0, amplitude=100.0):
    x = np.arange(n, dtype=float)
    profile = amplitude / (1.0 + np.exp(-(x - mid) / ramp))
    return DensityGrid(np.broadcast_to(profile[:, None, None], (n, 14, 14)).copy()), mid


def test_c07_log_zero_crossings(criterion):
    with criterion(7, "LoG/DoG marks hug the step midpoint; constant and affine fields stay empty", 30.0) as c:
        grid, mid = _step_grid()
        shape = grid.dims
        idx = np.indices(shape).astype(float)
        flat_fields = [np.full(shape, 42.0), 3.0 * idx[0] - 1.5 * idx[1] + 0.25 * idx[2] + 7.0]
        for params in (LogParams(7, 1.5), LogParams(9, 1.5), LogParams(7, 1.5, mode="dog"), LogParams(9, 2.0, mode="dog")):
            xs = np.argwhere(log_edges(grid, params).mask)[:, 0]
            assert len(xs) > 0
            share = np.mean(np.abs(xs - mid) <= 1.0)
            c.note(f"{params.mode} {params.mask_size}/{params.sigma:g}: {len(xs)} marks, {100 * share:.1f} % near")
            assert share >= 0.95
            for values in flat_fields:
                assert log_edges(DensityGrid(values), params).count == 0


def test_c08_noise_ordering(criterion):
    with criterion(8, "noisy sphere: Canny d->r <= Sobel d->r", None) as c:
        spec = SyntheticSpec("sphere", radius=10.0, amplitude=100.0, ramp_width=0.5, noise_sigma=5.0, seed=8)
        grid = generate_synthetic(spec, 96, 0.5, 0.0)
        reference = analytic_surface_points(spec, 100_000, seed=1, center=grid.center())
        canny = evaluate(extract_by_mask(canny_edges(grid, SPHERE_CANNY)), reference)
        sobel = evaluate(extract_by_gradient(sobel_gradient(grid)), reference)
        c.note(
            f"canny d->r {canny.data_to_reference_mean:.3f} mm ({canny.data_point_count} pts), "
            f"sobel d->r {sobel.data_to_reference_mean:.3f} mm ({sobel.data_point_count} pts)"
        )
        print(f"noise sigma 5: canny {canny.data_to_reference_mean:.4f} mm, sobel {sobel.data_to_reference_mean:.4f} mm")
        assert canny.data_to_reference_mean <= sobel.data_to_reference_mean


def test_c09_io_roundtrips(criterion, tmp_path):
    rng = np.random.default_rng(9)
    with criterion(9, "grid and binary PLY round-trips bitwise; malformed files raise typed errors", 10.0) as c:
        for trial in range(25):
            dims = tuple(int(d) for d in rng.integers(1, 20, size=3))
            spacing = tuple(rng.uniform(0.01, 3, size=3))
            origin = tuple(rng.normal(scale=50, size=3))
            grid = DensityGrid(rng.normal(scale=100, size=dims).astype(np.float32), spacing, origin)
            path = tmp_path / f"g{trial}.vxg"
            write_grid(grid, path)
            back = read_grid(path)
            assert back.values.dtype == np.float32
            assert back.values.tobytes() == grid.values.tobytes()
            assert back.geometry == grid.geometry
            assert grid_to_bytes(back) == path.read_bytes()

            rgb = ColorGrid(rng.integers(0, 256, size=dims + (3,), dtype=np.uint8), spacing, origin)
            write_grid(rgb, path)
            assert read_grid(path).rgb.tobytes() == rgb.rgb.tobytes()

            n = int(rng.integers(0, 3000))
            pts = rng.normal(scale=30, size=(n, 3)).astype(np.float32)
            colors = rng.integers(0, 256, size=(n, 3), dtype=np.uint8) if trial % 2 else None
            cloud = PointCloud(pts, colors)
            write_ply(cloud, tmp_path / "c.ply")
            again = read_ply(tmp_path / "c.ply")
            assert again.points.astype(np.float32).tobytes() == pts.tobytes()
            assert (again.colors is None) == (colors is None)
            if colors is not None:
                assert again.colors.tobytes() == colors.tobytes()
            write_ply(again, tmp_path / "d.ply")
            assert (tmp_path / "c.ply").read_bytes() == (tmp_path / "d.ply").read_bytes()

        expected = {
            "bad_magic.vxg": BadMagicError,
            "bad_version.vxg": VersionMismatchError,
            "truncated_payload.vxg": TruncatedPayloadError,
            "truncated_header.vxg": TruncatedPayloadError,
            "bad_header.ply": PLYFormatError,
            "truncated_vertices.ply": PLYFormatError,
        }
        for name, error in expected.items():
            reader = read_grid if name.endswith(".vxg") else read_ply
            with pytest.raises(error):
                reader(FIXTURES / name)
        c.note(f"{trial + 1} randomized fixtures, {len(expected)} malformed files")


def test_c10_pipeline_reproducible(criterion, tmp_path):
    shutil.copy(FIXTURES / "pipeline_sphere.json", tmp_path / "config.json")
    with criterion(10, "pipeline run twice: byte-identical PLYs and JSON reports") as c:
        runs = []
        for name in ("run_a", "run_b"):
            assert main(["pipeline", str(tmp_path / "config.json"), "--output-dir", str(tmp_path / name)]) == 0
            runs.append(tmp_path / name)
        # *.meta.json carries wall-clock time and is excluded on purpose
        compared = sorted(
            p.name for p in runs[0].iterdir() if p.suffix == ".ply" or p.name.endswith(".eval.json")
        ) + ["comparison.json", "comparison.txt"]
        assert sum(name.endswith(".ply") for name in compared) == 7
        for name in compared:
            assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name
        # the saved config records each run's own output directory and nothing else differs
        configs = [read_json(r / "config.json") for r in runs]
        assert [cfg.pop("output_dir") for cfg in configs] == [str(r) for r in runs]
        assert configs[0] == configs[1]
        c.note(f"{len(compared)} files byte-identical, configs equal up to output_dir")
