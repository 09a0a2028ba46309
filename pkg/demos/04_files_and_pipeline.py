"""Grid files, PLY clouds and a config-driven pipeline run.

Everything is written to a temporary directory that is removed afterwards.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from voxedge import (
    MethodConfig,
    PipelineConfig,
    PointCloud,
    SyntheticSpec,
    generate_synthetic,
    read_grid,
    read_ply,
    run_pipeline,
    write_grid,
    write_ply,
)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    grid = generate_synthetic(SyntheticSpec("box", half_extents=(4.0, 3.0, 2.0)), dims=32, spacing=0.5)
    write_grid(grid, tmp / "box.vxg")
    back = read_grid(tmp / "box.vxg")
    print(f"grid file: {(tmp / 'box.vxg').stat().st_size} bytes, dims {back.dims}, stored as {back.values.dtype}")
    print("values equal after float32 narrowing:", np.array_equal(back.values, grid.values.astype(np.float32)))

    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(1000, 3)), rng.integers(0, 256, size=(1000, 3), dtype=np.uint8))
    for fmt in ("binary-little-endian", "ascii"):
        path = tmp / f"cloud_{fmt}.ply"
        write_ply(cloud, path, format=fmt)
        print(f"PLY {fmt:21s} {path.stat().st_size:6d} bytes, {len(read_ply(path))} points read back")

    config = PipelineConfig(
        input={"synthetic": SyntheticSpec("sphere", radius=6.0, noise_sigma=1.0, seed=2).to_dict(), "dims": 32, "spacing": 0.5},
        methods=[
            MethodConfig("threshold", {"delta_t": 50}),
            MethodConfig("sobel"),
            MethodConfig("canny", {"gaussian_sigma": 1.0, "low_rel": 0.1, "high_rel": 0.4, "nms_enabled": True}),
        ],
        reference={"analytic": {"count": 20000, "seed": 0}},
        output_dir=str(tmp / "run"),
        seed=0,
    )
    config.save(tmp / "config.json")
    saved = json.loads((tmp / "config.json").read_text())
    print("\nconfig.json keys:", ", ".join(saved))
    print("methods:", [m["name"] for m in saved["methods"]])
    result = run_pipeline(config, log=lambda msg: print("  " + msg))
    print()
    print(result["table"])
    print("\nwritten:", sorted(p.name for p in (tmp / "run").iterdir()))
