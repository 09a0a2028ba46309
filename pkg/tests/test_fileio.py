import json
import struct

import numpy as np
import pytest

from voxedge.errors import (
    BadMagicError,
    FormatError,
    PLYFormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from voxedge.extract import PointCloud
from voxedge.fileio import (
    HEADER_SIZE,
    grid_to_bytes,
    read_grid,
    read_json,
    read_ply,
    read_raw_volume,
    write_grid,
    write_json,
    write_ply,
)
from voxedge.grid import ColorGrid, DensityGrid


def test_header_layout():
    g = DensityGrid(np.zeros((2, 3, 4), np.float32), (0.5, 0.25, 2.0), (-1.0, 0.0, 7.5))
    blob = grid_to_bytes(g)
    assert HEADER_SIZE == 68
    assert blob[:4] == b"VXGD"
    assert struct.unpack_from("<HH", blob, 4) == (1, 1)
    assert struct.unpack_from("<3I", blob, 8) == (2, 3, 4)
    assert struct.unpack_from("<3d", blob, 20) == (0.5, 0.25, 2.0)
    assert struct.unpack_from("<3d", blob, 44) == (-1.0, 0.0, 7.5)
    assert len(blob) == 68 + 24 * 4


def test_payload_is_x_fastest(tmp_path):
    v = np.arange(24, dtype=np.float32).reshape((2, 3, 4), order="F")
    blob = grid_to_bytes(DensityGrid(v))
    np.testing.assert_array_equal(np.frombuffer(blob, "<f4", offset=HEADER_SIZE), np.arange(24))


def test_grid_roundtrip_bitwise(tmp_path, rng):
    g = DensityGrid(rng.normal(size=(4, 5, 6)).astype(np.float32), (0.1, 0.2, 0.3), (1e-3, -5.5, 1e6))
    write_grid(g, tmp_path / "g.vxg")
    back = read_grid(tmp_path / "g.vxg")
    assert back.values.tobytes() == g.values.tobytes()
    assert back.dims == g.dims and back.spacing == g.spacing and back.origin == g.origin
    assert (tmp_path / "g.vxg").read_bytes() == grid_to_bytes(back)


def test_color_grid_roundtrip(tmp_path, rng):
    c = ColorGrid(rng.integers(0, 256, size=(3, 4, 5, 3), dtype=np.uint8), 0.5, (1, 2, 3))
    write_grid(c, tmp_path / "c.vxg")
    back = read_grid(tmp_path / "c.vxg")
    assert isinstance(back, ColorGrid)
    np.testing.assert_array_equal(back.rgb, c.rgb)
    assert back.geometry == c.geometry


def test_bad_magic(tmp_path):
    blob = bytearray(grid_to_bytes(DensityGrid(np.zeros((3, 3, 3)))))
    blob[:4] = b"XXXX"
    (tmp_path / "bad.vxg").write_bytes(bytes(blob))
    with pytest.raises(BadMagicError):
        read_grid(tmp_path / "bad.vxg")


def test_version_mismatch(tmp_path):
    blob = bytearray(grid_to_bytes(DensityGrid(np.zeros((3, 3, 3)))))
    struct.pack_into("<H", blob, 4, 2)
    (tmp_path / "v2.vxg").write_bytes(bytes(blob))
    with pytest.raises(VersionMismatchError):
        read_grid(tmp_path / "v2.vxg")


def test_truncated_payload(tmp_path):
    header = struct.pack("<4sHH3I3d3d", b"VXGD", 1, 1, 10, 10, 10, 1, 1, 1, 0, 0, 0)
    (tmp_path / "t.vxg").write_bytes(header + np.zeros(999, "<f4").tobytes())
    with pytest.raises(TruncatedPayloadError):
        read_grid(tmp_path / "t.vxg")
    (tmp_path / "h.vxg").write_bytes(header[:30])
    with pytest.raises(TruncatedPayloadError):
        read_grid(tmp_path / "h.vxg")


def test_trailing_bytes_and_bad_values(tmp_path):
    blob = grid_to_bytes(DensityGrid(np.zeros((3, 3, 3))))
    (tmp_path / "x.vxg").write_bytes(blob + b"\0\0\0\0")
    with pytest.raises(FormatError):
        read_grid(tmp_path / "x.vxg")
    header = struct.pack("<4sHH3I3d3d", b"VXGD", 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0)
    (tmp_path / "nan.vxg").write_bytes(header + np.array([np.nan], "<f4").tobytes())
    with pytest.raises(FormatError):
        read_grid(tmp_path / "nan.vxg")


def test_error_classes_are_distinct():
    assert len({BadMagicError, VersionMismatchError, TruncatedPayloadError}) == 3
    for cls in (BadMagicError, VersionMismatchError, TruncatedPayloadError, PLYFormatError):
        assert issubclass(cls, FormatError) and issubclass(cls, IOError)


def test_raw_sidecar_import(tmp_path, rng):
    v = rng.normal(size=(3, 4, 5)).astype(np.float32)
    (tmp_path / "d.raw").write_bytes(v.ravel(order="F").tobytes())
    (tmp_path / "d.json").write_text(json.dumps({"raw": "d.raw", "dims": [3, 4, 5], "spacing": [1, 2, 3], "origin": [0, 0, 1]}))
    g = read_raw_volume(tmp_path / "d.json")
    np.testing.assert_array_equal(g.values, v)
    assert g.spacing == (1.0, 2.0, 3.0)
    (tmp_path / "z.raw").write_bytes(v.tobytes())  # C order: z fastest
    (tmp_path / "z.json").write_text(json.dumps({"raw": "z.raw", "dims": [3, 4, 5], "order": "z-fastest"}))
    np.testing.assert_array_equal(read_raw_volume(tmp_path / "z.json").values, v)
    (tmp_path / "s.json").write_text(json.dumps({"raw": "d.raw", "dims": [3, 4, 6]}))
    with pytest.raises(TruncatedPayloadError):
        read_raw_volume(tmp_path / "s.json")


# --- PLY ------------------------------------------------------------------

def _cloud(rng, n, colors=True):
    pts = rng.normal(scale=50, size=(n, 3)).astype(np.float32).astype(np.float64)
    cols = rng.integers(0, 256, size=(n, 3), dtype=np.uint8) if colors else None
    return PointCloud(pts, cols)


@pytest.mark.parametrize("fmt", ["binary-little-endian", "ascii"])
@pytest.mark.parametrize("colors", [True, False])
def test_ply_roundtrip(tmp_path, rng, fmt, colors):
    cloud = _cloud(rng, 3 if colors else 50, colors)
    write_ply(cloud, tmp_path / "c.ply", fmt)
    back = read_ply(tmp_path / "c.ply")
    assert back.points.tobytes() == cloud.points.tobytes()
    assert back.has_colors == colors
    if colors:
        assert back.colors.tobytes() == cloud.colors.tobytes()


def test_ply_double_roundtrip(tmp_path, rng):
    cloud = PointCloud(rng.normal(size=(20, 3)))
    for fmt in ("binary-little-endian", "ascii"):
        write_ply(cloud, tmp_path / "d.ply", fmt, coord_type="double")
        assert read_ply(tmp_path / "d.ply").points.tobytes() == cloud.points.tobytes()


def test_ply_header_text(tmp_path, rng):
    write_ply(_cloud(rng, 2), tmp_path / "c.ply", "ascii")
    lines = (tmp_path / "c.ply").read_text().splitlines()
    assert lines[:9] == [
        "ply", "format ascii 1.0", "element vertex 2",
        "property float x", "property float y", "property float z",
        "property uchar red", "property uchar green", "property uchar blue",
    ]
    assert lines[9] == "end_header" and len(lines) == 12


def test_ply_bytes_deterministic(tmp_path, rng):
    cloud = _cloud(rng, 100)
    for fmt in ("binary-little-endian", "ascii"):
        write_ply(cloud, tmp_path / "a.ply", fmt)
        write_ply(cloud, tmp_path / "b.ply", fmt)
        assert (tmp_path / "a.ply").read_bytes() == (tmp_path / "b.ply").read_bytes()


def test_ply_ascii_ignores_unknown_properties(tmp_path):
    text = "\n".join([
        "ply", "format ascii 1.0", "comment from a scanner", "element vertex 2",
        "property float x", "property float y", "property float z",
        "property float nx", "property float ny", "property float nz",
        "end_header", "1 2 3 0 0 1", "4 5 6 0 1 0", "",
    ])
    (tmp_path / "n.ply").write_text(text)
    cloud = read_ply(tmp_path / "n.ply")
    np.testing.assert_array_equal(cloud.points, [[1, 2, 3], [4, 5, 6]])
    assert not cloud.has_colors


def test_ply_binary_with_faces_and_extra_props(tmp_path):
    header = (
        "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
        "property double x\nproperty double y\nproperty double z\nproperty float confidence\n"
        "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
    ).encode()
    rec = np.array([(1.5, 2.5, 3.5, 0.9), (4.0, 5.0, 6.0, 0.1)],
                   dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("c", "<f4")])
    face = struct.pack("<B3i", 3, 0, 1, 0)
    (tmp_path / "f.ply").write_bytes(header + rec.tobytes() + face)
    np.testing.assert_array_equal(read_ply(tmp_path / "f.ply").points, [[1.5, 2.5, 3.5], [4, 5, 6]])


def test_ply_count_mismatch(tmp_path, rng):
    text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n4 5 6\n"
    (tmp_path / "short.ply").write_text(text)
    with pytest.raises(PLYFormatError):
        read_ply(tmp_path / "short.ply")
    write_ply(_cloud(rng, 5), tmp_path / "b.ply")
    blob = (tmp_path / "b.ply").read_bytes()
    (tmp_path / "bt.ply").write_bytes(blob[:-4])
    with pytest.raises(PLYFormatError):
        read_ply(tmp_path / "bt.ply")


@pytest.mark.parametrize(
    "header",
    [
        "plx\nformat ascii 1.0\nend_header\n",
        "ply\nformat foo 1.0\nelement vertex 0\nend_header\n",
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n",
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n",
        "ply\nformat ascii 1.0\nproperty float x\nend_header\n",
    ],
)
def test_ply_malformed_header(tmp_path, header):
    (tmp_path / "m.ply").write_text(header)
    with pytest.raises(PLYFormatError):
        read_ply(tmp_path / "m.ply")


def test_json_roundtrip_stable(tmp_path):
    doc = {"b": 1, "a": [1.5, 2], "c": {"z": None, "y": "x"}}
    write_json(doc, tmp_path / "d.json")
    assert read_json(tmp_path / "d.json") == doc
    assert list(read_json(tmp_path / "d.json")) == ["b", "a", "c"]
