"""Grid files, PLY point clouds and JSON documents.

Grid file layout (all little-endian)::

    offset  size  field
    0       4     magic b"VXGD"
    4       2     version (u16) = 1
    6       2     channels (u16): 1 = density, 3 = RGB
    8       12    dims nx, ny, nz (3 x u32)
    20      24    spacing sx, sy, sz in mm (3 x f64)
    44      24    origin in mm (3 x f64)
    68      ...   nx*ny*nz*channels f32, voxels x-fastest, channels fastest
"""
import json
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    ConfigurationError,
    FormatError,
    PLYFormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .extract import PointCloud
from .grid import ColorGrid, DensityGrid

GRID_MAGIC = b"VXGD"
GRID_VERSION = 1
_HEADER = struct.Struct("<4sHH3I3d3d")
HEADER_SIZE = _HEADER.size


def _grid_payload(grid):
    if isinstance(grid, DensityGrid):
        return 1, grid.flat
    if isinstance(grid, ColorGrid):
        # (nx, ny, nz, 3) -> voxel x-fastest, channel fastest
        return 3, np.transpose(grid.rgb, (2, 1, 0, 3)).reshape(-1)
    raise TypeError(f"cannot serialise {type(grid).__name__}")


def grid_to_bytes(grid):
    channels, payload = _grid_payload(grid)
    header = _HEADER.pack(GRID_MAGIC, GRID_VERSION, channels, *grid.dims, *grid.spacing, *grid.origin)
    return header + np.ascontiguousarray(payload, dtype="<f4").tobytes()


def grid_from_bytes(blob, source="<bytes>"):
    if len(blob) < 4 or blob[:4] != GRID_MAGIC:
        raise BadMagicError(f"{source}: not a voxel grid file (magic {bytes(blob[:4])!r})")
    if len(blob) < HEADER_SIZE:
        raise TruncatedPayloadError(f"{source}: header truncated ({len(blob)} of {HEADER_SIZE} bytes)")
    magic, version, channels, nx, ny, nz, sx, sy, sz, ox, oy, oz = _HEADER.unpack_from(blob)
    if version != GRID_VERSION:
        raise VersionMismatchError(f"{source}: unsupported grid version {version} (expected {GRID_VERSION})")
    if channels not in (1, 3):
        raise FormatError(f"{source}: unsupported channel count {channels}")
    if min(nx, ny, nz) < 1:
        raise FormatError(f"{source}: invalid dims {(nx, ny, nz)}")
    expected = nx * ny * nz * channels * 4
    got = len(blob) - HEADER_SIZE
    if got < expected:
        raise TruncatedPayloadError(
            f"{source}: payload truncated, header declares {nx}x{ny}x{nz}x{channels} f32 "
            f"({expected} bytes) but {got} bytes follow"
        )
    if got > expected:
        raise FormatError(f"{source}: {got - expected} unexpected trailing bytes after payload")
    data = np.frombuffer(blob, dtype="<f4", count=nx * ny * nz * channels, offset=HEADER_SIZE)
    try:
        if channels == 1:
            return DensityGrid.from_flat(data.astype(np.float32), (nx, ny, nz), (sx, sy, sz), (ox, oy, oz))
        rgb = data.reshape(nz, ny, nx, 3).transpose(2, 1, 0, 3)
        return ColorGrid(rgb, (sx, sy, sz), (ox, oy, oz))
    except ConfigurationError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def write_grid(grid, path):
    """Write a DensityGrid or ColorGrid; values are stored as float32."""
    Path(path).write_bytes(grid_to_bytes(grid))


def read_grid(path):
    """Read a grid file; returns a DensityGrid (1 channel) or ColorGrid (3 channels)."""
    path = Path(path)
    return grid_from_bytes(path.read_bytes(), str(path))


def read_color_grid(path):
    grid = read_grid(path)
    if not isinstance(grid, ColorGrid):
        raise FormatError(f"{path}: expected a 3-channel colour grid")
    return grid


def read_raw_volume(sidecar_path):
    """Import a raw binary volume described by a JSON sidecar.

    Sidecar keys: ``raw`` (file name, relative to the sidecar), ``dims``,
    ``spacing``, ``origin``, optional ``dtype`` (numpy name, default
    ``"<f4"``) and ``order`` (``"x-fastest"`` default, or ``"z-fastest"``).
    """
    sidecar_path = Path(sidecar_path)
    try:
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        raw = sidecar_path.parent / meta["raw"]
        dims = tuple(int(n) for n in meta["dims"])
        dtype = np.dtype(meta.get("dtype", "<f4"))
        order = meta.get("order", "x-fastest")
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{sidecar_path}: invalid sidecar ({exc})") from exc
    if order not in ("x-fastest", "z-fastest"):
        raise FormatError(f"{sidecar_path}: unknown order {order!r}")
    blob = raw.read_bytes()
    count = dims[0] * dims[1] * dims[2]
    if len(blob) != count * dtype.itemsize:
        raise TruncatedPayloadError(
            f"{raw}: expected {count * dtype.itemsize} bytes for dims {dims}, got {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype=dtype)
    values = flat.reshape(dims, order="F" if order == "x-fastest" else "C")
    try:
        return DensityGrid(values.astype(np.float32), meta.get("spacing", (1, 1, 1)), meta.get("origin", (0, 0, 0)))
    except ConfigurationError as exc:
        raise FormatError(f"{sidecar_path}: {exc}") from exc


# --- PLY -------------------------------------------------------------------

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}
_PLY_FORMATS = {
    "ascii": "ascii",
    "binary-little-endian": "binary_little_endian",
    "binary_little_endian": "binary_little_endian",
}


def write_ply(cloud, path, format="binary-little-endian", coord_type="float"):
    """Write a point cloud as PLY with x/y/z and, when present, uchar red/green/blue.

    ``coord_type`` is ``"float"`` (float32) or ``"double"``.
    """
    fmt = _PLY_FORMATS.get(format)
    if fmt is None:
        raise ConfigurationError(f"unknown PLY format {format!r}")
    if coord_type not in ("float", "double"):
        raise ConfigurationError(f"coord_type must be 'float' or 'double', got {coord_type!r}")
    n = len(cloud)
    lines = ["ply", f"format {fmt} 1.0", f"element vertex {n}"]
    lines += [f"property {coord_type} {axis}" for axis in "xyz"]
    if cloud.has_colors:
        lines += [f"property uchar {c}" for c in ("red", "green", "blue")]
    lines.append("end_header")
    header = ("\n".join(lines) + "\n").encode("ascii")

    ctype = "<f4" if coord_type == "float" else "<f8"
    fields = [("x", ctype), ("y", ctype), ("z", ctype)]
    if cloud.has_colors:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    rec = np.empty(n, dtype=fields)
    for a, axis in enumerate("xyz"):
        rec[axis] = cloud.points[:, a]
    if cloud.has_colors:
        for c, name in enumerate(("red", "green", "blue")):
            rec[name] = cloud.colors[:, c]

    if fmt == "binary_little_endian":
        body = rec.tobytes()
    else:
        num = "%.9g" if coord_type == "float" else "%.17g"
        rows = []
        for r in rec:
            cells = [num % float(r[a]) for a in "xyz"]
            if cloud.has_colors:
                cells += [str(int(r[c])) for c in ("red", "green", "blue")]
            rows.append(" ".join(cells) + "\n")
        body = "".join(rows).encode("ascii")
    Path(path).write_bytes(header + body)


def _parse_ply_header(f, source):
    if f.readline().strip() != b"ply":
        raise PLYFormatError(f"{source}: missing 'ply' signature")
    fmt = None
    elements = []
    while True:
        raw = f.readline()
        if not raw:
            raise PLYFormatError(f"{source}: header has no end_header")
        parts = raw.decode("ascii", errors="replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        key = parts[0]
        if key == "end_header":
            break
        if key == "format":
            if len(parts) != 3 or parts[1] not in ("ascii", "binary_little_endian", "binary_big_endian"):
                raise PLYFormatError(f"{source}: bad format line {raw!r}")
            fmt = parts[1]
        elif key == "element":
            if len(parts) != 3 or not parts[2].isdigit():
                raise PLYFormatError(f"{source}: bad element line {raw!r}")
            elements.append((parts[1], int(parts[2]), []))
        elif key == "property":
            if not elements:
                raise PLYFormatError(f"{source}: property before any element")
            if len(parts) == 5 and parts[1] == "list":
                if parts[2] not in _PLY_TYPES or parts[3] not in _PLY_TYPES:
                    raise PLYFormatError(f"{source}: bad list property {raw!r}")
                elements[-1][2].append((parts[4], ("list", _PLY_TYPES[parts[2]], _PLY_TYPES[parts[3]])))
            elif len(parts) == 3 and parts[1] in _PLY_TYPES:
                elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))
            else:
                raise PLYFormatError(f"{source}: bad property line {raw!r}")
        else:
            raise PLYFormatError(f"{source}: unknown header keyword {key!r}")
    if fmt is None:
        raise PLYFormatError(f"{source}: missing format line")
    return fmt, elements


def _skip_binary_element(buf, pos, count, props, endian, source):
    for _ in range(count):
        for _, t in props:
            if isinstance(t, tuple):
                ct = np.dtype(endian + t[1])
                if pos + ct.itemsize > len(buf):
                    raise PLYFormatError(f"{source}: element data truncated")
                n = int(np.frombuffer(buf, ct, 1, pos)[0])
                pos += ct.itemsize + n * np.dtype(t[2]).itemsize
            else:
                pos += np.dtype(t).itemsize
    return pos


def read_ply(path):
    """Read the vertex element of an ASCII or binary PLY file.

    Unknown vertex properties (normals, alpha, ...) are ignored; colours are
    read from red/green/blue when all three exist.
    """
    path = Path(path)
    source = str(path)
    with path.open("rb") as f:
        fmt, elements = _parse_ply_header(f, source)
        body = f.read()

    names = [e[0] for e in elements]
    if "vertex" not in names:
        raise PLYFormatError(f"{source}: no vertex element")
    vi = names.index("vertex")
    _, count, props = elements[vi]
    prop_names = [p[0] for p in props]
    for axis in "xyz":
        if axis not in prop_names:
            raise PLYFormatError(f"{source}: vertex element lacks property {axis!r}")
    has_color = all(c in prop_names for c in ("red", "green", "blue"))
    last = vi == len(elements) - 1

    if fmt == "ascii":
        lines = body.decode("ascii", errors="replace").splitlines()
        lines = [ln for ln in lines if ln.strip()]
        start = sum(e[1] for e in elements[:vi])
        rows = lines[start : start + count]
        if len(rows) != count or (last and len(lines) != start + count):
            raise PLYFormatError(
                f"{source}: header declares {count} vertices but body has {len(lines) - start}"
            )
        if any(isinstance(t, tuple) for _, t in props):
            raise PLYFormatError(f"{source}: list properties on vertices are not supported")
        try:
            table = np.array([row.split() for row in rows], dtype=np.float64).reshape(count, len(props))
        except ValueError as exc:
            raise PLYFormatError(f"{source}: malformed vertex row ({exc})") from exc
        col = {name: table[:, i] for i, name in enumerate(prop_names)}
        pts = np.stack([col[a] for a in "xyz"], axis=1)
        if np.dtype(dict(props)["x"]).itemsize == 4:
            pts = pts.astype(np.float32).astype(np.float64)
        colors = np.stack([col[c] for c in ("red", "green", "blue")], axis=1).astype(np.uint8) if has_color else None
        return PointCloud(pts, colors)

    endian = "<" if fmt == "binary_little_endian" else ">"
    pos = 0
    for name, n, eprops in elements[:vi]:
        pos = _skip_binary_element(body, pos, n, eprops, endian, source)
    if any(isinstance(t, tuple) for _, t in props):
        raise PLYFormatError(f"{source}: list properties on vertices are not supported")
    dtype = np.dtype([(name, endian + t) for name, t in props])
    need = count * dtype.itemsize
    if pos + need > len(body):
        raise PLYFormatError(f"{source}: header declares {count} vertices but vertex data is truncated")
    if last and pos + need != len(body):
        raise PLYFormatError(f"{source}: {len(body) - pos - need} trailing bytes after {count} vertices")
    rec = np.frombuffer(body, dtype=dtype, count=count, offset=pos)
    pts = np.stack([rec[a].astype(np.float64) for a in "xyz"], axis=1)
    colors = np.stack([rec[c] for c in ("red", "green", "blue")], axis=1).astype(np.uint8) if has_color else None
    return PointCloud(pts, colors)


# --- JSON ------------------------------------------------------------------

def dumps_json(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
