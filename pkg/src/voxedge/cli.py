"""Command-line interface: ``voxedge gen | extract | eval | pipeline``.

Exit codes: 0 success, 2 configuration error, 3 file/I-O error, 4 evaluation error.
"""
import argparse
import sys
from pathlib import Path

from .errors import ConfigurationError, EvaluationError, FormatError, VoxedgeError
from .evaluate import DEFAULT_SUBSAMPLE_CAP, DEFAULT_THRESHOLDS, evaluate, format_report_table
from .fileio import read_grid, read_color_grid, read_ply, write_grid, write_json, write_ply
from .grid import DensityGrid, SyntheticSpec, generate_synthetic, grid_center
from .pipeline import MethodConfig, PipelineConfig, StageError, extract, run_pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EVAL = 4


def sidecar_path(grid_path):
    return Path(str(grid_path) + ".json")


def _triple_arg(values, name):
    if values is None:
        return None
    if len(values) == 1:
        return (values[0],) * 3
    if len(values) == 3:
        return tuple(values)
    raise ConfigurationError(f"--{name} takes 1 or 3 values")


def cmd_gen(args):
    kwargs = dict(
        shape=args.shape,
        amplitude=args.amplitude,
        ramp_width=args.ramp_width,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    if args.radius is not None:
        kwargs["radius"] = args.radius
    if args.half_extents is not None:
        kwargs["half_extents"] = _triple_arg(args.half_extents, "half-extents")
    if args.radii is not None:
        kwargs["radii"] = tuple(args.radii)
    if args.centers is not None:
        if len(args.centers) != 6:
            raise ConfigurationError("--centers takes six values (two xyz offsets)")
        kwargs["centers"] = (tuple(args.centers[:3]), tuple(args.centers[3:]))
    if args.center is not None:
        kwargs["center"] = _triple_arg(args.center, "center")
    spec = SyntheticSpec(**kwargs)
    dims = _triple_arg(args.dims, "dims")
    spacing = _triple_arg(args.spacing, "spacing")
    origin = _triple_arg(args.origin, "origin")
    grid = generate_synthetic(spec, dims, spacing, origin)
    write_grid(grid, args.out)
    center = spec.center if spec.center is not None else grid_center(grid.dims, grid.spacing, grid.origin)
    write_json(
        {
            "synthetic": spec.to_dict(),
            "dims": list(grid.dims),
            "spacing": list(grid.spacing),
            "origin": list(grid.origin),
            "shape_center": list(center),
        },
        sidecar_path(args.out),
    )
    print(f"wrote {args.out} ({'x'.join(map(str, grid.dims))}) and {sidecar_path(args.out)}")
    return EXIT_OK


def _method_from_args(args):
    m = args.method
    if m == "threshold":
        return MethodConfig("threshold", {"delta_t": args.delta_t})
    if m == "sobel":
        return MethodConfig("sobel", {"rel_threshold": args.rel_threshold})
    if m == "canny":
        p = {}
        if args.sigma is not None:
            p["gaussian_sigma"] = args.sigma
        if args.low is not None:
            p["low_rel"] = args.low
        if args.high is not None:
            p["high_rel"] = args.high
        if args.nms is not None:
            p["nms_enabled"] = args.nms
        return MethodConfig("canny", p)
    p = {"mode": args.log_mode, "contrast_min": args.contrast_min}
    if args.sigma is not None:
        p["sigma"] = args.sigma
    if args.mask_size is not None:
        p["mask_size"] = args.mask_size
    return MethodConfig("log", p)


def cmd_extract(args):
    method = _method_from_args(args)
    grid = read_grid(args.input)
    if not isinstance(grid, DensityGrid):
        raise ConfigurationError(f"{args.input} is not a density grid")
    colors = read_color_grid(args.color_grid) if args.color_grid else None
    cloud, meta = extract(grid, method, colors)
    meta["input"] = str(args.input)
    write_ply(cloud, args.out, args.ply_format)
    meta_path = Path(args.meta) if args.meta else Path(args.out).with_suffix(".meta.json")
    write_json(meta, meta_path)
    print(f"{method.label}: {len(cloud)} points -> {args.out} ({meta['wall_time_s']:.2f} s)")
    return EXIT_OK


def cmd_eval(args):
    data = read_ply(args.data)
    reference = read_ply(args.reference)
    if len(data) == 0 or len(reference) == 0:
        raise EvaluationError("both clouds must be non-empty")
    report = evaluate(data, reference, args.thresholds, args.cap, args.seed)
    print(format_report_table([(Path(args.data).stem, report)]))
    if args.out:
        write_json(report.to_dict(), args.out)
    return EXIT_OK


def cmd_pipeline(args):
    config = PipelineConfig.load(args.config)
    if args.output_dir:
        config.output_dir = str(Path(args.output_dir).resolve())
    result = run_pipeline(config)
    if result["table"]:
        print(result["table"])
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="voxedge", description="Surface points from voxel density fields via 3D edge detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic density grid")
    g.add_argument("shape", choices=["sphere", "box", "two-spheres"])
    g.add_argument("--radius", type=float)
    g.add_argument("--half-extents", type=float, nargs="+")
    g.add_argument("--radii", type=float, nargs=2)
    g.add_argument("--centers", type=float, nargs=6, help="two xyz offsets from the shape centre")
    g.add_argument("--center", type=float, nargs="+", help="world position of the shape (default: grid centre)")
    g.add_argument("--amplitude", type=float, default=100.0)
    g.add_argument("--ramp-width", type=float, default=0.5, help="logistic ramp width in mm")
    g.add_argument("--noise-sigma", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dims", type=int, nargs="+", default=[64])
    g.add_argument("--spacing", type=float, nargs="+", default=[0.5])
    g.add_argument("--origin", type=float, nargs="+", default=[0.0])
    g.add_argument("--out", default="synthetic.vxg")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("extract", help="extract a surface point cloud from a grid")
    e.add_argument("--input", required=True)
    e.add_argument("--method", choices=["threshold", "sobel", "canny", "log"], required=True)
    e.add_argument("--delta-t", type=float, default=50.0)
    e.add_argument("--rel-threshold", type=float, default=0.25)
    e.add_argument("--sigma", type=float, help="Gaussian sigma in voxels (canny default 0.1, log default 7)")
    e.add_argument("--low", type=float, help="canny low relative threshold (default 0.0005)")
    e.add_argument("--high", type=float, help="canny high relative threshold (default 0.002)")
    e.add_argument("--nms", action=argparse.BooleanOptionalAction, default=None)
    e.add_argument("--mask-size", type=int, help="log mask edge length (default 7)")
    e.add_argument("--log-mode", choices=["log", "dog"], default="log")
    e.add_argument("--contrast-min", type=float, default=0.0)
    e.add_argument("--color-grid")
    e.add_argument("--ply-format", choices=["binary-little-endian", "ascii"], default="binary-little-endian")
    e.add_argument("--out", required=True)
    e.add_argument("--meta")
    e.set_defaults(func=cmd_extract)

    v = sub.add_parser("eval", help="compare a reconstruction with a reference cloud")
    v.add_argument("data")
    v.add_argument("reference")
    v.add_argument("--thresholds", type=float, nargs="+", default=list(DEFAULT_THRESHOLDS))
    v.add_argument("--cap", type=int, default=DEFAULT_SUBSAMPLE_CAP)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run gen/extract/eval from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_pipeline)
    return parser


def _exit_code(exc):
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, EvaluationError):
        return EXIT_EVAL
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    return EXIT_CONFIG


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VoxedgeError, OSError, ValueError) as exc:
        print(f"voxedge {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
