"""Reproducible end-to-end runs: grid -> surface points per method -> evaluation."""
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, EvaluationError, VoxedgeError
from .evaluate import DEFAULT_SUBSAMPLE_CAP, DEFAULT_THRESHOLDS, evaluate, format_report_table
from .extract import DEFAULT_SOBEL_REL_THRESHOLD, colorize, extract_by_gradient, extract_by_mask, extract_by_threshold
from .fileio import dumps_json, read_color_grid, read_grid, read_json, read_ply, write_json, write_ply
from .filters import CannyParams, LogParams, canny_edges, log_edges, sobel_gradient
from .grid import DensityGrid, SyntheticSpec, analytic_surface_points, generate_synthetic, grid_center

METHODS = ("threshold", "sobel", "canny", "log")
DEFAULT_DELTA_TS = (25.0, 50.0, 100.0)

_DEFAULTS = {
    "threshold": {"delta_t": 50.0},
    "sobel": {"rel_threshold": DEFAULT_SOBEL_REL_THRESHOLD},
    "canny": CannyParams().to_dict(),
    "log": LogParams().to_dict(),
}


class StageError(VoxedgeError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class MethodConfig:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in METHODS:
            raise ConfigurationError(f"unknown method {self.name!r}; choose from {METHODS}")
        unknown = set(self.params) - set(_DEFAULTS[self.name])
        if unknown:
            raise ConfigurationError(f"unknown {self.name} parameters: {sorted(unknown)}")
        merged = {**_DEFAULTS[self.name], **self.params}
        # validate eagerly so bad configs fail before any work is done
        if self.name == "canny":
            merged = CannyParams(**merged).to_dict()
        elif self.name == "log":
            merged = LogParams(**merged).to_dict()
        elif self.name == "sobel" and not 0 < merged["rel_threshold"] <= 1:
            raise ConfigurationError("sobel rel_threshold must lie in (0, 1]")
        object.__setattr__(self, "params", merged)

    @property
    def label(self):
        if self.name == "threshold":
            return f"threshold_{self.params['delta_t']:g}"
        return self.name

    def to_dict(self):
        return {"name": self.name, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(d.pop("name"), d)


def default_methods():
    """The six-row comparison: three global thresholds, Sobel, Canny, LoG."""
    out = [MethodConfig("threshold", {"delta_t": t}) for t in DEFAULT_DELTA_TS]
    return out + [MethodConfig("sobel"), MethodConfig("canny"), MethodConfig("log")]


def run_method(grid, method):
    """Extract a point cloud from ``grid`` with one configured method."""
    p = method.params
    if method.name == "threshold":
        return extract_by_threshold(grid, p["delta_t"])
    if method.name == "sobel":
        return extract_by_gradient(sobel_gradient(grid), p["rel_threshold"])
    if method.name == "canny":
        return extract_by_mask(canny_edges(grid, CannyParams(**p)))
    return extract_by_mask(log_edges(grid, LogParams(**p)))


def extract(grid, method, color_grid=None):
    """Run ``method`` and return ``(cloud, metadata)``."""
    t0 = time.perf_counter()
    cloud = colorize(run_method(grid, method), color_grid)
    meta = {
        "method": method.name,
        "parameters": dict(method.params),
        "point_count": len(cloud),
        "grid": {"dims": list(grid.dims), "spacing": list(grid.spacing), "origin": list(grid.origin)},
        "wall_time_s": time.perf_counter() - t0,
    }
    return cloud, meta


@dataclass
class PipelineConfig:
    """Everything needed to re-run an experiment.

    ``input`` is ``{"grid": path}`` or ``{"synthetic": {...}, "dims": ...,
    "spacing": ..., "origin": ...}``.  ``reference`` is ``None``,
    ``{"ply": path}`` or ``{"analytic": {"count": n, "seed": s}}`` (synthetic
    input only).  Relative paths resolve against ``base_dir``.
    """

    input: dict
    methods: list = field(default_factory=default_methods)
    color_grid: str = None
    reference: dict = None
    evaluate: bool = True
    thresholds: list = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    subsample_cap: int = DEFAULT_SUBSAMPLE_CAP
    seed: int = 0
    output_dir: str = "voxedge_out"
    ply_format: str = "binary-little-endian"
    base_dir: str = "."

    def __post_init__(self):
        self.methods = [m if isinstance(m, MethodConfig) else MethodConfig.from_dict(m) for m in self.methods]
        if not self.methods:
            raise ConfigurationError("pipeline needs at least one method")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate method labels: {labels}")
        if not isinstance(self.input, dict) or ("grid" in self.input) == ("synthetic" in self.input):
            raise ConfigurationError("input must name exactly one of 'grid' or 'synthetic'")
        if "synthetic" in self.input:
            SyntheticSpec.from_dict(self.input["synthetic"])
        if self.evaluate and not self.reference:
            raise ConfigurationError("evaluation requested but no reference cloud configured")
        if self.reference and not (set(self.reference) <= {"ply", "analytic"} and len(self.reference) == 1):
            raise ConfigurationError("reference must be {'ply': path} or {'analytic': {...}}")
        if self.reference and "analytic" in self.reference and "synthetic" not in self.input:
            raise ConfigurationError("an analytic reference requires a synthetic input")
        self.thresholds = [float(t) for t in self.thresholds]
        if any(t <= 0 for t in self.thresholds):
            raise ConfigurationError("eval thresholds must be > 0")
        if int(self.subsample_cap) <= 0:
            raise ConfigurationError("subsample_cap must be > 0")

    def to_dict(self):
        return {
            "input": self.input,
            "methods": [m.to_dict() for m in self.methods],
            "color_grid": self.color_grid,
            "reference": self.reference,
            "evaluate": self.evaluate,
            "thresholds": list(self.thresholds),
            "subsample_cap": int(self.subsample_cap),
            "seed": int(self.seed),
            "output_dir": self.output_dir,
            "ply_format": self.ply_format,
        }

    @classmethod
    def from_dict(cls, d, base_dir="."):
        return cls(**d, base_dir=str(base_dir))

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(read_json(path), base_dir=path.parent)

    def save(self, path):
        write_json(self.to_dict(), path)

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except (VoxedgeError, OSError, ValueError) as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc


def load_input(config):
    """Return ``(grid, synthetic_spec_or_None, shape_center_or_None)``."""
    src = config.input
    if "grid" in src:
        grid = read_grid(config.resolve(src["grid"]))
        if not isinstance(grid, DensityGrid):
            raise ConfigurationError("input grid must be a 1-channel density grid")
        return grid, None, None
    spec = SyntheticSpec.from_dict(src["synthetic"])
    dims, spacing, origin = src.get("dims", 64), src.get("spacing", 0.5), src.get("origin", 0.0)
    grid = generate_synthetic(spec, dims, spacing, origin)
    center = spec.center if spec.center is not None else grid_center(grid.dims, grid.spacing, grid.origin)
    return grid, spec, center


def load_reference(config, spec, center):
    ref = config.reference
    if "ply" in ref:
        return read_ply(config.resolve(ref["ply"]))
    opts = ref["analytic"] or {}
    return analytic_surface_points(spec, opts.get("count", 100_000), opts.get("seed", config.seed), center=center)


def run_pipeline(config, log=print):
    """Run every configured method and write clouds, metadata, reports and a comparison table.

    Returns a dict with the written paths and the comparison table text.
    """
    out = config.resolve(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, spec, center = _stage("input", load_input, config)
    colors = _stage("color-grid", read_color_grid, config.resolve(config.color_grid)) if config.color_grid else None
    reference = _stage("reference", load_reference, config, spec, center) if config.evaluate else None

    config.save(out / "config.json")
    if reference is not None and "analytic" in config.reference:
        write_ply(reference, out / "reference.ply", config.ply_format)
    rows, written = [], {"ply": [], "meta": [], "report": []}
    for method in config.methods:
        cloud, meta = _stage(f"extract:{method.label}", extract, grid, method, colors)
        ply = out / f"{method.label}.ply"
        _stage(f"write:{method.label}", write_ply, cloud, ply, config.ply_format)
        meta["seed"] = int(config.seed)
        write_json(meta, out / f"{method.label}.meta.json")
        written["ply"].append(ply)
        written["meta"].append(out / f"{method.label}.meta.json")
        log(f"{method.label}: {len(cloud)} points")
        if config.evaluate:
            if len(cloud) == 0:
                raise StageError(f"eval:{method.label}", EvaluationError("reconstruction is empty"))
            # evaluate what was written, so reports match a later `eval` of the PLY
            data = _stage(f"read:{method.label}", read_ply, ply)
            report = _stage(
                f"eval:{method.label}", evaluate, data, reference, config.thresholds, config.subsample_cap, config.seed
            )
            write_json(report.to_dict(), out / f"{method.label}.eval.json")
            written["report"].append(out / f"{method.label}.eval.json")
            rows.append((method.label, report))

    table = ""
    if rows:
        table = format_report_table(rows)
        (out / "comparison.txt").write_text(table + "\n", encoding="utf-8")
        summary = {label: rep.to_dict() for label, rep in rows}
        (out / "comparison.json").write_text(dumps_json(summary), encoding="utf-8")
        written["report"].append(out / "comparison.json")
    return {"output_dir": out, "table": table, **written}
