"""Surface reconstruction from voxelized density fields with 3D edge detectors."""
from .convolution import Kernel3D, convolve, gaussian_kernel_1d, gaussian_smooth
from .errors import (
    BadMagicError,
    BoundsError,
    ConfigurationError,
    EvaluationError,
    FormatError,
    PLYFormatError,
    TruncatedPayloadError,
    VersionMismatchError,
    VoxedgeError,
)
from .evaluate import EvalReport, chamfer, completeness, evaluate, format_report_table, nn_distances, subsample
from .extract import PointCloud, colorize, extract_by_gradient, extract_by_mask, extract_by_threshold
from .fileio import read_grid, read_ply, read_raw_volume, write_grid, write_ply
from .filters import (
    CannyParams,
    EdgeMask,
    GradientField,
    LogParams,
    canny_edges,
    dog_kernel,
    log_edges,
    log_kernel,
    log_response,
    sobel_gradient,
    sobel_kernels,
    zero_crossings,
)
from .grid import (
    ColorGrid,
    DensityGrid,
    SyntheticSpec,
    analytic_surface_points,
    generate_synthetic,
    index_to_world,
    sample,
)
from .pipeline import MethodConfig, PipelineConfig, default_methods, run_pipeline

__version__ = "0.1.0"
