"""Multi-phase image segmentation by iterative convolution thresholding.

The solver alternates three steps on a fixed pixel grid: fit region
statistics, assemble per-phase score fields from fidelity, a smoothed
perimeter pressure and an optional local variance force, then reassign
every pixel to its lowest-scoring phase. All smoothing is periodic
convolution with sampled kernels, so each sweep is a handful of FFTs.
"""

from .bench import (
    BENCH_CSV_HEADER,
    THREADS_ENV_VAR,
    BenchCell,
    BenchRow,
    ComparisonResult,
    compare_lvf,
    run_grid,
    worker_count,
    write_bench_csv,
)
from .errors import ContractError, FormatError, InitializationError
from .fidelity import (
    ModelConfig,
    ModelState,
    estimate_means,
    fidelity_field,
    lvf_field,
    update_model,
    update_theta_cv,
    update_theta_lif,
)
from .image import (
    ImageField,
    Partition,
    lift_dimensions,
    load_image,
    overlay_contours,
    rgb_to_lab,
    save_labels,
)
from .initialization import (
    EdgeSets,
    IglimConfig,
    binary_iglim,
    complete_partition,
    denoise_diagonal,
    graph_laplacian,
    kmeans_split,
    laplacian_weights,
    multi_iglim,
    split_by_sign,
    threshold_edges,
)
from .kernels import (
    MIN_EIGENVALUE_FLOOR,
    KernelSpec,
    SpectrumReport,
    box_window_area,
    circulant_spectrum_1d,
    circulant_spectrum_2d,
    convolve_periodic,
)
from .metrics import MetricsReport, score
from .phantoms import (
    PHANTOM_KINDS,
    PHASES_BY_KIND,
    Phantom,
    add_gaussian_noise,
    make_phantom,
)
from .solver import (
    STOP_ENERGY_REL_TOL,
    STOP_NO_PIXEL_CHANGE,
    EnergyBreakdown,
    EnergyRow,
    EnergyTrace,
    SolveResult,
    SolverConfig,
    assemble_phi,
    solve,
    threshold_step,
    total_energy,
)

__version__ = "0.1.0"

__all__ = [
    "BENCH_CSV_HEADER",
    "THREADS_ENV_VAR",
    "BenchCell",
    "BenchRow",
    "ComparisonResult",
    "ContractError",
    "EdgeSets",
    "EnergyBreakdown",
    "EnergyRow",
    "EnergyTrace",
    "FormatError",
    "IglimConfig",
    "ImageField",
    "InitializationError",
    "KernelSpec",
    "MIN_EIGENVALUE_FLOOR",
    "MetricsReport",
    "ModelConfig",
    "ModelState",
    "PHANTOM_KINDS",
    "PHASES_BY_KIND",
    "Partition",
    "Phantom",
    "STOP_ENERGY_REL_TOL",
    "STOP_NO_PIXEL_CHANGE",
    "SolveResult",
    "SolverConfig",
    "SpectrumReport",
    "add_gaussian_noise",
    "assemble_phi",
    "binary_iglim",
    "box_window_area",
    "circulant_spectrum_1d",
    "circulant_spectrum_2d",
    "compare_lvf",
    "complete_partition",
    "convolve_periodic",
    "denoise_diagonal",
    "estimate_means",
    "fidelity_field",
    "graph_laplacian",
    "kmeans_split",
    "laplacian_weights",
    "lift_dimensions",
    "load_image",
    "lvf_field",
    "make_phantom",
    "multi_iglim",
    "overlay_contours",
    "rgb_to_lab",
    "run_grid",
    "save_labels",
    "score",
    "solve",
    "split_by_sign",
    "threshold_edges",
    "threshold_step",
    "total_energy",
    "update_model",
    "update_theta_cv",
    "update_theta_lif",
    "worker_count",
    "write_bench_csv",
]
