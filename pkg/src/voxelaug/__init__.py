"""voxelaug: deterministic volumetric augmentation and evaluation toolkit.

CPU-only 3D data augmentation for medical image segmentation — NIfTI I/O,
canonical preprocessing, a registry of geometric / appearance transforms, a
seeded probabilistic pipeline with counter-based RNG substreams (same
(config, seed, sample, epoch) → bit-identical output at any worker count),
standard ablation configurations, Dice / Wilcoxon evaluation, and a
throughput benchmark.
"""

from .bench import BenchReport, run_benchmark
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    DimensionalityError,
    GeometryError,
    InternalError,
    MappingError,
    NiftiError,
    UnsupportedFormatError,
    UsageError,
    VoxelAugError,
)
from .metrics import (
    DiceReport,
    StatResult,
    aggregate_subjects,
    dice_per_class,
    wilcoxon_signed_rank,
)
from .nifti import load_labels, load_nifti, load_volume, save_nifti
from .pipeline import (
    BASELINE_INTENSITY_TRANSFORMS,
    NOVEL_TRANSFORMS,
    PipelineConfig,
    TraceEvent,
    TransformSpec,
    ablation_variants,
    apply_pipeline,
    config_from_dict,
    config_to_dict,
    default_spec,
    load_config,
    make_ablation_config,
    make_default_config,
    save_config,
    transform_stream,
)
from .rng import RngStream, derive_substream, splitmix64
from .synth import make_synthetic_sample
from .volume import (
    LabelMap,
    LabelMapping,
    Sample,
    Volume,
    affine_for,
    extract_patch,
    min_max_normalize,
    orientation_from_affine,
    relabel,
    reorient,
    resample,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "VoxelAugError",
    "UsageError",
    "DataError",
    "NiftiError",
    "UnsupportedFormatError",
    "DimensionalityError",
    "ConfigError",
    "GeometryError",
    "MappingError",
    "DegenerateDataError",
    "InternalError",
    # rng
    "RngStream",
    "derive_substream",
    "splitmix64",
    # volume model
    "Volume",
    "LabelMap",
    "Sample",
    "LabelMapping",
    "affine_for",
    "orientation_from_affine",
    "reorient",
    "resample",
    "relabel",
    "min_max_normalize",
    "extract_patch",
    # nifti
    "load_volume",
    "load_labels",
    "load_nifti",
    "save_nifti",
    # pipeline
    "TransformSpec",
    "PipelineConfig",
    "TraceEvent",
    "NOVEL_TRANSFORMS",
    "BASELINE_INTENSITY_TRANSFORMS",
    "default_spec",
    "make_default_config",
    "ablation_variants",
    "make_ablation_config",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "save_config",
    "transform_stream",
    "apply_pipeline",
    # metrics
    "DiceReport",
    "StatResult",
    "dice_per_class",
    "aggregate_subjects",
    "wilcoxon_signed_rank",
    # synth + bench
    "make_synthetic_sample",
    "BenchReport",
    "run_benchmark",
]
