"""CTIS imaging toolkit: forward simulation, sparse system matrices,
EM reconstruction, dataset generation, and scoring."""

from .errors import (
    CapacityError,
    ConfigError,
    CtisError,
    DimensionError,
    DomainError,
    FormatError,
    RangeError,
)
from .hypercube import (
    CropWindow,
    HyperCube,
    crop,
    enumerate_crops,
    read_cube,
    select_bands,
    write_cube,
    write_pgm,
)
from .scenes import SceneSpec, generate_scene, mosaic_region_map
from .optics import (
    BlockSet,
    CtisImage,
    ShiftGeometry,
    assemble_blocks,
    default_shifts,
    devectorize,
    extract_blocks,
    read_image,
    simulate,
    vectorize,
    write_image,
)
from .system_matrix import SparseSystemMatrix, build_system_matrix, write_matrix_dump
from .em import EmConfig, EmResult, IterationStat, em_step, poisson_loglik, reconstruct
from .metrics import CategoryScore, ScoreAccumulator, ScoreReport, mae, mse, score_batch
from .dataset import (
    DatasetConfig,
    DatasetManifest,
    SampleInfo,
    SourceInfo,
    build_dataset,
    export_for_training,
    import_predictions,
    iter_samples,
    read_predictions,
    split_dataset,
    write_predictions,
)

__version__ = "0.1.0"

__all__ = [
    "CtisError", "DimensionError", "RangeError", "FormatError",
    "CapacityError", "DomainError", "ConfigError",
    "HyperCube", "CropWindow", "crop", "enumerate_crops", "select_bands",
    "read_cube", "write_cube", "write_pgm",
    "SceneSpec", "generate_scene", "mosaic_region_map",
    "ShiftGeometry", "CtisImage", "BlockSet", "default_shifts", "simulate",
    "extract_blocks", "assemble_blocks", "vectorize", "devectorize",
    "write_image", "read_image",
    "SparseSystemMatrix", "build_system_matrix", "write_matrix_dump",
    "EmConfig", "EmResult", "IterationStat", "em_step", "poisson_loglik", "reconstruct",
    "mse", "mae", "score_batch", "ScoreAccumulator", "ScoreReport", "CategoryScore",
    "DatasetConfig", "DatasetManifest", "SampleInfo", "SourceInfo",
    "build_dataset", "split_dataset", "export_for_training", "iter_samples",
    "write_predictions", "read_predictions", "import_predictions",
]
