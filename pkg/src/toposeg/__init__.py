"""Topology-aware segmentation toolkit.

Cubical persistent homology of grayscale images, spatially weighted
diagram matching, differentiable topological losses, unpaired-translation
objective formulas, and a segmentation metric suite.
"""

from .config import RunConfig, load_config
from .gan import (
    GanWeights,
    GeneratorObjective,
    ImageMap,
    ScoreMap,
    discriminator_objective,
    generator_objective,
)
from .image import (
    BinaryMask,
    GrayImage,
    ImageFormatError,
    load_grayscale,
    pad_and_resize,
    read_float_blob,
    save_pgm,
    threshold_mask,
    write_float_blob,
)
from .losses import (
    FeatureExtractor,
    LossBreakdown,
    LossConfig,
    LossResult,
    Stage,
    bce_loss,
    default_extractor,
    extract_features,
    load_extractor,
    perceptual_topo_loss,
    sat_loss,
    total_loss,
    total_loss_breakdown,
)
from .matching import (
    DIAGONAL,
    DiagramPoint,
    MatchConfig,
    MatchEdge,
    Matching,
    diagonal_projection,
    image_diagonal,
    match_diagrams,
    pair_cost,
    wasserstein_distance,
)
from .metrics import (
    Confusion,
    MetricsReport,
    MetricsRow,
    betti_error,
    betti_error_tiled,
    cldice,
    confusion,
    evaluate_dataset,
    pixel_metrics,
    skeletonize,
)
from .persistence import (
    BettiCurve,
    PersistenceDiagram,
    PersistencePair,
    betti_curve,
    betti_numbers,
    compute_diagram,
    diagram_from_json,
    diagram_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "BettiCurve",
    "BinaryMask",
    "Confusion",
    "DIAGONAL",
    "DiagramPoint",
    "FeatureExtractor",
    "GanWeights",
    "GeneratorObjective",
    "GrayImage",
    "ImageFormatError",
    "ImageMap",
    "LossBreakdown",
    "LossConfig",
    "LossResult",
    "MatchConfig",
    "MatchEdge",
    "Matching",
    "MetricsReport",
    "MetricsRow",
    "PersistenceDiagram",
    "PersistencePair",
    "RunConfig",
    "ScoreMap",
    "Stage",
    "bce_loss",
    "betti_curve",
    "betti_error",
    "betti_error_tiled",
    "betti_numbers",
    "cldice",
    "compute_diagram",
    "confusion",
    "default_extractor",
    "diagonal_projection",
    "diagram_from_json",
    "diagram_to_json",
    "discriminator_objective",
    "evaluate_dataset",
    "extract_features",
    "generator_objective",
    "image_diagonal",
    "load_config",
    "load_extractor",
    "load_grayscale",
    "match_diagrams",
    "pad_and_resize",
    "pair_cost",
    "perceptual_topo_loss",
    "pixel_metrics",
    "read_float_blob",
    "sat_loss",
    "save_pgm",
    "skeletonize",
    "threshold_mask",
    "total_loss",
    "total_loss_breakdown",
    "wasserstein_distance",
    "write_float_blob",
]
