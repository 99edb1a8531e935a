"""Reference-guided scene sketch to photo synthesis.

Photos and sketches are standardized into a shared edge-map domain; an
encoder/decoder pair disentangles spatial content from global style; a
two-stage adversarial training procedure enables synthesis, style
interpolation, and stroke-based photo editing.
"""

from .data import (
    CorpusConfig,
    PairSample,
    TripletSample,
    build_pair_dataset,
    generate_procedural_scene,
    sample_triplets,
    write_procedural_corpus,
)
from .errors import (
    BlankSketchWarning,
    CheckpointFormatError,
    ConfigurationError,
    ContractError,
    InvalidInputError,
    ShapeMismatchError,
    SketchSynthError,
    TrainingDivergedError,
)
from .estimator import SketchToPhoto
from .evaluate import distribution_distance, recon_distance, separability_report
from .losses import LossReport, LossWeights
from .models import (
    ArchConfig,
    ModelBundle,
    build_model,
    decode,
    desk_config,
    discriminate,
    encode,
    load_checkpoint,
    modulated_conv,
    save_checkpoint,
)
from .standardize import (
    EdgeOperatorConfig,
    EdgeStandardizer,
    binarize,
    standardize_photo,
    standardize_sketch,
)
from .synthesis import (
    StrokeEdit,
    StyleBlend,
    blend_styles,
    edit_photo,
    synthesize,
    synthesize_blended,
)
from .trainer import TrainConfig, TrainState, run_training, train_step_stage1, train_step_stage2

__version__ = "0.1.0"

__all__ = [
    "ArchConfig",
    "BlankSketchWarning",
    "CheckpointFormatError",
    "ConfigurationError",
    "ContractError",
    "CorpusConfig",
    "EdgeOperatorConfig",
    "EdgeStandardizer",
    "InvalidInputError",
    "LossReport",
    "LossWeights",
    "ModelBundle",
    "PairSample",
    "ShapeMismatchError",
    "SketchSynthError",
    "SketchToPhoto",
    "StrokeEdit",
    "StyleBlend",
    "TrainConfig",
    "TrainState",
    "TrainingDivergedError",
    "TripletSample",
    "binarize",
    "blend_styles",
    "build_model",
    "build_pair_dataset",
    "decode",
    "desk_config",
    "discriminate",
    "distribution_distance",
    "edit_photo",
    "encode",
    "generate_procedural_scene",
    "load_checkpoint",
    "modulated_conv",
    "recon_distance",
    "sample_triplets",
    "save_checkpoint",
    "separability_report",
    "standardize_photo",
    "standardize_sketch",
    "synthesize",
    "synthesize_blended",
    "train_step_stage1",
    "train_step_stage2",
    "write_procedural_corpus",
]
