"""Unsupervised temporal segmentation of long procedural videos by
multimodal, temporally regularized optimal transport onto learned prototypes."""

__version__ = "0.1.0"

from .config import RunConfig, TrainConfig, load_config, resolve_config
from .featio import FeatureBundle, GroundTruth, TensorFile, read_labels, read_tensor, write_tensor
from .latent import LatentModel, init_model
from .metrics import EvalReport, evaluate
from .synth import SynthSpec, generate
from .trainer import fit_predict, segment, train
from .transport import TransportPlan, TransportProblem, solve

__all__ = [
    "RunConfig", "TrainConfig", "load_config", "resolve_config",
    "FeatureBundle", "GroundTruth", "TensorFile", "read_labels", "read_tensor", "write_tensor",
    "LatentModel", "init_model", "EvalReport", "evaluate", "SynthSpec", "generate",
    "fit_predict", "segment", "train", "TransportPlan", "TransportProblem", "solve",
]
