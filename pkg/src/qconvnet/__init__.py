"""Unitary-kernel convolutional image classifier with a simulator cross-check."""

from .config import TrainConfig, parse_config
from .errors import (
    ConfigError,
    DataError,
    EncodingError,
    FormatError,
    GeometryError,
    NumericalError,
    QConvError,
    ShapeError,
    TrainingError,
    VerificationError,
)
from .estimator import PairwiseProductEncoder, QuantumConvClassifier
from .expansion import PatchLayout, encode_batch, encode_sample, expand, plan_patches
from .idx import LabeledSet, load_labeled_set, load_split, parse_idx_images, parse_idx_labels, resize_bilinear
from .network import (
    ForwardCache,
    Geometry,
    Grads,
    ModelParams,
    forward,
    forward_encoded,
    loss,
    loss_and_grad,
    loss_and_grad_encoded,
    operator_of,
    predict,
    predict_encoded,
)
from .params_io import load_params, save_params
from .statevec import (
    VerificationReport,
    amplitude_encode,
    apply_gate_low_qubits,
    embed_gate,
    measure_probabilities,
    verify_model,
)
from .train import (
    EncodedData,
    OptState,
    RunRecord,
    evaluate,
    evaluate_encoded,
    init_params,
    select_lr,
    select_run,
    sgd_momentum_step,
    train_one,
)
from .unitary import orthogonality_defect, svd_full, unitarize, unitarize_backward

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "EncodingError", "FormatError", "GeometryError",
    "NumericalError", "QConvError", "ShapeError", "TrainingError", "VerificationError",
    "EncodedData", "ForwardCache", "Geometry", "Grads", "LabeledSet", "ModelParams",
    "OptState", "PairwiseProductEncoder", "PatchLayout", "QuantumConvClassifier",
    "RunRecord", "TrainConfig", "VerificationReport",
    "amplitude_encode", "apply_gate_low_qubits", "embed_gate", "encode_batch",
    "encode_sample", "evaluate", "evaluate_encoded", "expand", "forward",
    "forward_encoded", "init_params", "load_labeled_set", "load_params", "load_split",
    "loss", "loss_and_grad", "loss_and_grad_encoded", "measure_probabilities",
    "operator_of", "orthogonality_defect", "parse_config", "parse_idx_images",
    "parse_idx_labels", "plan_patches", "predict", "predict_encoded",
    "resize_bilinear", "save_params", "select_lr", "select_run", "sgd_momentum_step",
    "svd_full", "train_one", "unitarize", "unitarize_backward", "verify_model",
]
