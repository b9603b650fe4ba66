"""Self-contained neural network stack: layers, loss, optimizer, training.

Everything runs on plain numpy arrays in double precision. The layer set is
fixed (dense, conv1d, relu, maxpool1d, residual block, flatten) because the
detector architectures need nothing else.
"""

from .layers import (
    Conv1D,
    Dense,
    Flatten,
    MaxPool1D,
    ReLU,
    ResidualBlock,
    SeqInput,
)
from .losses import scce_loss, softmax
from .models import NetworkModel, build_cnn, build_mlp, build_resnet, predict_classes
from .optim import Adam
from .preprocess import Scaler, stratified_kfold
from .train import (
    EpochRecord,
    FoldSummary,
    PlateauController,
    TrainConfig,
    TrainResult,
    train_model,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Adam",
    "Conv1D",
    "Dense",
    "EpochRecord",
    "Flatten",
    "FoldSummary",
    "MaxPool1D",
    "NetworkModel",
    "PlateauController",
    "ReLU",
    "ResidualBlock",
    "Scaler",
    "SeqInput",
    "TrainConfig",
    "TrainResult",
    "build_cnn",
    "build_mlp",
    "build_resnet",
    "load_checkpoint",
    "predict_classes",
    "save_checkpoint",
    "scce_loss",
    "softmax",
    "stratified_kfold",
    "train_model",
]
