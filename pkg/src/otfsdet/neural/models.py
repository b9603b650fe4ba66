"""Detector architectures as ordered layer stacks.

All three nets consume the 2-real feature vector [Re(z), Im(z)] of one
combined symbol and emit Q class logits; softmax lives in the loss and in
``predict_classes``. The convolutional nets view the two reals as a
1-channel length-2 sequence.
"""

import numpy as np

from ..errors import ConfigError, DimensionError
from .layers import Conv1D, Dense, Flatten, MaxPool1D, ReLU, ResidualBlock, SeqInput
from .losses import softmax

SUPPORTED_Q = (4, 16)
ARCHITECTURES = ("mlp", "cnn", "resnet")


class NetworkModel:
    """A plain sequential container with an architecture tag."""

    def __init__(self, arch, q, layers):
        self.arch = arch
        self.q = q
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params)
        return out

    def gradients(self):
        out = []
        for layer in self.layers:
            out.extend(layer.grads)
        return out

    @property
    def n_params(self):
        return sum(p.size for p in self.parameters())


def _check_q(q):
    if q not in SUPPORTED_Q:
        raise ConfigError(f"unsupported constellation order {q}, want one of {SUPPORTED_Q}")


def build_mlp(q, rng):
    """2 -> 128 -> 64 -> q fully connected classifier."""
    _check_q(q)
    layers = [
        Dense(2, 128, rng),
        ReLU(),
        Dense(128, 64, rng),
        ReLU(),
        Dense(64, q, rng),
    ]
    return NetworkModel("mlp", q, layers)


def build_cnn(q, rng):
    """Two same-padded convolutions, a pool, then a 128/64 dense head."""
    _check_q(q)
    layers = [
        SeqInput(2),
        Conv1D(1, 32, 3, rng),
        ReLU(),
        Conv1D(32, 64, 3, rng),
        ReLU(),
        MaxPool1D(2),
        Flatten(),
        Dense(64, 128, rng),
        ReLU(),
        Dense(128, 64, rng),
        ReLU(),
        Dense(64, q, rng),
    ]
    return NetworkModel("cnn", q, layers)


def build_resnet(q, rng):
    """Strided residual blocks widening 64->512, then a tapering dense head.

    The first conv of every block has stride 2; the length-2 input map
    collapses to length 1 in block one and stays there, so the flatten sees
    exactly 512 features.
    """
    _check_q(q)
    layers = [
        SeqInput(2),
        Conv1D(1, 64, 3, rng),
        ReLU(),
        ResidualBlock(64, 64, rng, stride=2),
        ResidualBlock(64, 128, rng, stride=2),
        ResidualBlock(128, 256, rng, stride=2),
        ResidualBlock(256, 512, rng, stride=2),
        Flatten(),
        Dense(512, 256, rng),
        ReLU(),
        Dense(256, 128, rng),
        ReLU(),
        Dense(128, 64, rng),
        ReLU(),
        Dense(64, 32, rng),
        ReLU(),
        Dense(32, q, rng),
    ]
    return NetworkModel("resnet", q, layers)


BUILDERS = {"mlp": build_mlp, "cnn": build_cnn, "resnet": build_resnet}


def build_model(arch, q, rng):
    if arch not in BUILDERS:
        raise ConfigError(f"unknown architecture {arch!r}, want one of {ARCHITECTURES}")
    return BUILDERS[arch](q, rng)


def predict_classes(model, scaler, features, batch=8192):
    """Standardize, run the net, return argmax class per sample.

    np.argmax resolves exact logit ties toward the lowest class index.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != 2:
        raise DimensionError(f"expected (n, 2) features, got {features.shape}")
    out = np.empty(features.shape[0], dtype=np.int64)
    for lo in range(0, features.shape[0], batch):
        chunk = scaler.transform(features[lo : lo + batch])
        out[lo : lo + batch] = np.argmax(model.forward(chunk), axis=1)
    return out


def predict_probabilities(model, scaler, features, batch=8192):
    """Softmax class probabilities, same contract as predict_classes."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != 2:
        raise DimensionError(f"expected (n, 2) features, got {features.shape}")
    out = np.empty((features.shape[0], model.q))
    for lo in range(0, features.shape[0], batch):
        chunk = scaler.transform(features[lo : lo + batch])
        out[lo : lo + batch] = softmax(model.forward(chunk))
    return out
