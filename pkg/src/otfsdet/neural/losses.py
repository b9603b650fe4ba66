"""Softmax and sparse categorical cross-entropy."""

import numpy as np

from ..errors import ParameterError


def softmax(logits):
    """Row-wise softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def scce_loss(logits, labels):
    """Mean negative log-likelihood of the true class.

    Returns (loss, dlogits) where dlogits = (softmax - onehot) / batch, the
    gradient of the mean loss w.r.t. the logits.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ParameterError(
            f"need (batch, Q) logits and (batch,) labels, got {logits.shape} / {labels.shape}"
        )
    n, q = logits.shape
    if labels.min() < 0 or labels.max() >= q:
        raise ParameterError(f"labels outside [0, {q})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(n)
    loss = -log_probs[rows, labels].mean()
    dlogits = np.exp(log_probs)
    dlogits[rows, labels] -= 1.0
    dlogits /= n
    return loss, dlogits
