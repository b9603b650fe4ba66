"""Feature standardization and stratified fold splitting."""

import numpy as np

from ..errors import ParameterError

SIGMA_FLOOR = 1e-12


class Scaler:
    """Per-feature (x - mu) / sigma with population-variance sigma."""

    def __init__(self, mu, sigma):
        self.mu = np.asarray(mu, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        if np.any(self.sigma <= 0):
            raise ParameterError("scaler sigma must be positive")

    @classmethod
    def fit(cls, features):
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ParameterError(f"cannot fit scaler on shape {features.shape}")
        mu = features.mean(axis=0)
        sigma = np.maximum(features.std(axis=0), SIGMA_FLOOR)
        return cls(mu, sigma)

    def transform(self, features):
        return (np.asarray(features, dtype=float) - self.mu) / self.sigma


def stratified_kfold(labels, k, rng):
    """Split indices into k folds preserving per-class proportions.

    Each present class is shuffled and dealt into k nearly equal chunks;
    fold f's validation set is the union of chunk f over classes. Returns a
    list of (train_idx, val_idx) pairs with sorted index arrays. Any class
    with fewer than k samples is an error.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ParameterError("labels must be a nonempty 1-d array")
    if k < 2:
        raise ParameterError(f"need at least 2 folds, got {k}")
    classes = np.unique(labels)
    chunks_per_class = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise ParameterError(
                f"class {c} has {idx.size} samples, fewer than k={k}"
            )
        chunks_per_class.append(np.array_split(rng.permutation(idx), k))
    all_idx = np.arange(labels.size)
    folds = []
    for f in range(k):
        val = np.sort(np.concatenate([chunks[f] for chunks in chunks_per_class]))
        mask = np.ones(labels.size, dtype=bool)
        mask[val] = False
        folds.append((all_idx[mask], val))
    return folds
