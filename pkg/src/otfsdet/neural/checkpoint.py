"""Model checkpoints: npz container with metadata, params, and scaler.

Layout: a json ``meta`` string (format tag, version, arch, q, seed, shapes,
fold/epoch provenance), ``scaler_mu`` / ``scaler_sigma``, and one ``p<i>``
array per parameter tensor in declared layer order. float64 arrays survive
the zip round trip bit-exactly, so save -> load -> predict is identical.
"""

import json

import numpy as np

from ..errors import ConfigError
from ..numerics import Rng
from .models import build_model
from .preprocess import Scaler
from .train import TrainResult

FORMAT = "otfsdet-model"
VERSION = 1


def save_checkpoint(path, result):
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "arch": result.arch,
        "q": int(result.q),
        "seed": int(result.seed),
        "best_fold": int(result.best_fold),
        "retrain_epochs": int(result.retrain_epochs),
        "param_shapes": [list(p.shape) for p in result.params],
    }
    arrays = {f"p{i}": p for i, p in enumerate(result.params)}
    with open(path, "wb") as fh:
        np.savez(fh, meta=json.dumps(meta), scaler_mu=result.scaler.mu,
                 scaler_sigma=result.scaler.sigma, **arrays)


def load_checkpoint(path):
    """Returns (model, scaler, meta) with parameters restored in place."""
    with np.load(path, allow_pickle=False) as data:
        if "meta" not in data:
            raise ConfigError(f"{path}: not a model checkpoint")
        meta = json.loads(str(data["meta"]))
        if meta.get("format") != FORMAT:
            raise ConfigError(f"{path}: unknown checkpoint format {meta.get('format')}")
        if meta.get("version") != VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        # init rng is irrelevant: every parameter is overwritten below
        model = build_model(meta["arch"], meta["q"], Rng(0).stream("ckpt-init").gen)
        params = model.parameters()
        if len(params) != len(meta["param_shapes"]):
            raise ConfigError(f"{path}: parameter count mismatch")
        for i, p in enumerate(params):
            saved = data[f"p{i}"]
            if list(saved.shape) != list(p.shape) or list(saved.shape) != meta["param_shapes"][i]:
                raise ConfigError(
                    f"{path}: parameter {i} shape {saved.shape} does not match model {p.shape}"
                )
            p[...] = saved
        scaler = Scaler(data["scaler_mu"], data["scaler_sigma"])
    return model, scaler, meta


def result_from_checkpoint(path):
    """Rehydrate a TrainResult view (params + scaler) for re-saving."""
    model, scaler, meta = load_checkpoint(path)
    return TrainResult(
        arch=meta["arch"], q=meta["q"], params=model.parameters(), scaler=scaler,
        best_fold=meta["best_fold"], retrain_epochs=meta["retrain_epochs"],
        seed=meta["seed"],
    )
