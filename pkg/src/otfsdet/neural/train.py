"""Cross-validated training with plateau LR decay and early stopping.

Protocol per fold: shuffled minibatches, Adam updates, epoch-end validation
loss. The learning rate halves after 4 consecutive epochs without validation
improvement, training stops after 10 without improvement (or at the epoch
cap), and the parameters from the best validation epoch are retained. After
all folds, the winning fold's epoch count is re-run on the full training set
to produce the deployed parameters.

"Improvement" means the validation loss decreased by more than 1e-12; equal
or microscopically lower losses still count as stagnation for both patience
counters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ParameterError, TrainingDiverged
from ..numerics import Rng
from .losses import scce_loss
from .models import build_model
from .optim import Adam
from .preprocess import Scaler, stratified_kfold

IMPROVEMENT_TOL = 1e-12

# stream tags for the training-side rng; disjoint from the pipeline's
# frame-simulation tags by construction
INIT_TAG = "nn-init"
SHUFFLE_TAG = "nn-shuffle"
FOLD_TAG = "nn-folds"

# fold index used for the post-CV retrain rows in the loss history
RETRAIN_FOLD = 0


@dataclass
class TrainConfig:
    lr0: float = 1e-3
    max_epochs: int = 50
    batch_size: int = 4096
    stop_patience: int = 10
    lr_patience: int = 4
    lr_factor: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    folds: int = 5
    seed: int = 1234

    def __post_init__(self):
        if self.lr0 <= 0 or self.lr_factor <= 0 or self.lr_factor >= 1:
            raise ParameterError("need lr0 > 0 and 0 < lr_factor < 1")
        for name in ("max_epochs", "batch_size", "stop_patience", "lr_patience", "folds"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")

    def to_dict(self):
        return {
            "lr0": self.lr0,
            "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "stop_patience": self.stop_patience,
            "lr_patience": self.lr_patience,
            "lr_factor": self.lr_factor,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "folds": self.folds,
            "seed": self.seed,
        }


class PlateauController:
    """Tracks best validation loss and drives the LR / stop decisions.

    Call update(loss) once per epoch after validation. ``lr`` then holds the
    rate for the next epoch and ``should_stop`` whether to halt. The LR wait
    counter resets both on improvement and on a halving, so successive
    halvings are 4 stagnant epochs apart.
    """

    def __init__(self, lr0, factor=0.5, lr_patience=4, stop_patience=10,
                 tol=IMPROVEMENT_TOL):
        self.lr = lr0
        self.factor = factor
        self.lr_patience = lr_patience
        self.stop_patience = stop_patience
        self.tol = tol
        self.best_loss = math.inf
        self.best_epoch = 0
        self.epoch = 0
        self.should_stop = False
        self._lr_wait = 0
        self._stop_wait = 0

    def update(self, loss):
        self.epoch += 1
        improved = (self.best_loss - loss) > self.tol
        if improved:
            self.best_loss = loss
            self.best_epoch = self.epoch
            self._lr_wait = 0
            self._stop_wait = 0
        else:
            self._lr_wait += 1
            self._stop_wait += 1
            if self._lr_wait >= self.lr_patience:
                self.lr *= self.factor
                self._lr_wait = 0
            if self._stop_wait >= self.stop_patience:
                self.should_stop = True
        return improved


@dataclass
class EpochRecord:
    epoch: int
    fold: int
    train_loss: float
    val_loss: float  # nan for retrain epochs (no held-out split)
    lr: float


@dataclass
class FoldSummary:
    fold: int
    best_epoch: int
    best_val_loss: float
    epochs_run: int


@dataclass
class TrainResult:
    arch: str
    q: int
    params: list
    scaler: Scaler
    history: list = field(default_factory=list)
    fold_summaries: list = field(default_factory=list)
    best_fold: int = 0
    retrain_epochs: int = 0
    seed: int = 0


def _mean_loss(model, x, y, batch):
    total = 0.0
    for lo in range(0, x.shape[0], batch):
        xs = x[lo : lo + batch]
        loss, _ = scce_loss(model.forward(xs), y[lo : lo + batch])
        total += loss * xs.shape[0]
    return total / x.shape[0]


def _run_epochs(model, x_train, y_train, cfg, shuffle_for, fold, history,
                x_val=None, y_val=None, max_epochs=None, stop_patience=None):
    """Shared epoch loop for CV folds and the final retrain.

    Without a validation split the controller is fed the training loss, so
    the LR schedule still fires but checkpoints/stopping are not used.
    """
    n = x_train.shape[0]
    opt = Adam(model.parameters(), lr=cfg.lr0, beta1=cfg.beta1, beta2=cfg.beta2,
               eps=cfg.eps)
    ctrl = PlateauController(
        cfg.lr0, factor=cfg.lr_factor, lr_patience=cfg.lr_patience,
        stop_patience=cfg.stop_patience if stop_patience is None else stop_patience,
    )
    best_params = None
    for epoch in range(1, (max_epochs or cfg.max_epochs) + 1):
        perm = shuffle_for(epoch).permutation(n)
        total = 0.0
        for bidx, lo in enumerate(range(0, n, cfg.batch_size)):
            sel = perm[lo : lo + cfg.batch_size]
            loss, dlogits = scce_loss(model.forward(x_train[sel]), y_train[sel])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, bidx)
            model.backward(dlogits)
            opt.step(model.gradients())
            total += loss * sel.size
        train_loss = total / n
        if x_val is not None:
            val_loss = _mean_loss(model, x_val, y_val, cfg.batch_size)
            if not np.isfinite(val_loss):
                raise TrainingDiverged(epoch, -1)
            monitored = val_loss
        else:
            val_loss = math.nan
            monitored = train_loss
        history.append(EpochRecord(epoch, fold, train_loss, val_loss, ctrl.lr))
        if ctrl.update(monitored) and x_val is not None:
            best_params = [p.copy() for p in model.parameters()]
        opt.lr = ctrl.lr
        if x_val is not None and ctrl.should_stop:
            break
    return best_params, ctrl.best_epoch, ctrl.best_loss, ctrl.epoch


def train_model(arch, q, features, labels, cfg):
    """5-fold CV then full-set retrain; returns params, scaler, history."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ParameterError(
            f"features {features.shape} do not match labels {labels.shape}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= q):
        raise ConfigError(f"labels exceed constellation order {q}")
    root = Rng(cfg.seed)
    folds = stratified_kfold(labels, cfg.folds, root.stream(FOLD_TAG, arch).gen)

    history = []
    summaries = []
    for f, (tr, val) in enumerate(folds, start=1):
        scaler = Scaler.fit(features[tr])
        x_tr = scaler.transform(features[tr])
        x_val = scaler.transform(features[val])
        model = build_model(arch, q, root.stream(INIT_TAG, arch, f).gen)
        _, best_epoch, best_val, epochs_run = _run_epochs(
            model, x_tr, labels[tr], cfg,
            lambda epoch, f=f: root.stream(SHUFFLE_TAG, arch, f, epoch).gen,
            f, history, x_val=x_val, y_val=labels[val],
        )
        summaries.append(FoldSummary(f, best_epoch, best_val, epochs_run))

    best = min(summaries, key=lambda s: (s.best_val_loss, s.fold))
    scaler = Scaler.fit(features)
    model = build_model(arch, q, root.stream(INIT_TAG, arch, RETRAIN_FOLD).gen)
    _run_epochs(
        model, scaler.transform(features), labels, cfg,
        lambda epoch: root.stream(SHUFFLE_TAG, arch, RETRAIN_FOLD, epoch).gen,
        RETRAIN_FOLD, history,
        max_epochs=best.best_epoch,
    )
    return TrainResult(
        arch=arch, q=q, params=model.parameters(), scaler=scaler,
        history=history, fold_summaries=summaries, best_fold=best.fold,
        retrain_epochs=best.best_epoch, seed=cfg.seed,
    )


LOSS_CSV_HEADER = "epoch,fold,train_loss,val_loss,lr"


def write_loss_history(history, path):
    """Loss-history CSV; retrain rows (fold 0) leave val_loss empty."""
    with open(path, "w") as fh:
        fh.write(LOSS_CSV_HEADER + "\n")
        for r in history:
            val = "" if math.isnan(r.val_loss) else f"{r.val_loss:.10g}"
            fh.write(f"{r.epoch},{r.fold},{r.train_loss:.10g},{val},{r.lr:.10g}\n")


def read_loss_history(path):
    """Parse a write_loss_history file back into EpochRecords."""
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != LOSS_CSV_HEADER:
            raise ParameterError(f"{path}: unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            epoch, fold, tr, val, lr = line.strip().split(",")
            out.append(EpochRecord(int(epoch), int(fold), float(tr),
                                   float(val) if val else math.nan, float(lr)))
    return out
