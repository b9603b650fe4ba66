"""End-to-end link simulation: frame generation, MLD Monte Carlo, dataset
emission for detector training, and dataset file round-trip.

Every random quantity hangs off a master seed through named substreams:
training frames use stream ("train-frame", i), evaluation frames
("test-frame", i), so the two populations are disjoint by construction.
Test frames are shared across SNR points (common random numbers): the
received statistic is linear in the noise, so each frame is simulated once
and the noise term rescaled per SNR.  That pairs every detector and every
SNR point on identical channel/data realizations.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .channel import (
    ChannelProfile,
    EffectiveChannel,
    mrc_gain_diagonal,
    sample_pathset,
    time_channel_apply,
)
from .detector import BERReport, Constellation, count_bit_errors, map_bits, mld_detect, mrc_combine
from .errors import ConfigError, StageFailure
from .modem import dd_unvec, dd_vec, demodulate, modulate
from .numerics import Rng, sample_gaussian_complex

__all__ = [
    "SimConfig",
    "Frame",
    "simulate_frame",
    "run_mld_ber",
    "Dataset",
    "generate_dataset",
    "write_dataset",
    "read_dataset",
    "train_stream_ids",
    "test_stream_ids",
    "MldDetector",
    "NeuralDetector",
    "run_detector_ber",
    "run_nn_eval",
    "run_full_experiment",
]

TRAIN_TAG = "train-frame"
TEST_TAG = "test-frame"


@dataclass
class SimConfig:
    """Resolved system + experiment parameters."""

    m_bins: int = 64
    n_bins: int = 64
    nt: int = 1
    nr: int = 1
    q: int = 4
    profile: ChannelProfile = field(default_factory=ChannelProfile)
    snr_train_db: float = 8.0
    snr_test_db: tuple = (0.0, 4.0, 8.0, 12.0, 16.0)
    target_symbols: int = 100_000
    train_frames: int = 30
    master_seed: int = 1234

    def __post_init__(self):
        if self.m_bins < 2 or self.n_bins < 2:
            raise ConfigError("grid needs at least 2 bins per axis")
        if self.nt < 1 or self.nr < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.target_symbols < 1 or self.train_frames < 1:
            raise ConfigError("symbol/frame budgets must be >= 1")
        self.profile.validate(self.m_bins, self.n_bins)
        Constellation(self.q)  # validates the order

    @property
    def mn(self) -> int:
        return self.m_bins * self.n_bins

    @property
    def frames_per_snr(self) -> int:
        return math.ceil(self.target_symbols / (self.nt * self.mn))

    def constellation(self) -> Constellation:
        return Constellation(self.q)

    def with_modulation(self, q: int) -> "SimConfig":
        return replace(self, q=q)

    def to_dict(self) -> dict:
        return {
            "system": {
                "delay_bins": self.m_bins,
                "doppler_bins": self.n_bins,
                "tx_antennas": self.nt,
                "rx_antennas": self.nr,
                "qam_order": self.q,
            },
            "channel": {
                "paths": self.profile.paths,
                "nakagami_m": self.profile.m,
                "l_max": self.profile.l_max,
                "k_max": self.profile.k_max,
                "fractional_doppler": self.profile.fractional_doppler,
                "omega_policy": self.profile.omega_policy,
                "omega_decay": self.profile.omega_decay,
            },
            "training": {
                "snr_train_db": self.snr_train_db,
                "frames": self.train_frames,
            },
            "eval": {
                "snr_test_db": list(self.snr_test_db),
                "target_symbols": self.target_symbols,
            },
            "seed": self.master_seed,
        }


@dataclass
class Frame:
    """One simulated frame, noise left unscaled.

    z_signal is the combiner output for the transmitted signal alone;
    z_noise is the combiner response to unit-variance receiver noise.  The
    statistic at noise power sigma2 is z_signal + sqrt(sigma2) * z_noise.
    """

    tx_classes: np.ndarray  # (nt, mn) int
    z_signal: np.ndarray  # (nt, mn) complex
    z_noise: np.ndarray  # (nt, mn) complex
    g: np.ndarray  # (nt, mn) real combining gains

    def combined(self, sigma2: float) -> np.ndarray:
        return self.z_signal + np.sqrt(sigma2) * self.z_noise


def simulate_frame(cfg: SimConfig, rng: Rng, constellation: Constellation | None = None) -> Frame:
    """Simulate one frame through every (rx, tx) link.

    Fixed draw order: bits, then channels (rx-major over links), then one
    unit-variance noise vector per rx antenna.
    """
    c = constellation or cfg.constellation()
    mn = cfg.mn
    bits = rng.gen.integers(0, 2, size=cfg.nt * mn * c.bits_per_symbol)
    symbols, classes = map_bits(bits, c)
    symbols = symbols.reshape(cfg.nt, mn)
    classes = classes.reshape(cfg.nt, mn)

    tx_time = [modulate(dd_unvec(symbols[t], cfg.m_bins, cfg.n_bins)) for t in range(cfg.nt)]
    links = [
        [
            EffectiveChannel(sample_pathset(rng, cfg.profile, cfg.m_bins, cfg.n_bins))
            for _ in range(cfg.nt)
        ]
        for _ in range(cfg.nr)
    ]
    noise = [sample_gaussian_complex(rng, 1.0, size=mn) for _ in range(cfg.nr)]

    y_signal = []
    y_noise = []
    for r in range(cfg.nr):
        rx_time = np.zeros(mn, dtype=complex)
        for t in range(cfg.nt):
            rx_time += time_channel_apply(links[r][t].ps, tx_time[t])
        y_signal.append(dd_vec(demodulate(rx_time, cfg.m_bins, cfg.n_bins)))
        y_noise.append(dd_vec(demodulate(noise[r], cfg.m_bins, cfg.n_bins)))

    z_signal = np.empty((cfg.nt, mn), dtype=complex)
    z_noise = np.empty((cfg.nt, mn), dtype=complex)
    g = np.empty((cfg.nt, mn))
    for t in range(cfg.nt):
        chain = [links[r][t] for r in range(cfg.nr)]
        z_signal[t] = mrc_combine(y_signal, chain)
        z_noise[t] = mrc_combine(y_noise, chain)
        g[t] = mrc_gain_diagonal(chain)
    return Frame(classes, z_signal, z_noise, g)


def snr_to_sigma2(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def run_mld_ber(cfg: SimConfig, frames: int | None = None) -> list:
    """Monte Carlo BER of the MRC + per-symbol MLD chain at each test SNR."""
    c = cfg.constellation()
    n_frames = frames if frames is not None else cfg.frames_per_snr
    base = Rng(cfg.master_seed)
    errors = {snr: 0 for snr in cfg.snr_test_db}
    for i in range(n_frames):
        fr = simulate_frame(cfg, base.stream(TEST_TAG, i), c)
        for snr in cfg.snr_test_db:
            z = fr.combined(snr_to_sigma2(snr))
            for t in range(cfg.nt):
                det = mld_detect(z[t], fr.g[t], c)
                errors[snr] += count_bit_errors(fr.tx_classes[t], det, c)
    symbols = n_frames * cfg.nt * cfg.mn
    return [
        BERReport("mld", float(snr), cfg.profile.m, cfg.nt, cfg.nr, cfg.q, symbols, errors[snr])
        for snr in cfg.snr_test_db
    ]


def train_stream_ids(cfg: SimConfig) -> set:
    return {(TRAIN_TAG, i) for i in range(cfg.train_frames)}


def test_stream_ids(cfg: SimConfig, frames: int | None = None) -> set:
    n = frames if frames is not None else cfg.frames_per_snr
    return {(TEST_TAG, i) for i in range(n)}


@dataclass
class Dataset:
    """Per-symbol detector samples: features are the combined statistic."""

    features: np.ndarray  # (n, 2) float: Re z, Im z
    labels: np.ndarray  # (n,) int class indices
    frame: np.ndarray  # (n,) int
    antenna: np.ndarray  # (n,) int
    grid_index: np.ndarray  # (n,) int
    snr_db: float
    purpose: str
    config: dict

    def __len__(self):
        return len(self.labels)


def generate_dataset(
    cfg: SimConfig, snr_db: float, frames: int, purpose: str = "train"
) -> Dataset:
    """Simulate frames and emit per-symbol (Re z, Im z, label) records.

    Rows are ordered by (frame, antenna, grid index).  Training and test
    purposes draw from disjoint stream families.
    """
    if purpose not in ("train", "test"):
        raise ConfigError(f"purpose must be train or test, got {purpose!r}")
    tag = TRAIN_TAG if purpose == "train" else TEST_TAG
    c = cfg.constellation()
    sigma2 = snr_to_sigma2(snr_db)
    base = Rng(cfg.master_seed)
    mn = cfg.mn
    rows = frames * cfg.nt * mn
    features = np.empty((rows, 2))
    labels = np.empty(rows, dtype=int)
    frame_col = np.empty(rows, dtype=int)
    antenna_col = np.empty(rows, dtype=int)
    grid_col = np.empty(rows, dtype=int)
    pos = 0
    for i in range(frames):
        fr = simulate_frame(cfg, base.stream(tag, i), c)
        z = fr.combined(sigma2)
        for t in range(cfg.nt):
            sl = slice(pos, pos + mn)
            features[sl, 0] = z[t].real
            features[sl, 1] = z[t].imag
            labels[sl] = fr.tx_classes[t]
            frame_col[sl] = i
            antenna_col[sl] = t
            grid_col[sl] = np.arange(mn)
            pos += mn
    return Dataset(
        features, labels, frame_col, antenna_col, grid_col, float(snr_db), purpose, cfg.to_dict()
    )


def write_dataset(ds: Dataset, path) -> None:
    """Write header (config snapshot) plus CSV records.

    re/im are printed with 17 significant digits so the round trip is exact.
    """
    header = {
        "config": ds.config,
        "snr_db": ds.snr_db,
        "purpose": ds.purpose,
        "records": len(ds),
    }
    with open(path, "w") as fh:
        for line in yaml.safe_dump(header, sort_keys=True).splitlines():
            fh.write(f"# {line}\n")
        fh.write("frame,antenna,grid_index,re,im,label\n")
        for i in range(len(ds)):
            fh.write(
                f"{ds.frame[i]},{ds.antenna[i]},{ds.grid_index[i]},"
                f"{ds.features[i, 0]:.17g},{ds.features[i, 1]:.17g},{ds.labels[i]}\n"
            )


def read_dataset(path) -> Dataset:
    """Inverse of write_dataset."""
    header_lines = []
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                header_lines.append(line[2:])
            elif line.startswith("frame,"):
                continue
            elif line.strip():
                rows.append(line.strip().split(","))
    if not header_lines:
        raise ConfigError(f"{path}: missing header")
    header = yaml.safe_load("".join(header_lines))
    needed = {"config", "snr_db", "purpose", "records"}
    if not isinstance(header, dict) or not needed.issubset(header):
        raise ConfigError(f"{path}: incomplete header")
    if len(rows) != header["records"]:
        raise ConfigError(f"{path}: row count {len(rows)} != declared {header['records']}")
    n = len(rows)
    features = np.empty((n, 2))
    labels = np.empty(n, dtype=int)
    frame_col = np.empty(n, dtype=int)
    antenna_col = np.empty(n, dtype=int)
    grid_col = np.empty(n, dtype=int)
    for i, row in enumerate(rows):
        if len(row) != 6:
            raise ConfigError(f"{path}: malformed row {i}")
        frame_col[i], antenna_col[i], grid_col[i] = int(row[0]), int(row[1]), int(row[2])
        features[i, 0], features[i, 1] = float(row[3]), float(row[4])
        labels[i] = int(row[5])
    return Dataset(
        features,
        labels,
        frame_col,
        antenna_col,
        grid_col,
        float(header["snr_db"]),
        header["purpose"],
        header["config"],
    )


class MldDetector:
    """Reference detector: per-symbol nearest candidate under the MRC gain."""

    name = "mld"

    def decide(self, z, g, constellation):
        return mld_detect(z, g, constellation)


class NeuralDetector:
    """Wraps a trained net + scaler; named after its architecture."""

    def __init__(self, model, scaler, name=None):
        self.model = model
        self.scaler = scaler
        self.name = name or model.arch

    def check(self, cfg):
        if self.model.q != cfg.q:
            raise ConfigError(
                f"checkpoint order Q={self.model.q} does not match config Q={cfg.q}"
            )

    def decide(self, z, g, constellation):
        from .neural import predict_classes

        features = np.column_stack([z.real, z.imag])
        return predict_classes(self.model, self.scaler, features)


def run_detector_ber(cfg: SimConfig, detectors: list, frames: int | None = None) -> list:
    """Paired Monte Carlo over shared test frames for several detectors.

    Every detector sees the identical frame/noise realizations at every SNR,
    so BER differences reflect the detectors, not the draw.  Returns reports
    grouped by detector, in the given order.
    """
    c = cfg.constellation()
    n_frames = frames if frames is not None else cfg.frames_per_snr
    for det in detectors:
        if hasattr(det, "check"):
            det.check(cfg)
    base = Rng(cfg.master_seed)
    errors = {det.name: {snr: 0 for snr in cfg.snr_test_db} for det in detectors}
    for i in range(n_frames):
        fr = simulate_frame(cfg, base.stream(TEST_TAG, i), c)
        for snr in cfg.snr_test_db:
            z = fr.combined(snr_to_sigma2(snr))
            for det in detectors:
                for t in range(cfg.nt):
                    decided = det.decide(z[t], fr.g[t], c)
                    errors[det.name][snr] += count_bit_errors(fr.tx_classes[t], decided, c)
    symbols = n_frames * cfg.nt * cfg.mn
    return [
        BERReport(det.name, float(snr), cfg.profile.m, cfg.nt, cfg.nr, cfg.q,
                  symbols, errors[det.name][snr])
        for det in detectors
        for snr in cfg.snr_test_db
    ]


def run_nn_eval(cfg: SimConfig, model, scaler, frames: int | None = None) -> list:
    """Evaluate one trained network on fresh test frames at all test SNRs."""
    return run_detector_ber(cfg, [NeuralDetector(model, scaler)], frames=frames)


def run_full_experiment(cfg: SimConfig, archs, out_dir, train_cfg=None,
                        eval_frames: int | None = None) -> dict:
    """Dataset -> CV training per architecture -> paired eval incl. MLD.

    Writes the training dataset, one checkpoint + loss history per
    architecture, and a combined BER CSV under out_dir.  Returns the output
    paths plus the in-memory reports.  Stage failures abort with the stage
    tag attached.
    """
    import os

    from .detector import write_ber_csv
    from .neural import save_checkpoint, train_model
    from .neural.train import TrainConfig, write_loss_history

    os.makedirs(out_dir, exist_ok=True)
    tc = train_cfg or TrainConfig(seed=cfg.master_seed)
    paths = {"checkpoints": {}, "loss_history": {}}

    def stage(tag, fn):
        try:
            return fn()
        except Exception as e:  # noqa: BLE001 - re-raised with stage context
            raise StageFailure(tag, e) from e

    ds = stage("dataset", lambda: generate_dataset(
        cfg, cfg.snr_train_db, cfg.train_frames, purpose="train"))
    dataset_path = os.path.join(out_dir, "train_dataset.csv")
    stage("dataset-write", lambda: write_dataset(ds, dataset_path))
    paths["dataset"] = dataset_path

    detectors = [MldDetector()]
    for arch in archs:
        result = stage(f"train:{arch}", lambda a=arch: train_model(
            a, cfg.q, ds.features, ds.labels, tc))
        ckpt = os.path.join(out_dir, f"model_{arch}.npz")
        hist = os.path.join(out_dir, f"loss_history_{arch}.csv")
        stage(f"train:{arch}", lambda r=result, p=ckpt: save_checkpoint(p, r))
        stage(f"train:{arch}", lambda r=result, p=hist: write_loss_history(r.history, p))
        paths["checkpoints"][arch] = ckpt
        paths["loss_history"][arch] = hist
        model, scaler = _detector_from_result(result)
        detectors.append(NeuralDetector(model, scaler, name=arch))

    reports = stage("eval", lambda: run_detector_ber(cfg, detectors, frames=eval_frames))
    ber_path = os.path.join(out_dir, "ber.csv")
    stage("eval-write", lambda: write_ber_csv(reports, ber_path))
    paths["ber_csv"] = ber_path
    paths["reports"] = reports
    return paths


def _detector_from_result(result):
    """Materialize a model with the trained parameters installed."""
    from .neural.models import build_model

    model = build_model(result.arch, result.q, Rng(0).stream("rebuild").gen)
    for p, trained in zip(model.parameters(), result.params):
        p[...] = trained
    return model, result.scaler
