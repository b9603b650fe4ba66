"""YAML experiment configuration.

One document, four sections (system/channel/training/eval) plus a top-level
master seed.  Every section is optional and falls back to the library
defaults; unknown sections or keys are hard errors so a typo cannot silently
run the wrong experiment.  The OTFSDET_SEED environment variable, when set,
overrides the seed from any config file.
"""

import os
from dataclasses import dataclass

import yaml

from .channel import ChannelProfile
from .errors import ConfigError
from .neural import TrainConfig
from .pipeline import SimConfig

__all__ = [
    "SEED_ENV_VAR",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "config_snapshot",
    "default_config_yaml",
]

SEED_ENV_VAR = "OTFSDET_SEED"

# Stock mobility/numerology pairing behind "k_max: auto": 500 km/h at a
# 3.5 GHz-ish carrier gives a peak Doppler near 444 Hz against 15 kHz
# subcarriers, i.e. about two Doppler bins on a 64-slot axis.
MAX_DOPPLER_HZ = 444.4
SUBCARRIER_SPACING_HZ = 15000.0

_SYSTEM_KEYS = ("delay_bins", "doppler_bins", "tx_antennas", "rx_antennas", "qam_order")
_CHANNEL_KEYS = (
    "paths",
    "nakagami_m",
    "l_max",
    "k_max",
    "fractional_doppler",
    "omega_policy",
    "omega_decay",
)
_TRAINING_SIM_KEYS = ("snr_train_db", "frames")
_TRAINING_PROTO_KEYS = (
    "lr0",
    "max_epochs",
    "batch_size",
    "stop_patience",
    "lr_patience",
    "lr_factor",
    "beta1",
    "beta2",
    "eps",
    "folds",
)
_EVAL_KEYS = ("snr_test_db", "target_symbols")
_SECTIONS = ("system", "channel", "training", "eval")


@dataclass
class ExperimentConfig:
    """Fully resolved configuration: link simulation + training protocol."""

    sim: SimConfig
    train: TrainConfig

    @property
    def seed(self) -> int:
        return self.sim.master_seed

    def to_dict(self) -> dict:
        d = self.sim.to_dict()
        proto = self.train.to_dict()
        proto.pop("seed", None)
        d["training"].update(proto)
        return d


def _check_keys(section: str, data: dict, allowed) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(unknown)}")


def _auto_k_max(n_bins: int) -> int:
    return int(round(n_bins * MAX_DOPPLER_HZ / SUBCARRIER_SPACING_HZ))


def parse_config(text: str, env=None) -> ExperimentConfig:
    """Parse a YAML config document into resolved sim + training objects."""
    env = os.environ if env is None else env
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    _check_keys("top level", raw, _SECTIONS + ("seed",))

    def section(name, allowed):
        data = raw.get(name) or {}
        _check_keys(name, data, allowed)
        return dict(data)

    system = section("system", _SYSTEM_KEYS)
    channel = section("channel", _CHANNEL_KEYS)
    training = section("training", _TRAINING_SIM_KEYS + _TRAINING_PROTO_KEYS)
    eval_sec = section("eval", _EVAL_KEYS)

    sim_kwargs = {}
    if "delay_bins" in system:
        sim_kwargs["m_bins"] = int(system["delay_bins"])
    if "doppler_bins" in system:
        sim_kwargs["n_bins"] = int(system["doppler_bins"])
    if "tx_antennas" in system:
        sim_kwargs["nt"] = int(system["tx_antennas"])
    if "rx_antennas" in system:
        sim_kwargs["nr"] = int(system["rx_antennas"])
    if "qam_order" in system:
        sim_kwargs["q"] = int(system["qam_order"])

    prof_kwargs = {}
    if "paths" in channel:
        prof_kwargs["paths"] = int(channel["paths"])
    if "nakagami_m" in channel:
        prof_kwargs["m"] = float(channel["nakagami_m"])
    if "l_max" in channel:
        prof_kwargs["l_max"] = int(channel["l_max"])
    if "k_max" in channel:
        k = channel["k_max"]
        if k == "auto":
            n_bins = sim_kwargs.get("n_bins", SimConfig.n_bins)
            prof_kwargs["k_max"] = _auto_k_max(n_bins)
        else:
            prof_kwargs["k_max"] = int(k)
    if "fractional_doppler" in channel:
        v = channel["fractional_doppler"]
        if not isinstance(v, bool):
            raise ConfigError(f"fractional_doppler must be true/false, got {v!r}")
        prof_kwargs["fractional_doppler"] = v
    if "omega_policy" in channel:
        prof_kwargs["omega_policy"] = str(channel["omega_policy"])
    if "omega_decay" in channel:
        prof_kwargs["omega_decay"] = float(channel["omega_decay"])
    sim_kwargs["profile"] = ChannelProfile(**prof_kwargs)

    if "snr_train_db" in training:
        sim_kwargs["snr_train_db"] = float(training["snr_train_db"])
    if "frames" in training:
        sim_kwargs["train_frames"] = int(training["frames"])
    if "snr_test_db" in eval_sec:
        pts = eval_sec["snr_test_db"]
        if not isinstance(pts, (list, tuple)) or not pts:
            raise ConfigError("snr_test_db must be a non-empty list")
        sim_kwargs["snr_test_db"] = tuple(float(s) for s in pts)
    if "target_symbols" in eval_sec:
        sim_kwargs["target_symbols"] = int(eval_sec["target_symbols"])

    seed = raw.get("seed", SimConfig.master_seed)
    if SEED_ENV_VAR in env:
        try:
            seed = int(env[SEED_ENV_VAR])
        except ValueError:
            raise ConfigError(
                f"{SEED_ENV_VAR} must be an integer, got {env[SEED_ENV_VAR]!r}"
            ) from None
    sim_kwargs["master_seed"] = int(seed)

    proto_kwargs = {k: training[k] for k in _TRAINING_PROTO_KEYS if k in training}
    for k in ("lr0", "lr_factor", "beta1", "beta2", "eps"):
        if k in proto_kwargs:
            proto_kwargs[k] = float(proto_kwargs[k])
    for k in ("max_epochs", "batch_size", "stop_patience", "lr_patience", "folds"):
        if k in proto_kwargs:
            proto_kwargs[k] = int(proto_kwargs[k])
    try:
        sim = SimConfig(**sim_kwargs)
        train = TrainConfig(seed=sim.master_seed, **proto_kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(sim=sim, train=train)


def load_config(path, env=None) -> ExperimentConfig:
    """Read and parse a YAML config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, env=env)


def config_snapshot(cfg: ExperimentConfig) -> dict:
    """Resolved config as a plain dict, suitable for manifests."""
    return cfg.to_dict()


def default_config_yaml(cfg: ExperimentConfig = None) -> str:
    """Render a config (default if none given) back to YAML text."""
    if cfg is None:
        cfg = ExperimentConfig(sim=SimConfig(), train=TrainConfig())
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
