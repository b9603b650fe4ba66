"""YAML config parsing: defaults, strictness, env seed override."""

import pytest

from otfsdet.config import (
    SEED_ENV_VAR,
    default_config_yaml,
    load_config,
    parse_config,
)
from otfsdet.errors import ConfigError

FULL = """
system:
  delay_bins: 16
  doppler_bins: 8
  tx_antennas: 2
  rx_antennas: 2
  qam_order: 16
channel:
  paths: 3
  nakagami_m: 2.0
  l_max: 5
  k_max: 1
  fractional_doppler: true
  omega_policy: uniform
training:
  snr_train_db: 10
  frames: 4
  lr0: 0.002
  folds: 3
eval:
  snr_test_db: [0, 8, 16]
  target_symbols: 5000
seed: 99
"""


def test_full_document(tmp_path):
    cfg = parse_config(FULL, env={})
    assert (cfg.sim.m_bins, cfg.sim.n_bins) == (16, 8)
    assert (cfg.sim.nt, cfg.sim.nr, cfg.sim.q) == (2, 2, 16)
    p = cfg.sim.profile
    assert (p.paths, p.m, p.l_max, p.k_max) == (3, 2.0, 5, 1)
    assert p.fractional_doppler and p.omega_policy == "uniform"
    assert cfg.sim.snr_train_db == 10.0 and cfg.sim.train_frames == 4
    assert cfg.sim.snr_test_db == (0.0, 8.0, 16.0)
    assert cfg.sim.target_symbols == 5000
    assert cfg.seed == 99 and cfg.train.seed == 99
    assert cfg.train.lr0 == 0.002 and cfg.train.folds == 3
    assert cfg.train.batch_size == 4096  # untouched default


def test_empty_document_gives_defaults():
    cfg = parse_config("", env={})
    assert (cfg.sim.m_bins, cfg.sim.n_bins, cfg.sim.q) == (64, 64, 4)
    assert cfg.sim.profile.paths == 9
    assert cfg.sim.profile.omega_policy == "exponential"
    assert cfg.seed == 1234
    assert cfg.train.lr0 == 1e-3


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("system:\n  delay_bin: 8\n", env={})
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("systum:\n  delay_bins: 8\n", env={})
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("training:\n  learning_rate: 0.1\n", env={})


def test_malformed_documents():
    with pytest.raises(ConfigError):
        parse_config("- a\n- b\n", env={})
    with pytest.raises(ConfigError):
        parse_config("system: [1, 2]\n", env={})
    with pytest.raises(ConfigError):
        parse_config("channel: {fractional_doppler: maybe}\n", env={})
    with pytest.raises(ConfigError):
        parse_config("eval: {snr_test_db: []}\n", env={})
    with pytest.raises(ConfigError):
        parse_config(":\n  ::bad", env={})


def test_invalid_values_surface_as_config_errors():
    with pytest.raises(ConfigError):
        parse_config("system:\n  qam_order: 5\n", env={})
    with pytest.raises(ConfigError):
        parse_config("channel:\n  paths: 0\n", env={})
    with pytest.raises(ConfigError):
        parse_config("training:\n  folds: 0\n", env={})


def test_k_max_auto_scales_with_doppler_axis():
    cfg = parse_config("channel: {k_max: auto}\n", env={})
    assert cfg.sim.profile.k_max == 2  # 64-slot axis
    cfg = parse_config(
        "system: {doppler_bins: 32, delay_bins: 32}\nchannel: {k_max: auto, paths: 2, l_max: 4}\n",
        env={},
    )
    assert cfg.sim.profile.k_max == 1


def test_env_seed_overrides_file_seed():
    cfg = parse_config("seed: 7\n", env={SEED_ENV_VAR: "42"})
    assert cfg.seed == 42 and cfg.train.seed == 42
    with pytest.raises(ConfigError):
        parse_config("seed: 7\n", env={SEED_ENV_VAR: "not-an-int"})


def test_snapshot_reparses_to_same_config():
    cfg = parse_config(FULL, env={})
    text = default_config_yaml(cfg)
    again = parse_config(text, env={})
    assert again.sim == cfg.sim
    assert again.train == cfg.train


def test_load_config_io(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 5\n")
    assert load_config(path, env={}).seed == 5
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.yaml", env={})
