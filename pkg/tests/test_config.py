"""Flat config format: parsing, overrides, round trips, hashing."""

import pytest

from dcrsr.config import (
    ExperimentConfig,
    apply_overrides,
    apply_setting,
    config_hash,
    dump_config,
    load_config,
    parse_config_text,
    vam_defaults,
)
from dcrsr.exceptions import ConfigError


def test_defaults_carry_reference_settings():
    cfg = ExperimentConfig()
    assert cfg.train.lr_g == 3e-4
    assert cfg.train.total_iters == 800_000
    assert cfg.train.hr_patch_schedule == ((0, 128), (400_000, 160))
    vam = vam_defaults()
    assert vam.train.lr_g == 1e-3
    assert vam.train.lr_d == 1e-4
    assert vam.train.decay_ratio == 0.5
    assert vam.train.decay_every == 5_000
    assert vam.train.total_iters == 80_000
    assert vam.train.hr_patch_schedule == ((0, 160), (40_000, 128))


def test_dump_parse_round_trip():
    cfg = ExperimentConfig()
    cfg.model.n_c = 12
    cfg.train.hr_patch_schedule = ((0, 32), (10, 64))
    cfg.model.inter_block_shortcut = None
    cfg.loss.w_gan = 0.25
    text = dump_config(cfg)
    back = parse_config_text(text)
    assert dump_config(back) == text
    assert back.model.inter_block_shortcut is None
    assert back.train.hr_patch_schedule == ((0, 32), (10, 64))


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("train.nonsense = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text("planet.mass = 5\n")
    cfg = ExperimentConfig()
    with pytest.raises(ConfigError):
        apply_setting(cfg, "total_iters", "5")  # missing section


def test_malformed_line_reports_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config_text("model.n_c = 4\nthis line is junk\n")
    assert err.value.line == 2
    with pytest.raises(ConfigError) as err:
        parse_config_text("\n\nmodel.n_c = not_an_int\n")
    assert err.value.line == 3


def test_comments_and_blank_lines_ignored():
    cfg = parse_config_text("# comment\n\nmodel.n_c = 7\n")
    assert cfg.model.n_c == 7


def test_typed_coercion():
    cfg = parse_config_text(
        "data.augment = false\n"
        "train.lr_g = 1e-3\n"
        "train.hr_patch_schedule = 0:16,50:32\n"
        "model.inter_block_shortcut = none\n"
    )
    assert cfg.data.augment is False
    assert cfg.train.lr_g == 1e-3
    assert cfg.train.hr_patch_schedule == ((0, 16), (50, 32))
    assert cfg.model.inter_block_shortcut is None


def test_overrides_apply_after_file():
    cfg = parse_config_text("train.total_iters = 100\n")
    apply_overrides(cfg, ["train.total_iters=10", "model.n_g=2"])
    assert cfg.train.total_iters == 10
    assert cfg.model.n_g == 2
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["no_equals_sign"])


def test_train_config_validation():
    cfg = ExperimentConfig()
    cfg.train.phase = "XXX"
    with pytest.raises(ConfigError):
        cfg.train.validate()
    cfg = ExperimentConfig()
    cfg.train.hr_patch_schedule = ((5, 32),)
    with pytest.raises(ConfigError):
        cfg.train.validate()
    cfg = ExperimentConfig()
    cfg.train.lr_g = 0.0
    with pytest.raises(ConfigError):
        cfg.train.validate()


def test_config_hash_tracks_content():
    a = ExperimentConfig()
    b = ExperimentConfig()
    assert config_hash(a) == config_hash(b)
    b.train.seed = 1
    assert config_hash(a) != config_hash(b)
    assert 0 <= config_hash(a) < 2**64


def test_load_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("model.n_c = 4\ntrain.batch_size = 2\n")
    cfg = load_config(p)
    assert cfg.model.n_c == 4
    assert cfg.train.batch_size == 2


def test_shipped_configs_parse():
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    sam = load_config(root / "sam.cfg")
    assert sam.train.phase == "SAM"
    assert sam.train.lr_g == 3e-4
    assert sam.train.total_iters == 800_000
    vam = load_config(root / "vam.cfg", base=vam_defaults())
    assert vam.train.phase == "VAM"
    assert vam.train.lr_g == 1e-3
    assert vam.train.lr_d == 1e-4
    assert vam.train.total_iters == 80_000
