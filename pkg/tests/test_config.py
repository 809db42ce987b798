import pytest
import yaml

from rabit.config import (
    DecoderConfig,
    EncoderConfig,
    ModelConfig,
    SyntheticSpec,
    TrainConfig,
    config_hash,
    dump_config,
    load_dataset_spec,
    load_train_config,
)
from rabit.errors import ConfigError


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return path


def test_presets():
    tiny, full = ModelConfig.preset("tiny"), ModelConfig.preset("full")

    assert (tiny.decoder.channels, tiny.decoder.repeats) == (32, 2)
    assert (full.decoder.channels, full.decoder.repeats) == (224, 4)
    assert full.encoder.decoder_width == 224
    assert full.encoder.stage_dims == (32, 64, 128, 320, 512)


def test_preset_overrides_keep_widths_consistent():
    config = ModelConfig.preset("tiny", channels=16, n_classes=3, ra_variant="softmax")

    assert config.encoder.decoder_width == 16
    assert config.decoder.n_out == 3
    assert not config.binary


def test_unknown_preset():
    with pytest.raises(ConfigError):
        ModelConfig.preset("huge")


def test_config_hash_tracks_the_model():
    tiny = ModelConfig.preset("tiny")

    assert config_hash(tiny) == config_hash(ModelConfig.preset("tiny"))
    assert config_hash(tiny) != config_hash(tiny.with_decoder(repeats=3))
    assert len(config_hash(tiny)) == 64


def test_with_decoder_updates_the_encoder_width():
    config = ModelConfig.preset("tiny").with_decoder(channels=48)

    assert config.encoder.decoder_width == config.decoder.channels == 48


@pytest.mark.parametrize(
    "build",
    [
        lambda: EncoderConfig(stage_dims=(8, 16, 30, 64, 96), heads=(4, 2, 2)),
        lambda: EncoderConfig(sr_ratios=(3, 2, 1)),
        lambda: EncoderConfig(heads=(1, 2)),
        lambda: EncoderConfig(attn_stages=(3, 3, 4)),
        lambda: DecoderConfig(channels=7),
        lambda: DecoderConfig(repeats=0),
        lambda: ModelConfig(decoder=DecoderConfig(channels=16)),
        lambda: SyntheticSpec(size=48),
        lambda: SyntheticSpec(blob_class_probs=(0.7, 0.7)),
        lambda: TrainConfig(scales=(100,)),
        lambda: TrainConfig(version=2),
    ],
)
def test_invalid_configs_are_rejected(build):
    with pytest.raises(ValueError):
        build()


def test_configs_are_frozen():
    config = DecoderConfig()

    with pytest.raises(TypeError):
        config.channels = 64


def test_unknown_keys_are_rejected(tmp_path):
    path = write_yaml(tmp_path / "train.yaml", {"epochs": 2, "learning_rate": 0.1})

    with pytest.raises(ConfigError):
        load_train_config(path)


def test_train_config_with_preset_name(tmp_path):
    path = write_yaml(tmp_path / "train.yaml", {"version": 1, "model": "tiny", "epochs": 3})

    config = load_train_config(path)

    assert config.model == ModelConfig.preset("tiny")
    assert config.epochs == 3


def test_train_config_with_preset_overrides(tmp_path):
    path = write_yaml(tmp_path / "train.yaml", {"model": {"preset": "tiny", "decoder": {"repeats": 3}}})

    assert load_train_config(path).model.decoder.repeats == 3


def test_preset_keeps_the_other_model_keys(tmp_path):
    document = {"model": {"preset": "tiny", "dtype": "float64", "encoder": {"mlp_ratio": 2}}}
    path = write_yaml(tmp_path / "train.yaml", document)

    model = load_train_config(path).model

    assert model.dtype == "float64"
    assert model.encoder.mlp_ratio == 2
    assert model.encoder.stage_dims == ModelConfig.preset("tiny").encoder.stage_dims


def test_preset_with_an_unknown_model_key_is_rejected(tmp_path):
    path = write_yaml(tmp_path / "train.yaml", {"model": {"preset": "tiny", "width": 3}})

    with pytest.raises(ConfigError, match="width"):
        load_train_config(path)


def test_unsupported_version(tmp_path):
    path = write_yaml(tmp_path / "train.yaml", {"version": 7})

    with pytest.raises(ConfigError, match="version"):
        load_train_config(path)


def test_non_mapping_document(tmp_path):
    path = tmp_path / "train.yaml"
    path.write_text("- just\n- a list\n", encoding="utf-8")

    with pytest.raises(ConfigError):
        load_train_config(path)


def test_dumped_config_loads_back(tmp_path):
    config = TrainConfig(model=ModelConfig.preset("tiny", n_classes=2), epochs=7, scales=(64, 96))

    dump_config(config, tmp_path / "config.yaml")

    assert load_train_config(tmp_path / "config.yaml") == config


def test_dataset_spec_file(tmp_path):
    path = write_yaml(tmp_path / "data.yaml", {"spec": {"size": 64, "seed": 3}, "num_samples": 12, "split": "kfold"})

    document = load_dataset_spec(path)

    assert document.spec.size == 64
    assert document.split == "kfold"
    assert document.folds == 5
