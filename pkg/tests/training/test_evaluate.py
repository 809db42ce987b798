import numpy as np
import pytest

from rabit.config import DataConfig, ModelConfig, SyntheticSpec, TrainConfig, config_hash
from rabit.data import SyntheticDataset, training_dataset
from rabit.errors import CheckpointError, CheckpointMismatchError, ConfigError
from rabit.metrics import GENERIC
from rabit.training import evaluate, load_model, predict, train
from rabit.training.checkpoint import load_checkpoint, save_checkpoint


@pytest.fixture
def binary_checkpoint(micro_train_config, tmp_path):
    config = micro_train_config.copy(update={"epochs": 1})
    return train(config, training_dataset(config.data), tmp_path / "binary")


@pytest.fixture
def multiclass_config(micro_train_config) -> TrainConfig:
    model = micro_train_config.model.with_decoder(n_classes=3, ra_variant="softmax")
    spec = SyntheticSpec(size=32, n_blobs=(2, 3), blob_class_probs=(0.5, 0.5))
    data = micro_train_config.data.copy(update={"synthetic": spec})
    return micro_train_config.copy(update={"model": model, "data": data, "epochs": 1})


def test_binary_report(binary_checkpoint, micro_train_config):
    dataset = SyntheticDataset(SyntheticSpec(size=32), range(4))

    report = evaluate(binary_checkpoint, dataset)

    assert report.mode == "binary"
    assert report.dataset == "synthetic-0"
    assert report.config_hash == config_hash(micro_train_config.model)
    assert [row.image_id for row in report.per_image] == ["00000", "00001", "00002", "00003"]
    assert all(row.class_name is None for row in report.per_image)
    assert 0.0 <= report.mean_dice <= 1.0
    assert report.per_class == {}
    assert report.complexity.input_size == 32
    assert report.complexity.params > 0


def test_evaluation_can_resize_inputs(binary_checkpoint):
    report = evaluate(binary_checkpoint, SyntheticDataset(SyntheticSpec(size=32), [0]), input_size=64)

    assert report.complexity.input_size == 64
    assert len(report.per_image) == 1


def test_expected_hash_is_enforced(binary_checkpoint):
    with pytest.raises(CheckpointMismatchError) as excinfo:
        load_model(binary_checkpoint, expected_hash="0" * 64)

    assert excinfo.value.expected == "0" * 64


def test_tampered_header_is_rejected(binary_checkpoint, tmp_path):
    checkpoint = load_checkpoint(binary_checkpoint)
    checkpoint.model_config["decoder"]["fusion_eps"] = 0.5
    save_checkpoint(tmp_path / "tampered.ckpt", checkpoint)

    with pytest.raises(CheckpointError):
        load_model(tmp_path / "tampered.ckpt")


def test_loaded_model_matches_the_checkpoint(binary_checkpoint):
    model, checkpoint = load_model(binary_checkpoint)

    assert not model.training
    state = model.state_dict()
    for name, value in checkpoint.model_state().items():
        np.testing.assert_array_equal(state[name], value)


def test_empty_dataset_is_rejected(binary_checkpoint):
    with pytest.raises(ConfigError, match="no samples"):
        evaluate(binary_checkpoint, SyntheticDataset(SyntheticSpec(size=32), []))


def test_rerun_writes_identical_report_bytes(binary_checkpoint, tmp_path):
    dataset = SyntheticDataset(SyntheticSpec(size=32), range(3))

    evaluate(binary_checkpoint, dataset).write_json(tmp_path / "first.json")
    evaluate(binary_checkpoint, dataset).write_json(tmp_path / "second.json")

    assert (tmp_path / "first.json").read_bytes() == (tmp_path / "second.json").read_bytes()


def test_checkpoint_normalization_is_the_default(binary_checkpoint, micro_train_config):
    dataset = SyntheticDataset(SyntheticSpec(size=32), range(2))
    data = micro_train_config.data

    implicit = evaluate(binary_checkpoint, dataset)
    explicit = evaluate(binary_checkpoint, dataset, mean=data.mean, std=data.std)

    assert implicit.per_image == explicit.per_image
    assert load_checkpoint(binary_checkpoint).extra["std"] == list(data.std)


def test_predict_returns_probabilities_for_binary_models(binary_checkpoint):
    model, _ = load_model(binary_checkpoint)

    probabilities = predict(model, np.zeros((2, 3, 32, 32), dtype=np.float32))

    assert probabilities.shape == (2, 32, 32)
    assert ((probabilities >= 0) & (probabilities <= 1)).all()


def test_multiclass_report(multiclass_config, tmp_path):
    checkpoint = train(multiclass_config, training_dataset(multiclass_config.data), tmp_path)
    dataset = SyntheticDataset(multiclass_config.data.synthetic, range(3))

    report = evaluate(checkpoint, dataset)
    model, _ = load_model(checkpoint)
    labels = predict(model, np.zeros((1, 3, 32, 32), dtype=np.float32))

    assert report.mode == "multiclass"
    assert len(report.per_image) == 3 * 3
    assert [row.class_name for row in report.per_image[:3]] == ["neoplastic", "non_neoplastic", GENERIC]
    assert set(report.per_class) == {"neoplastic", "non_neoplastic", GENERIC}
    assert report.mean_dice == pytest.approx(np.mean([row.dice for row in report.scored_rows()]))
    assert labels.shape == (1, 32, 32)
    assert set(np.unique(labels)) <= {0, 1, 2}


def overfit_config(model: ModelConfig, spec: SyntheticSpec) -> TrainConfig:
    return TrainConfig(
        model=model,
        data=DataConfig(synthetic=spec, num_samples=8, holdout=1.0, augmentation=None),
        lr=3e-3,
        scales=(96,),
        batch_size=4,
        epochs=150,
        prefetch=0,
    )


@pytest.mark.slow
def test_tiny_binary_model_overfits_eight_phantoms(tmp_path):
    config = overfit_config(ModelConfig.preset("tiny"), SyntheticSpec(size=96))
    dataset = training_dataset(config.data)

    report = evaluate(train(config, dataset, tmp_path), dataset)

    assert report.mean_dice >= 0.95


@pytest.mark.slow
def test_tiny_multiclass_model_overfits_eight_phantoms(tmp_path):
    model = ModelConfig.preset("tiny", n_classes=3, ra_variant="softmax")
    config = overfit_config(model, SyntheticSpec(size=96, blob_class_probs=(0.5, 0.5)))
    dataset = training_dataset(config.data)

    report = evaluate(train(config, dataset, tmp_path), dataset)

    assert report.mean_dice >= 0.95
