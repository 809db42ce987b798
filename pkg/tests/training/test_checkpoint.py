import numpy as np
import pytest
from numpy.testing import assert_array_equal

from rabit.errors import CheckpointError
from rabit.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint, state_to_checkpoint


def make_checkpoint() -> Checkpoint:
    return state_to_checkpoint(
        epoch=2,
        step=17,
        config_hash="f00d",
        model_config={"decoder": {"channels": 8, "repeats": (1,)}},
        model_state={"conv.weight": np.arange(6, dtype=np.float32).reshape(1, 2, 3), "scalar": np.array(1.5)},
        optimizer_state={"optim.m.conv.weight": np.zeros((1, 2, 3), dtype=np.float32)},
        extra={"seed": 3},
    )


def test_checkpoint_round_trip(tmp_path):
    path = save_checkpoint(tmp_path / "model.ckpt", make_checkpoint())

    restored = load_checkpoint(path)

    assert (restored.epoch, restored.step, restored.config_hash) == (2, 17, "f00d")
    assert restored.model_config == {"decoder": {"channels": 8, "repeats": [1]}}
    assert restored.extra == {"seed": 3}
    assert list(restored.tensors) == ["conv.weight", "scalar", "optim.m.conv.weight"]
    assert restored.tensors["conv.weight"].dtype == np.float32
    assert restored.tensors["scalar"].shape == ()
    assert_array_equal(restored.tensors["conv.weight"], np.arange(6).reshape(1, 2, 3))


def test_model_and_optimizer_entries_are_separated():
    checkpoint = make_checkpoint()

    assert list(checkpoint.model_state()) == ["conv.weight", "scalar"]
    assert list(checkpoint.optimizer_state()) == ["optim.m.conv.weight"]


def test_no_temporary_file_is_left_behind(tmp_path):
    save_checkpoint(tmp_path / "model.ckpt", make_checkpoint())

    assert [path.name for path in tmp_path.iterdir()] == ["model.ckpt"]


def test_truncated_file(tmp_path):
    path = save_checkpoint(tmp_path / "model.ckpt", make_checkpoint())
    path.write_bytes(path.read_bytes()[:-5])

    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_foreign_file(tmp_path):
    path = tmp_path / "notes.ckpt"
    path.write_bytes(b"just some text, not a checkpoint")

    with pytest.raises(CheckpointError, match="not a rabit checkpoint"):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_integer_tensors_are_refused(tmp_path):
    checkpoint = Checkpoint(epoch=0, step=0, config_hash="", model_config={}, tensors={"count": np.arange(3)})

    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "model.ckpt", checkpoint)
