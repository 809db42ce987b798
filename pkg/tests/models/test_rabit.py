import numpy as np
from numpy.testing import assert_array_equal

from rabit import RaBiT
from rabit.engine.tensor import Tensor, no_grad


def test_forward_shapes(micro_config, rng):
    model = RaBiT(micro_config)
    model.eval()

    with no_grad():
        outputs = model(Tensor(rng.standard_normal((2, 3, 64, 64)).astype(np.float32)))

    assert outputs.final_logits.shape == (2, 1, 64, 64)
    assert outputs.final_logits.dtype == np.float32
    assert len(outputs.supervision_logits) == 5


def test_multiclass_model_predicts_one_map_per_class(micro_config):
    config = micro_config.with_decoder(n_classes=3, ra_variant="softmax")
    model = RaBiT(config)
    model.eval()

    with no_grad():
        outputs = model(Tensor(np.zeros((1, 3, 64, 64), dtype=np.float32)))

    assert outputs.final_logits.shape == (1, 3, 64, 64)
    assert not config.binary


def test_same_seed_same_weights(micro_config):
    first, second = RaBiT(micro_config, seed=5).state_dict(), RaBiT(micro_config, seed=5).state_dict()

    assert list(first) == list(second)
    for name in first:
        assert_array_equal(first[name], second[name])


def test_different_seeds_differ(micro_config):
    first, second = RaBiT(micro_config, seed=1).state_dict(), RaBiT(micro_config, seed=2).state_dict()

    assert not np.array_equal(first["encoder.stages.0.embed.proj.weight"], second["encoder.stages.0.embed.proj.weight"])


def test_float64_models_stay_in_float64(micro_config):
    model = RaBiT(micro_config.copy(update={"dtype": "float64"}))
    model.eval()

    with no_grad():
        outputs = model(Tensor(np.zeros((1, 3, 64, 64))))

    assert model.dtype == np.float64
    assert outputs.final_logits.dtype == np.float64
    assert all(param.dtype == np.float64 for param in model.parameters())
