import numpy as np
import pytest
from numpy.testing import assert_allclose

from rabit.engine.tensor import Tensor
from rabit.errors import ConfigError
from rabit.models.rabifpn import bottleneck_conv, plain_conv
from rabit.nn import LayerFactory, Linear, conv_parameter_count


@pytest.fixture(scope="module")
def wide_factory() -> LayerFactory:
    return LayerFactory(rng=np.random.default_rng(0))


def test_bottleneck_conv_parameters_at_224(wide_factory):
    block = bottleneck_conv(224, 224, wide_factory)

    # 1x1 224->112, 3x3 112->112, 1x1 112->224
    assert conv_parameter_count(block) == 25_200 + 113_008 + 25_312 == 163_520


def test_plain_conv_parameters_at_224(wide_factory):
    assert conv_parameter_count(plain_conv(224, 224, wide_factory)) == 451_808


def test_bottleneck_keeps_spatial_size(factory64, rng):
    block = bottleneck_conv(6, 4, factory64)

    out = block(Tensor(rng.standard_normal((2, 6, 5, 7))))

    assert out.shape == (2, 4, 5, 7)


def test_bottleneck_needs_even_width(factory64):
    with pytest.raises(ConfigError):
        bottleneck_conv(4, 5, factory64)


def test_conv_bn_relu_output_is_non_negative(factory64, rng):
    block = factory64.conv_bn(3, 4, 3, padding=1)

    out = block(Tensor(rng.standard_normal((2, 3, 4, 4))))

    assert (out.data >= 0).all()


def test_batch_norm_uses_running_moments_in_eval(factory64, rng):
    norm = factory64.bn(2)
    norm.buffer("running_mean")[...] = [1.0, -1.0]
    norm.buffer("running_var")[...] = [4.0, 1.0]
    norm.eval()
    x = rng.standard_normal((1, 2, 3, 3))

    out = norm(Tensor(x))

    assert_allclose(out.data[0, 0], (x[0, 0] - 1.0) / np.sqrt(4.0 + norm.eps))
    assert_allclose(out.data[0, 1], (x[0, 1] + 1.0) / np.sqrt(1.0 + norm.eps))


def test_same_seed_gives_same_initialisation():
    first = LayerFactory(rng=np.random.default_rng(3)).conv(2, 3, 3)
    second = LayerFactory(rng=np.random.default_rng(3)).conv(2, 3, 3)

    assert_allclose(first.weight.data, second.weight.data)


def test_linear_applies_to_the_last_axis(rng):
    layer = Linear(4, 3, rng=rng, dtype=np.float64)
    x = rng.standard_normal((2, 5, 4))

    out = layer(Tensor(x))

    assert_allclose(out.data, x @ layer.weight.data.T + layer.bias.data)
