from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from rabit.engine import ops
from rabit.engine.tensor import Tensor
from rabit.nn.module import Module, Parameter, Sequential


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        rng: Optional[np.random.Generator] = None,
        dtype: Any = np.float32,
    ) -> None:
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size

        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding

        self.weight = Parameter(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), (out_channels, in_channels, kernel_size, kernel_size)),
            dtype=dtype,
        )
        bound = 1.0 / np.sqrt(fan_in)
        self.bias = Parameter(rng.uniform(-bound, bound, out_channels), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm2d(Module):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5, dtype: Any = np.float32) -> None:
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(channels), dtype=dtype)
        self.beta = Parameter(np.zeros(channels), dtype=dtype)
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm2d(
            x,
            self.gamma,
            self.beta,
            self.buffer("running_mean"),
            self.buffer("running_var"),
            training=self.training,
            momentum=self.momentum,
            eps=self.eps,
        )


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: Optional[np.random.Generator] = None,
        dtype: Any = np.float32,
    ) -> None:
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-bound, bound, (out_features, in_features)), dtype=dtype)
        self.bias = Parameter(np.zeros(out_features), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5, dtype: Any = np.float32) -> None:
        super().__init__()
        self.eps = eps
        self.gamma = Parameter(np.ones(dim), dtype=dtype)
        self.beta = Parameter(np.zeros(dim), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, eps=self.eps)


class ReLU(Module):
    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(x)


@dataclass
class LayerFactory:
    """Builds layers that share one seeded generator, dtype and batch-norm constants."""

    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    dtype: Any = np.float32
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def conv(self, in_channels: int, out_channels: int, kernel_size: int, stride: int = 1, padding: int = 0) -> Conv2d:
        return Conv2d(in_channels, out_channels, kernel_size, stride, padding, rng=self.rng, dtype=self.dtype)

    def bn(self, channels: int) -> BatchNorm2d:
        return BatchNorm2d(channels, momentum=self.bn_momentum, eps=self.bn_eps, dtype=self.dtype)

    def linear(self, in_features: int, out_features: int) -> Linear:
        return Linear(in_features, out_features, rng=self.rng, dtype=self.dtype)

    def layer_norm(self, dim: int) -> LayerNorm:
        return LayerNorm(dim, dtype=self.dtype)

    def conv_bn(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        relu: bool = True,
    ) -> Sequential:
        layers = [self.conv(in_channels, out_channels, kernel_size, stride, padding), self.bn(out_channels)]
        if relu:
            layers.append(ReLU())
        return Sequential(layers)


def conv_parameter_count(module: Module) -> int:
    """Weights and biases of every Conv2d below `module`, batch-norm excluded."""
    return int(
        sum(m.weight.size + m.bias.size for m in module.modules() if isinstance(m, Conv2d))
    )
