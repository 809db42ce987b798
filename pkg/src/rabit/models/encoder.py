from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from rabit.config import EncoderConfig
from rabit.engine import ops
from rabit.engine.tensor import Tensor
from rabit.errors import ShapeError
from rabit.nn import LayerFactory, Module, ModuleList

LEVELS = (3, 4, 5, 6, 7)
STRIDE_ALIGNMENT = 32


@dataclass
class PyramidFeatures:
    """Decoder input: level i -> tensor at stride 2**i, all levels with the same channel count."""

    levels: Dict[int, Tensor]

    def __getitem__(self, level: int) -> Tensor:
        try:
            return self.levels[level]
        except KeyError:
            msg = "Pyramid level %d is missing (have %s)."
            raise ShapeError(msg % (level, sorted(self.levels))) from None

    def spatial(self, level: int) -> Tuple[int, int]:
        tensor = self[level]
        return tensor.shape[2], tensor.shape[3]

    @property
    def channels(self) -> int:
        return self[LEVELS[0]].shape[1]

    def shapes(self) -> Dict[int, Tuple[int, ...]]:
        return {level: self.levels[level].shape for level in sorted(self.levels)}


def to_tokens(x: Tensor) -> Tensor:
    n, c, h, w = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 3, 1)), (n, h * w, c))


def to_spatial(tokens: Tensor, h: int, w: int) -> Tensor:
    n, _, c = tokens.shape
    return ops.transpose(ops.reshape(tokens, (n, h, w, c)), (0, 3, 1, 2))


class PatchEmbed(Module):
    """Overlapped stride-2 embedding: 3x3 conv (pad 1) followed by batch norm."""

    def __init__(self, in_dim: int, out_dim: int, factory: LayerFactory) -> None:
        super().__init__()
        self.proj = factory.conv(in_dim, out_dim, 3, stride=2, padding=1)
        self.norm = factory.bn(out_dim)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[2] < 2 or x.shape[3] < 2:
            msg = "Patch embedding needs H, W >= 2, got %s."
            raise ShapeError(msg % (x.shape[2:],))
        return self.norm(self.proj(x))


class ConvBlock(Module):
    def __init__(self, dim: int, factory: LayerFactory) -> None:
        super().__init__()
        self.body = factory.conv_bn(dim, dim, 3, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return self.body(x)


class EfficientSelfAttention(Module):
    """
    Multi-head attention where keys and values come from a spatially reduced copy of the input.

    Queries use all H*W tokens; keys/values are taken after a sr x sr strided conv.
    The block is pre-norm with a residual connection, input and output are N x C x H x W.
    """

    def __init__(self, dim: int, heads: int, sr_ratio: int, factory: LayerFactory) -> None:
        super().__init__()
        if dim % heads:
            msg = "Attention dim %d is not divisible by %d heads."
            raise ShapeError(msg % (dim, heads))

        self.dim = dim
        self.heads = heads
        self.sr_ratio = sr_ratio
        self.head_dim = dim // heads

        self.norm = factory.layer_norm(dim)
        self.query = factory.linear(dim, dim)
        self.key = factory.linear(dim, dim)
        self.value = factory.linear(dim, dim)
        self.proj = factory.linear(dim, dim)
        if sr_ratio > 1:
            self.reduce = factory.conv(dim, dim, sr_ratio, stride=sr_ratio)
            self.reduce_norm = factory.layer_norm(dim)

        self.last_attention: Optional[np.ndarray] = None

    def _split_heads(self, tokens: Tensor) -> Tensor:
        n, length, _ = tokens.shape
        return ops.transpose(ops.reshape(tokens, (n, length, self.heads, self.head_dim)), (0, 2, 1, 3))

    def forward(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        if c != self.dim:
            msg = "Attention expects %d channels, got %d."
            raise ShapeError(msg % (self.dim, c))
        if h % self.sr_ratio or w % self.sr_ratio:
            msg = "Spatial size %dx%d is not divisible by sr ratio %d."
            raise ShapeError(msg % (h, w, self.sr_ratio))

        tokens = to_tokens(x)
        normed = self.norm(tokens)

        context = normed
        if self.sr_ratio > 1:
            reduced = self.reduce(to_spatial(normed, h, w))
            context = self.reduce_norm(to_tokens(reduced))

        q = self._split_heads(self.query(normed))
        k = self._split_heads(self.key(context))
        v = self._split_heads(self.value(context))

        scores = ops.scalar_mul(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(self.head_dim))
        attention = ops.softmax(scores, axis=-1)
        self.last_attention = attention.data

        mixed = ops.reshape(ops.transpose(ops.matmul(attention, v), (0, 2, 1, 3)), (n, h * w, c))
        return to_spatial(ops.add(tokens, self.proj(mixed)), h, w)


class FeedForward(Module):
    def __init__(self, dim: int, ratio: int, factory: LayerFactory) -> None:
        super().__init__()
        self.norm = factory.layer_norm(dim)
        self.fc1 = factory.linear(dim, dim * ratio)
        self.fc2 = factory.linear(dim * ratio, dim)

    def forward(self, x: Tensor) -> Tensor:
        _, _, h, w = x.shape
        tokens = to_tokens(x)
        hidden = ops.gelu(self.fc1(self.norm(tokens)))
        return to_spatial(ops.add(tokens, self.fc2(hidden)), h, w)


class AttentionBlock(Module):
    def __init__(self, dim: int, heads: int, sr_ratio: int, mlp_ratio: int, factory: LayerFactory) -> None:
        super().__init__()
        self.attention = EfficientSelfAttention(dim, heads, sr_ratio, factory)
        self.ffn = FeedForward(dim, mlp_ratio, factory)

    def forward(self, x: Tensor) -> Tensor:
        return self.ffn(self.attention(x))


class Stage(Module):
    def __init__(self, embed: PatchEmbed, block: Module) -> None:
        super().__init__()
        self.embed = embed
        self.block = block

    def forward(self, x: Tensor) -> Tensor:
        return self.block(self.embed(x))


class Encoder(Module):
    """
    Five stride-2 stages (P1..P5), the two derived levels P6/P7 and the
    3x3 compression of P3..P5 to the decoder width.
    """

    def __init__(self, config: EncoderConfig, factory: LayerFactory, in_channels: int = 3) -> None:
        super().__init__()
        self.config = config
        self.in_channels = in_channels
        width = config.decoder_width
        dims = config.stage_dims

        stages = []
        for stage, dim in enumerate(dims, start=1):
            embed = PatchEmbed(in_channels if stage == 1 else dims[stage - 2], dim, factory)
            attention = config.attention(stage)
            if attention is None:
                block: Module = ConvBlock(dim, factory)
            else:
                heads, sr_ratio = attention
                block = AttentionBlock(dim, heads, sr_ratio, config.mlp_ratio, factory)
            stages.append(Stage(embed, block))
        self.stages = ModuleList(stages)

        self.p6_conv = factory.conv(dims[4], width, 1)
        self.p6_norm = factory.bn(width)
        self.compress = ModuleList([factory.conv(dim, width, 3, padding=1) for dim in dims[2:]])

    def forward_stages(self, image: Tensor) -> List[Tensor]:
        if image.ndim != 4 or image.shape[1] != self.in_channels:
            msg = "Encoder expects N x %d x H x W images, got %s."
            raise ShapeError(msg % (self.in_channels, image.shape))
        if image.shape[2] % STRIDE_ALIGNMENT or image.shape[3] % STRIDE_ALIGNMENT:
            msg = "Input size %dx%d is not divisible by %d."
            raise ShapeError(msg % (image.shape[2], image.shape[3], STRIDE_ALIGNMENT))

        features = []
        x = image
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features

    def derive_p6_p7(self, p5: Tensor) -> Tuple[Tensor, Tensor]:
        p6 = ops.max_pool2d(self.p6_norm(self.p6_conv(p5)), 3, 2, 1)
        p7 = ops.max_pool2d(p6, 3, 2, 1)
        return p6, p7

    def compress_levels(self, p3: Tensor, p4: Tensor, p5: Tensor) -> List[Tensor]:
        return [conv(level) for conv, level in zip(self.compress, (p3, p4, p5))]

    def forward(self, image: Tensor) -> PyramidFeatures:
        _, _, p3, p4, p5 = self.forward_stages(image)
        p6, p7 = self.derive_p6_p7(p5)
        l3, l4, l5 = self.compress_levels(p3, p4, p5)
        return PyramidFeatures({3: l3, 4: l4, 5: l5, 6: p6, 7: p7})
