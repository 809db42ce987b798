from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from rabit.config import DecoderConfig
from rabit.engine import ops
from rabit.engine.tensor import Tensor
from rabit.errors import ConfigError, ShapeError
from rabit.models.encoder import PyramidFeatures
from rabit.nn import LayerFactory, Module, ModuleList, Parameter, Sequential

# coarse to fine for the refinement pass, fine to coarse for aggregation
REFINE_LEVELS = (6, 5, 4, 3)
AGGREGATE_LEVELS = (4, 5, 6, 7)


class FastNormalizedFusion(Module):
    """sum_i relu(w_i) / (eps + sum_j relu(w_j)) * x_i with learnable w, initialised to ones."""

    def __init__(self, n_inputs: int, eps: float = 1e-4, dtype=np.float32) -> None:
        super().__init__()
        if n_inputs < 2:
            msg = "Fast normalized fusion needs at least 2 inputs, got %d."
            raise ConfigError(msg % n_inputs)
        self.eps = eps
        self.weight = Parameter(np.ones(n_inputs), dtype=dtype)

    def coefficients(self) -> np.ndarray:
        clamped = np.maximum(self.weight.data.astype(np.float64), 0.0)
        return clamped / (self.eps + clamped.sum())

    def forward(self, inputs: Sequence[Tensor]) -> Tensor:
        if len(inputs) != self.weight.shape[0]:
            msg = "Fusion was built for %d inputs, got %d."
            raise ShapeError(msg % (self.weight.shape[0], len(inputs)))
        if any(x.shape != inputs[0].shape for x in inputs[1:]):
            msg = "Fusion inputs must share one shape, got %s."
            raise ShapeError(msg % [x.shape for x in inputs])

        coefficients = ops.normalized_weights(self.weight, self.eps)
        out = ops.scale(inputs[0], ops.select(coefficients, 0))
        for index, x in enumerate(inputs[1:], start=1):
            out = ops.add(out, ops.scale(x, ops.select(coefficients, index)))
        return out


def bottleneck_conv(in_channels: int, channels: int, factory: LayerFactory) -> Sequential:
    """1x1 in->C/2, 3x3 C/2->C/2, 1x1 C/2->C; batch norm after each, relu on the first two."""
    if channels % 2:
        msg = "Bottleneck width must be even, got %d."
        raise ConfigError(msg % channels)

    half = channels // 2
    return Sequential(
        [
            factory.conv_bn(in_channels, half, 1),
            factory.conv_bn(half, half, 3, padding=1),
            factory.conv_bn(half, channels, 1, relu=False),
        ]
    )


def plain_conv(in_channels: int, channels: int, factory: LayerFactory) -> Sequential:
    return factory.conv_bn(in_channels, channels, 3, padding=1)


def feature_conv(in_channels: int, config: DecoderConfig, factory: LayerFactory) -> Sequential:
    if config.use_bottleneck:
        return bottleneck_conv(in_channels, config.channels, factory)
    return plain_conv(in_channels, config.channels, factory)


class ReverseAttention(Module):
    """
    Gates features with the complement of their own predicted attention.

    A 3x3 conv predicts n_out logit maps. Each map is activated (sigmoid per map, or
    softmax across maps), reversed to 1 - A_k and multiplied with the input.
    The n_out products are concatenated and fused back to C channels.
    """

    def __init__(self, config: DecoderConfig, factory: LayerFactory) -> None:
        super().__init__()
        self.n_out = config.n_out
        self.variant = config.ra_variant
        if self.variant == "softmax" and self.n_out < 2:
            msg = "Softmax reverse attention needs at least 2 classes, got %d."
            raise ConfigError(msg % self.n_out)

        self.attention = factory.conv(config.channels, self.n_out, 3, padding=1)
        self.fuse = feature_conv(self.n_out * config.channels, config, factory)

    def attention_maps(self, logits: Tensor) -> Tensor:
        if self.variant == "softmax":
            return ops.softmax_channels(logits)
        return ops.sigmoid(logits)

    def reverse(self, x: Tensor, logits: Tensor) -> Tensor:
        maps = self.attention_maps(logits)
        if self.n_out == 1:
            return ops.mul(x, ops.sub_from_scalar(1.0, maps))

        gated = [
            ops.mul(x, ops.sub_from_scalar(1.0, ops.take_channels(maps, k, k + 1))) for k in range(self.n_out)
        ]
        return ops.concat_channels(gated)

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        logits = self.attention(x)
        return self.fuse(self.reverse(x, logits)), logits


class RefinementPass(Module):
    """Coarse to fine: U7 = L7, then U_i = RA(fuse(L_i, upsample(U_{i+1}))) for i = 6..3."""

    def __init__(self, config: DecoderConfig, factory: LayerFactory) -> None:
        super().__init__()
        self.use_ra = config.use_ra
        self.fusions = ModuleList(
            [FastNormalizedFusion(2, config.fusion_eps, factory.dtype) for _ in REFINE_LEVELS]
        )
        if config.use_ra:
            self.blocks = ModuleList([ReverseAttention(config, factory) for _ in REFINE_LEVELS])
        else:
            self.blocks = ModuleList([feature_conv(config.channels, config, factory) for _ in REFINE_LEVELS])

    def forward(self, levels: PyramidFeatures) -> Tuple[PyramidFeatures, Dict[int, Tensor]]:
        refined = {7: levels[7]}
        logits: Dict[int, Tensor] = {}
        upper = levels[7]

        for fusion, block, level in zip(self.fusions, self.blocks, REFINE_LEVELS):
            lower = levels[level]
            upsampled = ops.bilinear_resize(upper, lower.shape[2], lower.shape[3])
            fused = fusion([lower, upsampled])
            if self.use_ra:
                upper, logits[level] = block(fused)
            else:
                upper = block(fused)
            refined[level] = upper

        return PyramidFeatures(refined), logits


class AggregationPass(Module):
    """Fine to coarse: V3 = L3, then V_i = conv(fuse(L_i, maxpool(V_{i-1}))) for i = 4..7."""

    def __init__(self, config: DecoderConfig, factory: LayerFactory) -> None:
        super().__init__()
        self.fusions = ModuleList(
            [FastNormalizedFusion(2, config.fusion_eps, factory.dtype) for _ in AGGREGATE_LEVELS]
        )
        self.convs = ModuleList([feature_conv(config.channels, config, factory) for _ in AGGREGATE_LEVELS])

    def forward(self, levels: PyramidFeatures) -> PyramidFeatures:
        aggregated = {3: levels[3]}
        finer = levels[3]

        for fusion, conv, level in zip(self.fusions, self.convs, AGGREGATE_LEVELS):
            current = levels[level]
            pooled = ops.max_pool2d(finer, 3, 2, 1)
            if pooled.shape[2:] != current.shape[2:]:
                pooled = ops.bilinear_resize(pooled, current.shape[2], current.shape[3])
            finer = conv(fusion([current, pooled]))
            aggregated[level] = finer

        return PyramidFeatures(aggregated)


class RaBiFPNBlock(Module):
    def __init__(self, config: DecoderConfig, factory: LayerFactory) -> None:
        super().__init__()
        self.refine = RefinementPass(config, factory)
        self.aggregate = AggregationPass(config, factory)

    def forward(self, levels: PyramidFeatures) -> PyramidFeatures:
        refined, _ = self.refine(levels)
        return self.aggregate(refined)


@dataclass
class DecoderOutputs:
    final_logits: Tensor
    # level-7 head, then levels 6, 5, 4, 3
    supervision_logits: List[Tensor]
    levels: PyramidFeatures


class Decoder(Module):
    """
    D RaBiFPN blocks with independent parameters, then the last refinement branch.

    Supervision taps are a 3x3 head on the refined level 7 plus the per-level logits of
    the last branch. Without reverse attention those logits come from plain 3x3 heads.
    """

    def __init__(self, config: DecoderConfig, factory: LayerFactory) -> None:
        super().__init__()
        self.config = config
        self.blocks = ModuleList([RaBiFPNBlock(config, factory) for _ in range(config.repeats)])
        self.last = RefinementPass(config, factory)
        self.head7 = factory.conv(config.channels, config.n_out, 3, padding=1)
        if not config.use_ra:
            self.heads = ModuleList([factory.conv(config.channels, config.n_out, 3, padding=1) for _ in REFINE_LEVELS])

    def forward(self, levels: PyramidFeatures, input_size: Tuple[int, int]) -> DecoderOutputs:
        if levels.channels != self.config.channels:
            msg = "Decoder width is %d, pyramid has %d channels."
            raise ShapeError(msg % (self.config.channels, levels.channels))

        for block in self.blocks:
            levels = block(levels)

        refined, logits = self.last(levels)
        if not self.config.use_ra:
            logits = {level: head(refined[level]) for head, level in zip(self.heads, REFINE_LEVELS)}

        supervision = [self.head7(refined[7])] + [logits[level] for level in REFINE_LEVELS]
        final = ops.bilinear_resize(logits[3], input_size[0], input_size[1])
        return DecoderOutputs(final_logits=final, supervision_logits=supervision, levels=refined)

    def fusions(self) -> List[FastNormalizedFusion]:
        return [module for module in self.modules() if isinstance(module, FastNormalizedFusion)]
