"""
Finite-difference checks of the engine: every differentiable primitive, then the
binary and softmax reverse-attention blocks and a tiny decoder.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from rabit.config import DecoderConfig
from rabit.engine import ops
from rabit.engine.gradcheck import STEP, GradcheckResult, gradcheck
from rabit.engine.tensor import Tensor
from rabit.errors import ConfigError
from rabit.models.encoder import PyramidFeatures
from rabit.models.rabifpn import Decoder, ReverseAttention
from rabit.nn import LayerFactory
from rabit.telemetry.logs import Logs

logger = logging.getLogger(__name__)

PRIMITIVE_TOLERANCE = 1e-4
COMPOSITE_TOLERANCE = 1e-3
COMPOSITE_STEP = 1e-6


@dataclass
class GradcheckCase:
    name: str
    fn: Callable[..., Tensor]
    inputs: List[np.ndarray]
    tolerance: float = PRIMITIVE_TOLERANCE
    max_elements: Optional[int] = None
    step: float = STEP

    def run(self) -> GradcheckResult:
        return gradcheck(self.fn, self.inputs, self.name, self.tolerance, self.max_elements, step=self.step)


def _batch_norm(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    channels = gamma.shape[0]
    return ops.batch_norm2d(x, gamma, beta, np.zeros(channels), np.ones(channels), training=True)


def primitive_cases(seed: int = 0) -> List[GradcheckCase]:
    rng = np.random.default_rng(seed)

    def normal(*shape: int) -> np.ndarray:
        return rng.standard_normal(shape)

    def positive(*shape: int) -> np.ndarray:
        return rng.uniform(0.5, 2.0, shape)

    return [
        GradcheckCase("add", ops.add, [normal(2, 3), normal(2, 3)]),
        GradcheckCase("add_channel_broadcast", ops.add, [normal(2, 3, 4, 4), normal(2, 1, 4, 4)]),
        GradcheckCase("sub", ops.sub, [normal(2, 3), normal(2, 3)]),
        GradcheckCase("mul", ops.mul, [normal(2, 3), normal(2, 3)]),
        GradcheckCase("mul_channel_broadcast", ops.mul, [normal(2, 1, 3, 3), normal(2, 4, 3, 3)]),
        GradcheckCase("div", ops.div, [normal(2, 3), positive(2, 3)]),
        GradcheckCase("neg", ops.neg, [normal(4)]),
        GradcheckCase("scalar_mul", lambda x: ops.scalar_mul(x, -1.5), [normal(3, 2)]),
        GradcheckCase("add_scalar", lambda x: ops.add_scalar(x, 0.25), [normal(3, 2)]),
        GradcheckCase("sub_from_scalar", lambda x: ops.sub_from_scalar(1.0, x), [normal(3, 2)]),
        GradcheckCase("pow_scalar", lambda x: ops.pow_scalar(x, 1.5), [positive(3, 2)]),
        GradcheckCase("log", ops.log, [positive(3, 2)]),
        GradcheckCase("exp", ops.exp, [normal(3, 2)]),
        GradcheckCase("relu", ops.relu, [normal(4, 5)]),
        GradcheckCase("sigmoid", ops.sigmoid, [normal(4, 5)]),
        GradcheckCase("gelu", ops.gelu, [normal(4, 5)]),
        GradcheckCase("softmax", lambda x: ops.softmax(x, axis=-1), [normal(3, 5)]),
        GradcheckCase("softmax_channels", ops.softmax_channels, [normal(2, 3, 2, 2)]),
        GradcheckCase("log_softmax", lambda x: ops.log_softmax(x, axis=1), [normal(2, 3, 2, 2)]),
        GradcheckCase("sum", lambda x: ops.sum(x, axis=(0, 2)), [normal(2, 3, 4)]),
        GradcheckCase("mean", lambda x: ops.mean(x, axis=1, keepdims=True), [normal(2, 3, 4)]),
        GradcheckCase("reshape", lambda x: ops.reshape(x, (3, 4)), [normal(2, 6)]),
        GradcheckCase("transpose", lambda x: ops.transpose(x, (2, 0, 1)), [normal(2, 3, 4)]),
        GradcheckCase("concat", lambda a, b: ops.concat([a, b], axis=1), [normal(2, 1, 3, 3), normal(2, 2, 3, 3)]),
        GradcheckCase("take_channels", lambda x: ops.take_channels(x, 1, 3), [normal(2, 4, 2, 2)]),
        GradcheckCase("select", lambda x: ops.select(x, 2), [normal(4)]),
        GradcheckCase("scale", lambda x, f: ops.scale(x, f), [normal(2, 3, 2, 2), normal(1)]),
        GradcheckCase("normalized_weights", lambda w: ops.normalized_weights(w, 1e-4), [positive(3)]),
        GradcheckCase("matmul", ops.matmul, [normal(2, 3, 4), normal(2, 4, 5)]),
        GradcheckCase("linear", ops.linear, [normal(2, 5, 4), normal(3, 4), normal(3)]),
        GradcheckCase(
            "conv2d_3x3",
            lambda x, w, b: ops.conv2d(x, w, b, stride=1, padding=1),
            [normal(2, 3, 5, 5), normal(4, 3, 3, 3), normal(4)],
        ),
        GradcheckCase(
            "conv2d_strided",
            lambda x, w, b: ops.conv2d(x, w, b, stride=2, padding=1),
            [normal(1, 2, 6, 6), normal(3, 2, 3, 3), normal(3)],
        ),
        GradcheckCase("conv2d_1x1", lambda x, w: ops.conv2d(x, w), [normal(2, 3, 4, 4), normal(5, 3, 1, 1)]),
        GradcheckCase("batch_norm2d", _batch_norm, [normal(3, 2, 3, 3), positive(2), normal(2)]),
        GradcheckCase("layer_norm", ops.layer_norm, [normal(2, 3, 6), positive(6), normal(6)]),
        GradcheckCase("max_pool2d", lambda x: ops.max_pool2d(x, 3, 2, 1), [normal(2, 2, 5, 5)]),
        GradcheckCase("avg_pool2d", lambda x: ops.avg_pool2d(x, 3, 2, 1), [normal(2, 2, 5, 5)]),
        GradcheckCase("bilinear_up", lambda x: ops.bilinear_resize(x, 7, 5), [normal(1, 2, 3, 2)]),
        GradcheckCase("bilinear_down", lambda x: ops.bilinear_resize(x, 2, 3), [normal(1, 2, 5, 6)]),
    ]


def _flat(outputs: Sequence[Tensor]) -> Tensor:
    return ops.concat([ops.reshape(out, (out.size,)) for out in outputs], axis=0)


def _factory(seed: int) -> LayerFactory:
    return LayerFactory(rng=np.random.default_rng(seed), dtype=np.float64)


def reverse_attention_case(variant: str, n_classes: int, seed: int = 0) -> GradcheckCase:
    config = DecoderConfig(channels=4, n_classes=n_classes, ra_variant=variant)
    block = ReverseAttention(config, _factory(seed))
    x = np.random.default_rng(seed).standard_normal((2, 4, 4, 4))

    def fn(features: Tensor) -> Tensor:
        y, logits = block(features)
        return _flat([y, logits])

    return GradcheckCase("ra_%s_n%d" % (variant, n_classes), fn, [x], COMPOSITE_TOLERANCE, step=COMPOSITE_STEP)


def decoder_case(seed: int = 0, channels: int = 8, finest: int = 16) -> GradcheckCase:
    """The whole decoder with one repeat, checked on the pyramid features at a few positions each."""
    config = DecoderConfig(channels=channels, repeats=1, n_classes=1)
    decoder = Decoder(config, _factory(seed))
    decoder.eval()

    rng = np.random.default_rng(seed)
    sizes = [finest >> shift for shift in range(5)]
    inputs = [rng.standard_normal((1, channels, max(size, 1), max(size, 1))) for size in sizes]

    def fn(*levels: Tensor) -> Tensor:
        outputs = decoder(PyramidFeatures(dict(zip((3, 4, 5, 6, 7), levels))), (finest, finest))
        return _flat([outputs.final_logits] + outputs.supervision_logits)

    return GradcheckCase(
        "decoder_c%d_d1" % channels, fn, inputs, COMPOSITE_TOLERANCE, max_elements=16, step=COMPOSITE_STEP
    )


SUITES: Dict[str, Callable[[], List[GradcheckCase]]] = {
    "primitives": primitive_cases,
    "ra_binary": lambda: [reverse_attention_case("sigmoid", 1)],
    "ra_softmax": lambda: [reverse_attention_case("softmax", 3)],
    "decoder": lambda: [decoder_case()],
}


def run_gradcheck(module: Optional[str] = None) -> List[GradcheckResult]:
    if module is not None and module not in SUITES:
        msg = "Unknown gradcheck module '%s' (choose from %s)."
        raise ConfigError(msg % (module, ", ".join(SUITES)))

    names = [module] if module is not None else list(SUITES)
    results = []
    for name in names:
        for case in SUITES[name]():
            result = case.run()
            logger.info(
                Logs.RABIT_GRADCHECK_CASE,
                extra={"case": result.name, "max_error": result.max_error, "passed": result.passed},
            )
            results.append(result)
    return results
