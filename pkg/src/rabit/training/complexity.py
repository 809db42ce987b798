from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np

from rabit.config import ModelConfig
from rabit.engine.profiler import count_macs
from rabit.engine.tensor import Tensor, no_grad
from rabit.models.rabit import RaBiT
from rabit.nn import conv_parameter_count, count_parameters


@dataclass
class ComponentStats:
    params: int
    flops: int
    conv_params: int


@dataclass
class ComplexityReport:
    """
    Exact trainable-scalar count and FLOPs = 2 x MACs of conv, linear and attention matmuls.

    Norms, activations, pooling and resizing are not in `flops`; their output element
    counts are listed in `elementwise`.
    """

    input_size: int
    params: int
    flops: int
    components: Dict[str, ComponentStats]
    macs_by_op: Dict[str, int] = field(default_factory=dict)
    elementwise: Dict[str, int] = field(default_factory=dict)

    @property
    def gflops(self) -> float:
        return self.flops / 1e9


def count_params_flops(config: ModelConfig, input_size: int, seed: int = 0) -> ComplexityReport:
    model = RaBiT(config, seed=seed)
    model.eval()
    image = Tensor(np.zeros((1, config.in_channels, input_size, input_size), dtype=np.dtype(config.dtype)))

    with no_grad():
        with count_macs() as encoder_counter:
            pyramid = model.encoder(image)
        with count_macs() as decoder_counter:
            model.decoder(pyramid, (input_size, input_size))

    components = {
        "encoder": ComponentStats(
            count_parameters(model.encoder), encoder_counter.flops, conv_parameter_count(model.encoder)
        ),
        "decoder": ComponentStats(
            count_parameters(model.decoder), decoder_counter.flops, conv_parameter_count(model.decoder)
        ),
    }
    return ComplexityReport(
        input_size=input_size,
        params=count_parameters(model),
        flops=encoder_counter.flops + decoder_counter.flops,
        components=components,
        macs_by_op=dict(encoder_counter.macs + decoder_counter.macs),
        elementwise=dict(encoder_counter.elements + decoder_counter.elements),
    )


ABLATIONS = (
    ("wBiFPN", {"use_ra": False, "use_bottleneck": False}),
    ("RaBiT w/o bottleneck", {"use_ra": True, "use_bottleneck": False}),
    ("RaBiT w/ bottleneck", {"use_ra": True, "use_bottleneck": True}),
)


def ablation_table(config: ModelConfig, input_size: int) -> List[Dict[str, object]]:
    rows: List[Dict[str, object]] = []
    for name, overrides in ABLATIONS:
        report = count_params_flops(config.with_decoder(**overrides), input_size)
        rows.append({"model": name, "params": report.params, "gflops": report.gflops})
    return rows


def repeat_trend(config: ModelConfig, repeats: Iterable[int], input_size: int) -> List[Dict[str, object]]:
    rows: List[Dict[str, object]] = []
    for count in repeats:
        report = count_params_flops(config.with_decoder(repeats=count), input_size)
        rows.append({"repeats": count, "params": report.params, "gflops": report.gflops})
    return rows
