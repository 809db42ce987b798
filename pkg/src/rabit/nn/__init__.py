from rabit.nn.layers import BatchNorm2d, Conv2d, LayerFactory, LayerNorm, Linear, ReLU, conv_parameter_count
from rabit.nn.module import Module, ModuleList, Parameter, Sequential, count_parameters

__all__ = (
    "BatchNorm2d",
    "Conv2d",
    "LayerFactory",
    "LayerNorm",
    "Linear",
    "Module",
    "ModuleList",
    "Parameter",
    "ReLU",
    "Sequential",
    "conv_parameter_count",
    "count_parameters",
)
