from rabit.models.encoder import Encoder, PyramidFeatures
from rabit.models.rabifpn import Decoder, DecoderOutputs, FastNormalizedFusion, ReverseAttention, bottleneck_conv
from rabit.models.rabit import RaBiT

__all__ = (
    "Decoder",
    "DecoderOutputs",
    "Encoder",
    "FastNormalizedFusion",
    "PyramidFeatures",
    "RaBiT",
    "ReverseAttention",
    "bottleneck_conv",
)
