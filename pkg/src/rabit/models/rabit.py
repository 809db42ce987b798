import numpy as np

from rabit.config import ModelConfig
from rabit.engine.tensor import Tensor
from rabit.models.encoder import Encoder
from rabit.models.rabifpn import Decoder, DecoderOutputs
from rabit.nn import LayerFactory, Module


class RaBiT(Module):
    """Hierarchical attention encoder followed by the reverse-attention BiFPN decoder."""

    def __init__(self, config: ModelConfig, seed: int = 0) -> None:
        super().__init__()
        self.config = config
        factory = LayerFactory(
            rng=np.random.default_rng(seed),
            dtype=np.dtype(config.dtype),
            bn_momentum=config.bn_momentum,
            bn_eps=config.bn_eps,
        )
        self.encoder = Encoder(config.encoder, factory, in_channels=config.in_channels)
        self.decoder = Decoder(config.decoder, factory)

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.config.dtype)

    def forward(self, image: Tensor) -> DecoderOutputs:
        pyramid = self.encoder(image)
        return self.decoder(pyramid, (image.shape[2], image.shape[3]))
