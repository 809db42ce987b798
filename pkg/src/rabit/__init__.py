from rabit.config import ModelConfig, TrainConfig
from rabit.models import RaBiT

__version__ = "0.0.1"

__all__ = ("ModelConfig", "RaBiT", "TrainConfig", "__version__")
