import numpy as np
import pytest

from rabit.config import DataConfig, DecoderConfig, EncoderConfig, ModelConfig, SyntheticSpec, TrainConfig
from rabit.nn import LayerFactory


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def factory64() -> LayerFactory:
    return LayerFactory(rng=np.random.default_rng(0), dtype=np.float64)


@pytest.fixture
def micro_config() -> ModelConfig:
    """Smallest valid model: every structural path, a fraction of the tiny preset's cost."""
    return ModelConfig(
        encoder=EncoderConfig(
            stage_dims=(4, 8, 8, 16, 16),
            heads=(1, 2, 2),
            sr_ratios=(2, 2, 1),
            mlp_ratio=2,
            decoder_width=8,
        ),
        decoder=DecoderConfig(channels=8, repeats=1),
    )


@pytest.fixture
def make_pyramid(rng: np.random.Generator):
    """level -> N x C x S x S float64 arrays, halving from `finest` at level 3 (never below 1)."""

    def make(channels: int, finest: int, batch: int = 1):
        return {
            level: rng.standard_normal((batch, channels, max(finest >> shift, 1), max(finest >> shift, 1)))
            for shift, level in enumerate((3, 4, 5, 6, 7))
        }

    return make


@pytest.fixture
def micro_train_config(micro_config: ModelConfig) -> TrainConfig:
    """Two epochs of two batches on 32 px phantoms, no augmentation, inline batches."""
    return TrainConfig(
        model=micro_config,
        data=DataConfig(synthetic=SyntheticSpec(size=32), num_samples=4, holdout=1.0, augmentation=None),
        epochs=2,
        batch_size=2,
        lr=1e-3,
        scales=(32,),
        prefetch=0,
    )
