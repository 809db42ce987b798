import hashlib
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, root_validator, validator

from rabit.errors import ConfigError

CONFIG_VERSION = 1

# smallest input every stage has to support; sr ratios must divide the stage sizes at this input
MIN_INPUT_SIZE = 32

DEFAULT_CROP_FRACTION = 224 / 384


class _Frozen(BaseModel):
    class Config:
        extra = "forbid"
        allow_mutation = False


class EncoderConfig(_Frozen):
    stage_dims: Tuple[int, int, int, int, int] = (8, 16, 32, 64, 96)
    attn_stages: Tuple[int, ...] = (3, 4, 5)
    heads: Tuple[int, ...] = (1, 2, 2)
    sr_ratios: Tuple[int, ...] = (2, 2, 1)
    mlp_ratio: int = 4
    decoder_width: int = 32

    @validator("stage_dims")
    def _positive_dims(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(dim < 1 for dim in value):
            raise ValueError("stage dims must be positive")
        return value

    @validator("attn_stages")
    def _known_stages(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(stage not in range(1, 6) for stage in value) or len(set(value)) != len(value):
            raise ValueError("attention stages must be distinct stage indices in 1..5")
        return tuple(sorted(value))

    @root_validator(skip_on_failure=True)
    def _attention_layout(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        stages, heads, ratios = values["attn_stages"], values["heads"], values["sr_ratios"]
        if not len(stages) == len(heads) == len(ratios):
            raise ValueError("heads and sr_ratios need one entry per attention stage")

        for stage, head_count, ratio in zip(stages, heads, ratios):
            dim = values["stage_dims"][stage - 1]
            if head_count < 1 or dim % head_count:
                raise ValueError("stage %d dim %d is not divisible by %d heads" % (stage, dim, head_count))
            if ratio < 1 or (MIN_INPUT_SIZE >> stage) % ratio:
                raise ValueError("stage %d sr ratio %d must divide %d" % (stage, ratio, MIN_INPUT_SIZE >> stage))

        if values["decoder_width"] < 1 or values["mlp_ratio"] < 1:
            raise ValueError("decoder width and mlp ratio must be positive")

        return values

    def attention(self, stage: int) -> Optional[Tuple[int, int]]:
        """(heads, sr_ratio) for an attention stage, None for conv-only stages."""
        if stage not in self.attn_stages:
            return None
        slot = self.attn_stages.index(stage)
        return self.heads[slot], self.sr_ratios[slot]


class DecoderConfig(_Frozen):
    channels: int = 32
    repeats: int = 4
    n_classes: int = 1
    ra_variant: Literal["sigmoid", "softmax"] = "sigmoid"
    use_bottleneck: bool = True
    use_ra: bool = True
    fusion_eps: float = 1e-4

    @root_validator(skip_on_failure=True)
    def _consistent(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["repeats"] < 1:
            raise ValueError("repeats must be at least 1")
        if values["n_classes"] < 1:
            raise ValueError("n_classes must be at least 1")
        if values["ra_variant"] == "softmax" and values["n_classes"] < 2:
            raise ValueError("softmax reverse attention needs n_classes >= 2")
        if values["use_bottleneck"] and values["channels"] % 2:
            raise ValueError("bottleneck convs need an even channel width")
        if values["fusion_eps"] <= 0:
            raise ValueError("fusion_eps must be positive")
        return values

    @property
    def n_out(self) -> int:
        return self.n_classes


class ModelConfig(_Frozen):
    encoder: EncoderConfig = EncoderConfig()
    decoder: DecoderConfig = DecoderConfig(repeats=2)
    in_channels: int = 3
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    dtype: Literal["float32", "float64"] = "float32"

    @root_validator(skip_on_failure=True)
    def _shared_width(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["encoder"].decoder_width != values["decoder"].channels:
            raise ValueError("encoder.decoder_width must equal decoder.channels")
        if values["bn_eps"] <= 0 or not 0 < values["bn_momentum"] <= 1:
            raise ValueError("bn_eps must be positive and bn_momentum in (0, 1]")
        return values

    @classmethod
    def preset(cls, name: str, **decoder_overrides: Any) -> "ModelConfig":
        if name == "tiny":
            encoder = EncoderConfig()
            decoder = DecoderConfig(channels=32, repeats=2)
        elif name == "full":
            encoder = EncoderConfig(
                stage_dims=(32, 64, 128, 320, 512),
                heads=(2, 5, 8),
                sr_ratios=(4, 2, 1),
                decoder_width=224,
            )
            decoder = DecoderConfig(channels=224, repeats=4)
        else:
            msg = "Unknown model preset '%s'."
            raise ConfigError(msg % name)

        if "channels" in decoder_overrides:
            encoder = encoder.copy(update={"decoder_width": decoder_overrides["channels"]})
        decoder = DecoderConfig(**{**decoder.dict(), **decoder_overrides})
        return cls(encoder=encoder, decoder=decoder)

    def with_decoder(self, **overrides: Any) -> "ModelConfig":
        encoder = self.encoder
        if "channels" in overrides:
            encoder = encoder.copy(update={"decoder_width": overrides["channels"]})
        decoder = DecoderConfig(**{**self.decoder.dict(), **overrides})
        return ModelConfig(**{**self.dict(), "encoder": encoder.dict(), "decoder": decoder.dict()})

    @property
    def binary(self) -> bool:
        return self.decoder.n_classes == 1


class LossConfig(_Frozen):
    gamma: float = 2.0
    alpha: float = 0.25
    weight_kernel: int = 31
    weight_scale: float = 5.0
    eps: float = 1e-6

    @validator("gamma")
    def _gamma(cls, value: float) -> float:
        if value < 0:
            raise ValueError("gamma must be >= 0")
        return value

    @validator("alpha")
    def _alpha(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError("alpha must lie in (0, 1)")
        return value

    @validator("weight_kernel")
    def _odd_kernel(cls, value: int) -> int:
        if value < 1 or value % 2 == 0:
            raise ValueError("weight_kernel must be a positive odd number")
        return value


class SyntheticSpec(_Frozen):
    size: int = 96
    n_blobs: Tuple[int, int] = (1, 3)
    blob_class_probs: Optional[Tuple[float, float]] = None
    texture_octaves: int = 4
    axis_range: Tuple[float, float] = (0.08, 0.2)
    seed: int = 0

    @validator("size")
    def _stride_aligned(cls, value: int) -> int:
        if value < MIN_INPUT_SIZE or value % 32:
            raise ValueError("size must be a positive multiple of 32")
        return value

    @validator("n_blobs")
    def _blob_range(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] < 0 or value[1] < value[0]:
            raise ValueError("n_blobs must be an ordered non-negative range")
        return value

    @validator("blob_class_probs")
    def _probabilities(cls, value: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        if value is not None and (min(value) < 0 or abs(sum(value) - 1.0) > 1e-9):
            raise ValueError("blob_class_probs must be non-negative and sum to 1")
        return value

    @validator("axis_range")
    def _axes(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not 0 < value[0] <= value[1] < 0.5:
            raise ValueError("axis_range must be an ordered pair of fractions in (0, 0.5)")
        return value

    @property
    def num_classes(self) -> int:
        """Label count including background."""
        return 2 if self.blob_class_probs is None else 3


class AugmentationConfig(_Frozen):
    pipeline: Literal["binary", "multiclass"] = "binary"
    p_apply: float = 0.5
    p_transform: float = 0.5
    p_crop: float = 0.2
    crop_fraction: float = DEFAULT_CROP_FRACTION
    hue_shift: float = 0.02
    saturation_shift: float = 0.1
    value_shift: float = 0.1
    brightness_limit: float = 0.1
    contrast_limit: float = 0.1
    blur_sigma: Tuple[float, float] = (0.1, 1.5)
    p_affine: float = 0.5
    p_photometric: float = 0.5
    rotation_range: float = 180.0
    shear_range: float = 0.1
    zoom_range: float = 0.2
    shift_range: float = 0.25

    @root_validator(skip_on_failure=True)
    def _probabilities(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        for key in ("p_apply", "p_transform", "p_crop", "p_affine", "p_photometric"):
            if not 0.0 <= values[key] <= 1.0:
                raise ValueError("%s must lie in [0, 1]" % key)
        if not 0 < values["crop_fraction"] <= 1:
            raise ValueError("crop_fraction must lie in (0, 1]")
        return values


class DataConfig(_Frozen):
    synthetic: SyntheticSpec = SyntheticSpec()
    num_samples: int = 64
    data_dir: Optional[str] = None
    holdout: float = 0.9
    augmentation: Optional[AugmentationConfig] = AugmentationConfig()
    mean: Tuple[float, float, float] = (0.485, 0.456, 0.406)
    std: Tuple[float, float, float] = (0.229, 0.224, 0.225)

    @validator("holdout")
    def _fraction(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError("holdout must lie in (0, 1]")
        return value


class TrainConfig(_Frozen):
    version: int = CONFIG_VERSION
    model: ModelConfig = ModelConfig()
    loss: LossConfig = LossConfig()
    data: DataConfig = DataConfig()
    epochs: int = 5
    batch_size: int = 4
    lr: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    scales: Tuple[int, ...] = (64, 96, 128)
    seed: int = 0
    checkpoint_dir: str = "checkpoints"
    prefetch: int = 2

    @validator("version")
    def _known_version(cls, value: int) -> int:
        if value != CONFIG_VERSION:
            raise ValueError("unsupported config version %d (expected %d)" % (value, CONFIG_VERSION))
        return value

    @validator("scales")
    def _scales(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value or any(scale < MIN_INPUT_SIZE or scale % 32 for scale in value):
            raise ValueError("scales must be non-empty multiples of 32")
        return value

    @validator("lr")
    def _lr(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("lr must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def _loop(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["epochs"] < 1 or values["batch_size"] < 1 or values["prefetch"] < 0:
            raise ValueError("epochs and batch_size must be positive, prefetch non-negative")
        return values


class DatasetSpecFile(_Frozen):
    """Document read by `gen-data`: what to synthesize and how to split it."""

    version: int = CONFIG_VERSION
    spec: SyntheticSpec = SyntheticSpec()
    num_samples: int = 100
    split: Literal["holdout", "kfold", "none"] = "holdout"
    holdout: float = 0.9
    folds: int = 5

    @validator("version")
    def _known_version(cls, value: int) -> int:
        if value != CONFIG_VERSION:
            raise ValueError("unsupported config version %d (expected %d)" % (value, CONFIG_VERSION))
        return value


def config_hash(model: ModelConfig) -> str:
    return hashlib.sha256(model.json(sort_keys=True).encode("utf-8")).hexdigest()


def spec_hash(spec: SyntheticSpec) -> str:
    return hashlib.sha256(spec.json(sort_keys=True).encode("utf-8")).hexdigest()


def _read_document(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as stream:
        document = yaml.safe_load(stream) or {}

    if not isinstance(document, dict):
        msg = "Expected a key/value document in '%s'."
        raise ConfigError(msg % path)

    version = document.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        msg = "Unsupported config version '%s' in '%s'."
        raise ConfigError(msg % (version, path))

    return document


def load_train_config(path: Union[str, Path]) -> TrainConfig:
    document = _read_document(path)
    model = document.get("model")
    if isinstance(model, str):
        document["model"] = ModelConfig.preset(model).dict()
    elif isinstance(model, dict) and "preset" in model:
        preset = model.pop("preset")
        base = ModelConfig.preset(preset, **model.pop("decoder", {})).dict()
        document["model"] = _merge(base, model)
    try:
        return TrainConfig.parse_obj(document)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Nested update of a preset dict; unknown keys are left for validation to reject."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_dataset_spec(path: Union[str, Path]) -> DatasetSpecFile:
    try:
        return DatasetSpecFile.parse_obj(_read_document(path))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(config: BaseModel, path: Union[str, Path]) -> None:
    document = _plain(config.dict())
    with open(path, "w", encoding="utf-8") as stream:
        yaml.safe_dump(document, stream, sort_keys=True)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value
