import logging
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from rabit.config import ModelConfig, config_hash
from rabit.data.augment import resize_image, resize_mask
from rabit.data.dataset import IMAGENET_MEAN, IMAGENET_STD, normalize
from rabit.engine.tensor import Tensor, no_grad
from rabit.errors import CheckpointError, CheckpointMismatchError, ConfigError
from rabit.metrics import (
    GENERIC,
    Complexity,
    ClassScores,
    ImageScores,
    MetricsReport,
    MicroClassMetrics,
    confusion,
    scores_from_confusion,
    segmentation_metrics,
)
from rabit.models.rabit import RaBiT
from rabit.telemetry.logs import Logs
from rabit.training.checkpoint import Checkpoint, load_checkpoint
from rabit.training.complexity import count_params_flops

logger = logging.getLogger(__name__)


def load_model(path: Union[str, Path], expected_hash: Optional[str] = None) -> Tuple[RaBiT, Checkpoint]:
    checkpoint = load_checkpoint(path)
    if expected_hash is not None and expected_hash != checkpoint.config_hash:
        raise CheckpointMismatchError(expected_hash, checkpoint.config_hash)

    config = ModelConfig.parse_obj(checkpoint.model_config)
    if config_hash(config) != checkpoint.config_hash:
        msg = "Checkpoint '%s' header does not match its config hash."
        raise CheckpointError(msg % path)

    model = RaBiT(config)
    model.load_state_dict(checkpoint.model_state())
    model.eval()
    logger.info(Logs.RABIT_CHECKPOINT_LOADED, extra={"path": str(path), "epoch": checkpoint.epoch})
    return model, checkpoint


def predict(model: RaBiT, images: np.ndarray) -> np.ndarray:
    """Eval-mode forward. Binary models give foreground probabilities N x H x W, others argmax labels."""
    model.eval()
    with no_grad():
        logits = model(Tensor(images.astype(model.dtype))).final_logits.data

    if logits.shape[1] == 1:
        return special.expit(logits[:, 0])
    return logits.argmax(axis=1)


def evaluate(
    checkpoint_path: Union[str, Path],
    dataset: Any,
    expected_hash: Optional[str] = None,
    input_size: Optional[int] = None,
    batch_size: int = 4,
    mean: Optional[Sequence[float]] = None,
    std: Optional[Sequence[float]] = None,
) -> MetricsReport:
    """
    Scores the checkpoint on every sample at `input_size` (default: the dataset's own size).

    Binary models threshold at 0.5; multi-class models take the argmax and also report
    dataset-level micro dice/IoU per class.
    Inputs are normalized with the statistics recorded in the checkpoint unless `mean`/`std` are given.
    """
    model, checkpoint = load_model(checkpoint_path, expected_hash)
    binary = model.config.binary
    class_ids = tuple(range(1, model.config.decoder.n_classes))
    micro = None if binary else MicroClassMetrics(class_ids)

    mean = checkpoint.extra.get("mean", IMAGENET_MEAN) if mean is None else mean
    std = checkpoint.extra.get("std", IMAGENET_STD) if std is None else std

    samples = list(dataset)
    if not samples:
        msg = "Dataset '%s' has no samples to evaluate."
        raise ConfigError(msg % getattr(dataset, "name", "dataset"))
    size = input_size or samples[0].mask.shape[0]
    logger.info(Logs.RABIT_EVAL_STARTED, extra={"samples": len(samples), "input_size": size})

    rows: List[ImageScores] = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        images = np.stack([normalize(resize_image(sample.image, size, size), mean, std) for sample in chunk])
        predictions = predict(model, images)

        for sample, prediction in zip(chunk, predictions):
            gt = resize_mask(sample.mask, size, size)
            if binary:
                rows.append(ImageScores(image_id=sample.image_id, **segmentation_metrics(prediction, gt)._asdict()))
                continue

            assert micro is not None
            micro.update(prediction, gt)
            for class_id, name in micro.names.items():
                scores = scores_from_confusion(confusion(prediction == class_id, gt == class_id))
                rows.append(ImageScores(image_id=sample.image_id, class_name=name, **scores._asdict()))
            scores = scores_from_confusion(confusion(prediction > 0, gt > 0))
            rows.append(ImageScores(image_id=sample.image_id, class_name=GENERIC, **scores._asdict()))

    stats = count_params_flops(model.config, size)
    scored = [row for row in rows if row.class_name == (None if binary else GENERIC)]
    report = MetricsReport(
        dataset=getattr(dataset, "name", "dataset"),
        mode="binary" if binary else "multiclass",
        config_hash=checkpoint.config_hash,
        per_image=rows,
        aggregates=MetricsReport.aggregate(scored),
        per_class={} if micro is None else {
            name: ClassScores(dice=scores.dice, iou=scores.iou) for name, scores in micro.compute().items()
        },
        complexity=Complexity(params=stats.params, flops=stats.flops, input_size=size),
    )
    logger.info(
        Logs.RABIT_EVAL_COMPLETED,
        extra={"dataset": report.dataset, "mdice": report.mean_dice, "miou": report.mean_iou},
    )
    return report
