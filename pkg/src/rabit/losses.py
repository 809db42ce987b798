"""
Segmentation losses.

Binary outputs train with a hard-pixel weighted focal loss plus a weighted soft IoU loss,
multi-class outputs with categorical cross-entropy. The weighted losses are ratios of
sums taken over the whole batch, so larger or more heavily weighted images count for more.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from rabit.config import LossConfig
from rabit.engine import ops
from rabit.engine.tensor import Tensor
from rabit.errors import LabelError, ShapeError
from rabit.models.rabifpn import DecoderOutputs

SUPERVISION_NAMES = ("p7", "p6", "p5", "p4", "p3")


def _check_binary(gt: np.ndarray) -> None:
    if not np.all((gt == 0) | (gt == 1)):
        msg = "Expected a binary {0, 1} mask, found values %s."
        raise LabelError(msg % np.unique(gt)[:8].tolist())


def _as_mask(gt: np.ndarray) -> np.ndarray:
    """N x H x W or N x 1 x H x W -> N x 1 x H x W."""
    gt = np.asarray(gt)
    if gt.ndim == 3:
        gt = gt[:, None]
    if gt.ndim != 4 or gt.shape[1] != 1:
        msg = "Expected a single-channel mask, got shape %s."
        raise ShapeError(msg % (gt.shape,))
    return gt


def _check_same(logits: Tensor, gt: np.ndarray, weights: np.ndarray) -> None:
    if logits.shape != gt.shape or weights.shape != gt.shape:
        msg = "Loss inputs disagree: logits %s, mask %s, weights %s."
        raise ShapeError(msg % (logits.shape, gt.shape, weights.shape))


def hard_pixel_weights(gt: np.ndarray, kernel: int = 31, scale: float = 5.0) -> np.ndarray:
    """1 + scale * |local mean of gt - gt|: boundary pixels weigh up to 1 + scale."""
    mask = _as_mask(gt).astype(np.float64)
    _check_binary(mask)

    local = ops.avg_pool2d(Tensor(mask), kernel, 1, (kernel - 1) // 2).data
    return 1.0 + scale * np.abs(local - mask)


def focal_from_probabilities(
    probabilities: Tensor, gt: np.ndarray, weights: np.ndarray, config: LossConfig
) -> Tensor:
    gt = np.asarray(gt, dtype=probabilities.dtype)
    weights = np.asarray(weights, dtype=probabilities.dtype)
    _check_same(probabilities, gt, weights)

    # p_t = p where gt = 1, 1 - p where gt = 0
    p_t = ops.add(ops.mul(probabilities, 2 * gt - 1), 1 - gt)
    alpha_t = config.alpha * gt + (1 - config.alpha) * (1 - gt)

    term = ops.log(ops.add_scalar(p_t, config.eps))
    if config.gamma > 0:
        term = ops.mul(term, ops.pow_scalar(ops.sub_from_scalar(1.0, p_t), config.gamma))

    weighted = ops.sum(ops.mul(term, weights * alpha_t))
    return ops.scalar_mul(weighted, -1.0 / float(weights.sum()))


def weighted_focal_loss(logits: Tensor, gt: np.ndarray, weights: np.ndarray, config: LossConfig) -> Tensor:
    return focal_from_probabilities(ops.sigmoid(logits), gt, weights, config)


def iou_from_probabilities(probabilities: Tensor, gt: np.ndarray, weights: np.ndarray, eps: float = 1e-6) -> Tensor:
    gt = np.asarray(gt, dtype=probabilities.dtype)
    weights = np.asarray(weights, dtype=probabilities.dtype)
    _check_same(probabilities, gt, weights)

    intersection = ops.sum(ops.mul(probabilities, weights * gt))
    # sum (w (p + gt - p gt) + eps) = sum w p (1 - gt) + sum (w gt + eps)
    union = ops.add_scalar(ops.sum(ops.mul(probabilities, weights * (1 - gt))), float((weights * gt + eps).sum()))
    return ops.sub_from_scalar(1.0, ops.div(intersection, union))


def weighted_iou_loss(logits: Tensor, gt: np.ndarray, weights: np.ndarray, eps: float = 1e-6) -> Tensor:
    return iou_from_probabilities(ops.sigmoid(logits), gt, weights, eps)


def categorical_ce(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean over all pixels of -log softmax(logits)[label]."""
    labels = np.asarray(labels)
    n, classes = logits.shape[:2]
    if labels.shape != (n,) + logits.shape[2:]:
        msg = "Labels %s do not match logits %s."
        raise ShapeError(msg % (labels.shape, logits.shape))
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        msg = "Labels must lie in [0, %d), found range [%d, %d]."
        raise LabelError(msg % (classes, labels.min(), labels.max()))

    one_hot = np.eye(classes, dtype=logits.dtype)[labels.astype(np.int64)].transpose(0, 3, 1, 2)
    picked = ops.sum(ops.mul(ops.log_softmax(logits, axis=1), one_hot), axis=1)
    return ops.neg(ops.mean(picked))


def binary_loss(logits: Tensor, gt: np.ndarray, weights: np.ndarray, config: LossConfig) -> Tensor:
    probabilities = ops.sigmoid(logits)
    return ops.add(
        focal_from_probabilities(probabilities, gt, weights, config),
        iou_from_probabilities(probabilities, gt, weights, config.eps),
    )


@dataclass
class SupervisionLoss:
    total: Tensor
    terms: Dict[str, float]


def supervision_outputs(outputs: DecoderOutputs) -> List[Tensor]:
    return list(outputs.supervision_logits) + [outputs.final_logits]


def deep_supervision_loss(
    outputs: Union[DecoderOutputs, Sequence[Tensor]],
    target: np.ndarray,
    config: LossConfig,
    names: Optional[Sequence[str]] = None,
) -> SupervisionLoss:
    """
    Plain sum of one loss per output, each output resized to the target size first.

    Single-channel outputs use focal + IoU against a binary mask; wider outputs use
    categorical cross-entropy against the label map. Targets are N x H x W.
    """
    if isinstance(outputs, DecoderOutputs):
        logits_list = supervision_outputs(outputs)
        names = list(SUPERVISION_NAMES[: len(outputs.supervision_logits)]) + ["final"]
    else:
        logits_list = list(outputs)
        names = list(names) if names is not None else ["out%d" % index for index in range(len(logits_list))]

    if not logits_list:
        raise ShapeError("Deep supervision needs at least one output.")

    target = np.asarray(target)
    if target.ndim == 4 and target.shape[1] == 1:
        target = target[:, 0]
    height, width = target.shape[-2:]

    binary = logits_list[0].shape[1] == 1
    if binary:
        gt = _as_mask(target).astype(logits_list[0].dtype)
        weights = hard_pixel_weights(gt, config.weight_kernel, config.weight_scale).astype(gt.dtype)

    total: Optional[Tensor] = None
    terms: Dict[str, float] = {}
    for name, logits in zip(names, logits_list):
        if logits.shape[2:] != (height, width):
            logits = ops.bilinear_resize(logits, height, width)
        loss = binary_loss(logits, gt, weights, config) if binary else categorical_ce(logits, target)
        terms[name] = loss.item()
        total = loss if total is None else ops.add(total, loss)

    assert total is not None
    return SupervisionLoss(total=total, terms=terms)
