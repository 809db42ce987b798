import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from rabit.config import LossConfig
from rabit.engine import ops
from rabit.engine.tensor import Tensor, backward
from rabit.errors import LabelError, ShapeError
from rabit.losses import (
    binary_loss,
    categorical_ce,
    deep_supervision_loss,
    hard_pixel_weights,
    iou_from_probabilities,
    weighted_focal_loss,
    weighted_iou_loss,
)
from rabit.models.encoder import PyramidFeatures
from rabit.models.rabifpn import DecoderOutputs


def pixel(value: float) -> np.ndarray:
    return np.full((1, 1, 1, 1), value)


def test_focal_loss_single_pixel_reference():
    loss = weighted_focal_loss(Tensor(pixel(0.0)), pixel(1.0), pixel(1.0), LossConfig(alpha=0.25, gamma=2.0))

    assert loss.item() == pytest.approx(0.04332, abs=1e-5)


def test_focal_without_focusing_is_half_the_cross_entropy(rng):
    logits = rng.standard_normal((2, 1, 4, 4))
    gt = (rng.random((2, 1, 4, 4)) > 0.5).astype(np.float64)
    weights = np.ones_like(gt)

    loss = weighted_focal_loss(Tensor(logits), gt, weights, LossConfig(alpha=0.5, gamma=0.0, eps=1e-12))

    p = 1 / (1 + np.exp(-logits))
    bce = -(gt * np.log(p) + (1 - gt) * np.log(1 - p)).mean()
    assert loss.item() == pytest.approx(0.5 * bce, abs=1e-6)


def test_iou_loss_reference():
    probabilities = Tensor(np.array([1.0, 0.5]).reshape(1, 1, 1, 2))
    gt = np.array([1.0, 0.0]).reshape(1, 1, 1, 2)

    loss = iou_from_probabilities(probabilities, gt, np.ones_like(gt))

    assert loss.item() == pytest.approx(1 / 3, abs=1e-5)


def test_iou_loss_vanishes_on_a_perfect_prediction():
    gt = np.array([[0.0, 1.0], [1.0, 1.0]]).reshape(1, 1, 2, 2)

    loss = weighted_iou_loss(Tensor((gt * 2 - 1) * 40), gt, np.ones_like(gt))

    assert loss.item() == pytest.approx(0.0, abs=1e-5)


def test_cross_entropy_of_uniform_logits_is_log_n():
    labels = np.array([[[0, 1], [2, 1]]])

    loss = categorical_ce(Tensor(np.zeros((1, 3, 2, 2))), labels)

    assert loss.item() == pytest.approx(np.log(3))


def test_cross_entropy_checks_labels():
    logits = Tensor(np.zeros((1, 2, 2, 2)))

    with pytest.raises(LabelError):
        categorical_ce(logits, np.full((1, 2, 2), 2))
    with pytest.raises(ShapeError):
        categorical_ce(logits, np.zeros((1, 3, 3), dtype=int))


def test_isolated_pixel_weight():
    gt = np.zeros((1, 5, 5))
    gt[0, 2, 2] = 1

    weights = hard_pixel_weights(gt, kernel=3, scale=5.0)

    assert weights.shape == (1, 1, 5, 5)
    assert weights[0, 0, 2, 2] == pytest.approx(1 + 5 * 8 / 9, abs=1e-3)
    assert weights[0, 0, 0, 0] == 1.0
    assert weights.min() >= 1.0 and weights.max() <= 6.0


def test_uniform_regions_keep_unit_weight():
    weights = hard_pixel_weights(np.ones((1, 8, 8)), kernel=3)

    # the zero padding only touches the border
    assert_allclose(weights[0, 0, 1:-1, 1:-1], 1.0)


def test_weight_scaling_leaves_both_losses_unchanged(rng):
    logits = Tensor(rng.standard_normal((2, 1, 6, 6)))
    gt = (rng.random((2, 1, 6, 6)) > 0.6).astype(np.float64)
    weights = hard_pixel_weights(gt, kernel=3)
    config = LossConfig()

    base = binary_loss(logits, gt, weights, config).item()
    scaled = binary_loss(logits, gt, 3.0 * weights, config).item()

    # eps enters once per pixel, so scaling the weights only moves the IoU term by ~eps
    assert scaled == pytest.approx(base, rel=1e-5)


def test_weighted_losses_are_batch_global_ratios(rng):
    logits = rng.standard_normal((2, 1, 4, 4))
    gt = (rng.random((2, 1, 4, 4)) > 0.5).astype(np.float64)
    weights = np.concatenate([np.ones((1, 1, 4, 4)), np.full((1, 1, 4, 4), 4.0)])
    config = LossConfig(alpha=0.25, gamma=2.0, eps=1e-6)

    focal = weighted_focal_loss(Tensor(logits), gt, weights, config).item()
    iou = weighted_iou_loss(Tensor(logits), gt, weights, eps=1e-6).item()

    p = 1 / (1 + np.exp(-logits))
    p_t = p * gt + (1 - p) * (1 - gt)
    alpha_t = 0.25 * gt + 0.75 * (1 - gt)
    expected_focal = -(weights * alpha_t * (1 - p_t) ** 2 * np.log(p_t + 1e-6)).sum() / weights.sum()
    expected_iou = 1 - (weights * p * gt).sum() / (weights * (p + gt - p * gt) + 1e-6).sum()
    assert focal == pytest.approx(expected_focal, rel=1e-9)
    assert iou == pytest.approx(expected_iou, rel=1e-9)


def test_weights_reject_non_binary_masks():
    with pytest.raises(LabelError):
        hard_pixel_weights(np.full((1, 4, 4), 2.0))


def test_deep_supervision_is_a_plain_sum(rng):
    logits = Tensor(rng.standard_normal((2, 1, 8, 8)))
    target = (rng.random((2, 8, 8)) > 0.5).astype(np.uint8)
    config = LossConfig(weight_kernel=3)

    single = deep_supervision_loss([logits], target, config)
    triple = deep_supervision_loss([logits, logits, logits], target, config, names=["a", "b", "c"])

    assert triple.total.item() == pytest.approx(3 * single.total.item())
    assert list(triple.terms) == ["a", "b", "c"]


def test_deep_supervision_names_decoder_outputs_and_resizes(rng):
    coarse = [Tensor(rng.standard_normal((1, 1, side, side)), requires_grad=True) for side in (1, 2, 3, 6, 12)]
    final = Tensor(rng.standard_normal((1, 1, 24, 24)), requires_grad=True)
    outputs = DecoderOutputs(final_logits=final, supervision_logits=coarse, levels=PyramidFeatures({}))
    target = np.zeros((1, 24, 24), dtype=np.uint8)
    target[0, 6:18, 6:18] = 1

    loss = deep_supervision_loss(outputs, target, LossConfig(weight_kernel=5))
    backward(loss.total)

    assert list(loss.terms) == ["p7", "p6", "p5", "p4", "p3", "final"]
    assert loss.total.item() == pytest.approx(sum(loss.terms.values()))
    assert all(tensor.grad is not None and tensor.grad.shape == tensor.shape for tensor in coarse + [final])


def test_deep_supervision_uses_cross_entropy_for_wide_outputs():
    labels = np.array([[[0, 1], [2, 0]]])

    loss = deep_supervision_loss([Tensor(np.zeros((1, 3, 2, 2)))], labels, LossConfig(), names=["final"])

    assert loss.terms["final"] == pytest.approx(np.log(3))


def test_loss_gradients_point_towards_the_mask():
    logits = Tensor(np.zeros((1, 1, 2, 2)), requires_grad=True)
    gt = np.array([[1.0, 0.0], [0.0, 1.0]]).reshape(1, 1, 2, 2)

    backward(binary_loss(logits, gt, np.ones_like(gt), LossConfig()))

    assert (logits.grad[gt == 1] < 0).all()
    assert (logits.grad[gt == 0] > 0).all()


def test_deep_supervision_needs_outputs():
    with pytest.raises(ShapeError):
        deep_supervision_loss([], np.zeros((1, 4, 4)), LossConfig())


def test_mismatched_weights_are_rejected():
    with pytest.raises(ShapeError):
        weighted_focal_loss(Tensor(pixel(0.0)), pixel(1.0), np.ones((1, 1, 2, 2)), LossConfig())


def test_cross_entropy_gradient_is_softmax_minus_one_hot(rng):
    logits = Tensor(rng.standard_normal((1, 3, 1, 2)), requires_grad=True)
    labels = np.array([[[2, 0]]])

    backward(categorical_ce(logits, labels))

    probabilities = ops.softmax(Tensor(logits.data), axis=1).data
    one_hot = np.eye(3)[labels].transpose(0, 3, 1, 2)
    assert_allclose(logits.grad, (probabilities - one_hot) / 2)


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 2), st.integers(1, 9), st.integers(1, 9)), elements=st.integers(0, 1)))
def test_pixel_weights_stay_within_one_and_one_plus_scale(gt):
    weights = hard_pixel_weights(gt, kernel=5, scale=5.0)

    assert weights.shape == (gt.shape[0], 1) + gt.shape[1:]
    assert (weights >= 1.0).all()
    assert (weights <= 6.0 + 1e-9).all()
