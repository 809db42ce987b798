import numpy as np
import pytest
from numpy.testing import assert_array_equal

from rabit.config import SyntheticSpec
from rabit.data.synthetic import generate_sample, value_noise


def test_samples_are_determined_by_seed_and_index():
    spec = SyntheticSpec(size=32)

    first, again, other = generate_sample(spec, 3), generate_sample(spec, 3), generate_sample(spec, 4)

    assert first.image_id == "00003"
    assert_array_equal(first.image, again.image)
    assert_array_equal(first.mask, again.mask)
    assert not np.array_equal(first.image, other.image)


def test_sample_layout():
    sample = generate_sample(SyntheticSpec(size=64), 0)

    assert sample.image.shape == (3, 64, 64)
    assert sample.image.dtype == np.float32
    assert sample.mask.shape == (64, 64)
    assert sample.mask.dtype == np.uint8
    assert 0.0 <= sample.image.min() and sample.image.max() <= 1.0


def test_binary_phantoms_have_a_polyp():
    spec = SyntheticSpec(size=32, n_blobs=(1, 1))

    for index in range(10):
        mask = generate_sample(spec, index).mask
        assert set(np.unique(mask)) == {0, 1}


def test_zero_blobs_give_an_empty_mask():
    assert not generate_sample(SyntheticSpec(size=32, n_blobs=(0, 0)), 0).mask.any()


def test_multiclass_phantoms_use_both_labels():
    spec = SyntheticSpec(size=32, n_blobs=(2, 3), blob_class_probs=(0.5, 0.5))

    labels = set()
    for index in range(20):
        labels |= set(np.unique(generate_sample(spec, index).mask).tolist())

    assert labels == {0, 1, 2}
    assert spec.num_classes == 3


def test_polyps_change_the_image():
    spec = SyntheticSpec(size=32, n_blobs=(1, 1))
    empty = SyntheticSpec(size=32, n_blobs=(0, 0))

    sample = generate_sample(spec, 0)

    assert not np.array_equal(sample.image, generate_sample(empty, 0).image)


def test_value_noise_range(rng):
    noise = value_noise(rng, 16, 3)

    assert noise.shape == (3, 16, 16)
    assert noise.min() >= 0.0 and noise.max() <= 1.0


@pytest.mark.slow
def test_default_phantoms_cover_a_plausible_foreground_fraction():
    spec = SyntheticSpec()

    fractions = [generate_sample(spec, index).mask.mean() for index in range(500)]

    assert 0.05 <= np.mean(fractions) <= 0.35
