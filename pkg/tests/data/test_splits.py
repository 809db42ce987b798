import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from rabit.data.splits import make_splits
from rabit.errors import SplitError


def test_holdout_ninety_ten():
    (split,) = make_splits(100, "holdout", seed=0, holdout=0.9)

    assert len(split.train) == 90
    assert len(split.val) == 10
    assert not set(split.train) & set(split.val)
    assert sorted(np.concatenate([split.train, split.val])) == list(range(100))


def test_full_holdout_leaves_nothing_for_validation():
    (split,) = make_splits(8, "holdout", holdout=1.0)

    assert len(split.train) == 8
    assert len(split.val) == 0


def test_kfold_partitions_the_indices():
    splits = make_splits(100, "kfold", seed=1, k=5)

    assert [split.name for split in splits] == ["fold-0", "fold-1", "fold-2", "fold-3", "fold-4"]
    assert all(len(split.val) == 20 and len(split.train) == 80 for split in splits)
    assert sorted(np.concatenate([split.val for split in splits])) == list(range(100))
    for split in splits:
        assert not set(split.train) & set(split.val)


def test_uneven_folds_differ_by_at_most_one():
    sizes = [len(split.val) for split in make_splits(23, "kfold", k=5)]

    assert sum(sizes) == 23
    assert max(sizes) - min(sizes) <= 1


def test_splits_depend_only_on_the_seed():
    first = make_splits(50, "holdout", seed=3)[0]
    second = make_splits(50, "holdout", seed=3)[0]
    other = make_splits(50, "holdout", seed=4)[0]

    assert_array_equal(first.val, second.val)
    assert not np.array_equal(first.val, other.val)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 0},
        {"n": 10, "holdout": 0.0},
        {"n": 10, "holdout": 1.5},
        {"n": 10, "mode": "kfold", "k": 1},
        {"n": 3, "mode": "kfold", "k": 4},
        {"n": 10, "mode": "bootstrap"},
    ],
)
def test_invalid_requests(kwargs):
    with pytest.raises(SplitError):
        make_splits(**kwargs)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**16), st.data())
def test_kfold_validation_sets_partition_the_indices(n, seed, data):
    k = data.draw(st.integers(2, n))

    splits = make_splits(n, "kfold", seed=seed, k=k)

    validated = np.concatenate([split.val for split in splits])
    assert_array_equal(np.sort(validated), np.arange(n))
    for split in splits:
        assert_array_equal(np.union1d(split.train, split.val), np.arange(n))
        assert np.intersect1d(split.train, split.val).size == 0
