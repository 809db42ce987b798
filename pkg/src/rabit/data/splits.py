from typing import List, Literal, NamedTuple

import numpy as np

from rabit.errors import SplitError


class Split(NamedTuple):
    name: str
    train: np.ndarray
    val: np.ndarray


def make_splits(
    n: int,
    mode: Literal["holdout", "kfold"] = "holdout",
    seed: int = 0,
    holdout: float = 0.9,
    k: int = 5,
) -> List[Split]:
    """
    Disjoint, exhaustive index sets over range(n) from one seeded permutation.

    holdout gives a single split with round(holdout * n) training indices;
    kfold gives k splits, each validating on one of k near-equal folds.
    """
    if n < 1:
        msg = "Cannot split an empty dataset (n=%d)."
        raise SplitError(msg % n)

    order = np.random.default_rng(seed).permutation(n)

    if mode == "holdout":
        if not 0 < holdout <= 1:
            msg = "Holdout fraction must lie in (0, 1], got %r."
            raise SplitError(msg % holdout)
        cut = int(round(holdout * n))
        return [Split("holdout", np.sort(order[:cut]), np.sort(order[cut:]))]

    if mode == "kfold":
        if k < 2 or k > n:
            msg = "k-fold needs 2 <= k <= n, got k=%d for n=%d."
            raise SplitError(msg % (k, n))
        folds = np.array_split(order, k)
        return [
            Split(
                "fold-%d" % index,
                np.sort(np.concatenate([fold for other, fold in enumerate(folds) if other != index])),
                np.sort(folds[index]),
            )
            for index in range(k)
        ]

    msg = "Unknown split mode '%s'."
    raise SplitError(msg % mode)
