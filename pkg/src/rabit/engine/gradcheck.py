from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from rabit.engine import ops
from rabit.engine.tensor import Tensor, backward, no_grad
from rabit.errors import GradcheckError

STEP = 1e-4


@dataclass
class GradcheckResult:
    name: str
    max_error: float
    checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic) + np.abs(numeric))


def gradcheck(
    fn: Callable[..., Tensor],
    inputs: Sequence[np.ndarray],
    name: str = "gradcheck",
    tolerance: float = 1e-4,
    max_elements: Optional[int] = None,
    seed: int = 0,
    step: float = STEP,
) -> GradcheckResult:
    """
    Compares reverse-mode gradients of `fn` with 64-bit central differences.

    Non-scalar outputs are reduced with a fixed random projection so every output
    element contributes. With `max_elements`, each input is perturbed at that many
    randomly chosen positions instead of everywhere. Perturbations move by `step` scaled
    with the magnitude of the perturbed value.
    """
    rng = np.random.default_rng(seed)
    arrays = [np.array(value, dtype=np.float64) for value in inputs]
    leaves = [Tensor(array.copy(), requires_grad=True) for array in arrays]

    output = fn(*leaves)
    projection = rng.standard_normal(output.shape) if output.size != 1 else np.ones(output.shape)
    backward(ops.sum(ops.mul(output, Tensor(projection))))

    def objective(values: List[np.ndarray]) -> float:
        with no_grad():
            return float((fn(*[Tensor(value) for value in values]).data * projection).sum())

    worst = 0.0
    checked = 0
    for array, leaf in zip(arrays, leaves):
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(array)
        indices = np.arange(array.size)
        if max_elements is not None and array.size > max_elements:
            indices = rng.choice(array.size, size=max_elements, replace=False)

        for flat_index in indices:
            index = np.unravel_index(flat_index, array.shape)
            original = array[index]
            h = step * max(1.0, abs(original))

            array[index] = original + h
            upper = objective(arrays)
            array[index] = original - h
            lower = objective(arrays)
            array[index] = original

            numeric = (upper - lower) / (2 * h)
            worst = max(worst, float(relative_error(analytic[index], numeric)))
            checked += 1

    return GradcheckResult(name=name, max_error=worst, checked=checked, tolerance=tolerance)


def assert_gradcheck(result: GradcheckResult) -> GradcheckResult:
    if not result.passed:
        msg = "Gradient check '%s' failed: max relative error %.3e >= %.1e over %d elements."
        raise GradcheckError(msg % (result.name, result.max_error, result.tolerance, result.checked))
    return result
