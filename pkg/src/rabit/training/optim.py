import math
from typing import Dict, Iterable, Tuple

import numpy as np

from rabit.errors import ConfigError, ShapeError
from rabit.nn import Parameter

MOMENT_PREFIXES = ("optim.m.", "optim.v.")


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One bias-corrected Adam update; `step` counts from 1. Returns new (param, m, v)."""
    if not param.shape == grad.shape == m.shape == v.shape:
        msg = "Adam shapes disagree: param %s, grad %s, moments %s / %s."
        raise ShapeError(msg % (param.shape, grad.shape, m.shape, v.shape))

    beta1, beta2 = betas
    m = beta1 * m + (1 - beta1) * grad
    v = beta2 * v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1**step)
    v_hat = v / (1 - beta2**step)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


def cosine_lr(step: int, total_steps: int, lr0: float) -> float:
    if total_steps < 1 or not 0 <= step <= total_steps:
        msg = "Scheduler step %d is outside [0, %d]."
        raise ConfigError(msg % (step, total_steps))
    return 0.5 * lr0 * (1.0 + math.cos(math.pi * step / total_steps))


class Adam:
    def __init__(
        self,
        named_params: Iterable[Tuple[str, Parameter]],
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.params: Dict[str, Parameter] = dict(named_params)
        self.betas = betas
        self.eps = eps
        self.steps = 0
        self.m = {name: np.zeros_like(param.data) for name, param in self.params.items()}
        self.v = {name: np.zeros_like(param.data) for name, param in self.params.items()}

    def step(self, lr: float) -> None:
        self.steps += 1
        for name, param in self.params.items():
            if param.grad is None:
                continue
            updated, self.m[name], self.v[name] = adam_step(
                param.data, param.grad, self.m[name], self.v[name], self.steps, lr, self.betas, self.eps
            )
            param.data = updated.astype(param.dtype)

    def state_dict(self) -> Dict[str, np.ndarray]:
        state: Dict[str, np.ndarray] = {}
        for name in self.params:
            state[MOMENT_PREFIXES[0] + name] = self.m[name]
        for name in self.params:
            state[MOMENT_PREFIXES[1] + name] = self.v[name]
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], steps: int) -> None:
        for name, param in self.params.items():
            self.m[name] = np.array(state[MOMENT_PREFIXES[0] + name], dtype=param.dtype)
            self.v[name] = np.array(state[MOMENT_PREFIXES[1] + name], dtype=param.dtype)
        self.steps = steps
