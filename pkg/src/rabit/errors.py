from typing import Mapping, Optional


class RabitError(Exception):
    """Base class for every error raised by rabit."""


class ShapeError(RabitError, ValueError):
    pass


class ConfigError(RabitError, ValueError):
    pass


class LabelError(RabitError, ValueError):
    pass


class SplitError(RabitError, ValueError):
    pass


class CheckpointError(RabitError):
    pass


class CheckpointMismatchError(CheckpointError):
    def __init__(self, expected: str, actual: str) -> None:
        msg = "Checkpoint was trained with config '%s', but '%s' was requested."
        super().__init__(msg % (actual, expected))
        self.expected = expected
        self.actual = actual


class NonFiniteLossError(RabitError, ArithmeticError):
    def __init__(self, step: int, lr: float, terms: Mapping[str, float], loss: Optional[float] = None) -> None:
        msg = "Non-finite loss %r at step %d (lr=%g); terms: %s"
        rendered = ", ".join("%s=%r" % item for item in terms.items())
        super().__init__(msg % (loss, step, lr, rendered))
        self.step = step
        self.lr = lr
        self.terms = dict(terms)
        self.loss = loss


class GradcheckError(RabitError, AssertionError):
    pass
