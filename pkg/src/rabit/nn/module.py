from collections import OrderedDict
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Tuple

import numpy as np

from rabit.engine.tensor import Tensor
from rabit.errors import CheckpointError


class Parameter(Tensor):
    def __init__(self, data: Any, dtype: Any = None) -> None:
        super().__init__(data, requires_grad=True, dtype=dtype)


class Module:
    """
    Container of parameters, buffers and sub-modules.

    Parameters and sub-modules are discovered from instance attributes in assignment
    order, which fixes the naming and ordering used by checkpoints.
    """

    def __init__(self) -> None:
        self.training = True
        self._buffers: Dict[str, np.ndarray] = OrderedDict()

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def children(self) -> Iterator[Tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self.children():
            yield from child.modules()

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
        for name, child in self.children():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, value in self._buffers.items():
            yield prefix + name, value
        for name, child in self.children():
            yield from child.named_buffers(prefix + name + ".")

    def state_dict(self) -> Dict[str, np.ndarray]:
        state: Dict[str, np.ndarray] = OrderedDict()
        for name, param in self.named_parameters():
            state[name] = param.data.copy()
        for name, buffer in self.named_buffers():
            state[name] = buffer.copy()
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        buffers = dict(self.named_buffers())

        expected = set(params) | set(buffers)
        missing, unexpected = expected - set(state), set(state) - expected
        if missing or unexpected:
            msg = "State does not match the model: missing %s, unexpected %s."
            raise CheckpointError(msg % (sorted(missing), sorted(unexpected)))

        for name, value in state.items():
            target = params[name].data if name in params else buffers[name]
            if target.shape != value.shape:
                msg = "Entry '%s' has shape %s, the model expects %s."
                raise CheckpointError(msg % (name, value.shape, target.shape))

        for name, value in state.items():
            if name in params:
                params[name].data = np.array(value, dtype=params[name].dtype)
            else:
                buffers[name][...] = value

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()


class ModuleList(Module):
    def __init__(self, modules: Iterable[Module] = ()) -> None:
        super().__init__()
        self._items: List[Module] = list(modules)

    def children(self) -> Iterator[Tuple[str, Module]]:
        for index, module in enumerate(self._items):
            yield str(index), module

    def append(self, module: Module) -> None:
        self._items.append(module)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]


class Sequential(ModuleList):
    def forward(self, x: Tensor) -> Tensor:
        for module in self._items:
            x = module(x)
        return x


def count_parameters(module: Module) -> int:
    return int(sum(param.size for param in module.parameters()))
