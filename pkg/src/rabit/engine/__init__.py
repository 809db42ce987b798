from rabit.engine.gradcheck import GradcheckResult, assert_gradcheck, gradcheck
from rabit.engine.profiler import MacCounter, count_macs
from rabit.engine.tensor import Graph, Node, Tensor, backward, is_grad_enabled, no_grad

__all__ = (
    "Graph",
    "GradcheckResult",
    "MacCounter",
    "Node",
    "Tensor",
    "assert_gradcheck",
    "backward",
    "count_macs",
    "gradcheck",
    "is_grad_enabled",
    "no_grad",
)
