import threading
from collections import Counter
from contextlib import contextmanager
from typing import Iterator, List

_active = threading.local()


class MacCounter:
    """
    Collects multiply-accumulate counts of the ops executed while it is active.

    Matmul-like ops (conv, linear, matmul) land in `macs`;
    every other op only records how many elements it produced.
    """

    def __init__(self) -> None:
        self.macs: Counter = Counter()
        self.elements: Counter = Counter()

    @property
    def total_macs(self) -> int:
        return int(sum(self.macs.values()))

    @property
    def flops(self) -> int:
        return 2 * self.total_macs


def _counters() -> List[MacCounter]:
    if not hasattr(_active, "counters"):
        _active.counters = []
    return _active.counters


@contextmanager
def count_macs() -> Iterator[MacCounter]:
    counter = MacCounter()
    counters = _counters()
    counters.append(counter)
    try:
        yield counter
    finally:
        counters.remove(counter)


def record_macs(op: str, macs: int) -> None:
    for counter in _counters():
        counter.macs[op] += int(macs)


def record_elements(op: str, elements: int) -> None:
    for counter in _counters():
        counter.elements[op] += int(elements)
