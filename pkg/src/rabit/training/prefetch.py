import logging
import queue
import threading
from typing import Callable, Generic, Iterator, Optional, TypeVar

from rabit.telemetry.logs import Logs

logger = logging.getLogger(__name__)

T = TypeVar("T")

_DONE = object()


class BatchPrefetcher(Generic[T]):
    """
    Produces items 0..count-1 on a background thread into a bounded queue.

    Items come out in index order. A producer failure is re-raised in the consumer.
    With depth 0 items are produced inline on iteration.
    """

    def __init__(self, produce: Callable[[int], T], count: int, depth: int = 2) -> None:
        self._produce = produce
        self._count = count
        self._depth = depth
        self._queue: "queue.Queue[object]" = queue.Queue(maxsize=max(depth, 1))
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def _run(self) -> None:
        try:
            for index in range(self._count):
                if self._stop.is_set():
                    return
                self._put(self._produce(index))
        except BaseException as exc:  # noqa: B902
            logger.error(Logs.RABIT_PREFETCH_FAILED, extra={"error": repr(exc)})
            self._put(exc)
            return
        self._put(_DONE)

    def _put(self, item: object) -> None:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    def __iter__(self) -> Iterator[T]:
        if self._depth == 0:
            for index in range(self._count):
                yield self._produce(index)
            return

        self._thread = threading.Thread(target=self._run, name="rabit-prefetch", daemon=True)
        self._thread.start()
        try:
            while True:
                item = self._queue.get()
                if item is _DONE:
                    return
                if isinstance(item, BaseException):
                    raise item
                yield item  # type: ignore[misc]
        finally:
            self.close()

    def close(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
