import threading

import pytest

from rabit.training.prefetch import BatchPrefetcher


@pytest.mark.parametrize("depth", [0, 1, 3])
def test_items_arrive_in_order(depth):
    assert list(BatchPrefetcher(lambda index: index * index, count=6, depth=depth)) == [0, 1, 4, 9, 16, 25]


def test_inline_mode_runs_on_the_calling_thread():
    threads = []

    list(BatchPrefetcher(lambda index: threads.append(threading.current_thread()), count=2, depth=0))

    assert threads == [threading.current_thread()] * 2


def test_background_mode_uses_a_worker_thread():
    threads = []

    list(BatchPrefetcher(lambda index: threads.append(threading.current_thread()), count=2, depth=2))

    assert threading.current_thread() not in threads


def test_producer_errors_reach_the_consumer():
    def produce(index: int) -> int:
        if index == 2:
            raise RuntimeError("bad sample")
        return index

    received = []
    with pytest.raises(RuntimeError, match="bad sample"):
        for item in BatchPrefetcher(produce, count=5, depth=2):
            received.append(item)

    assert received == [0, 1]


def test_closing_early_stops_the_worker():
    produced = []
    prefetcher = BatchPrefetcher(lambda index: produced.append(index) or index, count=1000, depth=1)

    for item in prefetcher:
        if item == 1:
            break
    prefetcher.close()

    assert len(produced) < 10
