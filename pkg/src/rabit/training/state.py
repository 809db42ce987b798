import threading
from pathlib import Path
from typing import List, Optional


class TrainerState:
    def __init__(self) -> None:
        self.epoch = 0
        self.step = 0
        self.last_loss: Optional[float] = None
        self.last_checkpoint: Optional[Path] = None
        self.checkpoints: List[Path] = []

        self.graceful_stop = threading.Event()
        self.forceful_stop = threading.Event()

    @property
    def stopping(self) -> bool:
        return self.graceful_stop.is_set() or self.forceful_stop.is_set()
