import logging
import signal
from typing import TYPE_CHECKING, Any, Dict

from rabit.telemetry.logs import Logs

if TYPE_CHECKING:
    from rabit.training.trainer import Trainer

logger = logging.getLogger(__name__)

GRACEFUL_SHUTDOWN_SIGNALS = (
    signal.SIGTERM,  # process managers and schedulers; the running epoch is finished first
)

FORCE_SHUTDOWN_SIGNALS = (
    signal.SIGINT,  # Ctrl+C; stops after the running step
)


def setup_signal_handlers(trainer: "Trainer") -> Dict[int, Any]:
    """Installs the trainer's handlers and returns the previous ones for `restore_signal_handlers`."""
    previous: Dict[int, Any] = {}

    try:
        for sig in GRACEFUL_SHUTDOWN_SIGNALS:
            previous[sig] = signal.signal(sig, lambda signum, _: trainer.on_shutdown_signal(True, signum))

        for sig in FORCE_SHUTDOWN_SIGNALS:
            previous[sig] = signal.signal(sig, lambda signum, _: trainer.on_shutdown_signal(False, signum))

    except ValueError:
        # signal handlers can only be installed from the main thread
        logger.warning(Logs.RABIT_TRAIN_SIGNALS_UNAVAILABLE)
        restore_signal_handlers(previous)
        return {}

    return previous


def restore_signal_handlers(previous: Dict[int, Any]) -> None:
    for sig, handler in previous.items():
        signal.signal(sig, handler)
