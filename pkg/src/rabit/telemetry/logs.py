from enum import Enum


class Logs(str, Enum):
    RABIT_TRAIN_STARTED = "RABIT_TRAIN_STARTED"
    RABIT_TRAIN_EPOCH_STARTED = "RABIT_TRAIN_EPOCH_STARTED"
    RABIT_TRAIN_STEP = "RABIT_TRAIN_STEP"
    RABIT_TRAIN_NON_FINITE_LOSS = "RABIT_TRAIN_NON_FINITE_LOSS"
    RABIT_TRAIN_COMPLETED = "RABIT_TRAIN_COMPLETED"

    RABIT_TRAIN_SIGNAL_RECEIVED = "RABIT_TRAIN_SIGNAL_RECEIVED"
    RABIT_TRAIN_SHUTDOWN_GRACEFUL = "RABIT_TRAIN_SHUTDOWN_GRACEFUL"
    RABIT_TRAIN_SHUTDOWN_FORCEFUL = "RABIT_TRAIN_SHUTDOWN_FORCEFUL"
    RABIT_TRAIN_SIGNALS_UNAVAILABLE = "RABIT_TRAIN_SIGNALS_UNAVAILABLE"

    RABIT_CHECKPOINT_SAVED = "RABIT_CHECKPOINT_SAVED"
    RABIT_CHECKPOINT_LOADED = "RABIT_CHECKPOINT_LOADED"

    RABIT_PREFETCH_FAILED = "RABIT_PREFETCH_FAILED"

    RABIT_EVAL_STARTED = "RABIT_EVAL_STARTED"
    RABIT_EVAL_COMPLETED = "RABIT_EVAL_COMPLETED"
    RABIT_REPORT_WRITTEN = "RABIT_REPORT_WRITTEN"

    RABIT_DATASET_WRITTEN = "RABIT_DATASET_WRITTEN"
    RABIT_DATASET_LOADED = "RABIT_DATASET_LOADED"

    RABIT_GRADCHECK_CASE = "RABIT_GRADCHECK_CASE"
    RABIT_COMMAND_FAILED = "RABIT_COMMAND_FAILED"
