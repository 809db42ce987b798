import csv
import logging
import math
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rabit.config import TrainConfig, config_hash, dump_config
from rabit.data.augment import build_augmenter, resize_image, resize_mask
from rabit.data.dataset import normalize
from rabit.data.synthetic import Sample
from rabit.engine.tensor import Tensor, backward
from rabit.errors import ConfigError, NonFiniteLossError
from rabit.losses import deep_supervision_loss
from rabit.models.rabit import RaBiT
from rabit.signals import restore_signal_handlers, setup_signal_handlers
from rabit.telemetry.logs import Logs
from rabit.training.checkpoint import save_checkpoint, state_to_checkpoint
from rabit.training.optim import Adam, cosine_lr
from rabit.training.prefetch import BatchPrefetcher
from rabit.training.state import TrainerState

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "step", "scale", "loss", "lr")
LAST_CHECKPOINT = "last.ckpt"


@dataclass
class SampleBatch:
    images: np.ndarray  # N x 3 x S x S, normalized
    masks: np.ndarray  # N x S x S labels
    ids: List[str]
    scale: int
    # (seed, epoch, index) that drove each sample's augmentation
    seeds: List[Tuple[int, int, int]]


@dataclass
class BatchPlan:
    epoch: int
    batches: List[np.ndarray]
    scales: List[int]


def plan_epoch(config: TrainConfig, dataset_size: int, epoch: int) -> BatchPlan:
    """Shuffled batches and one uniformly drawn training scale per batch."""
    rng = np.random.default_rng([config.seed, epoch])
    order = rng.permutation(dataset_size)
    batches = [order[start:start + config.batch_size] for start in range(0, dataset_size, config.batch_size)]
    scales = [int(scale) for scale in rng.choice(config.scales, size=len(batches))]
    return BatchPlan(epoch, batches, scales)


def steps_per_epoch(config: TrainConfig, dataset_size: int) -> int:
    return math.ceil(dataset_size / config.batch_size)


class Trainer:
    """
    Multi-scale training loop with deep supervision, Adam and cosine annealing.

    SIGTERM finishes the running epoch (its checkpoint included) and stops;
    SIGINT stops after the running step and writes `last.ckpt` right away.
    """

    def __init__(self, config: TrainConfig, dataset: Any, out_dir: Union[str, Path]) -> None:
        if len(dataset) == 0:
            msg = "Cannot train on an empty dataset."
            raise ConfigError(msg)

        self._config = config
        self._dataset = dataset
        self._out_dir = Path(out_dir)
        self._state = TrainerState()

        self._model: Optional[RaBiT] = None
        self._optimizer: Optional[Adam] = None
        self._augment = build_augmenter(config.data.augmentation)
        self._total_steps = config.epochs * steps_per_epoch(config, len(dataset))
        self._log_rows: List[Dict[str, Any]] = []
        self._previous_handlers: Dict[int, Any] = {}

    @property
    def model(self) -> RaBiT:
        assert self._model is not None
        return self._model

    @property
    def state(self) -> TrainerState:
        return self._state

    @property
    def log_rows(self) -> List[Dict[str, Any]]:
        return self._log_rows

    def startup(self) -> None:
        config = self._config
        self._out_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, self._out_dir / "config.yaml")

        self._model = RaBiT(config.model, seed=config.seed)
        self._optimizer = Adam(self._model.named_parameters(), betas=config.betas, eps=config.adam_eps)
        self._previous_handlers = setup_signal_handlers(self)

        with open(self._out_dir / "train_log.csv", "w", newline="", encoding="utf-8") as stream:
            csv.writer(stream).writerow(LOG_COLUMNS)

        logger.info(
            Logs.RABIT_TRAIN_STARTED,
            extra={
                "epochs": config.epochs,
                "steps": self._total_steps,
                "samples": len(self._dataset),
                "config_hash": config_hash(config.model),
            },
        )

    def fit(self) -> Path:
        """Trains for the configured epochs and returns the path of the last checkpoint."""
        self.startup()
        try:
            for epoch in range(self._config.epochs):
                self._state.epoch = epoch
                self._run_epoch(epoch)

                if self._state.forceful_stop.is_set():
                    break

                self._save(epoch, "epoch-%03d.ckpt" % epoch)
                if self._state.graceful_stop.is_set():
                    break
        finally:
            self.shutdown()

        assert self._state.last_checkpoint is not None
        return self._state.last_checkpoint

    def _run_epoch(self, epoch: int) -> None:
        plan = plan_epoch(self._config, len(self._dataset), epoch)
        logger.info(Logs.RABIT_TRAIN_EPOCH_STARTED, extra={"epoch": epoch, "batches": len(plan.batches)})

        batches = BatchPrefetcher(
            lambda index: self.prepare_batch(epoch, plan.batches[index], plan.scales[index]),
            count=len(plan.batches),
            depth=self._config.prefetch,
        )
        for batch in batches:
            self.train_step(batch, epoch)
            if self._state.forceful_stop.is_set():
                batches.close()
                break

    def prepare_batch(self, epoch: int, indices: Sequence[int], scale: int) -> SampleBatch:
        data = self._config.data
        images, masks, ids, seeds = [], [], [], []

        for index in indices:
            sample: Sample = self._dataset[int(index)]
            image, mask = sample.image, sample.mask
            if self._augment is not None:
                rng = np.random.default_rng([self._config.seed, epoch, int(index)])
                image, mask = self._augment(image, mask, rng)

            images.append(normalize(resize_image(image, scale, scale), data.mean, data.std))
            masks.append(resize_mask(mask, scale, scale))
            ids.append(sample.image_id)
            seeds.append((self._config.seed, epoch, int(index)))

        return SampleBatch(np.stack(images), np.stack(masks), ids, scale, seeds)

    def train_step(self, batch: SampleBatch, epoch: int) -> float:
        model, optimizer = self.model, self._optimizer
        assert optimizer is not None

        step = self._state.step
        lr = cosine_lr(step, self._total_steps, self._config.lr)

        model.train()
        model.zero_grad()
        outputs = model(Tensor(batch.images.astype(model.dtype)))
        loss = deep_supervision_loss(outputs, batch.masks, self._config.loss)
        value = loss.total.item()

        if not math.isfinite(value):
            logger.error(Logs.RABIT_TRAIN_NON_FINITE_LOSS, extra={"step": step, "lr": lr, "terms": loss.terms})
            raise NonFiniteLossError(step, lr, loss.terms, value)

        backward(loss.total)
        optimizer.step(lr)

        row = {"epoch": epoch, "step": step, "scale": batch.scale, "loss": value, "lr": lr}
        self._log_rows.append(row)
        with open(self._out_dir / "train_log.csv", "a", newline="", encoding="utf-8") as stream:
            csv.writer(stream).writerow([epoch, step, batch.scale, repr(value), repr(lr)])

        self._state.step = step + 1
        self._state.last_loss = value
        logger.debug(Logs.RABIT_TRAIN_STEP, extra=row)
        return value

    def _save(self, epoch: int, name: str) -> Path:
        optimizer = self._optimizer
        assert optimizer is not None

        checkpoint = state_to_checkpoint(
            epoch=epoch,
            step=self._state.step,
            config_hash=config_hash(self._config.model),
            model_config=self._config.model.dict(),
            model_state=self.model.state_dict(),
            optimizer_state=optimizer.state_dict(),
            extra={
                "seed": self._config.seed,
                "optimizer_steps": optimizer.steps,
                "mean": list(self._config.data.mean),
                "std": list(self._config.data.std),
            },
        )
        path = save_checkpoint(self._out_dir / name, checkpoint)
        if name != LAST_CHECKPOINT:
            shutil.copyfile(path, self._out_dir / LAST_CHECKPOINT)
            self._state.checkpoints.append(path)

        self._state.last_checkpoint = self._out_dir / LAST_CHECKPOINT
        logger.info(Logs.RABIT_CHECKPOINT_SAVED, extra={"path": str(path), "epoch": epoch, "step": self._state.step})
        return path

    def on_shutdown_signal(self, graceful_shutdown: bool = True, signal: Optional[int] = None) -> None:
        logger.info(Logs.RABIT_TRAIN_SIGNAL_RECEIVED, extra={"signal": signal})

        if graceful_shutdown:
            logger.info(Logs.RABIT_TRAIN_SHUTDOWN_GRACEFUL)
            self._state.graceful_stop.set()
            return

        logger.info(Logs.RABIT_TRAIN_SHUTDOWN_FORCEFUL)
        self._state.forceful_stop.set()

    def shutdown(self) -> None:
        restore_signal_handlers(self._previous_handlers)
        self._previous_handlers = {}

        if self._state.forceful_stop.is_set() and self._model is not None:
            self._save(self._state.epoch, LAST_CHECKPOINT)

        logger.info(
            Logs.RABIT_TRAIN_COMPLETED,
            extra={"step": self._state.step, "loss": self._state.last_loss, "stopped": self._state.stopping},
        )


def train(config: TrainConfig, dataset: Any, out_dir: Union[str, Path]) -> Path:
    return Trainer(config, dataset, out_dir).fit()
