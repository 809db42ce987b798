from rabit.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from rabit.training.complexity import ComplexityReport, ablation_table, count_params_flops, repeat_trend
from rabit.training.evaluate import evaluate, load_model, predict
from rabit.training.optim import Adam, adam_step, cosine_lr
from rabit.training.trainer import Trainer, train

__all__ = (
    "Adam",
    "Checkpoint",
    "ComplexityReport",
    "Trainer",
    "ablation_table",
    "adam_step",
    "cosine_lr",
    "count_params_flops",
    "evaluate",
    "load_checkpoint",
    "load_model",
    "predict",
    "repeat_trend",
    "save_checkpoint",
    "train",
)
