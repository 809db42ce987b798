import logging
import tempfile

from rabit.config import DataConfig, ModelConfig, SyntheticSpec, TrainConfig
from rabit.data import training_dataset
from rabit.training import evaluate, train

logging.basicConfig(
    level=logging.INFO,
    format='[%(asctime)s] %(levelname)s - %(name)s:%(lineno)d - %(message)s',
    datefmt='%H:%M:%S'
)


def overfit_config() -> TrainConfig:
    return TrainConfig(
        model=ModelConfig.preset("tiny"),
        data=DataConfig(synthetic=SyntheticSpec(size=96), num_samples=8, holdout=1.0, augmentation=None),
        lr=3e-3,
        scales=(96,),
        batch_size=4,
        epochs=150,
        prefetch=0,
    )


if __name__ == "__main__":
    config = overfit_config()
    dataset = training_dataset(config.data)

    with tempfile.TemporaryDirectory(prefix="rabit-") as out_dir:
        report = evaluate(train(config, dataset, out_dir), dataset)

    print('mDice %.4f  mIoU %.4f on %d training phantoms' % (report.mean_dice, report.mean_iou, len(dataset)))
