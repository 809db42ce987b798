from pathlib import Path
from typing import Dict, Union

from rabit.config import DataConfig, DatasetSpecFile
from rabit.data.augment import augment_binary, augment_multiclass, build_augmenter, resize_image, resize_mask
from rabit.data.dataset import DiskDataset, SyntheticDataset, normalize, write_split
from rabit.data.splits import Split, make_splits
from rabit.data.synthetic import Sample, generate_sample


def training_dataset(data: DataConfig) -> Union[DiskDataset, SyntheticDataset]:
    """The cached split at `data_dir`, or the training side of a holdout split of on-demand phantoms."""
    if data.data_dir is not None:
        return DiskDataset(data.data_dir)

    (split,) = make_splits(data.num_samples, mode="holdout", seed=data.synthetic.seed, holdout=data.holdout)
    return SyntheticDataset(data.synthetic, split.train)


def write_dataset(out: Union[str, Path], document: DatasetSpecFile) -> Dict[str, Path]:
    """One directory per split: train/val for holdout, fold-<i>/train and fold-<i>/val for kfold, all otherwise."""
    out = Path(out)
    if document.split == "none":
        return {"all": write_split(out / "all", document.spec, range(document.num_samples))}

    splits = make_splits(
        document.num_samples,
        mode=document.split,
        seed=document.spec.seed,
        holdout=document.holdout,
        k=document.folds,
    )
    if document.split == "holdout":
        (split,) = splits
        return {
            "train": write_split(out / "train", document.spec, split.train),
            "val": write_split(out / "val", document.spec, split.val),
        }
    written: Dict[str, Path] = {}
    for split in splits:
        written["%s/train" % split.name] = write_split(out / split.name / "train", document.spec, split.train)
        written["%s/val" % split.name] = write_split(out / split.name / "val", document.spec, split.val)
    return written


__all__ = (
    "DiskDataset",
    "Sample",
    "Split",
    "SyntheticDataset",
    "augment_binary",
    "augment_multiclass",
    "build_augmenter",
    "generate_sample",
    "make_splits",
    "normalize",
    "resize_image",
    "resize_mask",
    "training_dataset",
    "write_dataset",
    "write_split",
)
