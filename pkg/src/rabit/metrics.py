import csv
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from rabit.errors import LabelError, ShapeError

GENERIC = "generic"
DEFAULT_CLASS_NAMES = {1: "neoplastic", 2: "non_neoplastic"}
CSV_COLUMNS = ("image_id", "dice", "iou", "precision", "recall", "class")


class Confusion(NamedTuple):
    tp: int
    fp: int
    fn: int


class ImageMetrics(NamedTuple):
    dice: float
    iou: float
    precision: float
    recall: float


def confusion(pred: np.ndarray, gt: np.ndarray) -> Confusion:
    pred, gt = np.asarray(pred, dtype=bool), np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        msg = "Prediction %s and ground truth %s differ in shape."
        raise ShapeError(msg % (pred.shape, gt.shape))
    return Confusion(
        tp=int(np.count_nonzero(pred & gt)),
        fp=int(np.count_nonzero(pred & ~gt)),
        fn=int(np.count_nonzero(~pred & gt)),
    )


def scores_from_confusion(counts: Confusion) -> ImageMetrics:
    tp, fp, fn = counts
    if tp + fn == 0:
        # empty ground truth: perfect only if the prediction is empty too
        return ImageMetrics(1.0, 1.0, 1.0, 1.0) if fp == 0 else ImageMetrics(0.0, 0.0, 0.0, 1.0)

    return ImageMetrics(
        dice=2 * tp / (2 * tp + fp + fn),
        iou=tp / (tp + fp + fn),
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn),
    )


def segmentation_metrics(pred_probs: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> ImageMetrics:
    """Dice, IoU, precision and recall of one image after binarizing at `threshold` (inclusive)."""
    return scores_from_confusion(confusion(np.asarray(pred_probs) >= threshold, np.asarray(gt) > 0))


class MicroClassMetrics:
    """
    Dataset-level dice/IoU per class, from confusion counts summed over every image.

    The generic entry scores the union of all foreground classes against background.
    """

    def __init__(self, class_ids: Sequence[int], class_names: Optional[Mapping[int, str]] = None) -> None:
        names = dict(DEFAULT_CLASS_NAMES)
        names.update(class_names or {})
        self.class_ids = tuple(class_ids)
        self.names = {class_id: names.get(class_id, "class_%d" % class_id) for class_id in self.class_ids}
        self._valid = np.array((0,) + self.class_ids)
        self._counts: Dict[str, np.ndarray] = {name: np.zeros(3, dtype=np.int64) for name in self.names.values()}
        self._counts[GENERIC] = np.zeros(3, dtype=np.int64)

    def update(self, pred_labels: np.ndarray, gt_labels: np.ndarray) -> None:
        pred_labels, gt_labels = np.asarray(pred_labels), np.asarray(gt_labels)
        if pred_labels.shape != gt_labels.shape:
            msg = "Label maps differ in shape: %s vs %s."
            raise ShapeError(msg % (pred_labels.shape, gt_labels.shape))

        unknown = np.setdiff1d(np.union1d(np.unique(pred_labels), np.unique(gt_labels)), self._valid)
        if unknown.size:
            msg = "Unknown class ids %s (known: %s)."
            raise LabelError(msg % (unknown.tolist(), self._valid.tolist()))

        for class_id, name in self.names.items():
            self._counts[name] += confusion(pred_labels == class_id, gt_labels == class_id)
        self._counts[GENERIC] += confusion(pred_labels > 0, gt_labels > 0)

    def compute(self) -> Dict[str, ImageMetrics]:
        return {name: scores_from_confusion(Confusion(*map(int, counts))) for name, counts in self._counts.items()}


def micro_class_metrics(
    pred_labels: Iterable[np.ndarray], gt_labels: Iterable[np.ndarray], class_ids: Sequence[int]
) -> Dict[str, ImageMetrics]:
    accumulator = MicroClassMetrics(class_ids)
    for pred, gt in zip(pred_labels, gt_labels):
        accumulator.update(pred, gt)
    return accumulator.compute()


class ImageScores(BaseModel):
    image_id: str
    dice: float
    iou: float
    precision: float
    recall: float
    class_name: Optional[str] = None


class Aggregate(BaseModel):
    mean: float
    std: float


class ClassScores(BaseModel):
    dice: float
    iou: float


class Complexity(BaseModel):
    params: int
    flops: int
    input_size: int


class MetricsReport(BaseModel):
    dataset: str
    mode: Literal["binary", "multiclass"]
    config_hash: str
    per_image: List[ImageScores]
    aggregates: Dict[str, Aggregate]
    per_class: Dict[str, ClassScores] = {}
    complexity: Optional[Complexity] = None

    @staticmethod
    def aggregate(rows: Sequence[ImageScores]) -> Dict[str, Aggregate]:
        aggregates = {}
        for key in ImageMetrics._fields:
            values = np.array([getattr(row, key) for row in rows], dtype=np.float64)
            aggregates[key] = Aggregate(
                mean=float(values.mean()) if values.size else 0.0,
                std=float(values.std()) if values.size else 0.0,
            )
        return aggregates

    def scored_rows(self) -> List[ImageScores]:
        """Rows the aggregates are computed from: per image, or the generic rows in multiclass mode."""
        wanted = None if self.mode == "binary" else GENERIC
        return [row for row in self.per_image if row.class_name == wanted]

    @property
    def mean_dice(self) -> float:
        return self.aggregates["dice"].mean

    @property
    def mean_iou(self) -> float:
        return self.aggregates["iou"].mean

    def write_json(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.json(sort_keys=True, indent=2) + "\n", encoding="utf-8")

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream)
            writer.writerow(CSV_COLUMNS if self.mode == "multiclass" else CSV_COLUMNS[:-1])
            for row in self.per_image:
                values = [row.image_id, repr(row.dice), repr(row.iou), repr(row.precision), repr(row.recall)]
                if self.mode == "multiclass":
                    values.append(row.class_name or "")
                writer.writerow(values)


class RunSummary(BaseModel):
    """Spread of the headline metrics across repeated training runs."""

    reports: List[str]
    mean_dice: Aggregate
    mean_iou: Aggregate

    @classmethod
    def from_reports(cls, named: Mapping[str, MetricsReport]) -> "RunSummary":
        dices = np.array([report.mean_dice for report in named.values()])
        ious = np.array([report.mean_iou for report in named.values()])
        return cls(
            reports=list(named),
            mean_dice=Aggregate(mean=float(dices.mean()), std=float(dices.std())),
            mean_iou=Aggregate(mean=float(ious.mean()), std=float(ious.std())),
        )
