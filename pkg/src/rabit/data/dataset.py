import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from rabit.config import CONFIG_VERSION, SyntheticSpec, spec_hash
from rabit.data.synthetic import Sample, generate_sample
from rabit.errors import ConfigError
from rabit.telemetry.logs import Logs

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def normalize(
    image: np.ndarray, mean: Sequence[float] = IMAGENET_MEAN, std: Sequence[float] = IMAGENET_STD
) -> np.ndarray:
    mean_arr = np.asarray(mean, dtype=np.float32).reshape(3, 1, 1)
    std_arr = np.asarray(std, dtype=np.float32).reshape(3, 1, 1)
    return ((image - mean_arr) / std_arr).astype(np.float32)


class SyntheticDataset:
    """Phantoms generated on demand from (spec.seed, index)."""

    def __init__(self, spec: SyntheticSpec, indices: Iterable[int]) -> None:
        self.spec = spec
        self.indices = [int(index) for index in indices]

    @property
    def name(self) -> str:
        return "synthetic-%d" % self.spec.seed

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, position: int) -> Sample:
        return generate_sample(self.spec, self.indices[position])

    def __iter__(self) -> Iterator[Sample]:
        for position in range(len(self)):
            yield self[position]


class DiskDataset:
    """A split directory written by `write_split`: images/*.npy, masks/*.png and a manifest."""

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        manifest_path = self.root / MANIFEST
        if not manifest_path.is_file():
            msg = "No dataset manifest at '%s'."
            raise ConfigError(msg % manifest_path)

        self.manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if self.manifest.get("version") != CONFIG_VERSION:
            msg = "Unsupported dataset version '%s' in '%s'."
            raise ConfigError(msg % (self.manifest.get("version"), manifest_path))

        self.spec = SyntheticSpec.parse_obj(self.manifest["spec"])
        self.ids: List[str] = list(self.manifest["ids"])
        logger.info(Logs.RABIT_DATASET_LOADED, extra={"path": str(self.root), "samples": len(self.ids)})

    @property
    def name(self) -> str:
        """The directory name, prefixed by its fold for k-fold layouts (`fold-0-val`)."""
        if self.root.parent.name.startswith("fold-"):
            return "%s-%s" % (self.root.parent.name, self.root.name)
        return self.root.name

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, position: int) -> Sample:
        image_id = self.ids[position]
        image = np.load(self.root / "images" / ("%s.npy" % image_id))
        with Image.open(self.root / "masks" / ("%s.png" % image_id)) as png:
            mask = np.asarray(png.convert("L"), dtype=np.uint8).copy()
        return Sample(image_id, image, mask)

    def __iter__(self) -> Iterator[Sample]:
        for position in range(len(self)):
            yield self[position]


def write_split(root: Union[str, Path], spec: SyntheticSpec, indices: Iterable[int]) -> Path:
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)

    ids: List[str] = []
    seeds: List[Tuple[int, int]] = []
    for index in indices:
        sample = generate_sample(spec, int(index))
        np.save(root / "images" / ("%s.npy" % sample.image_id), sample.image)
        Image.fromarray(sample.mask, "L").save(root / "masks" / ("%s.png" % sample.image_id))
        ids.append(sample.image_id)
        seeds.append((spec.seed, int(index)))

    manifest = {
        "version": CONFIG_VERSION,
        "ids": ids,
        "seeds": seeds,
        "spec_hash": spec_hash(spec),
        "spec": json.loads(spec.json()),
    }
    (root / MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    logger.info(Logs.RABIT_DATASET_WRITTEN, extra={"path": str(root), "samples": len(ids)})
    return root
