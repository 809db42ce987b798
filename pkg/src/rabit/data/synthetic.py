"""Procedural polyp phantoms: textured tissue background with soft elliptical blobs."""
from typing import NamedTuple

import numpy as np
from scipy import special

from rabit.config import SyntheticSpec
from rabit.engine.ops import interpolation_matrix

MIN_SEMI_AXIS = 2.0
BOUNDARY_SHARPNESS = 6.0

TISSUE_COLOUR = np.array([0.78, 0.45, 0.40])
# per-label colour shift of a blob relative to the background
BLOB_TINT = {
    1: np.array([0.16, -0.06, -0.08]),
    2: np.array([-0.02, 0.12, 0.10]),
}


class Sample(NamedTuple):
    image_id: str
    image: np.ndarray  # 3 x H x W float32 in [0, 1]
    mask: np.ndarray  # H x W uint8 labels


def sample_id(index: int) -> str:
    return "%05d" % index


def value_noise(rng: np.random.Generator, size: int, octaves: int) -> np.ndarray:
    """3 x size x size smooth noise in [0, 1] from bilinearly upsampled random grids."""
    noise = np.zeros((3, size, size))
    total = 0.0
    for octave in range(octaves):
        grid = min(size, 2 ** (octave + 2))
        upsample = interpolation_matrix(grid, size)
        amplitude = 0.5**octave
        noise += amplitude * (upsample @ rng.random((3, grid, grid)) @ upsample.T)
        total += amplitude
    return noise / max(total, 1e-12)


def generate_sample(spec: SyntheticSpec, index: int) -> Sample:
    """Fully determined by (spec.seed, index)."""
    rng = np.random.default_rng([spec.seed, index])
    size = spec.size

    tint = TISSUE_COLOUR + rng.uniform(-0.08, 0.08, 3)
    texture = value_noise(rng, size, spec.texture_octaves) if spec.texture_octaves else np.full((3, size, size), 0.5)
    image = tint[:, None, None] + 0.3 * (texture - 0.5)
    mask = np.zeros((size, size), dtype=np.uint8)

    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    blobs = rng.integers(spec.n_blobs[0], spec.n_blobs[1] + 1)
    for _ in range(blobs):
        label = 1 if spec.blob_class_probs is None else 1 + int(rng.choice(2, p=spec.blob_class_probs))

        centre = rng.uniform(0.15, 0.85, 2) * size
        semi_axes = np.maximum(rng.uniform(*spec.axis_range, 2) * size, MIN_SEMI_AXIS)
        angle = rng.uniform(0.0, np.pi)
        intensity = rng.uniform(0.7, 1.3)

        dr, dc = rows - centre[0], cols - centre[1]
        along = dr * np.cos(angle) + dc * np.sin(angle)
        across = -dr * np.sin(angle) + dc * np.cos(angle)
        radius = np.sqrt((along / semi_axes[0]) ** 2 + (across / semi_axes[1]) ** 2)

        alpha = special.expit(BOUNDARY_SHARPNESS * (1.0 - radius) * min(semi_axes) / 4.0)
        colour = image + intensity * BLOB_TINT[label][:, None, None]
        image = image * (1 - alpha) + colour * alpha
        mask[radius <= 1.0] = label

    return Sample(sample_id(index), np.clip(image, 0.0, 1.0).astype(np.float32), mask)
