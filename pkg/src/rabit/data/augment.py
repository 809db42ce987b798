"""
Mask-consistent augmentation.

Images are 3 x H x W floats in [0, 1], masks H x W integer labels. Geometric transforms
move image and mask together (mask resampling is nearest-neighbour); photometric
transforms touch the image only. Every draw comes from the caller's generator, and the
names of the transforms that fired are appended to `applied` when it is given.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from rabit.config import AugmentationConfig
from rabit.engine.ops import interpolation_matrix

Pair = Tuple[np.ndarray, np.ndarray]


def resize_image(image: np.ndarray, height: int, width: int) -> np.ndarray:
    if image.shape[1:] == (height, width):
        return image.copy()
    rows = interpolation_matrix(image.shape[1], height)
    cols = interpolation_matrix(image.shape[2], width)
    return (rows @ image.astype(np.float64) @ cols.T).astype(image.dtype)


def _nearest_indices(in_size: int, out_size: int) -> np.ndarray:
    return np.minimum(np.floor((np.arange(out_size) + 0.5) * in_size / out_size).astype(np.int64), in_size - 1)


def resize_mask(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    if mask.shape == (height, width):
        return mask.copy()
    return mask[np.ix_(_nearest_indices(mask.shape[0], height), _nearest_indices(mask.shape[1], width))]


def _note(applied: Optional[List[str]], name: str) -> None:
    if applied is not None:
        applied.append(name)


# geometric, shared by image and mask


def rotate90(image: np.ndarray, mask: np.ndarray, k: int) -> Pair:
    return np.rot90(image, k, axes=(1, 2)).copy(), np.rot90(mask, k).copy()


def flip(image: np.ndarray, mask: np.ndarray, code: int) -> Pair:
    """code 0 flips rows, 1 flips columns, -1 both."""
    axes = {0: (0,), 1: (1,), -1: (0, 1)}[code]
    return np.flip(image, tuple(a + 1 for a in axes)).copy(), np.flip(mask, axes).copy()


def transpose(image: np.ndarray, mask: np.ndarray) -> Pair:
    return image.transpose(0, 2, 1).copy(), mask.T.copy()


def crop(image: np.ndarray, mask: np.ndarray, top: int, left: int, height: int, width: int) -> Pair:
    return (
        image[:, top:top + height, left:left + width].copy(),
        mask[top:top + height, left:left + width].copy(),
    )


# photometric, image only


def shift_hsv(image: np.ndarray, hue: float, saturation: float, value: float) -> np.ndarray:
    pixels = np.round(np.clip(image, 0, 1).transpose(1, 2, 0) * 255).astype(np.uint8)
    hsv = np.asarray(Image.fromarray(pixels, "RGB").convert("HSV")).astype(np.int16)

    hsv[..., 0] = (hsv[..., 0] + int(round(hue * 255))) % 256
    hsv[..., 1] = np.clip(hsv[..., 1] + int(round(saturation * 255)), 0, 255)
    hsv[..., 2] = np.clip(hsv[..., 2] + int(round(value * 255)), 0, 255)

    rgb = np.asarray(Image.fromarray(hsv.astype(np.uint8), "HSV").convert("RGB"))
    return (rgb.transpose(2, 0, 1) / 255.0).astype(image.dtype)


def brightness_contrast(image: np.ndarray, brightness: float, contrast: float) -> np.ndarray:
    return np.clip(image * (1.0 + contrast) + brightness, 0.0, 1.0).astype(image.dtype)


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    return ndimage.gaussian_filter(image, sigma=(0, sigma, sigma)).astype(image.dtype)


def augment_binary(
    image: np.ndarray,
    mask: np.ndarray,
    rng: np.random.Generator,
    config: AugmentationConfig = AugmentationConfig(),
    size: Optional[int] = None,
    applied: Optional[List[str]] = None,
) -> Pair:
    """
    Master gate, then rotate90 / flip / HSV / brightness-contrast / blur / transpose each
    at `p_transform`, then a random-or-centre crop at `p_crop`, always followed by a resize
    back to `size` (defaults to the input size).
    """
    out_h, out_w = (size, size) if size is not None else image.shape[1:]

    if rng.random() < config.p_apply:
        _note(applied, "apply")

        if rng.random() < config.p_transform:
            image, mask = rotate90(image, mask, int(rng.integers(0, 4)))
            _note(applied, "rotate90")

        if rng.random() < config.p_transform:
            image, mask = flip(image, mask, int(rng.integers(-1, 2)))
            _note(applied, "flip")

        if rng.random() < config.p_transform:
            image = shift_hsv(
                image,
                rng.uniform(-config.hue_shift, config.hue_shift),
                rng.uniform(-config.saturation_shift, config.saturation_shift),
                rng.uniform(-config.value_shift, config.value_shift),
            )
            _note(applied, "hsv")

        if rng.random() < config.p_transform:
            image = brightness_contrast(
                image,
                rng.uniform(-config.brightness_limit, config.brightness_limit),
                rng.uniform(-config.contrast_limit, config.contrast_limit),
            )
            _note(applied, "brightness_contrast")

        if rng.random() < config.p_transform:
            image = gaussian_blur(image, rng.uniform(*config.blur_sigma))
            _note(applied, "blur")

        if rng.random() < config.p_transform:
            image, mask = transpose(image, mask)
            _note(applied, "transpose")

        if rng.random() < config.p_crop:
            height, width = image.shape[1:]
            crop_h = max(1, int(round(height * config.crop_fraction)))
            crop_w = max(1, int(round(width * config.crop_fraction)))
            if rng.random() < 0.5:
                top = int(rng.integers(0, height - crop_h + 1))
                left = int(rng.integers(0, width - crop_w + 1))
                _note(applied, "random_crop")
            else:
                top, left = (height - crop_h) // 2, (width - crop_w) // 2
                _note(applied, "center_crop")
            image, mask = crop(image, mask, top, left, crop_h, crop_w)
            _note(applied, "crop")

    return resize_image(image, out_h, out_w), resize_mask(mask, out_h, out_w)


@dataclass(frozen=True)
class AffineParams:
    rotation: float = 0.0  # degrees
    shear: float = 0.0  # degrees
    zoom: Tuple[float, float] = (1.0, 1.0)  # (rows, cols) magnification
    shift: Tuple[float, float] = (0.0, 0.0)  # (rows, cols) pixels
    flip_horizontal: bool = False
    flip_vertical: bool = False


def sample_affine(rng: np.random.Generator, config: AugmentationConfig, height: int, width: int) -> AffineParams:
    return AffineParams(
        rotation=rng.uniform(-config.rotation_range, config.rotation_range),
        shear=rng.uniform(-config.shear_range, config.shear_range),
        zoom=tuple(rng.uniform(1 - config.zoom_range, 1 + config.zoom_range, 2)),
        shift=(
            rng.uniform(-config.shift_range, config.shift_range) * height,
            rng.uniform(-config.shift_range, config.shift_range) * width,
        ),
        flip_horizontal=bool(rng.random() < 0.5),
        flip_vertical=bool(rng.random() < 0.5),
    )


def affine_matrix(params: AffineParams, height: int, width: int) -> np.ndarray:
    """3 x 3 map from input (row, col) to output (row, col), about the image centre."""
    theta = np.deg2rad(params.rotation)
    shear = np.deg2rad(params.shear)
    centre = np.array([(height - 1) / 2.0, (width - 1) / 2.0])

    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shearing = np.array([[1.0, -np.sin(shear)], [0.0, np.cos(shear)]])
    zoom = np.diag(params.zoom)
    linear = rotation @ shearing @ zoom

    matrix = np.eye(3)
    matrix[:2, :2] = linear
    matrix[:2, 2] = centre + np.asarray(params.shift) - linear @ centre
    return matrix


def affine_warp(image: np.ndarray, mask: np.ndarray, params: AffineParams) -> Pair:
    """Bilinear image / nearest mask resampling with constant 0 fill, then the flips."""
    height, width = mask.shape
    inverse = np.linalg.inv(affine_matrix(params, height, width))

    def warp(plane: np.ndarray, order: int) -> np.ndarray:
        return ndimage.affine_transform(
            plane, inverse[:2, :2], offset=inverse[:2, 2], order=order, mode="constant", cval=0.0
        )

    image = np.stack([warp(channel, 1) for channel in image.astype(np.float64)]).astype(np.float32)
    mask = warp(mask, 0).astype(mask.dtype)

    if params.flip_horizontal:
        image, mask = image[:, :, ::-1].copy(), mask[:, ::-1].copy()
    if params.flip_vertical:
        image, mask = image[:, ::-1, :].copy(), mask[::-1, :].copy()
    return image, mask


def _per_channel(rng: np.random.Generator, draw: Callable[[int], np.ndarray]) -> np.ndarray:
    channels = 3 if rng.random() < 0.5 else 1
    return draw(channels).reshape(channels, 1, 1)


def _blur_one_of(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    choice = int(rng.integers(0, 3))
    if choice == 0:
        sigma = rng.uniform(0.0, 1.5)
        return ndimage.gaussian_filter(image, sigma=(0, sigma, sigma))
    if choice == 1:
        size = int(rng.integers(2, 6))
        return ndimage.uniform_filter(image, size=(1, size, size), mode="reflect")
    size = int(rng.choice([3, 5]))
    return ndimage.median_filter(image, size=(1, size, size), mode="reflect")


def _sharpen(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    alpha = rng.uniform(0.0, 0.02)
    lightness = rng.uniform(0.95, 1.05)
    identity = np.zeros((3, 3))
    identity[1, 1] = 1.0
    effect = np.full((3, 3), -1.0)
    effect[1, 1] = 8.0 + lightness
    kernel = (1 - alpha) * identity + alpha * effect
    return np.stack([ndimage.convolve(channel, kernel, mode="reflect") for channel in image])


def _motion_blur(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    size = int(rng.integers(3, 8))
    kernel = np.zeros((size, size))
    kernel[size // 2, :] = 1.0
    kernel = np.clip(ndimage.rotate(kernel, rng.uniform(0.0, 360.0), reshape=False, order=1), 0.0, None)
    kernel /= max(kernel.sum(), 1e-12)
    return np.stack([ndimage.convolve(channel, kernel, mode="reflect") for channel in image])


def _gaussian_noise(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    scale = rng.uniform(0.0, 0.02)
    channels = 3 if rng.random() < 0.5 else 1
    return image + rng.normal(0.0, scale, (channels,) + image.shape[1:])


def _add(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return image + _per_channel(rng, lambda n: rng.uniform(-5 / 255, 5 / 255, n))


def _multiply(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return image * _per_channel(rng, lambda n: rng.uniform(0.95, 1.05, n))


def _contrast(image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return (image - 0.5) * _per_channel(rng, lambda n: rng.uniform(0.95, 1.05, n)) + 0.5


PHOTOMETRIC: Tuple[Tuple[str, Callable[[np.ndarray, np.random.Generator], np.ndarray]], ...] = (
    ("blur", _blur_one_of),
    ("sharpen", _sharpen),
    ("motion_blur", _motion_blur),
    ("gaussian_noise", _gaussian_noise),
    ("add", _add),
    ("multiply", _multiply),
    ("contrast", _contrast),
)


def augment_multiclass(
    image: np.ndarray,
    mask: np.ndarray,
    rng: np.random.Generator,
    config: AugmentationConfig = AugmentationConfig(pipeline="multiclass"),
    size: Optional[int] = None,
    applied: Optional[List[str]] = None,
) -> Pair:
    """Independent affine gate and a gate for 0-3 photometric transforms in random order."""
    if rng.random() < config.p_affine:
        image, mask = affine_warp(image, mask, sample_affine(rng, config, *mask.shape))
        _note(applied, "affine")

    if rng.random() < config.p_photometric:
        count = int(rng.integers(0, 4))
        pixels = image.astype(np.float64)
        for slot in rng.permutation(len(PHOTOMETRIC))[:count]:
            name, transform = PHOTOMETRIC[slot]
            pixels = np.clip(transform(pixels, rng), 0.0, 1.0)
            _note(applied, name)
        image = pixels.astype(np.float32)

    if size is not None:
        image, mask = resize_image(image, size, size), resize_mask(mask, size, size)
    return image, mask


def build_augmenter(config: Optional[AugmentationConfig]) -> Optional[Callable[..., Pair]]:
    if config is None:
        return None

    pipeline = augment_binary if config.pipeline == "binary" else augment_multiclass

    def augment(image: np.ndarray, mask: np.ndarray, rng: np.random.Generator) -> Pair:
        return pipeline(image, mask, rng, config)

    return augment
