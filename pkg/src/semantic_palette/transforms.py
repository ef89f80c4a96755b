"""Conversions between hard and soft layouts, plus the partial-editing helpers.

Augmented masks used for editing carry ``C + 1`` channels; the last one is
the background class that marks "keep the input here".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import AlphaOutOfRangeError, RegionOutOfBoundsError, ShapeMismatchError
from .layout import HardLayout

BLUR_TRUNCATE = 3.0
DEFAULT_ALPHA = 0.4


@dataclass(frozen=True)
class EditRegion:
    top: int
    left: int
    height: int
    width: int

    @classmethod
    def parse(cls, text: str) -> "EditRegion":
        """From a ``"top,left,height,width"`` string."""
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 4:
            raise RegionOutOfBoundsError(f"expected T,L,H,W, got {text!r}")
        return cls(*parts)

    def check(self, shape) -> None:
        rows, cols = shape[-2:]
        if self.height < 1 or self.width < 1:
            raise RegionOutOfBoundsError(f"empty region {self}")
        if self.top < 0 or self.left < 0 or self.top + self.height > rows or self.left + self.width > cols:
            raise RegionOutOfBoundsError(f"{self} does not fit in a {rows}x{cols} layout")

    @property
    def area(self) -> int:
        return self.height * self.width

    def slices(self) -> tuple[slice, slice]:
        return slice(self.top, self.top + self.height), slice(self.left, self.left + self.width)

    def pixel_mask(self, shape) -> np.ndarray:
        self.check(shape)
        inside = np.zeros(shape[-2:], dtype=bool)
        inside[self.slices()] = True
        return inside


def one_hot(layout: HardLayout) -> np.ndarray:
    c = layout.num_classes
    return (np.arange(c)[:, None, None] == layout.labels[None]).astype(np.float64)


def default_sigma(height: int) -> float:
    return max(1.0, height / 32)


def soften_ground_truth(layout: HardLayout, sigma: float | None = None, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Blend a Gaussian-blurred one-hot encoding with the original one.

    Each pixel keeps at least ``1 - alpha`` on its true class and at most
    ``alpha`` elsewhere, so ``alpha < 0.5`` guarantees the argmax is unchanged.
    The blur is separable, truncated at 3 sigma, with reflected borders.
    """
    if not 0.0 <= alpha < 0.5:
        raise AlphaOutOfRangeError(f"alpha must lie in [0, 0.5), got {alpha}")
    if sigma is None:
        sigma = default_sigma(layout.shape[0])
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    hard = one_hot(layout)
    if alpha == 0.0:
        return hard
    blurred = gaussian_filter(hard, sigma=(0.0, sigma, sigma), mode="reflect", truncate=BLUR_TRUNCATE)
    soft = alpha * blurred + (1.0 - alpha) * hard
    return soft / soft.sum(axis=0, keepdims=True)


def gumbel_sample(m, rng) -> HardLayout:
    """Draw one class per pixel from ``m`` with the Gumbel-max trick.

    ``rng`` is a ``numpy.random.Generator`` or a seed. Noise is drawn in
    row-major (row, column, class) order.
    """
    rng = np.random.default_rng(rng)
    m = np.asarray(m, dtype=np.float64)
    c, h, w = m.shape
    gumbel = rng.gumbel(size=(h, w, c)).transpose(2, 0, 1)
    with np.errstate(divide="ignore"):
        scores = np.log(m) + gumbel
    return HardLayout(np.argmax(scores, axis=0), c)


def mark_crop(mask, region: EditRegion) -> np.ndarray:
    """Set every class probability to ``1 / C`` inside ``region``."""
    mask = np.array(mask, dtype=np.float64)
    region.check(mask.shape)
    mask[(slice(None),) + region.slices()] = 1.0 / mask.shape[0]
    return mask


def merge_edit(generated, input_mask) -> np.ndarray:
    """Generated classes plus the input mask weighted by the background channel."""
    generated = np.asarray(generated, dtype=np.float64)
    input_mask = np.asarray(input_mask, dtype=np.float64)
    if generated.ndim != 3 or input_mask.ndim != 3:
        raise ShapeMismatchError("expected 3-D masks")
    if generated.shape[0] != input_mask.shape[0] + 1 or generated.shape[1:] != input_mask.shape[1:]:
        raise ShapeMismatchError(
            f"generated mask {generated.shape} must have one more channel than input {input_mask.shape}"
        )
    return generated[:-1] + generated[-1:] * input_mask


def edited_pixel_set(generated) -> np.ndarray:
    """Boolean H x W map of pixels whose dominant channel is not the background."""
    generated = np.asarray(generated, dtype=np.float64)
    return np.argmax(generated, axis=0) != generated.shape[0] - 1
