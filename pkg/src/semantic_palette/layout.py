"""Core layout types and histogram computations.

Tensors are plain ``float64`` numpy arrays laid out as (class, row, column).
Only :class:`HardLayout` is wrapped, because its class count cannot be
recovered from the labels alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeEntryError,
    NonFiniteError,
    NotNormalizedError,
    LabelOutOfRangeError,
    ShapeMismatchError,
    TooFewClassesError,
)

PALETTE_TOL = 1e-6
MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HardLayout:
    """An H x W integer label map over ``num_classes`` classes."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ShapeMismatchError(f"labels must be a non-empty 2-D array, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise LabelOutOfRangeError("labels must be integers")
        labels = labels.astype(np.int64)
        if self.num_classes < 1:
            raise TooFewClassesError(f"num_classes must be positive, got {self.num_classes}")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise LabelOutOfRangeError(
                f"labels must lie in [0, {self.num_classes - 1}], "
                f"got range [{labels.min()}, {labels.max()}]"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, HardLayout):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.num_classes, self.labels.shape, self.labels.tobytes()))


def validate_palette(v) -> np.ndarray:
    """Check a raw vector is a class-proportion palette and renormalize it exactly.

    Sums within ``1e-6`` of one are accepted so that palettes survive a round
    trip through decimal text; anything further off is rejected rather than
    silently fixed.
    """
    p = np.asarray(v, dtype=np.float64).ravel()
    if p.size < 2:
        raise TooFewClassesError(f"a palette needs at least 2 classes, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise NonFiniteError("palette contains non-finite entries")
    if np.any(p < 0):
        raise NegativeEntryError(f"palette has negative entries: {p}")
    total = p.sum()
    if abs(total - 1.0) > PALETTE_TOL:
        raise NotNormalizedError(f"palette sums to {total!r}, expected 1")
    return p / total


def check_features(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3:
        raise ShapeMismatchError(f"expected a C x H x W tensor, got shape {f.shape}")
    if f.shape[0] < 2 or f.shape[1] < 1 or f.shape[2] < 1:
        raise ShapeMismatchError(f"need C >= 2 and a non-empty grid, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise NonFiniteError("feature tensor contains non-finite entries")
    return f


def check_soft_mask(m, tol: float = MASS_TOL) -> np.ndarray:
    """Validate that every pixel column of ``m`` is a distribution over classes."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 3:
        raise ShapeMismatchError(f"expected a C x H x W mask, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("mask contains non-finite entries")
    if np.any(m < 0):
        raise NegativeEntryError("mask has negative entries")
    err = np.abs(m.sum(axis=0) - 1.0).max()
    if err > tol:
        raise NotNormalizedError(f"mask columns do not sum to 1 (max deviation {err:.3g})")
    return m


def check_shape_agrees(tensor: np.ndarray, palette: np.ndarray) -> None:
    if tensor.shape[0] != palette.shape[0]:
        raise ShapeMismatchError(
            f"tensor has {tensor.shape[0]} channels but palette has {palette.shape[0]} classes"
        )


def hard_histogram(layout: HardLayout) -> np.ndarray:
    """Fraction of pixels carrying each label."""
    counts = np.bincount(layout.labels.ravel(), minlength=layout.num_classes)
    return counts / layout.labels.size


def soft_histogram(mask) -> np.ndarray:
    """Per-class average of a soft mask over all pixels."""
    m = np.asarray(mask, dtype=np.float64)
    return m.reshape(m.shape[0], -1).mean(axis=1)


def argmax_labeling(mask) -> HardLayout:
    # np.argmax returns the first maximal index, which is the tie-break we want.
    m = np.asarray(mask, dtype=np.float64)
    return HardLayout(np.argmax(m, axis=0), m.shape[0])
