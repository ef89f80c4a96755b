"""Semantically-assisted activation and its Sinkhorn generalization.

SAA maps raw class scores ``f`` (C x H x W) to a soft mask in three steps:

1. ``rho``: softmax of each class channel over all pixels,
2. ``omega = t[c] * rho[c]``: every class gets exactly its palette budget,
3. ``m``: ``omega`` renormalized over classes at each pixel.

Read as an entropic transport problem between a uniform pixel histogram and
the palette, steps 2 and 3 are the row and column scalings of one Sinkhorn
iteration started from ``exp(f)``; :func:`sinkhorn` runs ``k`` of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    AllZeroColumnError,
    NonFiniteError,
    ShapeMismatchError,
    ZeroColumnError,
    ZeroRowError,
)
from .layout import check_features, check_shape_agrees, validate_palette

EPS = 1e-12


class SAAResult(NamedTuple):
    rho: np.ndarray
    omega: np.ndarray
    mask: np.ndarray


def spatial_softmax(f) -> np.ndarray:
    """Per-channel softmax over the H x W grid, max-subtracted for stability."""
    f = check_features(f)
    flat = f.reshape(f.shape[0], -1)
    e = np.exp(flat - flat.max(axis=1, keepdims=True))
    return (e / e.sum(axis=1, keepdims=True)).reshape(f.shape)


def palette_weighting(rho, t) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if rho.ndim != 3:
        raise ShapeMismatchError(f"expected a C x H x W density, got shape {rho.shape}")
    check_shape_agrees(rho, t)
    return t[:, None, None] * rho


def pixel_normalize(omega, strict: bool = False) -> np.ndarray:
    """L1-normalize ``omega`` over classes at every pixel.

    Column totals are floored at ``EPS``; with ``strict`` a floored column
    raises :class:`AllZeroColumnError` instead.
    """
    omega = np.asarray(omega, dtype=np.float64)
    total = omega.sum(axis=0)
    low = total < EPS
    if strict and np.any(low):
        i, j = np.argwhere(low)[0]
        raise AllZeroColumnError(f"pixel ({i}, {j}) has no mass on any class")
    return omega / np.maximum(total, EPS)


def saa(f, t, strict: bool = False) -> SAAResult:
    f = check_features(f)
    t = validate_palette(t)
    check_shape_agrees(f, t)
    rho = spatial_softmax(f)
    omega = palette_weighting(rho, t)
    return SAAResult(rho, omega, pixel_normalize(omega, strict=strict))


def saa_backward(result: SAAResult, t, grad_mask=None, grad_omega=None) -> np.ndarray:
    """Pull gradients w.r.t. ``mask`` and ``omega`` back to the scores ``f``.

    ``grad_mask`` must be finite: losses involving ``log m`` should pass a
    gradient where ``0 * log 0`` has already been taken as 0.
    """
    rho, omega, m = result
    t = np.asarray(t, dtype=np.float64)
    g_omega = np.zeros_like(omega) if grad_omega is None else np.array(grad_omega, dtype=np.float64)
    if grad_mask is not None:
        g_m = np.asarray(grad_mask, dtype=np.float64)
        total = omega.sum(axis=0)
        floored = total < EPS
        through = (g_m - (g_m * m).sum(axis=0)) / np.where(floored, 1.0, total)
        g_omega += np.where(floored, g_m / EPS, through)
    g_rho = t[:, None, None] * g_omega
    c = rho.shape[0]
    r = rho.reshape(c, -1)
    g = g_rho.reshape(c, -1)
    g_f = r * (g - (r * g).sum(axis=1, keepdims=True))
    return g_f.reshape(rho.shape)


@dataclass(frozen=True)
class TransportPlan:
    """A C x N plan between the uniform pixel histogram and a palette."""

    data: np.ndarray
    target: np.ndarray

    @property
    def num_pixels(self) -> int:
        return self.data.shape[1]

    @property
    def source(self) -> np.ndarray:
        return np.full(self.num_pixels, 1.0 / self.num_pixels)

    def row_residual(self) -> float:
        """L1 distance between the class marginal and the palette."""
        return float(np.abs(self.data.sum(axis=1) - self.target).sum())

    def column_residual(self) -> float:
        """L1 distance between the pixel marginal and the uniform histogram."""
        return float(np.abs(self.data.sum(axis=0) - self.source).sum())

    def is_admissible(self, tol: float = 1e-9) -> bool:
        return (
            bool(np.all(self.data >= 0))
            and bool(np.all(np.isfinite(self.data)))
            and np.abs(self.data.sum(axis=1) - self.target).max() <= tol
            and np.abs(self.data.sum(axis=0) - self.source).max() <= tol
        )

    def as_mask(self, height: int, width: int) -> np.ndarray:
        """``N * P`` reshaped to C x H x W; equals the SAA mask when k = 1."""
        return (self.num_pixels * self.data).reshape(-1, height, width)


def sinkhorn_step(P, t, strict: bool = False) -> np.ndarray:
    """One row-then-column scaling pass on a C x N plan."""
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[1]
    rows = P.sum(axis=1)
    if strict and np.any(rows < EPS):
        raise ZeroRowError(f"class {int(np.argmax(rows < EPS))} has no mass left")
    P = (t / np.maximum(rows, EPS))[:, None] * P
    cols = P.sum(axis=0)
    if strict and np.any(cols < EPS):
        raise ZeroColumnError(f"pixel {int(np.argmax(cols < EPS))} has no mass left")
    return P * ((1.0 / n) / np.maximum(cols, EPS))[None, :]


def sinkhorn(f, t, k: int = 1, strict: bool = False) -> TransportPlan:
    """Run ``k`` Sinkhorn iterations from ``exp(f)`` (entropic weight fixed to 1).

    The per-channel max is subtracted before exponentiating; the first row
    scaling absorbs it, so the result is unchanged.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    f = check_features(f)
    t = validate_palette(t)
    check_shape_agrees(f, t)
    flat = f.reshape(f.shape[0], -1)
    P = np.exp(flat - flat.max(axis=1, keepdims=True))
    for _ in range(k):
        P = sinkhorn_step(P, t, strict=strict)
    return TransportPlan(P, t)


def residual_fusion(features, mask, weights) -> np.ndarray:
    """Add a per-pixel linear image of ``mask`` (F x C weights) onto ``features``."""
    features = np.asarray(features, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or features.ndim != 3 or mask.ndim != 3:
        raise ShapeMismatchError("expected F x H x W features, C x H x W mask and F x C weights")
    if weights.shape != (features.shape[0], mask.shape[0]) or features.shape[1:] != mask.shape[1:]:
        raise ShapeMismatchError(
            f"weights {weights.shape} incompatible with features {features.shape} and mask {mask.shape}"
        )
    if not np.all(np.isfinite(weights)):
        raise NonFiniteError("fusion weights must be finite")
    return features + np.einsum("fc,chw->fhw", weights, mask)
