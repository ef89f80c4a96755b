"""Conditional layout losses and their gradients with respect to the scores ``f``.

``cond_loss = entropy_loss(m) + spread_loss(omega)``: the first pushes each
pixel towards a single class, the second pushes the per-pixel ``omega``
totals towards the uniform ``1 / (H W)``. When both vanish, the hard layout
carries exactly the palette proportions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from .errors import EmptyEditSetError, EmptyPyramidError, NonFiniteError, ShapeMismatchError
from .layout import soft_histogram, validate_palette
from .saa import SAAResult, saa, saa_backward

HIST_FLOOR = 1e-8


@dataclass(frozen=True)
class LossValue:
    value: float
    per_pixel: np.ndarray | None = None
    terms: dict = field(default_factory=dict)


def entropy_loss(m) -> LossValue:
    m = np.asarray(m, dtype=np.float64)
    e = entr(m).sum(axis=0)
    return LossValue(float(e.mean()), e)


def spread_loss(omega) -> LossValue:
    omega = np.asarray(omega, dtype=np.float64)
    n = omega.shape[1] * omega.shape[2]
    s = (1.0 - n * omega.sum(axis=0)) ** 2
    return LossValue(float(s.mean()), s)


def _terms(result: SAAResult, entropy_weight: float, spread_weight: float) -> LossValue:
    ent = entropy_loss(result.mask)
    spr = spread_loss(result.omega)
    per_pixel = entropy_weight * ent.per_pixel + spread_weight * spr.per_pixel
    return LossValue(
        entropy_weight * ent.value + spread_weight * spr.value,
        per_pixel,
        {"entropy": ent.value, "spread": spr.value},
    )


def cond_loss(f, t, entropy_weight: float = 1.0, spread_weight: float = 1.0) -> LossValue:
    """Entropy plus spread loss of the SAA output for scores ``f`` and palette ``t``.

    The individual unweighted terms are in ``.terms``.
    """
    return _terms(saa(f, t), entropy_weight, spread_weight)


def cond_loss_upstream(result: SAAResult, entropy_weight: float = 1.0, spread_weight: float = 1.0):
    """Gradients of the weighted loss w.r.t. ``mask`` and ``omega`` (in that order).

    Feed them to :func:`saa_backward`, possibly after adding other terms.
    """
    _, omega, m = result
    n = m.shape[1] * m.shape[2]
    log_m = np.log(m, out=np.zeros_like(m), where=m > 0)
    g_mask = -(entropy_weight / n) * (log_m + 1.0)
    g_omega = np.broadcast_to(-2.0 * spread_weight * (1.0 - n * omega.sum(axis=0)), omega.shape)
    return g_mask, g_omega


def _grad_from_result(result: SAAResult, t, entropy_weight: float, spread_weight: float) -> np.ndarray:
    g_mask, g_omega = cond_loss_upstream(result, entropy_weight, spread_weight)
    return saa_backward(result, t, grad_mask=g_mask, grad_omega=g_omega)


def cond_loss_and_grad(f, t, entropy_weight: float = 1.0, spread_weight: float = 1.0):
    """Return ``(LossValue, gradient, SAAResult)`` from a single forward pass."""
    t = validate_palette(t)
    result = saa(f, t)
    loss = _terms(result, entropy_weight, spread_weight)
    grad = _grad_from_result(result, t, entropy_weight, spread_weight)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("gradient has non-finite entries")
    return loss, grad, result


def cond_loss_grad(f, t, entropy_weight: float = 1.0, spread_weight: float = 1.0) -> np.ndarray:
    return cond_loss_and_grad(f, t, entropy_weight, spread_weight)[1]


def matching_loss(m, t) -> LossValue:
    """KL(t || soft histogram of m), the soft histogram floored at 1e-8.

    This loss can be exactly zero while a class with positive target is
    absent from the argmax layout, so it is not used for optimization here.
    """
    t = np.asarray(t, dtype=np.float64)
    phi = np.maximum(soft_histogram(m), HIST_FLOOR)
    if phi.shape != t.shape:
        raise ShapeMismatchError(f"mask has {phi.size} classes, palette {t.size}")
    pos = t > 0
    return LossValue(float(np.sum(t[pos] * np.log(t[pos] / phi[pos]))))


def novelty_loss(m, l, edited) -> LossValue:
    """Mean inner product between ``m`` and the input layout ``l`` on edited pixels."""
    m = np.asarray(m, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    edited = np.asarray(edited, dtype=bool)
    if m.shape != l.shape or edited.shape != m.shape[1:]:
        raise ShapeMismatchError(f"shapes disagree: m {m.shape}, l {l.shape}, edited {edited.shape}")
    count = int(edited.sum())
    if count == 0:
        raise EmptyEditSetError("no edited pixels")
    dots = (m * l).sum(axis=0)
    return LossValue(float(dots[edited].sum() / count), np.where(edited, dots, 0.0))


def multiscale_cond_loss(pyramid, entropy_weight: float = 1.0, spread_weight: float = 1.0) -> LossValue:
    """Sum of :func:`cond_loss` over ``(f, t)`` pairs at several resolutions."""
    pyramid = list(pyramid)
    if not pyramid:
        raise EmptyPyramidError("need at least one scale")
    t0 = validate_palette(pyramid[0][1])
    total = 0.0
    ent = spr = 0.0
    for f, t in pyramid:
        t = validate_palette(t)
        if t.shape != t0.shape or not np.allclose(t, t0, rtol=0, atol=1e-12):
            raise ShapeMismatchError("all scales must share one palette")
        loss = cond_loss(f, t, entropy_weight, spread_weight)
        total += loss.value
        ent += loss.terms["entropy"]
        spr += loss.terms["spread"]
    return LossValue(total, None, {"entropy": ent, "spread": spr})
