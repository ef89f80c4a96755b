"""Direct layout synthesis: momentum gradient descent on the SAA scores.

There is no generator network here. A random score tensor ``f`` (seeded, so
the seed plays the role of the noise vector) is optimized under the
conditional loss until its argmax layout matches the palette. Nothing
rewards realism, so layouts have the right proportions but arbitrary shapes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadBackgroundBudgetError, InvalidConfigError, ShapeMismatchError
from .layout import HardLayout, argmax_labeling, hard_histogram, validate_palette
from .losses import cond_loss, cond_loss_grad, cond_loss_upstream, _terms
from .metrics import kl_divergence
from .saa import saa, saa_backward
from .transforms import EditRegion, edited_pixel_set, mark_crop, merge_edit, one_hot

GRADCHECK_TOL = 1e-5
FD_STEP = 1e-5
PIN_WEIGHT = 10.0
REGION_BIAS = 3.0


@dataclass(frozen=True)
class SynthesisConfig:
    height: int
    width: int
    steps: int = 2000
    step_size: float = 0.5
    momentum: float = 0.9
    seed: int = 0
    init_std: float = 1.0
    multiscale: bool = False
    kl_stop: float = 0.01
    checkpoint_every: int = 100
    num_classes: int | None = None

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidConfigError(f"grid must be non-empty, got {self.height}x{self.width}")
        if self.steps < 1:
            raise InvalidConfigError(f"steps must be >= 1, got {self.steps}")
        if not self.step_size > 0:
            raise InvalidConfigError(f"step_size must be positive, got {self.step_size}")
        if not 0 <= self.momentum < 1:
            raise InvalidConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.init_std < 0 or self.kl_stop < 0 or self.checkpoint_every < 1:
            raise InvalidConfigError("init_std and kl_stop must be >= 0, checkpoint_every >= 1")
        if self.num_classes is not None and self.num_classes < 2:
            raise InvalidConfigError(f"need at least 2 classes, got {self.num_classes}")


@dataclass
class TraceRecord:
    step: int
    entropy: float
    spread: float
    cond: float
    kl: float
    height: int
    width: int


@dataclass
class SynthesisTrace:
    records: list[TraceRecord] = field(default_factory=list)
    final_layout: HardLayout | None = None
    final_mask: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "records": [asdict(r) for r in self.records],
            "final_kl": self.records[-1].kl if self.records else None,
            "steps_run": self.records[-1].step if self.records else 0,
        }


def _descend(f, objective, steps, cfg, trace, step_offset=0, accept=None):
    """Momentum descent on ``f``; returns the final scores, SAA result and step count.

    ``objective(f)`` returns ``(LossValue, grad, saa_result, kl)``. Stops early
    once ``kl <= cfg.kl_stop`` and ``accept(saa_result)`` (if given) holds.
    The first and last evaluated steps are always recorded.
    """
    velocity = np.zeros_like(f)
    for step in range(steps + 1):
        loss, grad, result, kl = objective(f)
        done = step == steps or (kl <= cfg.kl_stop and (accept is None or accept(result)))
        if step % cfg.checkpoint_every == 0 or done:
            trace.records.append(
                TraceRecord(
                    step_offset + step,
                    loss.terms["entropy"],
                    loss.terms["spread"],
                    loss.terms["entropy"] + loss.terms["spread"],
                    kl,
                    f.shape[1],
                    f.shape[2],
                )
            )
        if done:
            return f, result, step
        velocity = cfg.momentum * velocity - cfg.step_size * grad
        f = f + velocity
    raise AssertionError("unreachable")


def _cond_objective(t):
    def objective(f):
        result = saa(f, t)
        loss = _terms(result, 1.0, 1.0)
        g_mask, g_omega = cond_loss_upstream(result)
        grad = saa_backward(result, t, grad_mask=g_mask, grad_omega=g_omega)
        kl = kl_divergence(t, hard_histogram(argmax_labeling(result.mask)))
        return loss, grad, result, kl

    return objective


def upsample_bilinear(f: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of each channel (pixel centres aligned, edges clamped)."""

    def axis_weights(src, dst):
        pos = np.clip((np.arange(dst) + 0.5) * src / dst - 0.5, 0, src - 1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, src - 1)
        return lo, hi, pos - lo

    r0, r1, wr = axis_weights(f.shape[1], height)
    c0, c1, wc = axis_weights(f.shape[2], width)
    rows = f[:, r0] * (1 - wr)[None, :, None] + f[:, r1] * wr[None, :, None]
    return rows[:, :, c0] * (1 - wc) + rows[:, :, c1] * wc


def synthesize(t, cfg: SynthesisConfig):
    """Optimize a layout for palette ``t``; returns ``(HardLayout, mask, SynthesisTrace)``.

    With ``cfg.multiscale``, half the step budget is spent on a half-resolution
    score map, which is then bilinearly upsampled and refined.
    """
    t = validate_palette(t)
    c = t.size
    if cfg.num_classes is not None and cfg.num_classes != c:
        raise ShapeMismatchError(f"config says {cfg.num_classes} classes, palette has {c}")
    rng = np.random.default_rng(cfg.seed)
    objective = _cond_objective(t)
    trace = SynthesisTrace()

    if cfg.multiscale and (cfg.height > 1 or cfg.width > 1) and cfg.steps >= 2:
        h, w = -(-cfg.height // 2), -(-cfg.width // 2)
        f = rng.normal(0.0, cfg.init_std, size=(c, h, w))
        coarse_steps = cfg.steps // 2
        f, _, used = _descend(f, objective, coarse_steps, cfg, trace)
        f = upsample_bilinear(f, cfg.height, cfg.width)
        f, result, _ = _descend(f, objective, cfg.steps - coarse_steps, cfg, trace, step_offset=used)
    else:
        f = rng.normal(0.0, cfg.init_std, size=(c, cfg.height, cfg.width))
        f, result, _ = _descend(f, objective, cfg.steps, cfg, trace)

    layout = argmax_labeling(result.mask)
    trace.final_layout = layout
    trace.final_mask = result.mask
    return layout, result.mask, trace


@dataclass
class EditOutcome:
    layout: HardLayout
    merged: np.ndarray
    generated: np.ndarray
    trace: SynthesisTrace


def run_edit(input_layout: HardLayout, region: EditRegion, t, cfg: SynthesisConfig, pin_weight: float = PIN_WEIGHT):
    """Refill ``region`` of ``input_layout`` following palette ``t`` (C + 1 entries, last = background).

    A (C + 1)-channel score map is optimized under the conditional loss plus
    ``pin_weight`` times the mean of ``(1 - m_bg)^2`` outside the region.
    Initial scores are offset by ``REGION_BIAS``: class channels up and the
    background down inside the crop, the reverse outside. The generated mask is
    merged with the input through the background channel, and pixels outside
    the region are copied from the input. Early stopping additionally waits
    until the background is dominant exactly outside the region.
    """
    c = input_layout.num_classes
    height, width = input_layout.shape
    region.check(input_layout.shape)
    t = validate_palette(t)
    if t.size != c + 1:
        raise BadBackgroundBudgetError(f"palette needs {c + 1} entries (classes + background), got {t.size}")
    n = height * width
    expected_bg = (n - region.area) / n
    if abs(t[-1] - expected_bg) > 0.01:
        raise BadBackgroundBudgetError(f"background budget {t[-1]:.4f} should be {expected_bg:.4f}")

    hard = one_hot(input_layout)
    inside = region.pixel_mask(input_layout.shape)
    outside = ~inside
    n_out = int(outside.sum())

    rng = np.random.default_rng(cfg.seed)
    noise = rng.normal(0.0, cfg.init_std, size=(c, height, width))
    bg_noise = rng.normal(0.0, cfg.init_std, size=(1, height, width))
    # crop pixels are the ones the marking made uniform
    crop = np.isclose(mark_crop(hard, region).max(axis=0), 1.0 / c)
    sign = np.where(crop, REGION_BIAS, -REGION_BIAS)
    f = np.concatenate([noise + sign, bg_noise - sign])

    def objective(f):
        result = saa(f, t)
        loss = _terms(result, 1.0, 1.0)
        g_mask, g_omega = cond_loss_upstream(result)
        if n_out:
            g_mask = g_mask.copy()
            g_mask[-1] -= np.where(outside, 2.0 * pin_weight * (1.0 - result.mask[-1]) / n_out, 0.0)
        grad = saa_backward(result, t, grad_mask=g_mask, grad_omega=g_omega)
        kl = kl_divergence(t, hard_histogram(argmax_labeling(result.mask)))
        return loss, grad, result, kl

    def region_filled(result):
        return np.array_equal(edited_pixel_set(result.mask), inside)

    trace = SynthesisTrace()
    f, result, _ = _descend(f, objective, cfg.steps, cfg, trace, accept=region_filled)
    merged = merge_edit(result.mask, hard)
    labels = np.where(inside, argmax_labeling(merged).labels, input_layout.labels)
    layout = HardLayout(labels, c)
    trace.final_layout = layout
    trace.final_mask = merged
    return EditOutcome(layout, merged, result.mask, trace)


def synthesize_edit(input_layout: HardLayout, region: EditRegion, t, cfg: SynthesisConfig) -> HardLayout:
    return run_edit(input_layout, region, t, cfg).layout


def finite_difference_grad(fn, f: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences of scalar ``fn`` at every entry of ``f``."""
    grad = np.empty_like(f)
    for idx in np.ndindex(f.shape):
        up = f.copy()
        up[idx] += h
        down = f.copy()
        down[idx] -= h
        grad[idx] = (fn(up) - fn(down)) / (2 * h)
    return grad


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def gradcheck(seed: int = 0, num_classes: int = 3, height: int = 4, width: int = 4) -> dict:
    """Compare the analytic conditional-loss gradient with central differences."""
    if height * width > 64:
        raise InvalidConfigError("gradcheck is meant for grids of at most 8x8 pixels")
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(num_classes, height, width))
    t = rng.dirichlet(np.ones(num_classes))
    analytic = cond_loss_grad(f, t)
    numeric = finite_difference_grad(lambda x: cond_loss(x, t).value, f)
    rel = relative_error(analytic, numeric)
    max_rel = float(rel.max())
    return {
        "seed": seed,
        "classes": num_classes,
        "height": height,
        "width": width,
        "max_rel_err": max_rel,
        "max_abs_err": float(np.abs(analytic - numeric).max()),
        "tolerance": GRADCHECK_TOL,
        "passed": max_rel < GRADCHECK_TOL,
    }
