"""Layout evaluation: proportion KL and the Fréchet segmentation distance (FSD).

KL is taken as ``KL(target || realized)``, the same direction as the
matching loss, with the realized histogram floored at 1e-8 and renormalized.
FSD fits a Gaussian to the per-layout class-fraction vectors of each
population and returns the Fréchet distance between the two Gaussians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyPopulationError, MixedClassCountsError
from .layout import HardLayout, hard_histogram

KL_FLOOR = 1e-8


def kl_divergence(target, realized) -> float:
    target = np.asarray(target, dtype=np.float64)
    r = np.maximum(np.asarray(realized, dtype=np.float64), KL_FLOOR)
    r = r / r.sum()
    pos = target > 0
    return float(np.sum(target[pos] * np.log(target[pos] / r[pos])))


def proportion_kl(target, layout: HardLayout) -> float:
    target = np.asarray(target, dtype=np.float64)
    if target.size != layout.num_classes:
        raise DimensionMismatchError(f"palette has {target.size} classes, layout {layout.num_classes}")
    return kl_divergence(target, hard_histogram(layout))


@dataclass(frozen=True)
class PopulationStats:
    mean: np.ndarray
    covariance: np.ndarray
    n: int


def population_stats(layouts) -> PopulationStats:
    """Mean and unbiased covariance of the layouts' class histograms."""
    layouts = list(layouts)
    if not layouts:
        raise EmptyPopulationError("no layouts given")
    classes = {lay.num_classes for lay in layouts}
    if len(classes) > 1:
        raise MixedClassCountsError(f"layouts mix class counts {sorted(classes)}")
    hists = np.stack([hard_histogram(lay) for lay in layouts])
    return stats_from_vectors(hists)


def stats_from_vectors(vectors) -> PopulationStats:
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    n = x.shape[0]
    if n == 0:
        raise EmptyPopulationError("no vectors given")
    mean = x.mean(axis=0)
    if n == 1:
        cov = np.zeros((x.shape[1], x.shape[1]))
    else:
        d = x - mean
        cov = d.T @ d / (n - 1)
        cov = 0.5 * (cov + cov.T)
    return PopulationStats(mean, cov, n)


def _clean_eigenvalues(vals: np.ndarray) -> np.ndarray:
    """Zero eigenvalues at roundoff level.

    Class-fraction covariances are singular (rows sum to 1), and a roundoff
    eigenvalue of 1e-18 would otherwise contribute 1e-9 after the square root.
    """
    cutoff = vals.size * np.finfo(np.float64).eps * max(float(np.abs(vals).max(initial=0.0)), 0.0) * 10
    return np.where(vals > cutoff, vals, 0.0)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    return (vecs * np.sqrt(_clean_eigenvalues(vals))) @ vecs.T


def frechet_distance(a: PopulationStats, b: PopulationStats) -> float:
    """``|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))``.

    The trace of ``(S_a S_b)^(1/2)`` is computed as that of the symmetric
    ``(S_a^(1/2) S_b S_a^(1/2))^(1/2)``, with roundoff-level eigenvalues zeroed.
    """
    if a.mean.shape != b.mean.shape:
        raise DimensionMismatchError(f"dimensions differ: {a.mean.size} vs {b.mean.size}")
    diff = a.mean - b.mean
    root_a = _psd_sqrt(a.covariance)
    inner = root_a @ b.covariance @ root_a
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    cross = np.sqrt(_clean_eigenvalues(vals)).sum()
    fd = diff @ diff + np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * cross
    return float(max(fd, 0.0))


def metrics_report(target, layouts, reference=None) -> dict:
    """Summary dict for a set of generated layouts against a palette.

    ``fsd`` is ``None`` without a reference population.
    """
    layouts = list(layouts)
    if not layouts:
        raise EmptyPopulationError("no layouts given")
    kls = [proportion_kl(target, lay) for lay in layouts]
    stats = population_stats(layouts)
    fsd = None
    if reference is not None:
        fsd = frechet_distance(stats, population_stats(reference))
    return {
        "kl": {"mean": float(np.mean(kls)), "max": float(np.max(kls))},
        "fsd": fsd,
        "n_layouts": len(layouts),
        "per_class_realized": [float(x) for x in stats.mean],
    }
