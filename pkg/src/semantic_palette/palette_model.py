"""Palette generator: a Gaussian mixture over real class-proportion vectors.

Fitted by EM with full covariances (eigenvalues floored at 1e-6, since
palettes live on a hyperplane), the component count picked by AIC.
Samples are mapped back onto the simplex by clipping to [0, 1] and
L1-normalizing, which is cheap and close enough to the exact projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllZeroAfterClipError,
    DegenerateComponentError,
    DegenerateSampleError,
    DimensionMismatchError,
    NonFiniteError,
    NotNormalizedError,
    TooFewSamplesError,
)

COV_REG = 1e-6
RESP_FLOOR = 1e-12
MAX_RESAMPLES = 16
DEFAULT_CANDIDATES = tuple(range(1, 11))


@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    _factors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        cov = np.asarray(self.covariances, dtype=np.float64)
        m, c = mu.shape
        if w.shape != (m,) or cov.shape != (m, c, c):
            raise DimensionMismatchError(
                f"inconsistent shapes: weights {w.shape}, means {mu.shape}, covariances {cov.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise NonFiniteError("model parameters must be finite")
        if np.any(w <= 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-9:
            raise NotNormalizedError(f"weights must lie in (0, 1] and sum to 1, got {w}")
        if np.abs(cov - cov.transpose(0, 2, 1)).max() > 1e-9:
            raise DimensionMismatchError("covariances must be symmetric")
        factors = np.empty_like(cov)
        for k in range(m):
            vals, vecs = np.linalg.eigh(0.5 * (cov[k] + cov[k].T))
            if vals.min() < -1e-9:
                raise DegenerateComponentError(f"covariance {k} is not PSD (eigenvalue {vals.min():.3g})")
            factors[k] = vecs * np.sqrt(np.clip(vals, 0.0, None))
        for name, arr in (("weights", w), ("means", mu), ("covariances", cov), ("_factors", factors)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def n_parameters(self) -> int:
        return n_free_parameters(self.n_components, self.dimension)

    def log_likelihood(self, samples) -> float:
        x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        return float(logsumexp(_log_prob(x, self.weights, self.means, self.covariances), axis=1).sum())

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "components": [
                {
                    "weight": float(self.weights[k]),
                    "mean": [float(v) for v in self.means[k]],
                    "covariance": [float(v) for v in self.covariances[k].ravel()],
                }
                for k in range(self.n_components)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "GmmModel":
        c = int(doc["dimension"])
        comps = doc["components"]
        if not comps:
            raise DimensionMismatchError("model has no components")
        means = np.array([comp["mean"] for comp in comps], dtype=np.float64)
        if means.shape[1] != c:
            raise DimensionMismatchError(f"means have dimension {means.shape[1]}, header says {c}")
        # row-major flat list; nested rows are accepted too
        cov = np.array([np.asarray(comp["covariance"], dtype=np.float64).reshape(c, c) for comp in comps])
        return cls(np.array([comp["weight"] for comp in comps], dtype=np.float64), means, cov)

    @classmethod
    def from_json(cls, text: str) -> "GmmModel":
        return cls.from_dict(json.loads(text))


@dataclass
class FitReport:
    log_likelihoods: list[float]
    aic: float
    iterations: int
    converged: bool


def n_free_parameters(n_components: int, dim: int) -> int:
    return n_components * (dim + dim * (dim + 1) // 2) + (n_components - 1)


def aic(log_likelihood: float, n_components: int, dim: int) -> float:
    return 2.0 * n_free_parameters(n_components, dim) - 2.0 * log_likelihood


def _log_prob(x, weights, means, covs) -> np.ndarray:
    """``log w_k + log N(x_i | mu_k, S_k)`` as an n x M array."""
    n, c = x.shape
    out = np.empty((n, weights.size))
    for k in range(weights.size):
        try:
            chol = np.linalg.cholesky(covs[k])
        except np.linalg.LinAlgError:
            raise DegenerateComponentError(f"covariance of component {k} is not positive definite") from None
        z = np.linalg.solve(chol, (x - means[k]).T)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        out[:, k] = np.log(weights[k]) - 0.5 * (c * np.log(2 * np.pi) + logdet + (z * z).sum(axis=0))
    return out


def _m_step(x, resp):
    nk = resp.sum(axis=0)
    if nk.min() < RESP_FLOOR:
        raise DegenerateComponentError(f"component {int(np.argmin(nk))} lost all responsibility")
    weights = nk / nk.sum()
    means = (resp.T @ x) / nk[:, None]
    c = x.shape[1]
    covs = np.empty((nk.size, c, c))
    for k in range(nk.size):
        d = x - means[k]
        cov = (resp[:, k, None] * d).T @ d / nk[k]
        covs[k] = floor_eigenvalues(0.5 * (cov + cov.T))
    return weights, means, covs


def floor_eigenvalues(cov: np.ndarray, floor: float = COV_REG) -> np.ndarray:
    """Raise every eigenvalue of a symmetric matrix to at least ``floor``.

    This is the exact likelihood maximizer over covariances with smallest
    eigenvalue ``>= floor``, so EM stays monotone; adding ``floor * I``
    instead is not, and can lose likelihood near convergence.
    """
    vals, vecs = np.linalg.eigh(cov)
    out = (vecs * np.maximum(vals, floor)) @ vecs.T
    return 0.5 * (out + out.T)


def _kmeans_pp_assign(x, m, rng) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, m):
        total = d2.sum()
        if total <= 0:
            raise DegenerateComponentError(f"fewer than {m} distinct samples")
        centers.append(x[rng.choice(n, p=d2 / total)])
        d2 = np.minimum(d2, ((x - centers[-1]) ** 2).sum(axis=1))
    dists = ((x[:, None, :] - np.array(centers)[None]) ** 2).sum(axis=2)
    resp = np.zeros((n, m))
    resp[np.arange(n), np.argmin(dists, axis=1)] = 1.0
    return resp


def fit_gmm(samples, n_components: int, seed: int = 0, max_iter: int = 200, tol: float = 1e-6):
    """Fit an ``n_components`` mixture by EM; returns ``(GmmModel, FitReport)``.

    Starts from a hard assignment to k-means++ seeds. ``log_likelihoods[0]``
    is the likelihood of that starting point, then one entry per EM step.
    Stops once the total log-likelihood gains less than ``tol``.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if n_components < 1 or x.shape[0] < n_components:
        raise TooFewSamplesError(f"{x.shape[0]} samples cannot support {n_components} components")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("samples must be finite")
    rng = np.random.default_rng(seed)
    params = _m_step(x, _kmeans_pp_assign(x, n_components, rng))
    lp = _log_prob(x, *params)
    lse = logsumexp(lp, axis=1)
    lls = [float(lse.sum())]
    converged = False
    iterations = 0
    for it in range(max_iter):
        params = _m_step(x, np.exp(lp - lse[:, None]))
        lp = _log_prob(x, *params)
        lse = logsumexp(lp, axis=1)
        lls.append(float(lse.sum()))
        iterations = it + 1
        if lls[-1] - lls[-2] < tol:
            converged = True
            break
    model = GmmModel(*params)
    return model, FitReport(lls, aic(lls[-1], n_components, x.shape[1]), iterations, converged)


@dataclass
class Selection:
    n_components: int
    aic_table: dict
    model: GmmModel
    report: FitReport


def select_components(samples, candidates=DEFAULT_CANDIDATES, seed: int = 0, max_iter: int = 200, tol: float = 1e-6):
    """Fit every candidate component count and keep the lowest AIC (ties go to fewer)."""
    candidates = sorted(set(int(m) for m in candidates))
    if not candidates:
        raise ValueError("no candidate component counts")
    best = None
    table = {}
    for m in candidates:
        model, report = fit_gmm(samples, m, seed=seed, max_iter=max_iter, tol=tol)
        table[m] = report.aic
        if best is None or report.aic < best.report.aic:
            best = Selection(m, table, model, report)
    return best


def project_simplex(v) -> np.ndarray:
    """Clip to [0, 1] then L1-normalize."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("cannot project a non-finite vector")
    clipped = np.clip(v, 0.0, 1.0)
    total = clipped.sum()
    if total <= 0:
        raise AllZeroAfterClipError(f"{v} has no positive entry")
    return clipped / total


def sample_palette(model: GmmModel, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    for _ in range(MAX_RESAMPLES):
        k = rng.choice(model.n_components, p=model.weights)
        x = model.means[k] + model._factors[k] @ rng.standard_normal(model.dimension)
        try:
            return project_simplex(x)
        except AllZeroAfterClipError:
            continue
    raise DegenerateSampleError(f"{MAX_RESAMPLES} consecutive samples clipped to zero")


def sample_palettes(model: GmmModel, count: int, rng) -> list[np.ndarray]:
    rng = np.random.default_rng(rng)
    return [sample_palette(model, rng) for _ in range(count)]
