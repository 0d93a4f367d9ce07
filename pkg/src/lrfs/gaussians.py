"""Gaussian mixtures over the attribute space.

The mixture is the single-object attribute density used throughout the
package. Weights are not forced to sum to one: probability densities are
normalized mixtures, while Poisson intensities reuse the same type with
weights summing to the rate.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

_LOG_2PI = float(np.log(2.0 * np.pi))


def symmetrize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.T) / 2.0


class GaussianMixture:
    """Weighted Gaussian components.

    Parameters
    ----------
    weights : array_like, shape (n,)
        Non-negative component weights.
    means : array_like, shape (n, d)
        Component means. A flat array is reshaped to (n, -1).
    covariances : array_like, shape (n, d, d)
        Component covariances; every one must admit a Cholesky factor.
    """

    __slots__ = ("weights", "means", "covariances", "_chols")

    def __init__(self, weights, means, covariances):
        w = np.atleast_1d(np.asarray(weights, dtype=float)).copy()
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        m = np.asarray(means, dtype=float).copy()
        if m.ndim == 1:
            m = m.reshape(len(w), -1)
        if m.ndim != 2 or m.shape[0] != len(w):
            raise ValueError("means must have shape (n_components, dim)")
        c = np.asarray(covariances, dtype=float).copy()
        if c.ndim == 2 and len(w) == 1:
            c = c[None, :, :]
        if c.ndim == 0 or c.ndim == 1:
            c = c.reshape(len(w), 1, 1)
        if c.shape != (len(w), m.shape[1], m.shape[1]):
            raise ValueError("covariances must have shape (n_components, dim, dim)")
        if not np.allclose(c, np.swapaxes(c, 1, 2), rtol=0.0, atol=1e-9):
            raise ValueError("covariances must be symmetric")
        c = (c + np.swapaxes(c, 1, 2)) / 2.0
        try:
            chols = np.linalg.cholesky(c)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariances must be positive-definite") from exc
        for arr in (w, m, c, chols):
            arr.flags.writeable = False
        self.weights = w
        self.means = m
        self.covariances = c
        self._chols = chols

    @classmethod
    def single(cls, mean, cov, weight: float = 1.0) -> "GaussianMixture":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls([weight], mean[None, :], cov[None, :, :])

    # -- basic structure -------------------------------------------------

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def component(self, i: int) -> tuple[float, np.ndarray, np.ndarray]:
        return float(self.weights[i]), self.means[i], self.covariances[i]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = 1e-9) -> bool:
        return abs(self.total_weight - 1.0) <= tol

    def scaled(self, factor: float) -> "GaussianMixture":
        return GaussianMixture(self.weights * float(factor), self.means, self.covariances)

    def normalized(self) -> "GaussianMixture":
        total = self.total_weight
        if total <= 0.0:
            raise ValueError("cannot normalize a zero-mass mixture")
        return self.scaled(1.0 / total)

    # -- evaluation ------------------------------------------------------

    def _coerce_points(self, x) -> tuple[np.ndarray, bool]:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
            return pts, True
        if pts.ndim == 1:
            if self.dim == 1:
                return pts[:, None], False
            if pts.shape[0] == self.dim:
                return pts[None, :], True
            raise ValueError(f"point dimension {pts.shape[0]} != mixture dim {self.dim}")
        if pts.shape[1] != self.dim:
            raise ValueError(f"point dimension {pts.shape[1]} != mixture dim {self.dim}")
        return pts, False

    def logpdf(self, x):
        """Log of the weighted component sum at x ((d,) vector or (m, d) array)."""
        pts, scalar = self._coerce_points(x)
        comps = np.empty((len(self), pts.shape[0]))
        for i in range(len(self)):
            comps[i] = gauss_logpdf_chol(pts, self.means[i], self._chols[i])
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        out = logsumexp(comps + logw[:, None], axis=0)
        return float(out[0]) if scalar else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def pdf_at(self, x) -> float:
        """Density at a single point, always a scalar.

        Resolves the (1,) ambiguity of pdf for one-dimensional mixtures,
        where a lone point is otherwise read as a batch of one.
        """
        pts = np.asarray(x, dtype=float).reshape(1, self.dim)
        return float(np.exp(self.logpdf(pts))[0])

    # -- moments ---------------------------------------------------------

    def mean_vector(self) -> np.ndarray:
        w = self.weights / self.total_weight
        return w @ self.means

    def moment_cov(self) -> np.ndarray:
        w = self.weights / self.total_weight
        mu = w @ self.means
        out = np.zeros((self.dim, self.dim))
        for i in range(len(self)):
            d = self.means[i] - mu
            out += w[i] * (self.covariances[i] + np.outer(d, d))
        return symmetrize(out)

    def moment_matched(self) -> "GaussianMixture":
        """Single-Gaussian approximation with matched mean and covariance."""
        return GaussianMixture.single(self.mean_vector(), self.moment_cov(), self.total_weight)

    def __repr__(self) -> str:
        return f"GaussianMixture(n={len(self)}, dim={self.dim}, mass={self.total_weight:.6g})"


def gauss_logpdf_chol(pts: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Log N(pts; mean, L L^T) for an (m, d) batch of points."""
    diff = pts - mean
    # solve L y = diff^T; quadratic form is |y|^2
    sol = solve_triangular(chol, diff.T, lower=True, check_finite=False)
    quad = np.sum(sol * sol, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = mean.shape[0]
    return -0.5 * (d * _LOG_2PI + logdet + quad)


def mixture_sum(parts: Iterable[tuple[float, GaussianMixture]]) -> GaussianMixture:
    """Weighted concatenation sum of mixtures: sum_i scale_i * gm_i."""
    ws: list[np.ndarray] = []
    ms: list[np.ndarray] = []
    cs: list[np.ndarray] = []
    for scale, gm in parts:
        ws.append(scale * gm.weights)
        ms.append(gm.means)
        cs.append(gm.covariances)
    if not ws:
        raise ValueError("mixture_sum of no parts")
    return GaussianMixture(np.concatenate(ws), np.vstack(ms), np.concatenate(cs))


def merge_moments(
    weights: Sequence[float], means: Sequence[np.ndarray], covs: Sequence[np.ndarray]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Moment-match a component group; returns (weight, mean, cov)."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    mu = (w @ np.asarray(means)) / total
    cov = np.zeros_like(covs[0])
    for wi, mi, ci in zip(w, means, covs):
        d = mi - mu
        cov += (wi / total) * (ci + np.outer(d, d))
    return float(total), mu, symmetrize(cov)
