"""Linear-Gaussian single-object machinery: predict, update, mixture hygiene."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .gaussians import GaussianMixture, _LOG_2PI, symmetrize

__all__ = [
    "LinearGaussianMotion",
    "LinearGaussianSensor",
    "kalman_predict",
    "kalman_update",
    "mixture_reduce",
    "rts_smooth",
]


class LinearGaussianMotion:
    """x_k = F x_{k-1} + w, w ~ N(0, Q)."""

    __slots__ = ("F", "Q")

    def __init__(self, F, Q):
        F = np.asarray(F, dtype=float).copy()
        Q = np.asarray(Q, dtype=float).copy()
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise ValueError("F must be square")
        if Q.shape != F.shape:
            raise ValueError("Q must match F's shape")
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12):
            raise ValueError("Q must be symmetric within 1e-12")
        if np.min(np.linalg.eigvalsh(symmetrize(Q))) < -1e-10:
            raise ValueError("Q must be positive semi-definite")
        F.flags.writeable = False
        Q.flags.writeable = False
        self.F = F
        self.Q = Q

    @property
    def dim(self) -> int:
        return self.F.shape[0]


class LinearGaussianSensor:
    """z = H x + v, v ~ N(0, R)."""

    __slots__ = ("H", "R")

    def __init__(self, H, R):
        H = np.atleast_2d(np.asarray(H, dtype=float)).copy()
        R = np.atleast_2d(np.asarray(R, dtype=float)).copy()
        if R.shape != (H.shape[0], H.shape[0]):
            raise ValueError("R must be m x m for an m x d observation matrix")
        if not np.allclose(R, R.T, rtol=0.0, atol=1e-9):
            raise ValueError("R must be symmetric")
        try:
            np.linalg.cholesky(symmetrize(R))
        except np.linalg.LinAlgError as exc:
            raise ValueError("R must be positive-definite") from exc
        H.flags.writeable = False
        R.flags.writeable = False
        self.H = H
        self.R = R

    @property
    def state_dim(self) -> int:
        return self.H.shape[1]

    @property
    def meas_dim(self) -> int:
        return self.H.shape[0]


def kalman_predict(prior: GaussianMixture, motion: LinearGaussianMotion) -> GaussianMixture:
    """Push every component through the motion model; weights unchanged."""
    if prior.dim != motion.dim:
        raise ValueError("state dimension mismatch")
    F, Q = motion.F, motion.Q
    means = prior.means @ F.T
    covs = np.einsum("ij,njk,lk->nil", F, prior.covariances, F) + Q
    return GaussianMixture(prior.weights, means, covs)


def kalman_update(
    prior: GaussianMixture, sensor: LinearGaussianSensor, z
) -> tuple[GaussianMixture, float]:
    """Conjugate update of a Gaussian mixture prior.

    Returns the normalized posterior mixture and the marginal likelihood
    sum_i w_i N(z; H mu_i, H P_i H^T + R). A zero marginal (measurement far
    outside every component) returns the prior shape with likelihood 0.0.
    """
    posts, qs, _ = _component_updates(prior, sensor, np.atleast_2d(np.asarray(z, dtype=float)))
    q = qs[:, 0]
    marginal = float(prior.weights @ q)
    means = np.array([posts[(i, 0)][0] for i in range(len(prior))])
    covs = np.array([posts[(i, 0)][1] for i in range(len(prior))])
    if marginal <= 0.0:
        return GaussianMixture(prior.weights / prior.total_weight, means, covs), 0.0
    w = prior.weights * q
    return GaussianMixture(w / w.sum(), means, covs), marginal


def _component_updates(prior: GaussianMixture, sensor: LinearGaussianSensor, Z: np.ndarray):
    """Shared Kalman algebra for a batch of measurements.

    Returns (posteriors {(comp, meas_idx): (mean, cov)}, likelihoods (n, M),
    squared Mahalanobis innovations (n, M)).
    """
    if prior.dim != sensor.state_dim:
        raise ValueError("state dimension mismatch")
    if Z.shape[1] != sensor.meas_dim:
        raise ValueError("measurement dimension mismatch")
    H, R = sensor.H, sensor.R
    n, M = len(prior), Z.shape[0]
    m = sensor.meas_dim
    eye = np.eye(prior.dim)
    qs = np.zeros((n, M))
    maha2 = np.zeros((n, M))
    posts: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    for i in range(n):
        P = prior.covariances[i]
        mu = prior.means[i]
        S = symmetrize(H @ P @ H.T + R)
        try:
            Lc = cholesky(S, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("innovation covariance not positive-definite") from exc
        K = cho_solve((Lc, True), H @ P).T
        # Joseph form keeps the covariance symmetric over long runs
        A = eye - K @ H
        Pp = symmetrize(A @ P @ A.T + K @ R @ K.T)
        nu = Z - mu @ H.T
        sol = solve_triangular(Lc, nu.T, lower=True, check_finite=False)
        quad = np.sum(sol * sol, axis=0)
        maha2[i] = quad
        logdet = 2.0 * np.sum(np.log(np.diag(Lc)))
        qs[i] = np.exp(-0.5 * (m * _LOG_2PI + logdet + quad))
        for j in range(M):
            posts[(i, j)] = (mu + K @ nu[j], Pp)
    return posts, qs, maha2


def mixture_reduce(
    gm: GaussianMixture, prune_threshold: float, merge_distance: float, cap: int
) -> GaussianMixture:
    """Standard hygiene: prune small weights, merge close components, cap count.

    Thresholds apply to weights normalized by the total; merge_distance is a
    Mahalanobis distance (the squared form is compared to merge_distance**2)
    measured in the dominant component's metric. The result is renormalized
    to unit mass.
    """
    if prune_threshold < 0 or merge_distance < 0 or cap < 1:
        raise ValueError("invalid hygiene parameters")
    total = gm.total_weight
    if total <= 0:
        raise ValueError("cannot reduce a zero-mass mixture")
    w = gm.weights / total
    keep = np.flatnonzero(w >= prune_threshold)
    if len(keep) == 0:
        keep = np.array([int(np.argmax(w))])
    w = w[keep]
    means = gm.means[keep]
    covs = gm.covariances[keep]

    merged: list[tuple[float, np.ndarray, np.ndarray]] = []
    alive = list(range(len(w)))
    d2max = merge_distance**2
    while alive:
        pivot = max(alive, key=lambda i: w[i])
        Pinv = np.linalg.inv(covs[pivot])
        group = []
        for i in alive:
            d = means[i] - means[pivot]
            if d @ Pinv @ d <= d2max:
                group.append(i)
        gw = w[group].sum()
        gmu = (w[group] @ means[group]) / gw
        gcov = np.zeros_like(covs[0])
        for i in group:
            diff = means[i] - gmu
            gcov += (w[i] / gw) * (covs[i] + np.outer(diff, diff))
        merged.append((gw, gmu, symmetrize(gcov)))
        alive = [i for i in alive if i not in group]

    merged.sort(key=lambda t: -t[0])
    merged = merged[:cap]
    ws = np.array([t[0] for t in merged])
    return GaussianMixture(
        ws / ws.sum(), np.array([t[1] for t in merged]), np.array([t[2] for t in merged])
    )


def rts_smooth(
    means: list[np.ndarray], covs: list[np.ndarray], motion: LinearGaussianMotion
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Backward Rauch-Tung-Striebel pass over filtered Gaussian marginals."""
    F, Q = motion.F, motion.Q
    n = len(means)
    sm = [None] * n
    sc = [None] * n
    sm[-1], sc[-1] = means[-1], covs[-1]
    for k in range(n - 2, -1, -1):
        Ppred = symmetrize(F @ covs[k] @ F.T + Q)
        G = covs[k] @ F.T @ np.linalg.inv(Ppred)
        sm[k] = means[k] + G @ (sm[k + 1] - F @ means[k])
        sc[k] = symmetrize(covs[k] + G @ (sc[k + 1] - Ppred) @ G.T)
    return sm, sc
