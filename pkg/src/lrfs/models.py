"""Standard multi-object transition and observation models.

Births are a per-scan LMB, survival is Bernoulli with linear-Gaussian
motion, detection is Bernoulli with a linear-Gaussian sensor, clutter is
Poisson and uniform over the surveillance region. The association score
matrix eta collects the per-label, per-outcome weight factors whose products
form hypothesis weight increments.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Mapping

import numpy as np

from .densities import AssociationHistory  # noqa: F401  (re-export convenience)
from .gaussians import GaussianMixture
from .kalman import (
    LinearGaussianMotion,
    LinearGaussianSensor,
    _component_updates,
    kalman_predict,
)
from .labels import Label, as_label, sorted_labels

__all__ = [
    "Box",
    "BirthModel",
    "SurvivalModel",
    "ObservationModel",
    "ScoreMatrix",
    "psi",
    "build_score_matrix",
    "transition_density",
    "observation_likelihood",
]


class Box:
    """Axis-aligned region used for clutter and scenario bounds."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("need hi > lo per axis")
        lo.flags.writeable = False
        hi.flags.writeable = False
        self.lo = lo
        self.hi = hi

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Box":
        return cls(d["lo"], d["hi"])


class BirthModel:
    """LMB birth for one scan: labels in B_k with (P_B, birth density)."""

    __slots__ = ("scan", "labels", "probabilities", "densities")

    def __init__(self, scan: int, entries):
        self.scan = int(scan)
        labels, probs, dens = [], [], []
        for label, p, density in entries:
            label = as_label(label)
            if label.birth_time != self.scan:
                raise ValueError(f"birth label {label} not in scan {self.scan}")
            p = float(p)
            if not 0.0 <= p < 1.0:
                raise ValueError("birth probability must lie in [0, 1)")
            if not density.is_probability():
                raise ValueError("birth density must be normalized")
            labels.append(label)
            probs.append(p)
            dens.append(density)
        order = sorted(range(len(labels)), key=lambda i: labels[i])
        self.labels = tuple(labels[i] for i in order)
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("birth labels must be distinct")
        self.probabilities = tuple(probs[i] for i in order)
        self.densities = tuple(dens[i] for i in order)

    @classmethod
    def slots(cls, scan: int, count: int, probability: float, density: GaussianMixture):
        """Deterministic per-scan slots labeled (scan, 1..count)."""
        return cls(scan, [(Label(scan, i), probability, density) for i in range(1, count + 1)])

    def probability_of(self, label: Label) -> float:
        return self.probabilities[self.labels.index(as_label(label))]

    def density_of(self, label: Label) -> GaussianMixture:
        return self.densities[self.labels.index(as_label(label))]

    def __len__(self) -> int:
        return len(self.labels)


class SurvivalModel:
    """Survival probability plus the shared motion model.

    survival_probability may be a constant or a callable evaluated at the
    density's moment mean (a tabulated state dependence).
    """

    __slots__ = ("survival_probability", "motion")

    def __init__(self, survival_probability, motion: LinearGaussianMotion):
        if not callable(survival_probability):
            p = float(survival_probability)
            if not 0.0 <= p <= 1.0:
                raise ValueError("survival probability must lie in [0, 1]")
        self.survival_probability = survival_probability
        self.motion = motion

    def mean_survival(self, density: GaussianMixture) -> float:
        if callable(self.survival_probability):
            return float(self.survival_probability(density.mean_vector()))
        return float(self.survival_probability)

    def survival_at(self, x) -> float:
        if callable(self.survival_probability):
            return float(self.survival_probability(np.asarray(x, dtype=float)))
        return float(self.survival_probability)


class ObservationModel:
    """Bernoulli detection, linear-Gaussian sensor, uniform Poisson clutter."""

    __slots__ = ("detection_probability", "sensor", "clutter_rate", "region")

    def __init__(self, detection_probability, sensor: LinearGaussianSensor, clutter_rate, region: Box):
        if not callable(detection_probability):
            p = float(detection_probability)
            if not 0.0 <= p <= 1.0:
                raise ValueError("detection probability must lie in [0, 1]")
        self.detection_probability = detection_probability
        self.sensor = sensor
        self.clutter_rate = float(clutter_rate)
        if self.clutter_rate < 0:
            raise ValueError("clutter rate must be non-negative")
        if region.dim != sensor.meas_dim:
            raise ValueError("clutter region dimension must match the sensor")
        self.region = region

    def detection_at(self, x) -> float:
        if callable(self.detection_probability):
            return float(self.detection_probability(np.asarray(x, dtype=float)))
        return float(self.detection_probability)

    def mean_detection(self, density: GaussianMixture) -> float:
        if callable(self.detection_probability):
            return float(self.detection_probability(density.mean_vector()))
        return float(self.detection_probability)

    def kappa(self, z) -> float:
        """Clutter intensity at z: rate times the uniform spatial density."""
        if self.clutter_rate == 0.0:
            # degenerate but common in noise-free tests: unit reference density
            return 1.0 / self.region.volume if self.region.contains(z) else 0.0
        return (
            self.clutter_rate / self.region.volume if self.region.contains(z) else 0.0
        )


def psi(obs: ObservationModel, x, j: int, Z) -> float:
    """Detection SNR factor at state x for outcome j.

    j = 0 is misdetection (1 - P_D); j >= 1 is P_D g(z_j | x) / kappa(z_j).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float)) if len(Z) else np.zeros((0, obs.sensor.meas_dim))
    if not 0 <= j <= len(Z):
        raise ValueError(f"j must lie in 0..{len(Z)}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pd = obs.detection_at(x)
    if j == 0:
        return 1.0 - pd
    z = Z[j - 1]
    kap = obs.kappa(z)
    if kap == 0.0:
        raise ValueError(f"measurement {j} lies outside the clutter support")
    H, R = obs.sensor.H, obs.sensor.R
    return pd * GaussianMixture.single(H @ x, R).pdf_at(z) / kap


class ScoreMatrix:
    """Association scores eta^{(i)}(j) for labels l_1..l_P and j in {-1..M}.

    Column 0 holds j = -1 (death / not born), column 1 holds j = 0
    (misdetection), column 1+j holds detection j. posterior_cache maps
    (row, j >= 0) to the track density conditioned on that outcome.
    """

    __slots__ = ("labels", "measurements", "eta", "log_eta", "posterior_cache", "row_keys")

    def __init__(self, labels, measurements, eta, posterior_cache, row_keys=None):
        self.labels = tuple(as_label(l) for l in labels)
        Z = np.asarray(measurements, dtype=float)
        self.measurements = Z
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (len(self.labels), len(Z) + 2):
            raise ValueError("eta must be P x (M + 2)")
        if np.any(~np.isfinite(eta)) or np.any(eta < 0):
            raise ValueError("eta entries must be finite and non-negative")
        self.eta = eta
        with np.errstate(divide="ignore"):
            self.log_eta = np.log(eta)
        self.posterior_cache = dict(posterior_cache)
        self.row_keys = tuple(row_keys) if row_keys is not None else None

    @property
    def P(self) -> int:
        return len(self.labels)

    @property
    def M(self) -> int:
        return self.eta.shape[1] - 2

    def eta_value(self, i: int, j: int) -> float:
        return float(self.eta[i, j + 1])

    def posterior(self, i: int, j: int) -> GaussianMixture:
        return self.posterior_cache[(i, j)]


def _track_row(
    r_exist: float,
    density: GaussianMixture,
    obs: ObservationModel,
    Z: np.ndarray,
    gate: float | None,
) -> tuple[np.ndarray, dict[int, GaussianMixture]]:
    """One score row for a track that exists with probability r_exist.

    eta(-1) = 1 - r, eta(0) = r (1 - P_D), eta(j) = r P_D q_j / kappa(z_j),
    with q_j the mixture marginal likelihood. Measurements whose innovation
    Mahalanobis distance exceeds the gate in every component score 0.
    """
    M = len(Z)
    row = np.zeros(M + 2)
    row[0] = 1.0 - r_exist
    pd = obs.mean_detection(density)
    row[1] = r_exist * (1.0 - pd)
    posts: dict[int, GaussianMixture] = {0: density}
    if M:
        comp_posts, qs, maha2 = _component_updates(density, obs.sensor, Z)
        marg = density.weights @ qs
        gate2 = math.inf if gate is None else float(gate) ** 2
        for j in range(1, M + 1):
            if np.min(maha2[:, j - 1]) > gate2:
                continue
            kap = obs.kappa(Z[j - 1])
            if kap == 0.0:
                raise ValueError(f"measurement {j} lies outside the clutter support")
            q = float(marg[j - 1])
            if q <= 0.0:
                continue
            row[1 + j] = r_exist * pd * q / kap
            w = density.weights * qs[:, j - 1]
            means = np.array([comp_posts[(i, j - 1)][0] for i in range(len(density))])
            covs = np.array([comp_posts[(i, j - 1)][1] for i in range(len(density))])
            posts[j] = GaussianMixture(w / w.sum(), means, covs)
    return row, posts


def build_score_matrix(
    prior_tracks: Mapping[Label, GaussianMixture],
    birth: BirthModel,
    survival: SurvivalModel,
    obs: ObservationModel,
    Z,
    gate: float | None = 5.0,
) -> ScoreMatrix:
    """Score matrix for surviving prior tracks followed by this scan's births.

    Surviving rows use r = <P_S p-> and the predicted density; birth rows use
    r = P_B and the birth density. Row posteriors are cached for hypothesis
    construction.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float)) if len(Z) else np.zeros((0, obs.sensor.meas_dim))
    surv_labels = sorted_labels(prior_tracks.keys())
    if set(surv_labels) & set(birth.labels):
        raise ValueError("birth labels collide with surviving labels")
    labels = list(surv_labels) + list(birth.labels)
    rows = []
    cache: dict[tuple[int, int], GaussianMixture] = {}
    for i, l in enumerate(labels):
        if l in prior_tracks:
            prior = prior_tracks[l]
            r = survival.mean_survival(prior)
            density = kalman_predict(prior, survival.motion)
        else:
            r = birth.probability_of(l)
            density = birth.density_of(l)
        row, posts = _track_row(r, density, obs, Z, gate)
        rows.append(row)
        for j, gm in posts.items():
            cache[(i, j)] = gm
    eta = np.vstack(rows) if rows else np.zeros((0, len(Z) + 2))
    return ScoreMatrix(labels, Z, eta, cache)


def transition_density(X_prev, X_next, birth: BirthModel, survival: SurvivalModel) -> float:
    """Multi-object transition density f(X_next | X_prev) under the standard model."""
    prev = {as_label(l): np.atleast_1d(np.asarray(x, dtype=float)) for x, l in X_prev}
    nxt = {as_label(l): np.atleast_1d(np.asarray(x, dtype=float)) for x, l in X_next}
    if len(prev) != len(list(X_prev)) or len(nxt) != len(list(X_next)):
        return 0.0
    birth_set = set(birth.labels)
    out = 1.0
    for l, x in nxt.items():
        if l in prev:
            x_prev = prev[l]
            f = GaussianMixture.single(survival.motion.F @ x_prev, survival.motion.Q)
            out *= survival.survival_at(x_prev) * f.pdf_at(x)
        elif l in birth_set:
            out *= birth.probability_of(l) * birth.density_of(l).pdf_at(x)
        else:
            # labels cannot reappear or arrive outside the birth space
            return 0.0
    for l, x_prev in prev.items():
        if l not in nxt:
            out *= 1.0 - survival.survival_at(x_prev)
    for l in birth.labels:
        if l not in nxt:
            out *= 1.0 - birth.probability_of(l)
    return out


def observation_likelihood(X, Z, obs: ObservationModel) -> float:
    """Association-summed measurement likelihood, up to the clutter-only constant.

    Brute-force enumeration of positive 1-1 maps; oracle/test use only. The
    paper-level normalizing constant (the clutter-only likelihood) is left
    out, so values are comparable only across X for fixed Z.
    """
    states = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in X]
    labels = [as_label(l) for _, l in X]
    if len(set(labels)) != len(labels):
        raise ValueError("X must have distinct labels")
    Z = np.atleast_2d(np.asarray(Z, dtype=float)) if len(Z) else np.zeros((0, obs.sensor.meas_dim))
    M = len(Z)
    total = 0.0
    for assign in itertools.product(range(0, M + 1), repeat=len(states)):
        pos = [j for j in assign if j > 0]
        if len(set(pos)) != len(pos):
            continue
        term = 1.0
        for x, j in zip(states, assign):
            term *= psi(obs, x, j, Z)
        total += term
    return total
