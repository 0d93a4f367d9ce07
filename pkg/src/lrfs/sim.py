"""Scenario generation under the standard multi-object model.

Ground truth follows the generative model the filters assume: Bernoulli
births anywhere in the region, constant-velocity Gaussian motion, Bernoulli
survival, Bernoulli detection with Gaussian noise, and Poisson uniform
clutter. A scenario serializes to JSON and round-trips byte-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .kalman import LinearGaussianMotion, LinearGaussianSensor
from .labels import Label
from .models import BirthModel, Box, ObservationModel, SurvivalModel
from .gaussians import GaussianMixture

__all__ = [
    "SimParams",
    "Scenario",
    "generate",
    "desk_scale_fig9",
    "motion_model",
    "sensor_model",
    "observation_model",
    "survival_model",
    "filter_birth_for_scan",
]


@dataclass(frozen=True)
class SimParams:
    """Scenario knobs plus the matching filter birth block.

    The defaults are the desk-scale acceptance scenario: a 1 km x 1 km
    region, about ten objects over 100 scans, detection probability 0.88,
    5 m measurement noise, 0.2 m/s^2 process noise, 10 clutter returns per
    scan on average.
    """

    region_lo: tuple = (0.0, 0.0)
    region_hi: tuple = (1000.0, 1000.0)
    n_scans: int = 100
    dt: float = 1.0
    accel_std: float = 0.2
    meas_std: float = 5.0
    detection_probability: float = 0.88
    clutter_rate: float = 10.0
    survival_probability: float = 0.995
    # (scan, count) pairs of deterministic appearances; extras are Bernoulli
    scheduled_births: tuple = ((0, 4), (3, 2), (6, 2), (12, 1), (20, 1))
    birth_slots: int = 1
    birth_probability: float = 0.01
    initial_speed: tuple = (3.0, 10.0)
    kill_on_exit: bool = True
    filter_birth_slots: int = 4
    filter_birth_probability: float = 0.05
    filter_velocity_std: float = 5.0
    filter_clutter_padding: float = 50.0

    def __post_init__(self):
        if self.n_scans < 1:
            raise ValueError("n_scans must be >= 1")
        if not 0.0 <= self.birth_probability < 1.0:
            raise ValueError("birth_probability must lie in [0, 1)")
        if not 0.0 <= self.filter_birth_probability < 1.0:
            raise ValueError("filter_birth_probability must lie in [0, 1)")

    @property
    def region(self) -> Box:
        return Box(self.region_lo, self.region_hi)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown scenario parameter field: {sorted(unknown)[0]}")

        def conv(v):
            if isinstance(v, list):
                return tuple(conv(x) for x in v)
            return v

        return cls(**{k: conv(v) for k, v in data.items()})


def motion_model(params: SimParams) -> LinearGaussianMotion:
    """Planar constant-velocity model, state [px, py, vx, vy]."""
    dt = params.dt
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    q = params.accel_std**2
    blk = np.array([[dt**4 / 4.0, dt**3 / 2.0], [dt**3 / 2.0, dt**2]]) * q
    Q = np.zeros((4, 4))
    for axis in range(2):
        idx = np.ix_([axis, axis + 2], [axis, axis + 2])
        Q[idx] = blk
    return LinearGaussianMotion(F, Q)


def sensor_model(params: SimParams) -> LinearGaussianSensor:
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    return LinearGaussianSensor(H, params.meas_std**2 * np.eye(2))


def observation_model(params: SimParams) -> ObservationModel:
    """The filter's assumed observation model.

    Clutter support is padded beyond the surveillance region: detections of
    edge objects land slightly outside and must stay explainable. The
    resulting clutter density is an approximation the filter tolerates.
    """
    pad = params.filter_clutter_padding
    lo = np.asarray(params.region_lo, dtype=float) - pad
    hi = np.asarray(params.region_hi, dtype=float) + pad
    return ObservationModel(
        params.detection_probability,
        sensor_model(params),
        params.clutter_rate,
        Box(lo, hi),
    )


def survival_model(params: SimParams) -> SurvivalModel:
    return SurvivalModel(params.survival_probability, motion_model(params))


def filter_birth_for_scan(params: SimParams, scan: int) -> BirthModel:
    """Static filter birth: identical broad slots covering the region."""
    lo = np.asarray(params.region_lo, dtype=float)
    hi = np.asarray(params.region_hi, dtype=float)
    center = (lo + hi) / 2.0
    span = hi - lo
    mean = np.concatenate([center, np.zeros(2)])
    pos_var = span**2 / 12.0  # matches a uniform position prior
    cov = np.diag(np.concatenate([pos_var, np.full(2, params.filter_velocity_std**2)]))
    density = GaussianMixture.single(mean, cov)
    return BirthModel.slots(
        scan, params.filter_birth_slots, params.filter_birth_probability, density
    )


@dataclass
class Scenario:
    """A generated dataset: measurements per scan plus labeled ground truth."""

    params: SimParams
    scans: list  # (k, (M, 2) ndarray)
    truth: list  # (Label, start_scan, [state vectors])

    @property
    def region(self) -> Box:
        return self.params.region

    def truth_trajectories(self):
        return [(l, s, list(states)) for l, s, states in self.truth]

    def truth_states_at(self, k: int) -> list:
        out = []
        for _, start, states in self.truth:
            if start <= k < start + len(states):
                out.append(states[k - start])
        return out

    def to_json(self) -> str:
        body = {
            "region": {"lo": list(self.params.region_lo), "hi": list(self.params.region_hi)},
            "model": self.params.to_dict(),
            "scans": [
                {"k": int(k), "Z": [[float(v) for v in z] for z in Z]}
                for k, Z in self.scans
            ],
            "truth": [
                {
                    "label": [int(l.birth_time), int(l.index)],
                    "states": [
                        {"k": int(start + m), "x": [float(v) for v in x]}
                        for m, x in enumerate(states)
                    ],
                }
                for l, start, states in self.truth
            ],
        }
        return json.dumps(body, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        body = json.loads(text)
        for key in ("region", "model", "scans", "truth"):
            if key not in body:
                raise ValueError(f"scenario file is missing the '{key}' field")
        params = SimParams.from_dict(body["model"])
        scans = []
        for rec in body["scans"]:
            Z = np.asarray(rec["Z"], dtype=float)
            if Z.size == 0:
                Z = np.zeros((0, 2))
            scans.append((int(rec["k"]), Z))
        truth = []
        for rec in body["truth"]:
            states = sorted(rec["states"], key=lambda s: s["k"])
            if not states:
                raise ValueError("truth trajectory needs at least one state")
            ks = [int(s["k"]) for s in states]
            if ks != list(range(ks[0], ks[0] + len(ks))):
                raise ValueError("truth trajectory scans must be contiguous")
            truth.append(
                (
                    Label(int(rec["label"][0]), int(rec["label"][1])),
                    ks[0],
                    [np.asarray(s["x"], dtype=float) for s in states],
                )
            )
        return cls(params=params, scans=scans, truth=truth)

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_json(fh.read())


def generate(params: SimParams, seed: int = 0) -> Scenario:
    """Sample a scenario; fully reproducible from (params, seed)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    motion = motion_model(params)
    sensor = sensor_model(params)
    lo = np.asarray(params.region_lo, dtype=float)
    hi = np.asarray(params.region_hi, dtype=float)
    region = params.region
    chol_q = np.linalg.cholesky(motion.Q + 1e-12 * np.eye(4))
    chol_r = np.linalg.cholesky(sensor.R)

    alive: dict[Label, np.ndarray] = {}
    paths: dict[Label, tuple[int, list]] = {}
    scans = []
    for k in range(params.n_scans):
        # survival then motion for existing objects, in label order
        for l in sorted(alive):
            if rng.random() >= params.survival_probability:
                del alive[l]
                continue
            x = motion.F @ alive[l] + chol_q @ rng.standard_normal(4)
            if params.kill_on_exit and not region.contains(x[:2]):
                del alive[l]
                continue
            alive[l] = x
            paths[l][1].append(x)
        # births: the scheduled appearances plus Bernoulli extras
        n_new = sum(c for s, c in params.scheduled_births if s == k)
        for _ in range(params.birth_slots):
            if rng.random() < params.birth_probability:
                n_new += 1
        next_index = max((l.index for l in paths if l.birth_time == k), default=0) + 1
        for i in range(n_new):
            pos = lo + rng.random(2) * (hi - lo)
            speed = rng.uniform(params.initial_speed[0], params.initial_speed[1])
            heading = rng.uniform(0.0, 2.0 * math.pi)
            vel = speed * np.array([math.cos(heading), math.sin(heading)])
            x = np.concatenate([pos, vel])
            l = Label(k, next_index + i)
            alive[l] = x
            paths[l] = (k, [x])
        # detections and clutter
        Z = []
        for l in sorted(alive):
            if rng.random() < params.detection_probability:
                Z.append(sensor.H @ alive[l] + chol_r @ rng.standard_normal(2))
        for _ in range(int(rng.poisson(params.clutter_rate))):
            Z.append(lo + rng.random(2) * (hi - lo))
        Z = np.stack(Z) if Z else np.zeros((0, 2))
        if len(Z) > 1:
            Z = Z[rng.permutation(len(Z))]
        scans.append((k, Z))
    truth = [
        (l, start, states) for l, (start, states) in sorted(paths.items())
    ]
    return Scenario(params=params, scans=scans, truth=truth)


def desk_scale_fig9(seed: int = 20240811) -> Scenario:
    """The fixed acceptance scenario; the default parameters, fixed seed."""
    return generate(SimParams(), seed=seed)
