"""Builders shared across test modules: tiny 1-D models and LMB literals."""

from __future__ import annotations

import numpy as np

from lrfs import (
    BernoulliRfs,
    BirthModel,
    Box,
    GaussianMixture,
    Label,
    LinearGaussianMotion,
    LinearGaussianSensor,
    LmbDensity,
    ObservationModel,
    SurvivalModel,
)


def gm1(*components):
    """1-D mixture from (w, mu, var) triples."""
    w = [c[0] for c in components]
    m = [[c[1]] for c in components]
    P = [[[c[2]]] for c in components]
    return GaussianMixture(w, m, P)


def lmb_of(tracks):
    """LmbDensity from {(s, i): (r, [(w, mu, var), ...])}."""
    return LmbDensity(
        {Label(*key): BernoulliRfs(r, gm1(*comps)) for key, (r, comps) in tracks.items()}
    )


def oracle_tracks(lmb):
    """The oracle-side {label: (r, [(w, mu, var), ...])} view of an LMB."""
    out = {}
    for l in lmb.labels:
        d = lmb.density(l)
        comps = [
            (float(w), float(m[0]), float(P[0, 0]))
            for w, m, P in zip(d.weights, d.means, d.covariances)
        ]
        out[tuple(l)] = (lmb.r(l), comps)
    return out


class ScalarModel:
    """1-D constant-velocity-free toy: x' = f x + w, z = x + v."""

    def __init__(self, f=1.0, q=0.25, rr=1.0, ps=0.9, pd=0.8, lam=1.0, half_width=25.0):
        self.f, self.q, self.rr = f, q, rr
        self.ps, self.pd, self.lam = ps, pd, lam
        self.motion = LinearGaussianMotion([[f]], [[q]])
        self.sensor = LinearGaussianSensor([[1.0]], [[rr]])
        self.region = Box([-half_width], [half_width])
        self.survival = SurvivalModel(ps, self.motion)
        self.obs = ObservationModel(pd, self.sensor, lam, self.region)
        self.kappa = lam / self.region.volume

    def birth(self, scan, entries):
        """entries: [(index, P_B, mu0, var0), ...]."""
        return BirthModel(
            scan,
            [(Label(scan, i), pb, gm1((1.0, mu, var))) for i, pb, mu, var in entries],
        )

    def no_birth(self, scan):
        return BirthModel(scan, [])


def rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed))
