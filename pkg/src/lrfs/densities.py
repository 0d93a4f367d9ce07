"""Labeled and unlabeled RFS densities.

Types: PoissonRfs, BernoulliRfs, MultiBernoulli, LabeledIidCluster,
LmbDensity, GlmbDensity, AssociationHistory. Operations: eval_density,
cardinality_distribution, phd, joint_existence, set_integral_oracle.

Multi-object set arguments are iterables of attribute vectors (unlabeled
models) or of (x, Label) pairs (labeled models).
"""

from __future__ import annotations

import itertools
import math
from functools import singledispatch
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .gaussians import GaussianMixture, mixture_sum
from .labels import Label, as_label, sorted_labels

__all__ = [
    "PoissonRfs",
    "BernoulliRfs",
    "MultiBernoulli",
    "LabeledIidCluster",
    "LmbDensity",
    "GlmbDensity",
    "GlmbHypothesis",
    "AssociationHistory",
    "eval_density",
    "cardinality_distribution",
    "phd",
    "joint_existence",
    "set_integral_oracle",
]


# ---------------------------------------------------------------------------
# unlabeled models


class PoissonRfs:
    """Poisson RFS; the intensity is a Gaussian mixture whose mass is the rate."""

    __slots__ = ("intensity",)

    def __init__(self, intensity: GaussianMixture):
        self.intensity = intensity

    @property
    def rate(self) -> float:
        return self.intensity.total_weight


class BernoulliRfs:
    """At most one object: empty with probability 1-r, else distributed as density."""

    __slots__ = ("r", "density")

    def __init__(self, r: float, density: GaussianMixture):
        r = float(r)
        # r = 1 breaks the exponential form 1/(1-r); rejected at construction
        if not 0.0 <= r < 1.0:
            raise ValueError(f"existence probability must lie in [0, 1), got {r}")
        if not density.is_probability():
            raise ValueError("Bernoulli attribute density must be normalized")
        self.r = r
        self.density = density

    def __repr__(self) -> str:
        return f"BernoulliRfs(r={self.r:.6g}, dim={self.density.dim})"


class MultiBernoulli:
    """Union of independent Bernoulli RFSs."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[BernoulliRfs]):
        self.components = tuple(components)

    def __len__(self) -> int:
        return len(self.components)


# ---------------------------------------------------------------------------
# labeled models


class LabeledIidCluster:
    """Labeled i.i.d. cluster: cardinality distribution plus one shared attribute density.

    Conditioned on cardinality n, attributes are i.i.d. and marked with the
    first n labels of a fixed ordered label sequence. The default sequence is
    Label(0, 1), Label(0, 2), ...
    """

    __slots__ = ("cardinality_dist", "attribute_density", "labels")

    def __init__(self, cardinality_dist, attribute_density: GaussianMixture, labels=None):
        rho = np.asarray(cardinality_dist, dtype=float).copy()
        if rho.ndim != 1 or np.any(rho < 0):
            raise ValueError("cardinality_dist must be a non-negative vector")
        if abs(rho.sum() - 1.0) > 1e-9:
            raise ValueError("cardinality_dist must sum to 1 within 1e-9")
        if not attribute_density.is_probability():
            raise ValueError("attribute density must be normalized")
        n_max = len(rho) - 1
        if labels is None:
            labels = tuple(Label(0, i) for i in range(1, n_max + 1))
        else:
            labels = tuple(as_label(l) for l in labels)
            if len(set(labels)) != len(labels) or len(labels) < n_max:
                raise ValueError("need n_max distinct labels in order")
        rho.flags.writeable = False
        self.cardinality_dist = rho
        self.attribute_density = attribute_density
        self.labels = labels


class LmbDensity:
    """Labeled multi-Bernoulli: independent labeled Bernoulli tracks."""

    __slots__ = ("tracks",)

    def __init__(self, tracks: Mapping[Label, BernoulliRfs]):
        items = {as_label(l): t for l, t in tracks.items()}
        for t in items.values():
            if not isinstance(t, BernoulliRfs):
                raise TypeError("LmbDensity tracks must be BernoulliRfs")
        self.tracks = dict(sorted(items.items()))

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(self.tracks)

    def r(self, label: Label) -> float:
        return self.tracks[label].r

    def density(self, label: Label) -> GaussianMixture:
        return self.tracks[label].density

    def __len__(self) -> int:
        return len(self.tracks)

    def __repr__(self) -> str:
        return f"LmbDensity({len(self.tracks)} tracks)"


class AssociationHistory:
    """Detection history: which measurement each label generated at each scan.

    Stored as a tuple of (scan, ((label, j), ...)) records with j >= 0
    (0 = misdetected, j > 0 = detection index). Dead or unborn labels are
    encoded by absence; -1 entries passed at construction are dropped, which
    makes equality match the event semantics of the association history.
    """

    __slots__ = ("records",)

    def __init__(self, records=()):
        canon = []
        last_scan = None
        for scan, assign in records:
            scan = int(scan)
            if last_scan is not None and scan <= last_scan:
                raise ValueError("record scans must be strictly increasing")
            last_scan = scan
            pairs = assign.items() if isinstance(assign, Mapping) else assign
            kept = sorted((as_label(l), int(j)) for l, j in pairs if int(j) >= 0)
            labels = [l for l, _ in kept]
            if len(set(labels)) != len(labels):
                raise ValueError(f"scan {scan}: repeated label in record")
            pos = [j for _, j in kept if j > 0]
            if len(set(pos)) != len(pos):
                raise ValueError(f"scan {scan}: positive indices must be distinct")
            canon.append((scan, tuple(kept)))
        self.records = tuple(canon)

    def extended(self, scan: int, assignments) -> "AssociationHistory":
        out = AssociationHistory.__new__(AssociationHistory)
        tail = AssociationHistory([(scan, assignments)])
        if self.records and scan <= self.records[-1][0]:
            raise ValueError("scan must follow the last recorded scan")
        out.records = self.records + tail.records
        return out

    def scans(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.records)

    def assignments_at(self, scan: int) -> dict[Label, int]:
        for k, pairs in self.records:
            if k == scan:
                return dict(pairs)
        return {}

    def detections_of(self, label: Label) -> tuple[tuple[int, int], ...]:
        label = as_label(label)
        return tuple((k, dict(pairs)[label]) for k, pairs in self.records if label in dict(pairs))

    def __eq__(self, other) -> bool:
        return isinstance(other, AssociationHistory) and self.records == other.records

    def __hash__(self) -> int:
        return hash(self.records)

    def __repr__(self) -> str:
        return f"AssociationHistory({len(self.records)} scans)"


class GlmbHypothesis:
    """One (history, label set) hypothesis with per-label attribute densities."""

    __slots__ = ("log_weight", "labels", "history", "densities")

    def __init__(self, log_weight: float, labels, history: AssociationHistory, densities):
        self.log_weight = float(log_weight)
        self.labels = sorted_labels(labels)
        self.history = history
        if isinstance(densities, Mapping):
            densities = tuple(densities[l] for l in self.labels)
        else:
            densities = tuple(densities)
        if len(densities) != len(self.labels):
            raise ValueError("need one density per label")
        self.densities = densities

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def track_densities(self) -> dict[Label, GaussianMixture]:
        return dict(zip(self.labels, self.densities))

    def density_of(self, label: Label) -> GaussianMixture:
        return self.densities[self.labels.index(as_label(label))]

    def __repr__(self) -> str:
        return f"GlmbHypothesis(w={self.weight:.6g}, labels={list(self.labels)})"


def _hypothesis_sort_key(h: GlmbHypothesis):
    return (-h.log_weight, h.labels, h.history.records)


class GlmbDensity:
    """Normalized mixture of GLMB hypotheses.

    Hypotheses are stored sorted by decreasing weight (ties: label set, then
    history) and weights are renormalized in log domain at construction.
    Zero-weight hypotheses are dropped. ``discarded_l1`` records truncation
    mass shed by the step that produced this density.
    """

    __slots__ = ("hypotheses", "discarded_l1")

    def __init__(self, hypotheses: Iterable[GlmbHypothesis], discarded_l1: float = 0.0):
        hyps = [h for h in hypotheses if h.log_weight > -math.inf]
        if not hyps:
            raise ValueError("GLMB needs at least one hypothesis with positive weight")
        seen = set()
        for h in hyps:
            key = (h.history, h.labels)
            if key in seen:
                raise ValueError(f"duplicate hypothesis for labels {list(h.labels)}")
            seen.add(key)
        total = logsumexp([h.log_weight for h in hyps])
        normed = [
            GlmbHypothesis(h.log_weight - total, h.labels, h.history, h.densities) for h in hyps
        ]
        normed.sort(key=_hypothesis_sort_key)
        self.hypotheses = tuple(normed)
        self.discarded_l1 = float(discarded_l1)

    @classmethod
    def single(cls, labels=(), history=None, densities=()) -> "GlmbDensity":
        history = history if history is not None else AssociationHistory()
        return cls([GlmbHypothesis(0.0, labels, history, densities)])

    @classmethod
    def from_lmb(cls, lmb: LmbDensity) -> "GlmbDensity":
        """Exact GLMB form of an LMB by enumerating all label subsets."""
        labels = lmb.labels
        hyps = []
        empty = AssociationHistory()
        for n in range(len(labels) + 1):
            for subset in itertools.combinations(labels, n):
                logw = 0.0
                for l in labels:
                    r = lmb.r(l)
                    logw += math.log(r) if l in subset else math.log1p(-r)
                if logw == -math.inf:
                    continue
                hyps.append(
                    GlmbHypothesis(logw, subset, empty, [lmb.density(l) for l in subset])
                )
        return cls(hyps)

    def __len__(self) -> int:
        return len(self.hypotheses)

    @property
    def weights(self) -> np.ndarray:
        return np.array([h.weight for h in self.hypotheses])

    @property
    def label_universe(self) -> tuple[Label, ...]:
        return sorted_labels({l for h in self.hypotheses for l in h.labels})

    def map_hypothesis(self) -> GlmbHypothesis:
        return self.hypotheses[0]

    def __repr__(self) -> str:
        return f"GlmbDensity({len(self.hypotheses)} hypotheses)"


# ---------------------------------------------------------------------------
# set-argument coercion


def _labeled_set(X) -> list[tuple[np.ndarray, Label]] | None:
    """Coerce to [(x, Label)]; returns None when labels repeat (density is 0)."""
    out = []
    for item in X:
        x, l = item
        out.append((np.atleast_1d(np.asarray(x, dtype=float)), as_label(l)))
    labels = [l for _, l in out]
    if len(set(labels)) != len(labels):
        return None
    return out


def _unlabeled_set(X) -> list[np.ndarray]:
    return [np.atleast_1d(np.asarray(x, dtype=float)) for x in X]


# ---------------------------------------------------------------------------
# eval_density


@singledispatch
def eval_density(model, X) -> float:
    """FISST multi-object density of ``model`` evaluated at the finite set X."""
    raise TypeError(f"unsupported model type: {type(model).__name__}")


@eval_density.register
def _(model: PoissonRfs, X) -> float:
    pts = _unlabeled_set(X)
    out = math.exp(-model.rate)
    for x in pts:
        out *= model.intensity.pdf_at(x)
    return out


@eval_density.register
def _(model: BernoulliRfs, X) -> float:
    pts = _unlabeled_set(X)
    if len(pts) == 0:
        return 1.0 - model.r
    if len(pts) == 1:
        return model.r * model.density.pdf_at(pts[0])
    return 0.0


@eval_density.register
def _(model: MultiBernoulli, X) -> float:
    pts = _unlabeled_set(X)
    n, N = len(pts), len(model.components)
    if n > N:
        return 0.0
    empty = math.prod(1.0 - c.r for c in model.components)
    total = 0.0
    # sum over ordered injections of points into components
    for idx in itertools.permutations(range(N), n):
        term = 1.0
        for j, i in enumerate(idx):
            c = model.components[i]
            term *= c.r * c.density.pdf_at(pts[j]) / (1.0 - c.r)
        total += term
    return empty * (total if n > 0 else 1.0)


@eval_density.register
def _(model: LabeledIidCluster, X) -> float:
    pts = _labeled_set(X)
    if pts is None:
        return 0.0
    n = len(pts)
    rho = model.cardinality_dist
    if n >= len(rho):
        return 0.0
    if {l for _, l in pts} != set(model.labels[:n]):
        return 0.0
    out = float(rho[n])
    for x, _ in pts:
        out *= model.attribute_density.pdf_at(x)
    return out


@eval_density.register
def _(model: LmbDensity, X) -> float:
    pts = _labeled_set(X)
    if pts is None:
        return 0.0
    present = {l for _, l in pts}
    if not present <= set(model.labels):
        return 0.0
    out = 1.0
    for x, l in pts:
        out *= model.r(l) * model.density(l).pdf_at(x)
    for l in model.labels:
        if l not in present:
            out *= 1.0 - model.r(l)
    return out


def _eval_lmb_exponential(model: LmbDensity, X) -> float:
    """Second code path for the LMB density via the exponential form.

    pi(X) = [1-r]^D * prod over X of r p / (1-r); used to cross-check the
    direct product form.
    """
    pts = _labeled_set(X)
    if pts is None:
        return 0.0
    if not {l for _, l in pts} <= set(model.labels):
        return 0.0
    out = math.prod(1.0 - model.r(l) for l in model.labels)
    for x, l in pts:
        r = model.r(l)
        out *= r * model.density(l).pdf_at(x) / (1.0 - r)
    return out


@eval_density.register
def _(model: GlmbDensity, X) -> float:
    pts = _labeled_set(X)
    if pts is None:
        return 0.0
    present = frozenset(l for _, l in pts)
    total = 0.0
    for h in model.hypotheses:
        if frozenset(h.labels) != present:
            continue
        term = h.weight
        for x, l in pts:
            term *= h.density_of(l).pdf_at(x)
        total += term
    return total


# ---------------------------------------------------------------------------
# cardinality, PHD, joint existence


def _bernoulli_cardinality(rs: Sequence[float]) -> np.ndarray:
    out = np.array([1.0])
    for r in rs:
        out = np.convolve(out, [1.0 - r, r])
    return out


@singledispatch
def cardinality_distribution(model) -> np.ndarray:
    raise TypeError(f"unsupported model type: {type(model).__name__}")


@cardinality_distribution.register
def _(model: MultiBernoulli) -> np.ndarray:
    return _bernoulli_cardinality([c.r for c in model.components])


@cardinality_distribution.register
def _(model: LmbDensity) -> np.ndarray:
    return _bernoulli_cardinality([model.r(l) for l in model.labels])


@cardinality_distribution.register
def _(model: LabeledIidCluster) -> np.ndarray:
    return model.cardinality_dist.copy()


@cardinality_distribution.register
def _(model: GlmbDensity) -> np.ndarray:
    n_max = max(len(h.labels) for h in model.hypotheses)
    out = np.zeros(n_max + 1)
    for h in model.hypotheses:
        out[len(h.labels)] += h.weight
    return out


@singledispatch
def phd(model) -> dict[Label, tuple[float, GaussianMixture]]:
    """Per-label existence probability and normalized attribute density."""
    raise TypeError(f"unsupported model type: {type(model).__name__}")


@phd.register
def _(model: LmbDensity) -> dict[Label, tuple[float, GaussianMixture]]:
    return {l: (model.r(l), model.density(l)) for l in model.labels}


@phd.register
def _(model: GlmbDensity) -> dict[Label, tuple[float, GaussianMixture]]:
    out: dict[Label, tuple[float, GaussianMixture]] = {}
    for l in model.label_universe:
        parts = [(h.weight, h.density_of(l)) for h in model.hypotheses if l in h.labels]
        r = sum(w for w, _ in parts)
        if r > 0.0:
            mix = mixture_sum(parts).normalized()
        else:
            # every containing hypothesis underflowed: the conditional
            # density is 0/0, so return the unweighted average instead
            mix = mixture_sum([(1.0, d) for _, d in parts]).normalized()
        out[l] = (min(r, 1.0), mix)
    return out


def joint_existence(model: GlmbDensity, L, include_supersets: bool = False) -> float:
    """Probability that the hypothesized label set is exactly L.

    With include_supersets=True returns the probability that all of L exist
    regardless of other labels.
    """
    want = frozenset(as_label(l) for l in L)
    if len(want) != len(tuple(L)):
        raise ValueError("L must have distinct labels")
    total = 0.0
    for h in model.hypotheses:
        have = frozenset(h.labels)
        if have == want or (include_supersets and want <= have):
            total += h.weight
    return total


# ---------------------------------------------------------------------------
# brute-force set integral (test oracle)


def set_integral_oracle(f, grid, cell_volume=None, label_pool=(), n_max=None) -> float:
    """Brute-force set integral of ``f`` over a finite grid.

    For labeled pools the integral sums over all label subsets up to n_max
    and assigns each label an independent grid point; for unlabeled models
    it sums over unordered distinct grid-point subsets (the 1/n! ordered
    form). Used exclusively as a test oracle; cost is exponential in n_max.
    """
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if cell_volume is None:
        if pts.shape[1] != 1 or len(pts) < 2:
            raise ValueError("cell_volume required for non-uniform or multi-d grids")
        steps = np.diff(pts[:, 0])
        if not np.allclose(steps, steps[0]):
            raise ValueError("cell_volume required for non-uniform grids")
        cell_volume = float(steps[0])
    labels = tuple(as_label(l) for l in label_pool)
    if n_max is None:
        n_max = len(labels) if labels else 3
    m = len(pts)
    total = 0.0
    if labels:
        for n in range(0, n_max + 1):
            for subset in itertools.combinations(labels, n):
                if n == 0:
                    total += float(f([]))
                    continue
                for assign in itertools.product(range(m), repeat=n):
                    X = [(pts[g], l) for g, l in zip(assign, subset)]
                    total += float(f(X)) * cell_volume**n
    else:
        for n in range(0, n_max + 1):
            if n == 0:
                total += float(f([]))
                continue
            for combo in itertools.combinations(range(m), n):
                X = [pts[g] for g in combo]
                total += float(f(X)) * cell_volume**n
    return total
