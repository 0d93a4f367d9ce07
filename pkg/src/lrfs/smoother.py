"""Multi-scan GLMB posterior over a scan window.

Hypotheses carry whole trajectories: per label, the birth scan, the forward
filtered marginals, and the association indices. The joint trajectory density
is never materialized; smoothing runs backward on demand. Truncation of the
history space uses either exhaustive ranked assignment per extension,
sequential per-scan factor sampling, or the full multi-scan Gibbs sampler
whose conditionals span every scan a trajectory touches.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .assoc import _chain_states, cost_matrix, log_weight_of, murty_kbest, unique_states
from .densities import AssociationHistory
from .filters import FilterConfig
from .gaussians import GaussianMixture
from .kalman import kalman_predict, rts_smooth
from .labels import Label
from .models import BirthModel, ObservationModel, ScoreMatrix, SurvivalModel, _track_row

__all__ = [
    "TrajectoryRecord",
    "MsHypothesis",
    "MultiScanGlmb",
    "msglmb_extend",
    "run_msglmb",
    "freeze_before",
    "sequential_factor_sample",
    "multiscan_gibbs",
    "history_log_weight",
    "trajectory_stats",
    "TrajectoryStats",
    "estimate_trajectories",
    "TrajectoryEstimate",
]


class TrajectoryRecord:
    """One trajectory inside a hypothesis: contiguous scans start..end.

    filtered[m] is the forward filtered attribute density at scan start+m and
    assoc[m] the association index used there (0 = misdetected). Death inside
    the window leaves the record untouched; the death weight lives in the
    hypothesis weight.
    """

    __slots__ = ("start", "filtered", "assoc")

    def __init__(self, start: int, filtered, assoc):
        self.start = int(start)
        self.filtered = tuple(filtered)
        self.assoc = tuple(int(j) for j in assoc)
        if len(self.filtered) != len(self.assoc) or not self.filtered:
            raise ValueError("filtered densities and association indices must align")
        if any(j < 0 for j in self.assoc):
            raise ValueError("stored association indices must be >= 0")

    @property
    def end(self) -> int:
        return self.start + len(self.filtered) - 1

    @property
    def length(self) -> int:
        return len(self.filtered)

    def covers(self, scan: int) -> bool:
        return self.start <= scan <= self.end

    def density_at(self, scan: int) -> GaussianMixture:
        return self.filtered[scan - self.start]

    def extended(self, density: GaussianMixture, j: int) -> "TrajectoryRecord":
        return TrajectoryRecord(self.start, self.filtered + (density,), self.assoc + (j,))

    def __repr__(self) -> str:
        return f"TrajectoryRecord(start={self.start}, end={self.end})"


class MsHypothesis:
    """A weighted label-set sequence with its trajectories and history."""

    __slots__ = ("log_weight", "records", "history")

    def __init__(self, log_weight: float, records, history: AssociationHistory):
        self.log_weight = float(log_weight)
        items = sorted(dict(records).items())
        for l, rec in items:
            if l.birth_time != rec.start:
                raise ValueError(f"record for {l} does not start at its birth time")
        self.records = tuple(items)
        self.history = history

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(l for l, _ in self.records)

    def record_of(self, label: Label) -> TrajectoryRecord:
        for l, rec in self.records:
            if l == label:
                return rec
        raise KeyError(label)

    def live_at(self, scan: int):
        return tuple((l, rec) for l, rec in self.records if rec.end == scan)


class MultiScanGlmb:
    """Normalized multi-scan GLMB over the window start..end."""

    __slots__ = ("start", "end", "hypotheses", "motion", "discarded_l1")

    def __init__(self, start, end, hypotheses: Iterable[MsHypothesis], motion=None, discarded_l1=0.0):
        hyps = [h for h in hypotheses if h.log_weight > -math.inf]
        if not hyps:
            raise ValueError("a multi-scan GLMB needs at least one finite-weight hypothesis")
        seen = set()
        for h in hyps:
            if h.history in seen:
                raise ValueError("duplicate history in multi-scan hypothesis list")
            seen.add(h.history)
        total = logsumexp([h.log_weight for h in hyps])
        hyps = [MsHypothesis(h.log_weight - total, dict(h.records), h.history) for h in hyps]
        hyps.sort(key=lambda h: (-h.log_weight, h.history.records))
        self.start = int(start)
        self.end = int(end)
        self.hypotheses = tuple(hyps)
        self.motion = motion
        self.discarded_l1 = float(discarded_l1)

    @classmethod
    def empty(cls, start: int = 0) -> "MultiScanGlmb":
        return cls(start, start - 1, [MsHypothesis(0.0, {}, AssociationHistory())])

    @property
    def weights(self) -> np.ndarray:
        return np.array([h.weight for h in self.hypotheses])

    def map_hypothesis(self) -> MsHypothesis:
        return self.hypotheses[0]

    def __len__(self) -> int:
        return len(self.hypotheses)

    def truncated(self, budget: int) -> tuple["MultiScanGlmb", float]:
        if len(self.hypotheses) <= budget:
            return self, 0.0
        kept = self.hypotheses[:budget]
        l1 = float(sum(h.weight for h in self.hypotheses[budget:]))
        out = MultiScanGlmb(self.start, self.end, kept, self.motion, discarded_l1=l1)
        return out, l1

    def __repr__(self) -> str:
        return (
            f"MultiScanGlmb(window={self.start}..{self.end}, "
            f"hypotheses={len(self.hypotheses)})"
        )


def msglmb_extend(
    post: MultiScanGlmb,
    Z,
    birth: BirthModel,
    survival: SurvivalModel,
    obs: ObservationModel,
    cfg: FilterConfig | None = None,
    candidates_per_hypothesis: int | None = None,
) -> MultiScanGlmb:
    """Append one scan to the window.

    Each parent extends its live trajectories (survive with a detection or
    misdetection, or die now) and opens this scan's birth slots; dead
    trajectories ride along unchanged. candidates_per_hypothesis=None
    enumerates every association exhaustively (exact, combinatorial);
    an integer runs that many Gibbs sweeps per parent instead. cfg caps the
    stored hypotheses; pass a large max_hypotheses for untruncated runs.
    """
    cfg = cfg if cfg is not None else FilterConfig()
    scan = birth.scan
    if scan != post.end + 1:
        raise ValueError(f"extension scan {scan} must follow window end {post.end}")
    Z = np.atleast_2d(np.asarray(Z, dtype=float)) if len(Z) else np.zeros((0, obs.sensor.meas_dim))
    gate = None if math.isinf(cfg.gate) else cfg.gate

    rows_cache: dict[tuple, tuple[np.ndarray, dict]] = {}

    def row_for(label: Label, rec: TrajectoryRecord | None):
        key = (label, id(rec))
        if key not in rows_cache:
            if rec is None:
                r = birth.probability_of(label)
                dens = birth.density_of(label)
            else:
                prior = rec.filtered[-1]
                r = survival.mean_survival(prior)
                dens = kalman_predict(prior, survival.motion)
            row, posts = _track_row(r, dens, obs, Z, gate)
            rows_cache[key] = (row, {j: cfg.reduce(p) for j, p in posts.items()})
        return rows_cache[key]

    acc: dict[AssociationHistory, MsHypothesis] = {}
    for p_idx, h in enumerate(post.hypotheses):
        live = h.live_at(post.end)
        dead = {l: rec for l, rec in h.records if rec.end < post.end}
        labels = [l for l, _ in live] + list(birth.labels)
        if set(l for l, _ in live) & set(birth.labels):
            raise ValueError("birth labels collide with live trajectories")
        if labels:
            pairs = [row_for(l, rec) for l, rec in live] + [
                row_for(l, None) for l in birth.labels
            ]
            eta = np.ascontiguousarray(np.vstack([row for row, _ in pairs]))
            cache = {(i, j): gm for i, (_, posts) in enumerate(pairs) for j, gm in posts.items()}
            sm = ScoreMatrix(labels, Z, eta, cache)
            if candidates_per_hypothesis is None:
                gammas = [tuple(g) for g, _ in murty_kbest(cost_matrix(sm), None)]
            else:
                init = [0] * sm.P
                states = unique_states(
                    sm, max(1, candidates_per_hypothesis), cfg.seed, init, (scan, p_idx)
                )
                gammas = [tuple(int(v) for v in row) for row in states]
        else:
            sm = None
            gammas = [()]
        for gamma in gammas:
            logw = h.log_weight + (log_weight_of(sm, gamma) if sm is not None else 0.0)
            if logw == -math.inf:
                continue
            records = dict(dead)
            for i, ((l, rec), j) in enumerate(zip(live, gamma)):
                records[l] = rec.extended(sm.posterior(i, j), j) if j >= 0 else rec
            offset = len(live)
            for i, l in enumerate(birth.labels):
                j = gamma[offset + i]
                if j >= 0:
                    records[l] = TrajectoryRecord(scan, (sm.posterior(offset + i, j),), (j,))
            kept = [(l, j) for l, j in zip(labels, gamma) if j >= 0]
            hist = h.history.extended(scan, kept)
            if hist in acc:  # distinct parents cannot collide; same parent, distinct gamma
                raise AssertionError("unexpected history collision during extension")
            acc[hist] = MsHypothesis(logw, records, hist)
    out = MultiScanGlmb(post.start, scan, acc.values(), motion=survival.motion)
    out, _ = out.truncated(cfg.max_hypotheses)
    return out


def freeze_before(post: MultiScanGlmb, oldest_free: int) -> MultiScanGlmb:
    """Fix associations at scans before oldest_free to the current best.

    Keeps only hypotheses whose history agrees with the highest-weight one on
    the frozen scans, then renormalizes. Bounds the per-step cost of a
    moving-window smoother at the price of committing early decisions.
    """

    def prefix(h: MsHypothesis):
        return tuple((k, pairs) for k, pairs in h.history.records if k < oldest_free)

    ref = prefix(post.map_hypothesis())
    kept = [h for h in post.hypotheses if prefix(h) == ref]
    return MultiScanGlmb(post.start, post.end, kept, post.motion, post.discarded_l1)


def run_msglmb(
    scans,
    birth_for_scan,
    survival: SurvivalModel,
    obs: ObservationModel,
    cfg: FilterConfig,
    candidates_per_hypothesis: int | None = None,
    window: int | None = None,
) -> MultiScanGlmb:
    """Extend scan by scan; window W freezes scans older than the last W."""
    scans = list(scans)
    post = MultiScanGlmb.empty(scans[0][0] if scans else 0)
    for k, Z in scans:
        post = msglmb_extend(
            post, Z, birth_for_scan(k), survival, obs, cfg, candidates_per_hypothesis
        )
        if window is not None and post.end - post.start + 1 > window:
            post = freeze_before(post, post.end - window + 1)
    return post


# ---------------------------------------------------------------------------
# association-history samplers


class _TrajectoryEngine:
    """Shared per-label forward factors for history sampling and weighing.

    row(label, js) is the score row the label faces at scan
    birth_time + len(js), given detections js since birth: entry 0 the
    death/no-birth factor, entry 1+j the association factors. Rows are
    memoized on the detection prefix so chains and sweeps share work.
    """

    def __init__(self, scans, birth_for_scan, survival, obs, gate=None):
        self.scans = [(int(k), np.atleast_2d(np.asarray(Z, dtype=float)) if len(Z) else np.zeros((0, obs.sensor.meas_dim))) for k, Z in scans]
        ids = [k for k, _ in self.scans]
        if ids != list(range(ids[0], ids[0] + len(ids))):
            raise ValueError("scans must be contiguous")
        self.first = ids[0]
        self.last = ids[-1]
        self.Z = dict(self.scans)
        self.births = {k: birth_for_scan(k) for k in ids}
        self.survival = survival
        self.obs = obs
        self.gate = gate
        self._rows: dict[tuple, tuple[np.ndarray, dict]] = {}

    def birth_labels(self, k) -> tuple[Label, ...]:
        return self.births[k].labels

    def row(self, label: Label, js: tuple):
        key = (label, js)
        if key not in self._rows:
            scan = label.birth_time + len(js)
            if not self.first <= scan <= self.last:
                raise ValueError(f"scan {scan} outside the window")
            if js:
                prev_row, prev_posts = self.row(label, js[:-1])
                if prev_row[1 + js[-1]] <= 0.0:
                    raise ValueError("detection prefix has zero probability")
                prior = prev_posts[js[-1]]
                r = self.survival.mean_survival(prior)
                dens = kalman_predict(prior, self.survival.motion)
            else:
                b = self.births[label.birth_time]
                r = b.probability_of(label)
                dens = b.density_of(label)
            self._rows[key] = _track_row(r, dens, self.obs, self.Z[scan], self.gate)
        return self._rows[key]

    def history_log_weight(self, history: AssociationHistory) -> float:
        """Exact log weight: the product of score factors over every scan
        and every label then in play (live or in that scan's birth slots)."""
        per_label: dict[Label, dict[int, int]] = {}
        n_entries = 0
        for k, pairs in history.records:
            for l, j in pairs:
                per_label.setdefault(l, {})[k] = j
                n_entries += 1
        total = 0.0
        consumed = 0
        prefix: dict[Label, tuple] = {}
        live_prev: set[Label] = set()
        for k, _ in self.scans:
            domain = set(self.birth_labels(k)) | live_prev
            live_now: set[Label] = set()
            for l in sorted(domain):
                j = per_label.get(l, {}).get(k, -1)
                row = self.row(l, prefix.get(l, ()))[0]
                v = row[0] if j < 0 else row[1 + j]
                if v <= 0.0:
                    return -math.inf
                total += math.log(v)
                if j >= 0:
                    prefix[l] = prefix.get(l, ()) + (j,)
                    live_now.add(l)
                    consumed += 1
                else:
                    prefix.pop(l, None)
            live_prev = live_now
        if consumed != n_entries:
            raise ValueError("history references labels outside any valid trajectory")
        return total


def history_log_weight(history, scans, birth_for_scan, survival, obs, gate=None) -> float:
    """Recompute a history's unnormalized log weight from the model."""
    eng = _TrajectoryEngine(scans, birth_for_scan, survival, obs, gate)
    return eng.history_log_weight(history)


def sequential_factor_sample(
    scans,
    birth_for_scan,
    survival: SurvivalModel,
    obs: ObservationModel,
    chains: int = 1,
    sweeps_per_scan: int = 0,
    seed: int = 0,
    gate=None,
):
    """Draw association histories scan by scan.

    Each chain samples the current scan's association from its single-scan
    conditional (a Gibbs chain on that scan's score matrix, started from
    all-dead, last state taken), conditioned on everything drawn so far.
    Every output is a valid history. Returns distinct histories with their
    exact unnormalized log weights, highest first.
    """
    eng = _TrajectoryEngine(scans, birth_for_scan, survival, obs, gate)
    out: dict[AssociationHistory, float] = {}
    for c in range(chains):
        prefix: dict[Label, tuple] = {}
        live: list[Label] = []
        logw = 0.0
        records = []
        for k_idx, (k, Z) in enumerate(eng.scans):
            domain = sorted(live) + [l for l in eng.birth_labels(k) if l not in prefix]
            if domain:
                pairs = [eng.row(l, prefix.get(l, ())) for l in domain]
                eta = np.ascontiguousarray(np.vstack([row for row, _ in pairs]))
                cache = {
                    (i, j): gm for i, (_, posts) in enumerate(pairs) for j, gm in posts.items()
                }
                sm = ScoreMatrix(domain, Z, eta, cache)
                init = [-1] * sm.P
                if sweeps_per_scan > 0:
                    states = _chain_states(sm, sweeps_per_scan, seed, init, (c, k_idx))
                    gamma = tuple(int(v) for v in states[-1])
                else:
                    gamma = tuple(init)
                logw += log_weight_of(sm, gamma)
            else:
                gamma = ()
            live = []
            for l, j in zip(domain, gamma):
                if j >= 0:
                    prefix[l] = prefix.get(l, ()) + (j,)
                    live.append(l)
                else:
                    prefix.pop(l, None)
            records.append((k, [(l, j) for l, j in zip(domain, gamma) if j >= 0]))
        hist = AssociationHistory(records)
        out[hist] = logw
    return sorted(out.items(), key=lambda kv: (-kv[1], kv[0].records))


def multiscan_gibbs(
    scans,
    birth_for_scan,
    survival: SurvivalModel,
    obs: ObservationModel,
    sweeps: int,
    seed: int = 0,
    initial=None,
    gate=None,
    return_counts: bool = False,
):
    """Systematic-scan Gibbs over whole association histories.

    One coordinate is a (scan, label) cell; its conditional spans every scan
    the label's trajectory touches from that scan on: the product of score
    factors along the retained future detections, closed by the death factor
    if the trajectory ends inside the window. Positive indices claimed by
    another label at the scan are zeroed, and death is zeroed while the
    label stays alive at the next scan. Returns all distinct visited
    histories with exact unnormalized log weights (and, optionally, the
    post-sweep visit counts keyed by history).
    """
    eng = _TrajectoryEngine(scans, birth_for_scan, survival, obs, gate)
    if initial is None:
        initials = [AssociationHistory()]
    elif isinstance(initial, AssociationHistory):
        initials = [initial]
    else:
        initials = list(initial)
    visited: dict[tuple, None] = {}
    counts: dict[tuple, int] = {}
    for c_idx, h0 in enumerate(initials):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(c_idx,)))
        )
        cur: dict[Label, dict[int, int]] = {}
        claims: dict[int, dict[int, Label]] = {}
        for k, prs in h0.records:
            for l, j in prs:
                cur.setdefault(l, {})[k] = j
                if j > 0:
                    claims.setdefault(k, {})[j] = l
        visited.setdefault(_snapshot(cur))
        for _ in range(sweeps):
            live_prev: set[Label] = set()
            for k, Z in eng.scans:
                domain = sorted(set(eng.birth_labels(k)) | live_prev)
                for l in domain:
                    _resample_cell(eng, l, k, cur, claims, rng)
                live_prev = {l for l in cur if k in cur[l]}
            key = _snapshot(cur)
            visited.setdefault(key)
            counts[key] = counts.get(key, 0) + 1
    histories = [_history_from_snapshot(key, eng) for key in visited]
    weighted = sorted(
        ((h, eng.history_log_weight(h)) for h in histories),
        key=lambda kv: (-kv[1], kv[0].records),
    )
    if return_counts:
        return weighted, {
            _history_from_snapshot(key, eng): n for key, n in counts.items()
        }
    return weighted


def _snapshot(cur) -> tuple:
    return tuple(sorted((l, tuple(sorted(e.items()))) for l, e in cur.items() if e))


def _history_from_snapshot(key, eng: _TrajectoryEngine) -> AssociationHistory:
    by_scan: dict[int, list] = {}
    for l, entries in key:
        for k, j in entries:
            by_scan.setdefault(k, []).append((l, j))
    return AssociationHistory((k, by_scan.get(k, [])) for k, _ in eng.scans)


def _resample_cell(eng: _TrajectoryEngine, l: Label, k: int, cur, claims, rng) -> None:
    ent = cur.get(l, {})
    prefix = tuple(ent[m] for m in range(l.birth_time, k))
    future = []
    m = k + 1
    while m in ent:
        future.append(ent[m])
        m += 1
    t_end = k + len(future)
    row_k = eng.row(l, prefix)[0]
    claimed = claims.get(k, {})
    M = len(row_k) - 2
    w = np.zeros(M + 2)
    if not future:
        w[0] = row_k[0]
    for j in range(0, M + 1):
        if j > 0 and claimed.get(j, l) != l:
            continue
        v = row_k[1 + j]
        if v <= 0.0:
            continue
        js = prefix + (j,)
        for jm in future:
            v *= eng.row(l, js)[0][1 + jm]
            if v <= 0.0:
                break
            js = js + (jm,)
        else:
            # trajectory ending inside the window pays its death factor
            if v > 0.0 and t_end < eng.last:
                v *= eng.row(l, js)[0][0]
            w[1 + j] = v
    cum = np.cumsum(w)
    total = float(cum[-1])
    if total <= 0.0:
        raise ValueError("all-zero multi-scan conditional")
    c = int(np.searchsorted(cum, rng.random() * total, side="right"))
    j_new = min(c, M + 1) - 1
    j_old = ent.get(k, -1)
    if j_new == j_old:
        return
    if j_old > 0:
        del claims[k][j_old]
    if j_new > 0:
        claims.setdefault(k, {})[j_new] = l
    if j_new < 0:
        del cur[l][k]
        if not cur[l]:
            del cur[l]
    else:
        cur.setdefault(l, {})[k] = j_new


# ---------------------------------------------------------------------------
# trajectory statistics and estimators


class TrajectoryStats:
    """Window statistics of a multi-scan posterior.

    Supports attribute and mapping-style access. length_dist excludes
    hypotheses with no trajectories (the per-hypothesis trajectory count
    divides the summand, so the empty hypothesis is undefined there) and
    renormalizes over the rest; it raises when no hypothesis has one.
    """

    def __init__(self, post: MultiScanGlmb):
        self._post = post
        counts = [len(h.records) for h in post.hypotheses]
        card = np.zeros(max(counts) + 1)
        for h, n in zip(post.hypotheses, counts):
            card[n] += h.weight
        self.traj_cardinality = card

    def joint_existence_exact(self, L) -> float:
        want = tuple(sorted(Label(*l) if not isinstance(l, Label) else l for l in L))
        return float(sum(h.weight for h in self._post.hypotheses if h.labels == want))

    def joint_existence_super(self, L) -> float:
        want = set(Label(*l) if not isinstance(l, Label) else l for l in L)
        return float(
            sum(h.weight for h in self._post.hypotheses if want <= set(h.labels))
        )

    @property
    def length_dist(self) -> np.ndarray:
        num = {}
        mass = 0.0
        for h in self._post.hypotheses:
            if not h.records:
                continue
            mass += h.weight
            share = h.weight / len(h.records)
            for _, rec in h.records:
                num[rec.length] = num.get(rec.length, 0.0) + share
        if mass <= 0.0:
            raise ValueError("length distribution undefined: no trajectories anywhere")
        out = np.zeros(max(num) + 1)
        for n, v in num.items():
            out[n] = v / mass
        return out

    def length_dist_of(self, label) -> np.ndarray:
        label = Label(*label) if not isinstance(label, Label) else label
        num = {}
        mass = 0.0
        for h in self._post.hypotheses:
            for l, rec in h.records:
                if l == label:
                    mass += h.weight
                    num[rec.length] = num.get(rec.length, 0.0) + h.weight
        if mass <= 0.0:
            raise ValueError(f"label {label} exists in no hypothesis")
        out = np.zeros(max(num) + 1)
        for n, v in num.items():
            out[n] = v / mass
        return out

    def __getitem__(self, key):
        return getattr(self, key)


def trajectory_stats(post: MultiScanGlmb) -> TrajectoryStats:
    return TrajectoryStats(post)


class TrajectoryEstimate(NamedTuple):
    label: Label
    start: int
    means: tuple
    covariances: tuple


def _smooth_record(rec: TrajectoryRecord, motion) -> TrajectoryEstimate:
    means = np.stack([gm.mean_vector() for gm in rec.filtered])
    covs = np.stack([gm.moment_cov() for gm in rec.filtered])
    if len(means) > 1 and motion is not None:
        means, covs = rts_smooth(means, covs, motion)
    return TrajectoryEstimate(None, rec.start, tuple(means), tuple(covs))


def _smoothed(h: MsHypothesis, motion) -> tuple[TrajectoryEstimate, ...]:
    out = []
    for l, rec in h.records:
        est = _smooth_record(rec, motion)
        out.append(TrajectoryEstimate(l, est.start, est.means, est.covariances))
    return tuple(out)


def estimate_trajectories(post: MultiScanGlmb, mode: str = "top_hypothesis"):
    """Trajectory estimates from a multi-scan posterior.

    top_hypothesis: the highest-weight hypothesis. top_given_cardinality:
    the most probable trajectory count first, then the best hypothesis with
    that count. label_mam_sequence: the label-set sequence with the largest
    summed weight, represented by its best member. label_mam_length: the
    label set with the largest exact joint existence; each of its labels gets
    its most probable length (ties to the shorter) and the best hypothesis
    realizing it. Attributes are backward-smoothed along each record.
    Ties break to the lexicographically smallest key.
    """
    if mode == "top_hypothesis":
        return _smoothed(post.map_hypothesis(), post.motion)
    if mode == "top_given_cardinality":
        stats = trajectory_stats(post)
        n_star = int(np.argmax(stats.traj_cardinality))
        best = next(h for h in post.hypotheses if len(h.records) == n_star)
        return _smoothed(best, post.motion)
    if mode == "label_mam_sequence":
        groups: dict[tuple, float] = {}
        reps: dict[tuple, MsHypothesis] = {}
        for h in post.hypotheses:
            key = tuple((l, rec.start, rec.end) for l, rec in h.records)
            groups[key] = groups.get(key, 0.0) + h.weight
            reps.setdefault(key, h)  # hypotheses arrive weight-sorted
        best_key = min(groups, key=lambda ky: (-groups[ky], ky))
        return _smoothed(reps[best_key], post.motion)
    if mode == "label_mam_length":
        groups: dict[tuple, float] = {}
        for h in post.hypotheses:
            groups[h.labels] = groups.get(h.labels, 0.0) + h.weight
        best_labels = min(groups, key=lambda ls: (-groups[ls], ls))
        stats = trajectory_stats(post)
        out = []
        for l in best_labels:
            dist = stats.length_dist_of(l)
            m_star = int(np.argmax(dist))  # argmax takes the first: shorter wins ties
            rep = next(
                h
                for h in post.hypotheses
                for ll, rec in h.records
                if ll == l and rec.length == m_star
            )
            est = _smooth_record(rep.record_of(l), post.motion)
            out.append(TrajectoryEstimate(l, est.start, est.means, est.covariances))
        return tuple(out)
    raise ValueError(f"unknown trajectory estimator mode: {mode}")
