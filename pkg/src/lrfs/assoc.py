"""Truncation engines: Gibbs sampling over extended associations and Murty K-best.

An extended association gamma maps the P hypothesized labels to
{-1 (dead/not born), 0 (misdetected), j > 0 (detection j)} under the
positive 1-1 constraint. Both engines consume a ScoreMatrix and emit
candidate tuples with exact weights omega(gamma) = prod_i eta^(i)(gamma_i).
"""

from __future__ import annotations

import heapq
import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

try:  # compiled kernel, built by setup.py when a toolchain exists
    from ._sgs import run_sweeps as _run_sweeps

    KERNEL = "compiled"
except ImportError:  # pragma: no cover - exercised on toolchain-free installs
    from ._sgs_py import run_sweeps as _run_sweeps

    KERNEL = "python"

from .models import ScoreMatrix

__all__ = [
    "ExtendedAssociation",
    "CostMatrix",
    "gibbs_conditional",
    "gibbs_sample",
    "gibbs_chain",
    "cost_matrix",
    "murty_kbest",
    "KERNEL",
]


class ExtendedAssociation:
    """Immutable positive 1-1 tuple of per-label association outcomes."""

    __slots__ = ("values",)

    def __init__(self, values):
        vals = tuple(int(v) for v in values)
        if any(v < -1 for v in vals):
            raise ValueError("association values must be >= -1")
        pos = [v for v in vals if v > 0]
        if len(set(pos)) != len(pos):
            raise ValueError("positive entries must be pairwise distinct")
        self.values = vals

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __eq__(self, other):
        return isinstance(other, ExtendedAssociation) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return f"ExtendedAssociation{self.values}"


def _zeroed_row(sm: ScoreMatrix, i: int, current) -> np.ndarray:
    row = sm.eta[i].copy()
    for pos, j in enumerate(current):
        if pos != i and j > 0:
            row[1 + j] = 0.0
    return row


def gibbs_conditional(sm: ScoreMatrix, i: int, current) -> np.ndarray:
    """Normalized conditional over {-1..M} for row i given the other rows.

    Entries at positive j claimed by another label are zeroed before
    normalizing.
    """
    current = ExtendedAssociation(current)
    if len(current) != sm.P:
        raise ValueError("current association length must equal P")
    row = _zeroed_row(sm, i, current)
    total = row.sum()
    if total <= 0.0:
        raise ValueError(f"all-zero conditional for row {i}")
    return row / total


def _chain_states(sm: ScoreMatrix, iterations: int, seed: int, init, chain_key=()) -> np.ndarray:
    if init is None:
        init = [-1] * sm.P
    init = ExtendedAssociation(init)
    if len(init) != sm.P:
        raise ValueError("init length must equal P")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in chain_key))
    rng = np.random.Generator(np.random.Philox(ss))
    uniforms = rng.random((int(iterations), sm.P))
    init_arr = np.asarray(init.values, dtype=np.int64)
    if iterations == 0:
        visited = init_arr[None, :]
    else:
        swept = np.asarray(_run_sweeps(np.ascontiguousarray(sm.eta), init_arr, uniforms))
        visited = np.vstack([init_arr[None, :], swept])
    return visited


def gibbs_chain(sm: ScoreMatrix, iterations: int, seed: int = 0, init=None) -> np.ndarray:
    """Raw visited states, one row per sweep, with the init state first.

    Diagnostic interface: stationarity checks need visit counts, not just
    the distinct set that gibbs_sample returns.
    """
    return _chain_states(sm, iterations, seed, init)


def unique_states(sm: ScoreMatrix, iterations, seed, init=None, chain_key=()) -> np.ndarray:
    """Distinct visited association tuples, lexicographically sorted."""
    if iterations is None:
        iterations = 10 * sm.P  # default sweep budget when unspecified
    visited = _chain_states(sm, iterations, seed, init, chain_key)
    return np.unique(visited, axis=0)


def log_weight_of(sm: ScoreMatrix, gamma) -> float:
    """log omega(gamma) = sum_i log eta^(i)(gamma_i)."""
    return float(sum(sm.log_eta[i, 1 + j] for i, j in enumerate(gamma)))


def gibbs_sample(sm: ScoreMatrix, iterations=None, seed: int = 0, init=None):
    """Distinct associations visited by T systematic sweeps, with weights.

    Every returned tuple is positive 1-1; weights are the exact
    omega(gamma) products, not visit frequencies. The default init is the
    all-(-1) tuple, and iterations=None uses 10 P sweeps.
    """
    states = unique_states(sm, iterations, seed, init)
    out = []
    for row in states:
        gamma = ExtendedAssociation(row)
        out.append((gamma, math.exp(log_weight_of(sm, gamma))))
    out.sort(key=lambda t: (-t[1], t[0].values))
    return out


# ---------------------------------------------------------------------------
# ranked assignment


class CostMatrix:
    """P x (M + 2P) extended-assignment cost matrix.

    Finite entries exist only at detection columns 1..M, the misdetection
    diagonal (column M+i for row i) and the death diagonal (column M+P+i).
    """

    __slots__ = ("entries", "P", "M")

    def __init__(self, entries):
        entries = np.asarray(entries, dtype=float)
        P = entries.shape[0]
        M = entries.shape[1] - 2 * P
        if P < 1 or M < 0:
            raise ValueError("cost matrix must be P x (M + 2P)")
        for i in range(P):
            for col in range(M, entries.shape[1]):
                on_diag = col == M + i or col == M + P + i
                if not on_diag and np.isfinite(entries[i, col]):
                    raise ValueError("off-diagonal misdetection/death cost must be +inf")
        self.entries = entries
        self.P = P
        self.M = M

    def gamma_of_columns(self, cols) -> ExtendedAssociation:
        vals = []
        for i, c in enumerate(cols):
            if c < self.M:
                vals.append(c + 1)
            elif c == self.M + i:
                vals.append(0)
            elif c == self.M + self.P + i:
                vals.append(-1)
            else:
                raise ValueError("assignment uses an infeasible column")
        return ExtendedAssociation(vals)


def cost_matrix(sm: ScoreMatrix) -> CostMatrix:
    """C entries are -ln eta, laid out per the extended assignment pattern."""
    P, M = sm.P, sm.M
    C = np.full((P, M + 2 * P), np.inf)
    with np.errstate(divide="ignore"):
        C[:, :M] = -sm.log_eta[:, 2:]
        for i in range(P):
            C[i, M + i] = -sm.log_eta[i, 1]
            C[i, M + P + i] = -sm.log_eta[i, 0]
    return CostMatrix(C)


def _solve_node(base: np.ndarray, forbidden, fixed):
    """Best assignment under forced/forbidden cells; None when infeasible."""
    A = base.copy()
    P = A.shape[0]
    for r, c in forbidden:
        A[r, c] = np.inf
    for r, c in fixed.items():
        keep = A[r, c]
        A[r, :] = np.inf
        A[:, c] = np.inf
        A[r, c] = keep
    try:
        rows, cols = linear_sum_assignment(A)
    except ValueError:
        return None
    total = float(A[rows, cols].sum())
    if not np.isfinite(total):
        return None
    assign = np.empty(P, dtype=int)
    assign[rows] = cols
    return total, tuple(int(c) for c in assign)


def murty_kbest(C: CostMatrix, K=None):
    """K best extended associations by total cost, non-decreasing.

    Ties are broken by lexicographic gamma order (the heap key includes the
    decoded tuple). K=None enumerates the whole feasible set. Fewer than K
    results are returned when the feasible set is smaller.
    """
    if K is not None and K < 1:
        raise ValueError("K must be >= 1")
    base = C.entries
    root = _solve_node(base, frozenset(), {})
    if root is None:
        return []
    out = []
    counter = itertools.count()
    heap = []

    def push(sol, forbidden, fixed):
        cost, cols = sol
        gamma = C.gamma_of_columns(cols)
        heapq.heappush(heap, (cost, gamma.values, next(counter), cols, forbidden, fixed))

    push(root, frozenset(), {})
    while heap and (K is None or len(out) < K):
        cost, gvals, _, cols, forbidden, fixed = heapq.heappop(heap)
        out.append((ExtendedAssociation(gvals), cost))
        # Murty partition over the non-fixed rows
        child_fixed = dict(fixed)
        for r in range(C.P):
            if r in fixed:
                continue
            child_forbidden = forbidden | {(r, cols[r])}
            sol = _solve_node(base, child_forbidden, child_fixed)
            if sol is not None:
                push(sol, child_forbidden, dict(child_fixed))
            child_fixed[r] = cols[r]
    return out
