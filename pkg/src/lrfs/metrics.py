"""OSPA and OSPA(2) miss distances between multi-object estimates and truth."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["ospa", "ospa2"]


def _as_points(X) -> np.ndarray:
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return np.asarray(X, dtype=float)
    pts = [np.atleast_1d(np.asarray(x, dtype=float)) for x in X]
    return np.stack(pts) if pts else np.zeros((0, 1))


def _ospa_from_cost(D: np.ndarray, c: float, p: float) -> float:
    """OSPA given the capped pairwise base-distance matrix."""
    m, mm = D.shape
    if m == 0 and mm == 0:
        return 0.0
    if m == 0 or mm == 0:
        return float(c)
    n = max(m, mm)
    rows, cols = linear_sum_assignment(D**p)
    body = float((D[rows, cols] ** p).sum())
    return float(((body + c**p * (n - min(m, mm))) / n) ** (1.0 / p))


def ospa(X, Y, c: float, p: float = 1.0) -> float:
    """Optimal sub-pattern assignment distance between two point sets.

    Zero when both sets are empty, the cutoff c when exactly one is; else
    ((1/n)(min-assignment sum of min(d, c)^p + c^p |n - m|))^(1/p) with
    n the larger cardinality. The assignment is solved exactly.
    """
    if c <= 0.0 or p < 1.0:
        raise ValueError("need cutoff c > 0 and order p >= 1")
    A, B = _as_points(X), _as_points(Y)
    # canonical orientation: both argument orders run the same arithmetic,
    # so symmetry holds to the last bit
    if len(A) > len(B) or (len(A) == len(B) and A.tobytes() > B.tobytes()):
        A, B = B, A
    if len(A) and len(B):
        diff = A[:, None, :] - B[None, :, :]
        D = np.minimum(np.sqrt((diff**2).sum(axis=2)), c)
    else:
        D = np.zeros((len(A), len(B)))
    return _ospa_from_cost(D, c, p)


def _trajectory_table(T) -> dict:
    """{label: {scan: state vector}} from (label, start, states) triples."""
    out = {}
    for label, start, states in T:
        out[label] = {
            int(start) + m: np.atleast_1d(np.asarray(x, dtype=float))
            for m, x in enumerate(states)
        }
    return out


def ospa2(T1, T2, c: float, p: float = 1.0, window=None) -> float:
    """OSPA over trajectory space with a time-averaged base distance.

    Trajectories are (label, start_scan, list of per-scan states). The base
    distance between two trajectories averages min(d, c) over the window,
    charging c at scans where exactly one exists and 0 where neither does.
    window defaults to the union of scans present in either set.
    """
    if c <= 0.0 or p < 1.0:
        raise ValueError("need cutoff c > 0 and order p >= 1")
    A = _trajectory_table(T1)
    B = _trajectory_table(T2)
    if window is None:
        window = sorted(
            {k for tr in A.values() for k in tr} | {k for tr in B.values() for k in tr}
        )
    window = list(window)
    la, lb = list(A), list(B)
    if not la and not lb:
        return 0.0
    if not la or not lb:
        return float(c)
    if not window:
        return 0.0
    D = np.zeros((len(la), len(lb)))
    for i, l1 in enumerate(la):
        t1 = A[l1]
        for j, l2 in enumerate(lb):
            t2 = B[l2]
            acc = 0.0
            for k in window:
                x1 = t1.get(k)
                x2 = t2.get(k)
                if x1 is None and x2 is None:
                    continue
                if x1 is None or x2 is None:
                    acc += c
                else:
                    acc += min(float(np.linalg.norm(x1 - x2)), c)
            D[i, j] = acc / len(window)
    return _ospa_from_cost(D, c, p)
