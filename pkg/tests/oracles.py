"""Independent reference implementations used to pin expected test values.

Everything here is written directly from the defining sums and integrals
(subset enumeration, tensor-product grids, explicit scalar Kalman algebra),
not from the library's closed forms, so each test compares two separate
derivations of the same quantity.  Keep this module free of imports from
lrfs internals beyond plain data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import norm


# ---------------------------------------------------------------------------
# scalar Gaussian helpers


def mixture_pdf(x, components):
    """Evaluate sum_k w_k N(x; mu_k, var_k) elementwise.

    components: sequence of (w, mu, var) scalars.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for w, mu, var in components:
        out += w * norm.pdf(x, loc=mu, scale=math.sqrt(var))
    return out


def grid_for(all_components, cells, width=12.0):
    """Uniform grid covering every component mean +- width * max sigma."""
    mus = [mu for _, mu, _ in all_components]
    sig = max(math.sqrt(v) for _, _, v in all_components)
    lo = min(mus) - width * sig
    hi = max(mus) + width * sig
    pts = np.linspace(lo, hi, cells)
    return pts, float(pts[1] - pts[0])


# ---------------------------------------------------------------------------
# labeled RFS set integrals on 1-D attribute grids
#
# An LMB is given here as {label: (r, [(w, mu, var), ...])}.  The density of
# a labeled set with labels L and attributes {x_l} is
#   prod_{l not in L} (1 - r_l) * prod_{l in L} r_l p_l(x_l)
# and the set integral sums over all label subsets and integrates each
# attribute out.  Powers and ratios are applied to the full density values,
# never distributed over labels, so this stays a brute-force evaluation.


def _subset_density_values(tracks, subset, meshes):
    """Density values of one LMB on the tensor grid of `subset` attributes.

    meshes[i] is the broadcastable grid for subset[i].  Labels outside the
    subset contribute their missing factor (1 - r); labels of the subset
    that the LMB does not carry make the whole array zero.
    """
    const = 1.0
    for lbl, (r, _) in tracks.items():
        if lbl not in subset:
            const *= 1.0 - r
    vals = np.full(np.broadcast_shapes(*(m.shape for m in meshes)) if meshes else (), const)
    for lbl, mesh in zip(subset, meshes):
        if lbl not in tracks:
            return np.zeros_like(vals)
        r, comps = tracks[lbl]
        vals = vals * (r * mixture_pdf(mesh, comps))
    return vals


def lmb_set_integral(tracks_a, tracks_b, integrand, cells_by_dim=(4000, 260, 64), unit_u=1.0):
    """sum_L U^|L| * h^|L| * sum_grid integrand(pi_a(X), pi_b(X)).

    integrand maps two equal-shape arrays of density values to an array;
    the empty set contributes integrand on the two scalar no-object values.
    """
    labels = sorted(set(tracks_a) | set(tracks_b))
    comps = [c for tr in (tracks_a, tracks_b) for _, cs in tr.values() for c in cs]
    total = 0.0
    for m in range(len(labels) + 1):
        pts, h = None, 1.0
        if m > 0:
            if m > len(cells_by_dim):
                raise ValueError("grid oracle limited to %d attribute dimensions" % len(cells_by_dim))
            pts, h = grid_for(comps, cells_by_dim[m - 1])
        for subset in itertools.combinations(labels, m):
            meshes = []
            for axis in range(m):
                shape = [1] * m
                shape[axis] = -1
                meshes.append(pts.reshape(shape))
            a = _subset_density_values(tracks_a, subset, meshes)
            b = _subset_density_values(tracks_b, subset, meshes)
            total += (unit_u * h) ** m * float(np.sum(integrand(a, b)))
    return total


def oracle_renyi(tracks_a, tracks_b, alpha, **kw):
    def f(a, b):
        out = np.zeros_like(a)
        mask = (a > 0) & (b > 0)
        out[mask] = a[mask] ** alpha * b[mask] ** (1.0 - alpha)
        return out

    val = lmb_set_integral(tracks_a, tracks_b, lambda a, b: f(np.atleast_1d(a), np.atleast_1d(b)), **kw)
    return math.log(val) / (alpha - 1.0)


def oracle_kl(tracks_a, tracks_b, **kw):
    def f(a, b):
        a = np.atleast_1d(a)
        b = np.atleast_1d(b)
        out = np.zeros_like(a)
        mask = a > 0
        if np.any(b[mask] <= 0):
            raise OverflowError("absolute continuity violated")
        out[mask] = a[mask] * (np.log(a[mask]) - np.log(b[mask]))
        return out

    try:
        return lmb_set_integral(tracks_a, tracks_b, f, **kw)
    except OverflowError:
        return math.inf


def oracle_chi2(tracks_a, tracks_b, **kw):
    def f(a, b):
        a = np.atleast_1d(a)
        b = np.atleast_1d(b)
        out = np.zeros_like(a)
        mask = a > 0
        if np.any(b[mask] <= 0):
            raise OverflowError("absolute continuity violated")
        out[mask] = a[mask] ** 2 / b[mask]
        return out

    try:
        return lmb_set_integral(tracks_a, tracks_b, f, **kw) - 1.0
    except OverflowError:
        return math.inf


def oracle_csd(tracks_a, tracks_b, unit_u=1.0, **kw):
    ab = lmb_set_integral(tracks_a, tracks_b, lambda a, b: a * b, unit_u=unit_u, **kw)
    aa = lmb_set_integral(tracks_a, tracks_a, lambda a, b: a * b, unit_u=unit_u, **kw)
    bb = lmb_set_integral(tracks_b, tracks_b, lambda a, b: a * b, unit_u=unit_u, **kw)
    return -math.log(ab / math.sqrt(aa * bb))


# ---------------------------------------------------------------------------
# Poisson intensity divergences by quadrature
#
# Intensities are (rate, [(w, mu, var), ...]) with the mixture normalized;
# v(x) = rate * mixture_pdf(x).


def _intensity_on_grid(intensity, pts):
    rate, comps = intensity
    return rate * mixture_pdf(pts, comps)


def oracle_poisson(kind, v1, v2, alpha=None, unit_u=1.0, cells=200001):
    comps = list(v1[1]) + list(v2[1])
    pts, h = grid_for(comps, cells)
    a = _intensity_on_grid(v1, pts)
    b = _intensity_on_grid(v2, pts)
    l1, l2 = v1[0], v2[0]
    if kind == "renyi":
        cross = float(np.sum(a**alpha * b ** (1.0 - alpha))) * h
        return (cross - alpha * l1 - (1.0 - alpha) * l2) / (alpha - 1.0)
    if kind == "kl":
        mask = a > 0
        body = float(np.sum(a[mask] * (np.log(a[mask]) - np.log(b[mask])))) * h
        return l2 - l1 + body
    if kind == "chi2":
        mask = a > 0
        body = float(np.sum(a[mask] ** 2 / b[mask])) * h
        return math.expm1(body - 2.0 * l1 + l2)
    if kind == "cs":
        return 0.5 * unit_u * float(np.sum((a - b) ** 2)) * h
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# extended association enumeration


def enumerate_associations(P, M):
    """All gamma in {-1..M}^P whose positive entries are pairwise distinct."""
    out = []
    for gamma in itertools.product(range(-1, M + 1), repeat=P):
        pos = [j for j in gamma if j > 0]
        if len(set(pos)) == len(pos):
            out.append(gamma)
    return out


def gamma_weight(eta, gamma):
    """omega(gamma) = prod_i eta[i][gamma_i + 1]; eta is P x (M+2)."""
    w = 1.0
    for i, j in enumerate(gamma):
        w *= eta[i][j + 1]
    return w


def stationary_table(eta):
    """Normalized weight of every valid gamma under the score table eta."""
    eta = np.asarray(eta, dtype=float)
    P, cols = eta.shape
    M = cols - 2
    table = {g: gamma_weight(eta, g) for g in enumerate_associations(P, M)}
    total = sum(table.values())
    return {g: w / total for g, w in table.items() if w > 0}


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# OSPA by exhaustive assignment


def ospa_bruteforce(X, Y, c, p):
    X = [np.asarray(x, dtype=float) for x in X]
    Y = [np.asarray(y, dtype=float) for y in Y]
    if not X and not Y:
        return 0.0
    if not X or not Y:
        return float(c)
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        body = sum(min(float(np.linalg.norm(X[i] - Y[j])), c) ** p for i, j in enumerate(perm))
        best = min(best, body)
    return ((best + c**p * (n - m)) / n) ** (1.0 / p)


# ---------------------------------------------------------------------------
# linear-Gaussian smoothing oracle by joint-Gaussian conditioning
#
# Builds the joint distribution of the stacked states (x_0..x_T) under
# x_{k+1} = F x_k + w, conditions on all observations z_k = H x_k + v at
# once, and reads off the per-scan marginals.  Exact for linear-Gaussian
# chains; the library's forward-backward recursion must agree.


def joint_smoother(F, Q, H, R, prior_mean, prior_cov, zs):
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    d = F.shape[0]
    dz = H.shape[0]
    T = len(zs)
    mean = np.zeros(T * d)
    cov = np.zeros((T * d, T * d))
    mean[:d] = np.asarray(prior_mean, dtype=float)
    cov[:d, :d] = np.asarray(prior_cov, dtype=float)
    for k in range(1, T):
        mean[k * d : (k + 1) * d] = F @ mean[(k - 1) * d : k * d]
        for j in range(k):
            blk = F @ cov[(k - 1) * d : k * d, j * d : (j + 1) * d]
            cov[k * d : (k + 1) * d, j * d : (j + 1) * d] = blk
            cov[j * d : (j + 1) * d, k * d : (k + 1) * d] = blk.T
        cov[k * d : (k + 1) * d, k * d : (k + 1) * d] = (
            F @ cov[(k - 1) * d : k * d, (k - 1) * d : k * d] @ F.T + Q
        )
    Hbig = np.kron(np.eye(T), H)
    Rbig = np.kron(np.eye(T), R)
    z = np.concatenate([np.atleast_1d(np.asarray(zk, dtype=float)) for zk in zs])
    S = Hbig @ cov @ Hbig.T + Rbig
    K = cov @ Hbig.T @ np.linalg.inv(S)
    post_mean = mean + K @ (z - Hbig @ mean)
    post_cov = cov - K @ Hbig @ cov
    means = [post_mean[k * d : (k + 1) * d] for k in range(T)]
    covs = [post_cov[k * d : (k + 1) * d, k * d : (k + 1) * d] for k in range(T)]
    return means, covs, dz


# ---------------------------------------------------------------------------
# multi-scan history enumeration with explicit scalar Kalman algebra
#
# A tiny 1-D model: state x, motion x' = f x + w with w ~ N(0, q), sensor
# z = x + v with v ~ N(0, rr), constant P_S, P_D and clutter density kappa.
# Births: per scan k a list of (label, P_B, (mu0, var0)).  Scans: list of
# (k, [z...]).  Histories are dicts {label: (birth_scan, [j per scan])}
# with j >= 0 while alive; death is encoded by the list ending early.


def _scalar_update(mu, var, z, rr):
    s = var + rr
    k = var / s
    lik = norm.pdf(z, loc=mu, scale=math.sqrt(s))
    return mu + k * (z - mu), (1.0 - k) * var, lik


def _trajectory_weight(birth_entry, js, scans, f, q, rr, ps, pd, kappa, last_scan):
    """Weight factor of one born trajectory with per-scan assignments js."""
    _, pb, (mu, var) = birth_entry
    w = pb
    for step, j in enumerate(js):
        k, Z = scans[step]
        if step > 0:
            mu, var = f * mu, f * f * var + q
            w *= ps
        if j == 0:
            w *= 1.0 - pd
        else:
            z = float(np.asarray(Z[j - 1]).reshape(-1)[0])
            mu, var, lik = _scalar_update(mu, var, z, rr)
            w *= pd * lik / kappa
    end_scan = scans[0][0] + len(js) - 1
    if end_scan < last_scan:
        w *= 1.0 - ps
    return w


def enumerate_history_table(scans, births_for_scan, f, q, rr, ps, pd, kappa):
    """Normalized weight of every valid multi-scan association history.

    Returns {history_key: weight} where history_key is a tuple of
    (k, ((label, j), ...)) per scan with j >= 0, labels sorted, empty
    scans kept, matching AssociationHistory.records.
    """
    ks = [k for k, _ in scans]
    last = ks[-1]
    birth_entries = []
    for k in ks:
        for e in births_for_scan(k):
            birth_entries.append((k, e))

    per_label_options = []
    for bscan, entry in birth_entries:
        label = entry[0]
        opts = [None]  # never born
        start_idx = ks.index(bscan)
        for end_idx in range(start_idx, len(ks)):
            lengths = end_idx - start_idx + 1
            per_scan = []
            for step in range(lengths):
                M = len(scans[start_idx + step][1])
                per_scan.append(range(M + 1))
            for js in itertools.product(*per_scan):
                opts.append((start_idx, js))
        per_label_options.append((label, bscan, entry, opts))

    table = {}
    for combo in itertools.product(*(opts for _, _, _, opts in per_label_options)):
        weight = 1.0
        taken = {k: set() for k in ks}
        per_scan_pairs = {k: [] for k in ks}
        ok = True
        for (label, bscan, entry, _), choice in zip(per_label_options, combo):
            if choice is None:
                weight *= 1.0 - entry[1]
                continue
            start_idx, js = choice
            for step, j in enumerate(js):
                k = ks[start_idx + step]
                if j > 0:
                    if j in taken[k]:
                        ok = False
                        break
                    taken[k].add(j)
                per_scan_pairs[k].append((label, j))
            if not ok:
                break
            weight *= _trajectory_weight(entry, js, scans[start_idx:], f, q, rr, ps, pd, kappa, last)
        if not ok or weight <= 0.0:
            continue
        key = tuple((k, tuple(sorted(per_scan_pairs[k]))) for k in ks)
        table[key] = table.get(key, 0.0) + weight
    total = sum(table.values())
    return {k: w / total for k, w in table.items()}


def history_key_of(history):
    """Canonical comparison key for an lrfs AssociationHistory."""
    return tuple((k, tuple(sorted(pairs))) for k, pairs in history.records)
