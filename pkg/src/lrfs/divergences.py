"""Closed-form information divergences between LMB, GLMB, and Poisson models.

Per-label cross integrals use exact Gaussian identities when both tracks are
single-component and fall back to adaptive 1-D quadrature for mixtures.
Divergences can legitimately return +inf (failed domination); callers should
treat inf as a value, not an error.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.linalg import cho_factor, cho_solve

from .densities import BernoulliRfs, GlmbDensity, LmbDensity, PoissonRfs
from .gaussians import GaussianMixture

__all__ = [
    "renyi_lmb",
    "kl_lmb",
    "chi2_lmb",
    "csd_lmb",
    "csd_glmb",
    "bhattacharyya_lmb",
    "divergence_poisson",
    "cross_power",
    "cross_kl",
    "cross_chi2",
    "cross_product",
]


def _logdet_and_inv(P):
    c, low = cho_factor(P, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
    return logdet, cho_solve((c, low), np.eye(P.shape[0]))


def _gauss_log_power(m1, P1, m2, P2, alpha: float) -> float:
    """ln of the integral of N1^alpha N2^(1-alpha)."""
    star = alpha * P2 + (1.0 - alpha) * P1
    d = m1 - m2
    ld_star, inv_star = _logdet_and_inv(star)
    ld1, _ = _logdet_and_inv(P1)
    ld2, _ = _logdet_and_inv(P2)
    quad = float(d @ inv_star @ d)
    return -0.5 * alpha * (1.0 - alpha) * quad - 0.5 * (
        ld_star - (1.0 - alpha) * ld1 - alpha * ld2
    )


def _gauss_kl(m1, P1, m2, P2) -> float:
    ld1, _ = _logdet_and_inv(P1)
    ld2, inv2 = _logdet_and_inv(P2)
    d = m1 - m2
    return 0.5 * (
        float(np.trace(inv2 @ P1)) + float(d @ inv2 @ d) - len(m1) + ld2 - ld1
    )


def _gauss_chi2_integral(m1, P1, m2, P2) -> float:
    """Integral of N1^2 / N2; +inf when 2*inv(P1) - inv(P2) is not PD."""
    ld1, inv1 = _logdet_and_inv(P1)
    ld2, inv2 = _logdet_and_inv(P2)
    lam = 2.0 * inv1 - inv2
    try:
        c, low = cho_factor(lam, lower=True)
    except np.linalg.LinAlgError:
        return math.inf
    except ValueError:
        return math.inf
    ld_lam = 2.0 * float(np.sum(np.log(np.diag(c))))
    b = 2.0 * inv1 @ m1 - inv2 @ m2
    quad = 0.5 * float(b @ cho_solve((c, low), b))
    quad -= float(m1 @ inv1 @ m1)
    quad += 0.5 * float(m2 @ inv2 @ m2)
    return math.exp(-0.5 * ld_lam + 0.5 * ld2 - ld1 + quad)


def _quad_1d(fn, supports) -> float:
    """Adaptive quadrature over the union of component windows."""
    los = [m - 12.0 * s for m, s in supports]
    his = [m + 12.0 * s for m, s in supports]
    val, _ = integrate.quad(fn, min(los), max(his), limit=400)
    return float(val)


def _supports(*gms: GaussianMixture):
    out = []
    for gm in gms:
        for m, v in zip(gm.means[:, 0], gm.covariances[:, 0, 0]):
            out.append((float(m), math.sqrt(float(v))))
    return out


def _require_1d(*gms: GaussianMixture):
    if any(gm.dim != 1 for gm in gms):
        raise ValueError("mixture cross integrals support 1-D attributes only")


def cross_power(f1: GaussianMixture, f2: GaussianMixture, alpha: float) -> float:
    """<f1^alpha f2^(1-alpha)>, closed-form for single Gaussians."""
    if len(f1) == 1 and len(f2) == 1:
        w1, m1, P1 = f1.component(0)
        w2, m2, P2 = f2.component(0)
        return (
            w1**alpha
            * w2 ** (1.0 - alpha)
            * math.exp(_gauss_log_power(m1, P1, m2, P2, alpha))
        )
    _require_1d(f1, f2)
    return _quad_1d(
        lambda x: float(f1.pdf(x)) ** alpha * float(f2.pdf(x)) ** (1.0 - alpha),
        _supports(f1, f2),
    )


def cross_kl(f1: GaussianMixture, f2: GaussianMixture) -> float:
    """<f1 ln(f1/f2)>; scaled inputs contribute their log-ratio of masses."""
    if len(f1) == 1 and len(f2) == 1:
        w1, m1, P1 = f1.component(0)
        w2, m2, P2 = f2.component(0)
        return w1 * (math.log(w1 / w2) + _gauss_kl(m1, P1, m2, P2))
    _require_1d(f1, f2)

    def fn(x):
        a = float(f1.pdf(x))
        if a <= 0.0:
            return 0.0
        return a * (math.log(a) - math.log(float(f2.pdf(x))))

    return _quad_1d(fn, _supports(f1, f2))


def cross_chi2(f1: GaussianMixture, f2: GaussianMixture) -> float:
    """<f1^2 / f2>; +inf when f2's tails are too thin to dominate."""
    if len(f1) == 1 and len(f2) == 1:
        w1, m1, P1 = f1.component(0)
        w2, m2, P2 = f2.component(0)
        return (w1 * w1 / w2) * _gauss_chi2_integral(m1, P1, m2, P2)
    _require_1d(f1, f2)
    # fattest tails decide integrability: need 2*max var of f2 > max var of f1
    v1 = float(np.max(f1.covariances[:, 0, 0]))
    v2 = float(np.max(f2.covariances[:, 0, 0]))
    if 2.0 * v2 <= v1 * (1.0 + 1e-12):
        return math.inf
    return _quad_1d(
        lambda x: float(f1.pdf(x)) ** 2 / float(f2.pdf(x)), _supports(f1, f2)
    )


def cross_product(f1: GaussianMixture, f2: GaussianMixture) -> float:
    """<f1 f2>, always closed-form (bilinear in the components)."""
    total = 0.0
    zero = np.zeros(f1.dim)
    for i in range(len(f1)):
        w1, m1, P1 = f1.component(i)
        for j in range(len(f2)):
            w2, m2, P2 = f2.component(j)
            total += w1 * w2 * GaussianMixture.single(m1 - m2, P1 + P2).pdf_at(zero)
    return total


# ---------------------------------------------------------------------------
# LMB divergences


def _track_pairs(a: LmbDensity, b: LmbDensity):
    labels = sorted(set(a.labels) | set(b.labels))
    for l in labels:
        ta = a.tracks.get(l)
        tb = b.tracks.get(l)
        yield l, ta, tb


def renyi_lmb(a: LmbDensity, b: LmbDensity, alpha: float) -> float:
    """Renyi divergence of order alpha in (0,1), a per-label sum.

    Each label contributes ln(q1^a q2^(1-a) + r1^a r2^(1-a) <p1^a p2^(1-a)>)
    / (a-1) with q = 1-r; labels missing from one side contribute only their
    existence term (the cross integral vanishes off the shared domain).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    total = 0.0
    for _, ta, tb in _track_pairs(a, b):
        r1 = ta.r if ta is not None else 0.0
        r2 = tb.r if tb is not None else 0.0
        inner = (1.0 - r1) ** alpha * (1.0 - r2) ** (1.0 - alpha)
        if ta is not None and tb is not None and r1 > 0.0 and r2 > 0.0:
            inner += (
                r1**alpha
                * r2 ** (1.0 - alpha)
                * cross_power(ta.density, tb.density, alpha)
            )
        total += math.log(inner) / (alpha - 1.0)
    return total


def kl_lmb(a: LmbDensity, b: LmbDensity) -> float:
    """Kullback-Leibler divergence; +inf when b fails to dominate a.

    Computed in the LMB parameter form; the integral form (existence log
    ratio plus the weighted track cross entropy) is evaluated alongside and
    asserted to agree, the two being algebraically identical.
    """
    total = 0.0
    for l, ta, tb in _track_pairs(a, b):
        r1 = ta.r if ta is not None else 0.0
        r2 = tb.r if tb is not None else 0.0
        if r1 > 0.0 and r2 <= 0.0:
            return math.inf
        q1, q2 = 1.0 - r1, 1.0 - r2
        param = q1 * math.log(q1 / q2)
        if r1 > 0.0:
            track_kl = cross_kl(ta.density, tb.density)
            param += r1 * math.log(r1 / r2) + r1 * track_kl
            integral = math.log(q1 / q2) + r1 * (
                math.log(r1 * q2 / (q1 * r2)) + track_kl
            )
        else:
            integral = math.log(q1 / q2)
        if math.isfinite(param) and abs(param - integral) > 1e-9 * max(1.0, abs(param)):
            raise AssertionError(f"KL forms disagree at label {l}")
        total += param
    return total


def chi2_lmb(a: LmbDensity, b: LmbDensity) -> float:
    """Chi-squared divergence; requires b's tracks to dominate a's.

    Product over labels of (q1^2/q2 + (r1^2/r2) <p1^2/p2>) minus one, with
    the 0^2/0 = 0 convention making absent-from-both labels contribute a
    unit factor.
    """
    log_prod = 0.0
    for _, ta, tb in _track_pairs(a, b):
        r1 = ta.r if ta is not None else 0.0
        r2 = tb.r if tb is not None else 0.0
        if r1 > 0.0 and r2 <= 0.0:
            return math.inf
        factor = (1.0 - r1) ** 2 / (1.0 - r2)
        if r1 > 0.0:
            ratio = cross_chi2(ta.density, tb.density)
            if math.isinf(ratio):
                return math.inf
            factor += (r1 * r1 / r2) * ratio
        if factor <= 0.0:
            return math.inf
        log_prod += math.log(factor)
    return math.expm1(log_prod)


def csd_lmb(a: LmbDensity, b: LmbDensity, unit_u: float = 1.0) -> float:
    """Cauchy-Schwarz divergence, per-label sum; depends on the unit U."""
    if unit_u <= 0.0:
        raise ValueError("unit_u must be positive")
    total = 0.0
    for _, ta, tb in _track_pairs(a, b):
        cross = 1.0
        if ta is not None and tb is not None and ta.r > 0.0 and tb.r > 0.0:
            g1 = ta.r / (1.0 - ta.r)
            g2 = tb.r / (1.0 - tb.r)
            cross += unit_u * g1 * g2 * cross_product(ta.density, tb.density)
        self1 = 1.0
        if ta is not None and ta.r > 0.0:
            g1 = ta.r / (1.0 - ta.r)
            self1 += unit_u * g1 * g1 * cross_product(ta.density, ta.density)
        self2 = 1.0
        if tb is not None and tb.r > 0.0:
            g2 = tb.r / (1.0 - tb.r)
            self2 += unit_u * g2 * g2 * cross_product(tb.density, tb.density)
        total -= math.log(cross / math.sqrt(self1 * self2))
    return total


def csd_glmb(a: GlmbDensity, b: GlmbDensity, unit_u: float = 1.0) -> float:
    """Cauchy-Schwarz divergence between GLMBs.

    -ln of the normalized inner product <a,b>_U, where hypothesis pairs
    contribute only on identical label sets, each pair weighted by
    U^|L| times the product of per-label Gaussian product integrals.
    """
    if unit_u <= 0.0:
        raise ValueError("unit_u must be positive")

    def by_labels(g: GlmbDensity):
        out: dict[tuple, list] = {}
        for h in g.hypotheses:
            out.setdefault(h.labels, []).append(h)
        return out

    ga, gb = by_labels(a), by_labels(b)

    def inner(x, y) -> float:
        total = 0.0
        for labels, hx in x.items():
            hy = y.get(labels)
            if hy is None:
                continue
            scale = unit_u ** len(labels)
            for h1 in hx:
                for h2 in hy:
                    prod = scale * h1.weight * h2.weight
                    for d1, d2 in zip(h1.densities, h2.densities):
                        prod *= cross_product(d1, d2)
                        if prod == 0.0:
                            break
                    total += prod
        return total

    cross = inner(ga, gb)
    if cross <= 0.0:
        return math.inf
    return -math.log(cross / math.sqrt(inner(ga, ga) * inner(gb, gb)))


def bhattacharyya_lmb(a: LmbDensity, b: LmbDensity) -> float:
    """Bhattacharyya distance: the Renyi divergence at alpha = 1/2."""
    return renyi_lmb(a, b, 0.5)


# ---------------------------------------------------------------------------
# Poisson closed forms


def _intensity_rate(v) -> tuple[GaussianMixture, float]:
    gm = v.intensity if isinstance(v, PoissonRfs) else v
    return gm, gm.total_weight


def divergence_poisson(kind: str, v1, v2, alpha: float | None = None, unit_u: float = 1.0) -> float:
    """Divergences between Poisson RFS given their intensity functions.

    kind: "renyi" (needs alpha), "kl", "chi2", or "cs". Intensities are
    scaled Gaussian mixtures (total weight = expected count) or PoissonRfs.
    """
    g1, lam1 = _intensity_rate(v1)
    g2, lam2 = _intensity_rate(v2)
    if kind == "renyi":
        if alpha is None or not 0.0 < alpha < 1.0:
            raise ValueError("renyi needs alpha strictly between 0 and 1")
        cross = cross_power(g1, g2, alpha)
        return (cross - alpha * lam1 - (1.0 - alpha) * lam2) / (alpha - 1.0)
    if kind == "kl":
        if lam1 > 0.0 and lam2 <= 0.0:
            return math.inf
        term = cross_kl(g1, g2) if lam1 > 0.0 else 0.0
        return lam2 - lam1 + term
    if kind == "chi2":
        if lam1 > 0.0 and lam2 <= 0.0:
            return math.inf
        ratio = cross_chi2(g1, g2) if lam1 > 0.0 else 0.0
        if math.isinf(ratio):
            return math.inf
        return math.expm1(ratio - 2.0 * lam1 + lam2)
    if kind == "cs":
        if unit_u <= 0.0:
            raise ValueError("unit_u must be positive")
        sq = (
            cross_product(g1, g1)
            - 2.0 * cross_product(g1, g2)
            + cross_product(g2, g2)
        )
        return 0.5 * unit_u * max(sq, 0.0)
    raise ValueError(f"unknown divergence kind: {kind}")
