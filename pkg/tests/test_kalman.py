import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from support import gm1
from lrfs import (
    GaussianMixture,
    LinearGaussianMotion,
    LinearGaussianSensor,
    kalman_predict,
    kalman_update,
    mixture_reduce,
    rts_smooth,
)


def test_predict_identity():
    prior = GaussianMixture.single(np.zeros(2), np.eye(2))
    motion = LinearGaussianMotion(np.eye(2), np.zeros((2, 2)))
    out = kalman_predict(prior, motion)
    np.testing.assert_allclose(out.means, prior.means)
    np.testing.assert_allclose(out.covariances, prior.covariances)


def test_predict_additive_noise():
    prior = GaussianMixture.single([1.0, -2.0], [[2.0, 0.3], [0.3, 1.0]])
    Q0 = np.array([[0.5, 0.1], [0.1, 0.4]])
    out = kalman_predict(prior, LinearGaussianMotion(np.eye(2), Q0))
    np.testing.assert_allclose(out.means, prior.means)
    np.testing.assert_allclose(out.covariances[0], prior.covariances[0] + Q0)


def test_predict_componentwise():
    prior = gm1((0.3, -1.0, 1.0), (0.7, 2.0, 0.5))
    motion = LinearGaussianMotion([[2.0]], [[0.1]])
    out = kalman_predict(prior, motion)
    np.testing.assert_allclose(out.weights, prior.weights)
    np.testing.assert_allclose(out.means[:, 0], [-2.0, 4.0])
    np.testing.assert_allclose(out.covariances[:, 0, 0], [4.1, 2.1])


def test_update_scalar():
    prior = gm1((1.0, 0.0, 1.0))
    sensor = LinearGaussianSensor([[1.0]], [[1.0]])
    post, marginal = kalman_update(prior, sensor, [0.0])
    # N(0; 0, 2) = (4 pi)^(-1/2), pinned by the scalar Kalman oracle
    assert marginal == pytest.approx(0.28209479177387814, rel=1e-12)
    np.testing.assert_allclose(post.means, [[0.0]], atol=1e-15)
    np.testing.assert_allclose(post.covariances, [[[0.5]]], rtol=1e-12)


def test_update_uninformative():
    prior = gm1((1.0, 1.5, 2.0))
    sensor = LinearGaussianSensor([[1.0]], [[1e12]])
    post, _ = kalman_update(prior, sensor, [100.0])
    np.testing.assert_allclose(post.means, prior.means, atol=1e-5)
    np.testing.assert_allclose(post.covariances, prior.covariances, rtol=1e-5)


def test_update_symmetric_mixture_keeps_equal_weights():
    prior = gm1((0.5, -3.0, 1.0), (0.5, 3.0, 1.0))
    sensor = LinearGaussianSensor([[1.0]], [[1.0]])
    post, _ = kalman_update(prior, sensor, [0.0])
    np.testing.assert_allclose(post.weights, [0.5, 0.5], atol=1e-12)


@given(
    st.floats(-5, 5),
    st.floats(0.1, 4.0),
    st.floats(0.1, 4.0),
    st.floats(-5, 5),
)
def test_update_matches_scalar_algebra(mu, var, rr, z):
    post, marginal = kalman_update(
        gm1((1.0, mu, var)), LinearGaussianSensor([[1.0]], [[rr]]), [z]
    )
    m, v, lik = oracles._scalar_update(mu, var, z, rr)
    assert marginal == pytest.approx(lik, rel=1e-10)
    assert float(post.means[0, 0]) == pytest.approx(m, abs=1e-10)
    assert float(post.covariances[0, 0, 0]) == pytest.approx(v, rel=1e-10)


def test_reduce_single_component_unchanged():
    gm = gm1((1.0, 1.0, 2.0))
    out = mixture_reduce(gm, 0.1, 4.0, 10)
    np.testing.assert_allclose(out.means, gm.means)
    np.testing.assert_allclose(out.covariances, gm.covariances)


def test_reduce_merges_identical_components():
    gm = gm1((0.5, 1.0, 2.0), (0.5, 1.0, 2.0))
    out = mixture_reduce(gm, 0.0, 0.5, 10)
    assert len(out) == 1
    assert out.weights[0] == pytest.approx(1.0)
    np.testing.assert_allclose(out.means, [[1.0]])
    np.testing.assert_allclose(out.covariances, [[[2.0]]])


def test_reduce_prunes_and_renormalizes():
    gm = gm1((0.99, 0.0, 1.0), (0.01, 50.0, 1.0))
    out = mixture_reduce(gm, 0.02, 0.5, 10)
    assert len(out) == 1
    assert out.weights[0] == pytest.approx(1.0)
    np.testing.assert_allclose(out.means, [[0.0]])


def test_reduce_cap_keeps_heaviest():
    gm = gm1((0.5, 0.0, 1.0), (0.3, 20.0, 1.0), (0.2, -20.0, 1.0))
    out = mixture_reduce(gm, 0.0, 0.1, 2)
    assert len(out) == 2
    assert out.weights.sum() == pytest.approx(1.0)
    assert set(np.round(out.means[:, 0])) == {0.0, 20.0}


def test_rts_matches_joint_gaussian_oracle():
    rng = np.random.default_rng(7)
    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    Q = np.array([[0.3, 0.1], [0.1, 0.2]])
    H = np.array([[1.0, 0.0]])
    R = np.array([[0.5]])
    motion = LinearGaussianMotion(F, Q)
    sensor = LinearGaussianSensor(H, R)
    m0 = rng.normal(size=2)
    P0 = np.array([[2.0, 0.2], [0.2, 1.0]])
    zs = [rng.normal(size=1) * 3 for _ in range(6)]

    cur = GaussianMixture.single(m0, P0)
    filt_m, filt_P = [], []
    for t, z in enumerate(zs):
        if t > 0:
            cur = kalman_predict(cur, motion)
        cur, _ = kalman_update(cur, sensor, z)
        filt_m.append(cur.means[0])
        filt_P.append(cur.covariances[0])

    sm, sc = rts_smooth(filt_m, filt_P, motion)
    want_m, want_P, _ = oracles.joint_smoother(F, Q, H, R, m0, P0, zs)
    for k in range(len(zs)):
        np.testing.assert_allclose(sm[k], want_m[k], atol=1e-9)
        np.testing.assert_allclose(sc[k], want_P[k], atol=1e-9)


def test_rts_last_scan_equals_filtered():
    motion = LinearGaussianMotion([[1.0]], [[0.5]])
    means = [np.array([0.0]), np.array([1.0])]
    covs = [np.eye(1), 0.5 * np.eye(1)]
    sm, sc = rts_smooth(means, covs, motion)
    np.testing.assert_allclose(sm[-1], means[-1])
    np.testing.assert_allclose(sc[-1], covs[-1])
