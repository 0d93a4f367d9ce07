import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from support import gm1, lmb_of
from lrfs import (
    AssociationHistory,
    BernoulliRfs,
    GlmbDensity,
    GlmbHypothesis,
    Label,
    LmbDensity,
    MultiBernoulli,
    cardinality_distribution,
    eval_density,
    joint_existence,
    phd,
    set_integral_oracle,
)

STD_NORMAL = gm1((1.0, 0.0, 1.0))


def test_bernoulli_eval_empty_set():
    f = BernoulliRfs(0.5, STD_NORMAL)
    assert eval_density(f, []) == 0.5


def test_bernoulli_eval_singleton():
    f = BernoulliRfs(0.5, STD_NORMAL)
    # 0.5 * (2 pi)^(-1/2), scalar standard normal at the origin
    assert eval_density(f, [np.array([0.0])]) == pytest.approx(
        0.19947114020071635, rel=1e-12
    )


def test_lmb_eval_label_outside_domain_is_zero():
    f = lmb_of({(0, 1): (0.5, [(1.0, 0.0, 1.0)])})
    assert eval_density(f, [(np.array([0.0]), Label(0, 2))]) == 0.0


def test_glmb_single_hypothesis_eval():
    g = GlmbDensity.single(
        labels=(Label(0, 1),), densities=(STD_NORMAL,)
    )
    val = eval_density(g, [(np.array([0.0]), Label(0, 1))])
    assert val == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-12)


def test_multibernoulli_cardinality():
    mb = MultiBernoulli([BernoulliRfs(0.5, STD_NORMAL), BernoulliRfs(0.5, STD_NORMAL)])
    np.testing.assert_allclose(
        cardinality_distribution(mb), [0.25, 0.5, 0.25], atol=1e-15
    )
    empty = MultiBernoulli([])
    np.testing.assert_allclose(cardinality_distribution(empty), [1.0])


@given(st.lists(st.floats(0.0, 0.99), max_size=6))
def test_multibernoulli_cardinality_matches_convolution(rs):
    mb = MultiBernoulli([BernoulliRfs(r, STD_NORMAL) for r in rs])
    expect = np.array([1.0])
    for r in rs:
        expect = np.polymul(expect, [1.0 - r, r])
    got = cardinality_distribution(mb)
    np.testing.assert_allclose(got, expect, atol=1e-12)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def _two_hypothesis_glmb():
    l1, l2 = Label(0, 1), Label(0, 2)
    h1 = GlmbHypothesis(
        math.log(0.4), (l1,), AssociationHistory([(0, ((l1, 0),))]), (STD_NORMAL,)
    )
    h2 = GlmbHypothesis(
        math.log(0.6),
        (l1, l2),
        AssociationHistory([(0, ((l1, 0), (l2, 0)))]),
        (STD_NORMAL, STD_NORMAL),
    )
    return GlmbDensity([h1, h2]), l1, l2


def test_glmb_cardinality_indicator_sums():
    g, _, _ = _two_hypothesis_glmb()
    np.testing.assert_allclose(cardinality_distribution(g), [0.0, 0.4, 0.6], atol=1e-12)


def test_phd_lmb_identity():
    f = lmb_of({(0, 1): (0.3, [(1.0, 0.0, 1.0)])})
    out = phd(f)
    assert set(out) == {Label(0, 1)}
    r, d = out[Label(0, 1)]
    assert r == pytest.approx(0.3)
    np.testing.assert_allclose(d.means, [[0.0]])


def test_phd_glmb_existence_sums():
    g, l1, l2 = _two_hypothesis_glmb()
    out = phd(g)
    assert out[l1][0] == pytest.approx(1.0, abs=1e-12)
    assert out[l2][0] == pytest.approx(0.6, abs=1e-12)


def test_phd_glmb_density_mixture():
    l1 = Label(0, 1)
    h1 = GlmbHypothesis(math.log(0.5), (l1,), AssociationHistory([(0, ((l1, 0),))]), (gm1((1.0, 0.0, 1.0)),))
    h2 = GlmbHypothesis(math.log(0.5), (l1,), AssociationHistory([(0, ((l1, 1),))]), (gm1((1.0, 2.0, 1.0)),))
    g = GlmbDensity([h1, h2])
    r, d = phd(g)[l1]
    assert r == pytest.approx(1.0)
    np.testing.assert_allclose(sorted(float(m[0]) for m in d.means), [0.0, 2.0])
    np.testing.assert_allclose(d.weights, [0.5, 0.5])


def test_joint_existence():
    g, l1, l2 = _two_hypothesis_glmb()
    assert joint_existence(g, []) == 0.0
    assert joint_existence(g, [l1]) == pytest.approx(0.4)
    assert joint_existence(g, [l1], include_supersets=True) == pytest.approx(1.0)
    label_sets = {frozenset(h.labels) for h in g.hypotheses}
    total = sum(joint_existence(g, sorted(s)) for s in label_sets)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_set_integral_oracle_bernoulli_normalized():
    f = BernoulliRfs(0.5, STD_NORMAL)
    grid = np.linspace(-8, 8, 1601)
    total = set_integral_oracle(lambda X: eval_density(f, X), grid, n_max=1)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_set_integral_oracle_lmb_normalized_and_cardinality():
    f = lmb_of({(0, 1): (0.4, [(1.0, -1.0, 1.0)]), (0, 2): (0.6, [(1.0, 1.5, 0.8)])})
    grid = np.linspace(-11, 11, 221)
    total = set_integral_oracle(
        lambda X: eval_density(f, X), grid, label_pool=f.labels, n_max=2
    )
    assert total == pytest.approx(1.0, abs=1e-3)
    card = cardinality_distribution(f)
    for n in range(3):
        restricted = set_integral_oracle(
            lambda X: eval_density(f, X) if len(X) == n else 0.0,
            grid,
            label_pool=f.labels,
            n_max=2,
        )
        assert restricted == pytest.approx(card[n], abs=1e-3)


def test_association_history_records_and_queries():
    l1, l2 = Label(0, 1), Label(1, 1)
    h = AssociationHistory()
    h1 = h.extended(0, [(l1, 2)])
    h2 = h1.extended(1, [])
    h3 = h2.extended(2, [(l1, 0), (l2, 1)])
    assert h3.scans() == (0, 1, 2)
    assert h3.assignments_at(1) == {}
    assert h3.assignments_at(2) == {l1: 0, l2: 1}
    assert h3.detections_of(l1) == ((0, 2), (2, 0))
    # value semantics
    rebuilt = AssociationHistory(h3.records)
    assert rebuilt == h3 and hash(rebuilt) == hash(h3)
    assert h1 != h2


def test_association_history_rejects_bad_records():
    l1 = Label(0, 1)
    h = AssociationHistory().extended(0, [(l1, 0)])
    with pytest.raises(ValueError):
        h.extended(0, [])  # scan must advance
    with pytest.raises(ValueError):
        AssociationHistory().extended(0, [(l1, 0), (l1, 1)])  # duplicate label
    # -1 entries encode death and are dropped, not recorded
    dead = AssociationHistory().extended(0, [(l1, -1)])
    assert dead.records == ((0, ()),)


def test_glmb_normalizes_and_sorts():
    l1 = Label(0, 1)
    hA = GlmbHypothesis(math.log(0.2), (), AssociationHistory([(0, ())]), ())
    hB = GlmbHypothesis(
        math.log(0.6), (l1,), AssociationHistory([(0, ((l1, 0),))]), (STD_NORMAL,)
    )
    g = GlmbDensity([hA, hB])
    np.testing.assert_allclose(g.weights, [0.75, 0.25])
    assert g.map_hypothesis().labels == (l1,)


def test_glmb_rejects_duplicates_and_empty():
    l1 = Label(0, 1)
    h = GlmbHypothesis(0.0, (l1,), AssociationHistory([(0, ((l1, 0),))]), (STD_NORMAL,))
    with pytest.raises(ValueError):
        GlmbDensity([h, h])
    with pytest.raises(ValueError):
        GlmbDensity([])


def test_from_lmb_weights_are_subset_products():
    f = lmb_of({(0, 1): (0.3, [(1.0, 0.0, 1.0)]), (0, 2): (0.8, [(1.0, 1.0, 1.0)])})
    g = GlmbDensity.from_lmb(f)
    got = {frozenset(h.labels): h.weight for h in g.hypotheses}
    l1, l2 = Label(0, 1), Label(0, 2)
    assert got[frozenset()] == pytest.approx(0.7 * 0.2)
    assert got[frozenset([l1])] == pytest.approx(0.3 * 0.2)
    assert got[frozenset([l2])] == pytest.approx(0.7 * 0.8)
    assert got[frozenset([l1, l2])] == pytest.approx(0.3 * 0.8)


@given(
    st.lists(
        st.tuples(st.floats(0.01, 0.99), st.floats(-3, 3)), min_size=1, max_size=4
    )
)
def test_glmb_from_lmb_preserves_phd(tracks):
    f = lmb_of(
        {(0, i + 1): (r, [(1.0, mu, 1.0)]) for i, (r, mu) in enumerate(tracks)}
    )
    g = GlmbDensity.from_lmb(f)
    out = phd(g)
    for i, (r, _) in enumerate(tracks):
        assert out[Label(0, i + 1)][0] == pytest.approx(r, abs=1e-12)


def test_bernoulli_rejects_certain_existence():
    with pytest.raises(ValueError):
        BernoulliRfs(1.0, STD_NORMAL)


def test_eval_density_matches_oracle_pointwise():
    # library pointwise evaluation against the test-side transcription
    tracks = {(0, 1): (0.4, [(1.0, 0.0, 1.0)]), (0, 2): (0.7, [(1.0, 1.0, 1.3)])}
    f = lmb_of(tracks)
    l1, l2 = Label(0, 1), Label(0, 2)
    for X, subset, xs in [
        ([], (), ()),
        ([(np.array([0.3]), l1)], ((0, 1),), (np.array(0.3),)),
        (
            [(np.array([0.3]), l1), (np.array([-1.0]), l2)],
            ((0, 1), (0, 2)),
            (np.array(0.3), np.array(-1.0)),
        ),
    ]:
        want = float(oracles._subset_density_values(tracks, subset, list(xs)))
        assert eval_density(f, X) == pytest.approx(want, rel=1e-12)
