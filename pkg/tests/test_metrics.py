"""Partition agreement, divergence, and interest-prediction metrics."""

import numpy as np
import pytest

from dhnet.hetnet import parse_network
from dhnet.metrics import (
    ConfusionMatrix,
    Distribution,
    community_profiles,
    jsd,
    mean_jsd,
    misclassification,
    nmi,
    predict_interest,
)
from oracles import reference_jsd, reference_misclassification, reference_nmi


def test_confusion_matrix_counts():
    cm = ConfusionMatrix.from_labels([0, 0, 1, 1], [0, 1, 0, 1])
    assert cm.counts.tolist() == [[1, 1], [1, 1]]
    assert cm.row.tolist() == [2, 2]
    assert cm.col.tolist() == [2, 2]
    assert cm.n == 4
    with pytest.raises(ValueError, match="length"):
        ConfusionMatrix.from_labels([0, 1], [0, 1, 0])


def test_nmi_examples():
    assert nmi([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert nmi([0, 0, 1, 1], [5, 5, 2, 2]) == 1.0  # relabeled
    assert nmi([1, 1, 2, 2], [1, 2, 1, 2]) == 0.0  # independent
    assert nmi([0, 0, 0], [0, 0, 0]) == 1.0  # both single-cluster
    assert nmi([0, 0, 0], [0, 1, 2]) == 0.0  # one single-cluster


def test_nmi_symmetric_and_matches_reference():
    rng = np.random.default_rng(90)
    for _ in range(50):
        n = int(rng.integers(5, 60))
        a = rng.integers(0, rng.integers(1, 6), size=n)
        b = rng.integers(0, rng.integers(1, 6), size=n)
        got = nmi(a, b)
        assert got == pytest.approx(nmi(b, a), abs=1e-12)
        assert got == pytest.approx(reference_nmi(a, b), abs=1e-10)
        assert 0.0 <= got <= 1.0


def test_misclassification_examples():
    assert misclassification([0, 1, 0, 1], [0, 1, 0, 1]) == 0.0
    assert misclassification([0, 1, 2, 0], [2, 0, 1, 2]) == 0.0  # pure relabel
    a = [0] * 5 + [1] * 5
    b = list(a)
    b[3] = 1  # one flip in n=10
    assert misclassification(a, b) == pytest.approx(0.1, abs=1e-12)


def test_misclassification_matches_exhaustive_reference():
    rng = np.random.default_rng(91)
    for _ in range(50):
        n = int(rng.integers(4, 40))
        a = rng.integers(0, rng.integers(1, 5), size=n)
        b = rng.integers(0, rng.integers(1, 5), size=n)
        got = misclassification(a, b)
        assert got == pytest.approx(reference_misclassification(a, b), abs=1e-12)
        if len(np.unique(a)) == len(np.unique(b)):
            assert got == pytest.approx(misclassification(b, a), abs=1e-12)


def test_hungarian_path_agrees_with_exhaustive_path():
    # force K > 8 so the assignment solver runs, then compare to brute force
    rng = np.random.default_rng(92)
    for _ in range(5):
        n = 60
        a = rng.integers(0, 9, size=n)
        b = a.copy()
        flips = rng.integers(0, n, size=6)
        b[flips] = rng.integers(0, 9, size=6)
        assert misclassification(a, b) == pytest.approx(
            reference_misclassification(a, b), abs=1e-12)


def test_distribution_validation():
    d = Distribution(np.array([0.25, 0.75]))
    assert d.support_size == 2
    assert Distribution.from_counts([2, 1, 1]).p.tolist() == [0.5, 0.25, 0.25]
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        Distribution(np.array([-0.1, 1.1]))
    with pytest.raises(ValueError):
        Distribution.from_counts([0, 0])


def test_jsd_examples():
    assert jsd([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert jsd([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.log(2), abs=1e-12)
    with pytest.raises(ValueError, match="support"):
        jsd([1.0], [0.5, 0.5])


def test_jsd_symmetric_bounded_matches_reference():
    rng = np.random.default_rng(93)
    for _ in range(50):
        k = int(rng.integers(2, 8))
        p = rng.dirichlet(np.ones(k))
        q = rng.dirichlet(np.ones(k))
        got = jsd(p, q)
        assert got == pytest.approx(jsd(q, p), abs=1e-12)
        assert got == pytest.approx(reference_jsd(p, q), abs=1e-10)
        assert 0.0 <= got <= np.log(2) + 1e-12
        assert jsd(p, p) == 0.0


def test_mean_jsd():
    exact = Distribution(np.array([1.0, 0.0]))
    other = Distribution(np.array([0.0, 1.0]))
    assert mean_jsd([exact], [exact]) == 0.0
    got = mean_jsd([exact, exact], [exact, other])
    assert got == pytest.approx(np.log(2) / 2, abs=1e-12)
    with pytest.raises(ValueError):
        mean_jsd([], [])
    with pytest.raises(ValueError):
        mean_jsd([exact], [exact, other])


def profile_net():
    # types: 0=user, 1=business, 2=category; two communities of users+businesses
    text = b"""L=3 sizes=4,3 ,2 S=1
1 0:0 1:0
1 0:1 1:0
1 0:2 1:1
1 0:3 1:2
1 1:0 2:0
1 1:1 2:1
1 1:2 2:0
1 1:2 2:1
"""
    return parse_network(text.replace(b"3 ,2", b"3,2"))


def test_community_profiles():
    net = profile_net()
    # community 0: users {0,1}, business 0 (category A)
    # community 1: users {2,3}, businesses {1,2} (cats B and A+B)
    labels = np.array([0, 0, 1, 1, 0, 1, 1, 0, 1])
    profiles = community_profiles(net, labels, category_type=2, business_type=1)
    assert np.allclose(profiles[0].p, [1.0, 0.0])
    assert np.allclose(profiles[1].p, [1.0 / 3.0, 2.0 / 3.0])


def test_community_profiles_empty_community_flagged():
    net = profile_net()
    # put all businesses in community 0; community 1 is users only
    labels = np.array([0, 0, 1, 1, 0, 0, 0, 0, 1])
    profiles = community_profiles(net, labels, category_type=2, business_type=1)
    assert profiles[0] is not None
    assert profiles[1] is None


def test_community_profiles_validates_types():
    net = profile_net()
    labels = np.zeros(net.layout.n, dtype=np.int64)
    with pytest.raises(ValueError):
        community_profiles(net, labels, category_type=1, business_type=1)
    with pytest.raises(ValueError):
        community_profiles(net, labels, category_type=5, business_type=1)


def test_predict_interest_weighting():
    f1 = Distribution(np.array([1.0, 0.0]))
    f2 = Distribution(np.array([0.0, 1.0]))
    g = predict_interest([3, 1], [f1, f2])
    assert np.allclose(g.p, [0.75, 0.25])
    assert np.allclose(predict_interest([5, 0], [f1, f2]).p, f1.p)
    assert abs(g.p.sum() - 1.0) < 1e-12


def test_predict_interest_skips_unprofiled_and_cold_start():
    f1 = Distribution(np.array([0.5, 0.5]))
    g = predict_interest([2, 6], [f1, None])  # None gets zero weight
    assert np.allclose(g.p, f1.p)
    with pytest.raises(ValueError, match="cold start"):
        predict_interest([0, 4], [f1, None])
