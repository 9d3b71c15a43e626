import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mmifs.metrics import c_metric, friedman, hypervolume, nondominated, wilcoxon_exact

# published HV table: twelve datasets, columns NSGA-II, MOFSBDE, GRMOEA, MMI-FS
HV_TABLE = np.array([
    [0.4904, 0.6055, 0.6060, 0.6260],
    [0.8501, 0.8401, 0.8496, 0.8560],
    [0.7864, 0.7193, 0.7433, 0.8154],
    [0.8758, 0.8635, 0.8985, 0.9023],
    [0.6767, 0.6821, 0.6762, 0.7009],
    [0.7807, 0.9243, 0.8553, 0.9097],
    [0.7438, 0.8912, 0.8381, 0.8820],
    [0.6802, 0.6337, 0.5887, 0.7053],
    [0.6084, 0.8677, 0.8585, 0.8294],
    [0.4871, 0.5795, 0.6951, 0.8261],
    [0.6670, 0.6661, 0.8650, 0.9601],
    [0.6157, 0.7003, 0.8015, 0.8715],
])


def random_front(rng, n_points, n_features):
    errs = rng.uniform(0, 100, n_points)
    ks = rng.integers(1, n_features + 1, n_points)
    return [tuple(p) for p in nondominated(np.column_stack([errs, ks]))]


def mc_hypervolume(front, n_features, rng, samples=1_000_000):
    pts = np.asarray(front, float) / [100.0, n_features]
    u = rng.random((samples, 2))
    covered = np.zeros(samples, dtype=bool)
    for e, f in pts:
        covered |= (u[:, 0] >= e) & (u[:, 1] >= f)
    return covered.mean()


def brute_wilcoxon(diffs):
    """Enumerate every sign vector over the midranks; two-sided, doubled lower tail."""
    d = [x for x in diffs if x != 0]
    ranks = stats.rankdata(np.abs(d))
    w_pos = sum(r for r, x in zip(ranks, d) if x > 0)
    w = min(w_pos, ranks.sum() - w_pos)
    hits = sum(1 for signs in itertools.product((0, 1), repeat=len(d))
               if sum(r for r, s in zip(ranks, signs) if s) <= w + 1e-9)
    return min(1.0, 2 * hits / 2 ** len(d))


def test_c_metric_examples():
    assert c_metric([(1, 1)], [(2, 2)]) == 1.0
    assert c_metric([(2, 2)], [(1, 1)]) == 0.0
    assert c_metric([(1, 1)], [(2, 2), (0, 4)]) == 0.5
    assert c_metric([(3, 4), (1, 7)], [(3, 4), (1, 7)]) == 1.0
    with pytest.raises(ValueError, match="empty"):
        c_metric([], [(1, 1)])


@given(st.lists(st.tuples(st.floats(0, 100), st.integers(1, 20)), min_size=1, max_size=20))
def test_c_metric_self_is_one(front):
    assert c_metric(front, front) == 1.0


def test_hypervolume_examples():
    assert hypervolume([(100, 10)], 10) == 0.0
    assert hypervolume([(50, 5)], 10) == 0.25
    assert hypervolume([(20, 6), (60, 2)], 10) == 0.48
    assert hypervolume([(20, 0.6 * 7), (60, 0.2 * 7)], 7) == pytest.approx(0.48, abs=1e-15)
    # dominated and repeated points change nothing
    assert hypervolume([(20, 6), (60, 2), (70, 8), (20, 6)], 10) == 0.48
    with pytest.raises(ValueError, match="reference box"):
        hypervolume([(101, 2)], 10)
    with pytest.raises(ValueError, match="reference box"):
        hypervolume([(10, 11)], 10)


def test_hypervolume_monte_carlo_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        n = int(rng.integers(1, 60))
        front = random_front(rng, int(rng.integers(1, 21)), n)
        est = mc_hypervolume(front, n, rng, samples=200_000)
        assert abs(hypervolume(front, n) - est) < 0.005


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 100), st.integers(1, 30))
def test_hypervolume_monotone(seed, e, k):
    rng = np.random.default_rng(seed)
    front = random_front(rng, int(rng.integers(1, 15)), 30)
    assert hypervolume(front + [(e, k)], 30) >= hypervolume(front, 30) - 1e-12


def test_wilcoxon_twelve_same_sign():
    d = np.arange(1, 13) / 100
    assert wilcoxon_exact(d) == 0.00048828125
    assert wilcoxon_exact(-d) == 0.00048828125
    assert type(wilcoxon_exact(d)) is float


def test_wilcoxon_minority_rank_sum_five():
    d = np.arange(1, 13, dtype=float)
    d[4] = -d[4]  # rank 5 is the only negative
    assert wilcoxon_exact(d) == 0.0048828125
    assert brute_wilcoxon(d) == 0.0048828125


def test_wilcoxon_on_published_hv_table():
    mmifs = HV_TABLE[:, 3]
    assert wilcoxon_exact(mmifs - HV_TABLE[:, 0]) == 0.00048828125
    assert wilcoxon_exact(mmifs - HV_TABLE[:, 1]) == 0.01611328125
    assert wilcoxon_exact(mmifs - HV_TABLE[:, 2]) == 0.0048828125


def test_wilcoxon_edge_cases():
    with pytest.raises(ValueError, match="no nonzero differences"):
        wilcoxon_exact([0, 0, 0])
    with pytest.raises(ValueError, match="at most"):
        wilcoxon_exact(np.arange(1, 22))
    assert wilcoxon_exact([0, 3, -3]) == 1.0  # zeros dropped, tied magnitudes
    assert wilcoxon_exact([2.0]) == 1.0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=1, max_size=10).filter(any))
def test_wilcoxon_matches_enumeration_and_is_sign_symmetric(diffs):
    p = wilcoxon_exact(diffs)
    assert p == pytest.approx(brute_wilcoxon(diffs), abs=1e-15)
    assert wilcoxon_exact([-x for x in diffs]) == p


def test_friedman_identical_methods():
    stat, p = friedman(np.ones((3, 5)))
    assert stat == 0.0 and p == 1.0


def test_friedman_hand_computed():
    # ranks per dataset (columns): A=1,1,2,1  B=2,3,1,2  C=3,2,3,3
    scores = np.array([[9, 8, 5, 7],
                       [5, 1, 6, 4],
                       [1, 3, 2, 2]])
    # mean ranks 1.25, 2.0, 2.75; sum of squared deviations from 2 is 1.125
    stat, p = friedman(scores)
    assert stat == pytest.approx(12 * 4 / (3 * 4) * 1.125)
    assert p == pytest.approx(np.exp(-stat / 2))  # chi2(2) survival


def test_friedman_one_winner_others_tied():
    n, k = 6, 4
    scores = np.vstack([np.full(n, 2.0), np.ones((k - 1, n))])
    # winner rank 1, the rest share (2 + 3 + 4) / 3 = 3
    expected = 12 * n / (k * (k + 1)) * ((1 - 2.5) ** 2 + 3 * (3 - 2.5) ** 2)
    assert friedman(scores)[0] == pytest.approx(expected)


def test_friedman_on_published_hv_table():
    stat, p = friedman(HV_TABLE.T)
    assert stat == pytest.approx(14.5)
    assert round(p, 4) == 0.0023


def test_friedman_shape_errors():
    with pytest.raises(ValueError):
        friedman(np.ones((2, 5)))
    with pytest.raises(ValueError):
        friedman(np.ones((3, 1)))
