"""Front quality indicators and the significance tests used to compare methods."""

from __future__ import annotations

import numpy as np
from scipy import stats

MAX_EXACT_PAIRS = 20


def _as_points(front) -> np.ndarray:
    pts = np.asarray([(float(p[0]), float(p[1])) for p in front], dtype=float)
    if pts.size == 0:
        raise ValueError("front is empty")
    return pts.reshape(-1, 2)


def c_metric(p1, p2) -> float:
    """Fraction of ``p2`` covered by ``p1``.

    A point ``b`` is covered when some ``a`` in ``p1`` is no worse on both
    objectives (equality counts), so ``c_metric(P, P) == 1``.
    """
    a = _as_points(p1)
    b = _as_points(p2)
    covered = (a[:, None, :] <= b[None, :, :]).all(axis=2).any(axis=0)
    return float(covered.sum()) / len(b)


def nondominated(points) -> np.ndarray:
    """Unique non-dominated rows of ``points``, sorted by the first objective."""
    pts = np.unique(_as_points(points), axis=0)  # lexicographic: error, then count
    keep = []
    best_f = np.inf
    for e, f in pts:
        if f < best_f:
            keep.append((e, f))
            best_f = f
    return np.array(keep)


def hypervolume(front, n_features: int) -> float:
    """Normalised area dominated by ``front`` inside the box up to (100 %, n).

    Objectives are (error %, selected count). The result is the staircase area
    divided by ``100 * n_features``, so it lies in [0, 1].
    """
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    pts = _as_points(front)
    if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > 100) or \
            np.any(pts[:, 1] < 0) or np.any(pts[:, 1] > n_features):
        raise ValueError(f"front point outside the reference box [0,100] x [0,{n_features}]")
    stairs = nondominated(pts)
    next_e = np.append(stairs[1:, 0], 100.0)
    area = float(np.sum((next_e - stairs[:, 0]) * (n_features - stairs[:, 1])))
    return area / (100.0 * n_features)


def _midranks(values: np.ndarray) -> np.ndarray:
    return stats.rankdata(values, method="average")


def wilcoxon_exact(diffs) -> float:
    """Two-sided exact p-value of the Wilcoxon signed-rank test.

    Zero differences are dropped and tied magnitudes get midranks. The null
    distribution of the positive-rank sum is counted over all ``2**m`` sign
    assignments (by convolution over doubled integer ranks, which is exact).
    The statistic is ``min(W+, W-)`` and the p-value is twice its lower tail,
    capped at 1.
    """
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    m = d.size
    if m == 0:
        raise ValueError("no nonzero differences")
    if m > MAX_EXACT_PAIRS:
        raise ValueError(f"{m} nonzero differences; exact test supports at most {MAX_EXACT_PAIRS}")
    ranks2 = np.rint(2 * _midranks(np.abs(d))).astype(int)
    w_pos2 = int(ranks2[d > 0].sum())
    w_neg2 = int(ranks2[d < 0].sum())
    stat2 = min(w_pos2, w_neg2)

    counts = np.zeros(int(ranks2.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for rk in ranks2:
        shifted = np.zeros_like(counts)
        shifted[rk:] = counts[:-rk]
        counts = counts + shifted
    p = 2.0 * counts[: stat2 + 1].sum() / float(1 << m)
    return float(min(p, 1.0))


def friedman(scores) -> tuple[float, float]:
    """Friedman rank test for ``k`` methods over ``N`` datasets.

    Args:
        scores: (k, N) array; higher is better. Ranks run from 1 (best) to k
            within each dataset, with midranks for ties.

    Returns:
        (statistic, p-value) with p from the chi-square(k - 1) upper tail. No
        tie correction is applied.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2:
        raise ValueError("scores must be a (methods x datasets) matrix")
    k, n = s.shape
    if k < 3 or n < 2:
        raise ValueError(f"need >= 3 methods and >= 2 datasets, got {k} x {n}")
    ranks = np.apply_along_axis(lambda col: _midranks(-col), 0, s)
    mean_rank = ranks.mean(axis=1)
    statistic = 12.0 * n / (k * (k + 1)) * float(np.sum((mean_rank - (k + 1) / 2.0) ** 2))
    p = float(stats.chi2.sf(statistic, k - 1))
    return statistic, p
