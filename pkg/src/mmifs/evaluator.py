"""Wrapper fitness: KNN classification error and subset size, plus Pareto dominance."""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .dataset import DatasetError, SplitPair


class FeatureSubset:
    """Immutable inclusion mask over the original features."""

    __slots__ = ("mask", "count", "key")

    def __init__(self, mask):
        m = np.array(mask, dtype=bool).ravel()
        m.flags.writeable = False
        self.mask = m
        self.count = int(m.sum())
        self.key = np.packbits(m).tobytes() + m.size.to_bytes(4, "little")

    @classmethod
    def from_indices(cls, n: int, indices) -> "FeatureSubset":
        m = np.zeros(n, dtype=bool)
        m[list(indices)] = True
        return cls(m)

    @classmethod
    def from_bitstring(cls, bits: str) -> "FeatureSubset":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls([c == "1" for c in bits])

    @property
    def n(self) -> int:
        return self.mask.size

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.mask)

    def __eq__(self, other):
        return isinstance(other, FeatureSubset) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"FeatureSubset({self.bitstring()!r})"


class Objectives(NamedTuple):
    """Both objectives are minimised."""

    error_pct: float
    n_selected: int


class Dominance(enum.Enum):
    FIRST = "first_dominates"
    SECOND = "second_dominates"
    INCOMPARABLE = "incomparable"


def dominates(a, b) -> Dominance:
    """Pareto relation between two objective pairs under minimisation."""
    a_le = a[0] <= b[0] and a[1] <= b[1]
    b_le = b[0] <= a[0] and b[1] <= a[1]
    if a_le and not b_le:
        return Dominance.FIRST
    if b_le and not a_le:
        return Dominance.SECOND
    return Dominance.INCOMPARABLE


def _vote(
    dist: np.ndarray, train_labels: np.ndarray, k: int, n_classes: int
) -> np.ndarray:
    """Majority vote over the k nearest training rows for each test row.

    ``dist`` is (n_test, n_train) Euclidean distance. Equal distances are
    resolved by training-row order. Vote ties go to the class with the smaller
    summed neighbour distance, then the lower class id.
    """
    n_test = dist.shape[0]
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    near_dist = np.take_along_axis(dist, nearest, axis=1)
    near_lab = train_labels[nearest]
    rows = np.repeat(np.arange(n_test), k)
    votes = np.zeros((n_test, n_classes), dtype=np.int64)
    dsum = np.zeros((n_test, n_classes))
    np.add.at(votes, (rows, near_lab.ravel()), 1)
    np.add.at(dsum, (rows, near_lab.ravel()), near_dist.ravel())
    top = votes == votes.max(axis=1, keepdims=True)
    return np.argmin(np.where(top, dsum, np.inf), axis=1)


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return (diff * diff).sum(axis=2)


def knn_error(subset, split: SplitPair, k: int = 5) -> float:
    """Percentage of test rows misclassified by KNN on the selected columns."""
    mask = np.asarray(getattr(subset, "mask", subset), dtype=bool)
    if not mask.any():
        raise DatasetError("empty subset")
    train, test = split.train, split.test
    if not 1 <= k <= train.n_instances:
        raise ValueError(f"k={k} must be in [1, {train.n_instances}] (train size)")
    dist = np.sqrt(_sq_distances(test.instances[:, mask], train.instances[:, mask]))
    pred = _vote(dist, train.labels, k, train.n_classes)
    return 100.0 * np.count_nonzero(pred != test.labels) / test.n_instances


class Evaluator:
    """Memoised objective evaluation for one train/test split.

    ``mode="holdout"`` scores on the test rows. ``mode="cv"`` runs stratified
    ``cv_folds``-fold cross-validation inside the training rows and never
    looks at the test rows.

    ``calls`` counts every request; ``evaluations`` counts cache misses.
    """

    # per-feature squared differences are cached when they fit in this many floats
    PRECOMPUTE_LIMIT = 20_000_000

    def __init__(self, split: SplitPair, k: int = 5, mode: str = "holdout",
                 cv_folds: int = 5, seed: int = 0):
        if mode not in ("holdout", "cv"):
            raise ValueError(f"unknown fitness mode {mode!r}")
        if not 1 <= k <= split.train.n_instances:
            raise ValueError(
                f"k={k} must be in [1, {split.train.n_instances}] (train size)"
            )
        self.split = split
        self.k = k
        self.mode = mode
        self.n_features = split.train.n_features
        self.calls = 0
        self.evaluations = 0
        self._cache: dict[bytes, Objectives] = {}
        if mode == "holdout":
            self._folds = [(split.train, split.test)]
        else:
            self._folds = self._make_folds(split, cv_folds, seed)
        self._pairs = [self._prepare(tr, te) for tr, te in self._folds]

    @staticmethod
    def _make_folds(split, n_folds, seed):
        train = split.train
        if n_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        rng = np.random.default_rng(seed)
        fold_of = np.empty(train.n_instances, dtype=int)
        for c in range(train.n_classes):
            rows = np.flatnonzero(train.labels == c)
            rows = rows[rng.permutation(rows.size)]
            fold_of[rows] = np.arange(rows.size) % n_folds
        folds = []
        for f in range(n_folds):
            te = np.flatnonzero(fold_of == f)
            tr = np.flatnonzero(fold_of != f)
            if te.size:
                folds.append((train.take_rows(tr), train.take_rows(te)))
        return folds

    def _prepare(self, train, test):
        n_cells = train.n_instances * test.n_instances * self.n_features
        if n_cells <= self.PRECOMPUTE_LIMIT:
            diff = test.instances[:, None, :] - train.instances[None, :, :]
            return train, test, diff * diff
        return train, test, None

    def _error(self, mask: np.ndarray) -> float:
        wrong = 0
        total = 0
        for train, test, sq in self._pairs:
            if train.n_instances < self.k:
                raise ValueError(f"k={self.k} exceeds fold train size {train.n_instances}")
            if sq is not None:
                d2 = sq[:, :, mask].sum(axis=2)
            else:
                d2 = _sq_distances(test.instances[:, mask], train.instances[:, mask])
            pred = _vote(np.sqrt(d2), train.labels, self.k, train.n_classes)
            wrong += np.count_nonzero(pred != test.labels)
            total += test.n_instances
        return 100.0 * wrong / total

    def evaluate(self, subset: FeatureSubset) -> Objectives:
        self.calls += 1
        hit = self._cache.get(subset.key)
        if hit is not None:
            return hit
        if subset.n != self.n_features:
            raise ValueError(
                f"subset length {subset.n} does not match {self.n_features} features"
            )
        if subset.count == 0:
            raise DatasetError("empty subset")
        obj = Objectives(float(self._error(subset.mask)), subset.count)
        # setdefault keeps the first result if another thread raced us
        obj = self._cache.setdefault(subset.key, obj)
        self.evaluations += 1
        return obj

    def is_cached(self, subset: FeatureSubset) -> bool:
        return subset.key in self._cache

    __call__ = evaluate

