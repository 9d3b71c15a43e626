"""Significance vector / interaction matrix model used to sample offspring.

``sv[i]`` scores feature ``i`` on its own and ``im[i, j]`` scores selecting
``i`` and ``j`` together. A subset is built one feature at a time by roulette
wheel: the first draw is proportional to ``sv``, each later draw to
``sv[j] * prod(im[j, l] for l already chosen)`` over unchosen ``j``. Its size
comes from a chi-square draw whose degrees of freedom equal the current
winner's feature count. After each parent/offspring contest, :func:`update`
moves the scores toward the winner and away from the loser.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluator import FeatureSubset

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.1
    beta: float = 0.3
    sv_min: float = 0.01
    sv_max: float = 100.0
    im_min: float = 0.01
    im_max: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.beta > self.alpha:
            raise ValueError(f"beta must exceed alpha, got beta={self.beta}")
        if not 0.0 < self.sv_min <= self.sv_max:
            raise ValueError("need 0 < sv_min <= sv_max")
        if not 0.0 < self.im_min <= self.im_max:
            raise ValueError("need 0 < im_min <= im_max")


@dataclass
class ProbabilityModel:
    sv: np.ndarray
    im: np.ndarray
    params: ModelParams = field(default_factory=ModelParams)

    @property
    def n(self) -> int:
        return self.sv.size

    def copy(self) -> "ProbabilityModel":
        return ProbabilityModel(self.sv.copy(), self.im.copy(), self.params)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": asdict(self.params),
            "sv": self.sv.tolist(),
            "im": self.im.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProbabilityModel":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema {data.get('schema_version')!r}")
        sv = np.asarray(data["sv"], dtype=float)
        im = np.asarray(data["im"], dtype=float).reshape(sv.size, sv.size)
        return cls(sv, im, ModelParams(**data["params"]))

    def sample(self, r: int, rng, size: int | None = None) -> FeatureSubset:
        return generate_offspring(self.sv, self.im, r, self.n, rng, size=size)

    def update(self, winner: FeatureSubset, loser: FeatureSubset) -> None:
        self.sv, self.im = update(self.sv, self.im, winner, loser, self.params)


def init_uniform(n: int, params: ModelParams | None = None) -> ProbabilityModel:
    """All-ones scores, so the first sampled subsets are uniform."""
    if n < 1:
        raise ValueError("need at least one feature")
    return ProbabilityModel(np.ones(n), np.ones((n, n)), params or ModelParams())


def first_feature_probabilities(sv: np.ndarray) -> np.ndarray:
    sv = np.asarray(sv, dtype=float)
    return sv / sv.sum()


def _normalize_log_weights(logw: np.ndarray, selected: np.ndarray) -> np.ndarray:
    logw = np.where(selected, -np.inf, logw)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def conditional_probabilities(sv, im, selected) -> np.ndarray:
    """Selection probabilities for the next feature given the already chosen ones.

    Args:
        sv: Significance vector, shape (n,).
        im: Interaction matrix, shape (n, n).
        selected: Indices already in the subset (non-empty, not all features).

    Returns:
        Length-n distribution, zero on ``selected``. Computed as
        ``log sv[j] + sum(log im[j, l])`` and exponentiated after subtracting
        the maximum, so long products neither underflow nor overflow.
    """
    sv = np.asarray(sv, dtype=float)
    n = sv.size
    chosen = np.zeros(n, dtype=bool)
    chosen[list(selected)] = True
    if not chosen.any():
        raise ValueError("selected set is empty; use first_feature_probabilities")
    if chosen.all():
        raise ValueError("every feature is already selected")
    logw = np.log(sv) + np.log(np.asarray(im, dtype=float)[:, chosen]).sum(axis=1)
    return _normalize_log_weights(logw, chosen)


def roulette_select(p, rng) -> int:
    """Draw index ``j`` with probability ``p[j]``."""
    p = np.asarray(p, dtype=float)
    if p.size == 0 or not np.any(p > 0):
        raise ValueError("roulette wheel needs at least one positive probability")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
    cum = np.cumsum(p)
    j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    # guard against round-off landing past the last positive slot
    return min(j, int(np.flatnonzero(p > 0)[-1]))


def chi2_draw(r: int, rng) -> float:
    """One chi-square(r) variate as the sum of r squared standard normals."""
    if r < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {r}")
    z = rng.standard_normal(r)
    return float(z @ z)


def size_from_draw(x: float, n: int) -> int:
    """Round a continuous size draw and clamp it to [1, n]."""
    return int(min(max(int(np.floor(x + 0.5)), 1), n))


def sample_subset_size(r: int, n: int, rng) -> int:
    if n < 1:
        raise ValueError("need at least one feature")
    return size_from_draw(chi2_draw(r, rng), n)


def generate_offspring(sv, im, r: int, n: int, rng, size: int | None = None) -> FeatureSubset:
    """Sample a new subset from the model.

    The first feature is drawn from ``sv`` alone, then the size ``m`` from
    chi-square(``r``) (unless ``size`` forces it), then ``m - 1`` further
    features without replacement, each conditioned on everything chosen so far.
    """
    sv = np.asarray(sv, dtype=float)
    log_im = np.log(np.asarray(im, dtype=float))
    chosen = np.zeros(n, dtype=bool)

    first = roulette_select(first_feature_probabilities(sv), rng)
    m = sample_subset_size(r, n, rng) if size is None else size
    if not 1 <= m <= n:
        raise ValueError(f"subset size {m} outside [1, {n}]")

    chosen[first] = True
    logw = np.log(sv) + log_im[:, first]
    for _ in range(m - 1):
        j = roulette_select(_normalize_log_weights(logw, chosen), rng)
        chosen[j] = True
        logw += log_im[:, j]
    return FeatureSubset(chosen)


def update(sv, im, winner, loser, params: ModelParams):
    """Shift the scores toward ``winner`` and away from ``loser``.

    Per feature: +alpha if only the winner has it, -alpha if only the loser.
    Per unordered pair (i, j):

    ===================  ==================  ======
    winner has           loser has           delta
    ===================  ==================  ======
    both                 neither             +alpha
    both                 exactly one         +beta
    neither              both                -alpha
    exactly one          both                -beta
    anything else                            0
    ===================  ==================  ======

    Results are clamped to the bounds in ``params``. New arrays are returned.
    """
    w = np.asarray(getattr(winner, "mask", winner), dtype=float)
    lo = np.asarray(getattr(loser, "mask", loser), dtype=float)
    if w.shape != lo.shape:
        raise ValueError(f"winner/loser length mismatch: {w.size} vs {lo.size}")
    sv = np.asarray(sv, dtype=float)
    im = np.asarray(im, dtype=float)
    a, b = params.alpha, params.beta

    new_sv = np.clip(sv + a * (w - lo), params.sv_min, params.sv_max)

    w_both = np.outer(w, w)
    w_none = np.outer(1 - w, 1 - w)
    w_one = 1 - w_both - w_none
    l_both = np.outer(lo, lo)
    l_none = np.outer(1 - lo, 1 - lo)
    l_one = 1 - l_both - l_none
    delta = a * (w_both * l_none - w_none * l_both) + b * (w_both * l_one - w_one * l_both)
    np.fill_diagonal(delta, 0.0)
    new_im = np.clip(im + delta, params.im_min, params.im_max)
    np.fill_diagonal(new_im, np.diag(im))
    return new_sv, new_im
