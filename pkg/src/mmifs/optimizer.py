"""MMI-FS main loop plus blind-PAES and random-search baselines.

All three share the evaluation budget and archive. MMI-FS samples each
offspring from the probability model and ignores the parent's bits; the
parent only matters as the incumbent in the acceptance contest and as one
side of the winner/loser pair that trains the model.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .archive import AddOutcome, Archive, ArchiveEntry
from .dataset import SplitPair
from .evaluator import Dominance, Evaluator, FeatureSubset, Objectives, dominates
from .probability_model import ModelParams, ProbabilityModel, init_uniform

SCHEMA_VERSION = 1

ALGORITHMS = ("mmifs", "blind_paes", "random")

# step branch labels, as recorded in the iteration log
PARENT_DOMINATES = "1"
ARCHIVE_DOMINATES = "2a"
DOMINATES_ARCHIVE = "2b"
CROWDING_ACCEPT = "2c_accept"
CROWDING_REJECT = "2c_reject"
RANDOM_SAMPLE = "random"

ACCEPTING_BRANCHES = (DOMINATES_ARCHIVE, CROWDING_ACCEPT)


@dataclass
class OptimizerConfig:
    max_evaluations: int = 5000
    archive_capacity: int = 100
    grid_depth: int = 4
    alpha: float = 0.1
    beta: float = 0.3
    sv_min: float = 0.01
    sv_max: float = 100.0
    im_min: float = 0.01
    im_max: float = 100.0
    knn_k: int = 5
    fitness_mode: str = "holdout"
    cv_folds: int = 5
    seed: int = 0
    initial_subset_policy: str = "random_size"
    mutation_rate: float | None = None
    # iterations (cached repeats included) allowed per budgeted evaluation
    max_iterations_factor: int = 10
    record_history: bool = True

    def __post_init__(self):
        if self.max_evaluations < 2:
            raise ValueError("max_evaluations must be >= 2")
        if self.archive_capacity < 1:
            raise ValueError("archive_capacity must be >= 1")
        if self.grid_depth < 1:
            raise ValueError("grid_depth must be >= 1")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.initial_subset_policy not in ("random_size", "full"):
            raise ValueError(f"unknown initial_subset_policy {self.initial_subset_policy!r}")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.max_iterations_factor < 1:
            raise ValueError("max_iterations_factor must be >= 1")
        self.model_params()

    def model_params(self) -> ModelParams:
        return ModelParams(self.alpha, self.beta, self.sv_min, self.sv_max,
                           self.im_min, self.im_max)

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class OptimizerState:
    parent: ArchiveEntry
    archive: Archive
    model: ProbabilityModel | None
    r: int
    rng: np.random.Generator
    evaluator: Evaluator
    iteration: int = 0
    history: dict = field(default_factory=dict)

    @property
    def eval_count(self) -> int:
        return self.evaluator.evaluations


@dataclass
class StepResult:
    branch: str
    offspring: ArchiveEntry
    winner: str  # "parent" or "offspring"
    loser: str
    parent_changed: bool
    cached: bool
    archive_outcome: AddOutcome | None


@dataclass
class RunRecord:
    algorithm: str
    dataset: dict
    config: dict
    front: list
    history: dict
    eval_count: int
    calls: int
    iterations: int
    wall_time: float
    model: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported run record schema {data.get('schema_version')!r}")
        return cls(**data)

    def front_objectives(self) -> list[Objectives]:
        return [Objectives(float(p["error_pct"]), int(p["n_selected"])) for p in self.front]


HISTORY_FIELDS = ("iter", "branch", "parent_err", "parent_k", "off_err", "off_k", "r",
                  "winner", "winner_k", "parent_changed", "cached")


def _log(state: OptimizerState, old_parent: ArchiveEntry, res: StepResult) -> None:
    if not state.history:
        return
    h = state.history
    h["iter"].append(state.iteration)
    h["branch"].append(res.branch)
    h["parent_err"].append(old_parent.objectives.error_pct)
    h["parent_k"].append(old_parent.objectives.n_selected)
    h["off_err"].append(res.offspring.objectives.error_pct)
    h["off_k"].append(res.offspring.objectives.n_selected)
    h["r"].append(state.r)
    win = old_parent if res.winner == "parent" else res.offspring
    h["winner"].append(res.winner)
    h["winner_k"].append(win.subset.count)
    h["parent_changed"].append(res.parent_changed)
    h["cached"].append(res.cached)


def random_parent(n: int, rng) -> FeatureSubset:
    """Size uniform on [1, n], then that many distinct features uniformly."""
    size = int(rng.integers(1, n + 1))
    return FeatureSubset.from_indices(n, rng.choice(n, size=size, replace=False))


def init_run(config: OptimizerConfig, split: SplitPair, algorithm: str = "mmifs") -> OptimizerState:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    rng = np.random.default_rng(config.seed)
    evaluator = Evaluator(split, k=config.knn_k, mode=config.fitness_mode,
                          cv_folds=config.cv_folds, seed=config.seed)
    n = evaluator.n_features
    if config.initial_subset_policy == "full":
        subset = FeatureSubset(np.ones(n, dtype=bool))
    else:
        subset = random_parent(n, rng)
    parent = ArchiveEntry(subset, evaluator.evaluate(subset))
    archive = Archive(config.archive_capacity, config.grid_depth, rng=rng)
    archive.try_add(parent)
    model = init_uniform(n, config.model_params()) if algorithm == "mmifs" else None
    history = {k: [] for k in HISTORY_FIELDS} if config.record_history else {}
    return OptimizerState(parent=parent, archive=archive, model=model, r=subset.count,
                          rng=rng, evaluator=evaluator, history=history)


def _evaluate(state: OptimizerState, subset: FeatureSubset) -> tuple[ArchiveEntry, bool]:
    cached = state.evaluator.is_cached(subset)
    return ArchiveEntry(subset, state.evaluator.evaluate(subset)), cached


def contest(state: OptimizerState, offspring: ArchiveEntry) -> tuple[str, AddOutcome | None]:
    """Run the PAES acceptance logic for ``offspring``; returns (branch, archive outcome).

    Mutates the archive but not the parent.
    """
    parent = state.parent
    if dominates(parent.objectives, offspring.objectives) is Dominance.FIRST:
        return PARENT_DOMINATES, None
    archive = state.archive
    if archive.is_dominated(offspring.objectives):
        return ARCHIVE_DOMINATES, None
    if archive.dominates_any(offspring.objectives):
        return DOMINATES_ARCHIVE, archive.try_add(offspring)
    outcome = archive.try_add(offspring)
    # ties keep the incumbent
    if archive.crowding(offspring.objectives) < archive.crowding(parent.objectives):
        return CROWDING_ACCEPT, outcome
    return CROWDING_REJECT, outcome


def propose(state: OptimizerState, algorithm: str, mutation_rate: float | None) -> FeatureSubset:
    n = state.evaluator.n_features
    if algorithm == "mmifs":
        return state.model.sample(state.r, state.rng)
    rate = 1.0 / n if mutation_rate is None else mutation_rate
    while True:
        flips = state.rng.random(n) < rate
        child = np.logical_xor(state.parent.subset.mask, flips)
        if child.any():
            return FeatureSubset(child)
        if rate >= 1.0 and not np.logical_not(state.parent.subset.mask).any():
            # the complement of the full mask is empty; fall back to the parent
            return state.parent.subset


def step(state: OptimizerState, algorithm: str = "mmifs",
         mutation_rate: float | None = None) -> StepResult:
    """One parent/offspring iteration: propose, evaluate, contest, learn."""
    old_parent = state.parent
    offspring, cached = _evaluate(state, propose(state, algorithm, mutation_rate))
    branch, outcome = contest(state, offspring)

    if branch in ACCEPTING_BRANCHES:
        winner, loser = offspring, old_parent
        state.parent = offspring
    else:
        winner, loser = old_parent, offspring
    if state.model is not None:
        state.model.update(winner.subset, loser.subset)
    state.r = winner.subset.count

    state.iteration += 1
    res = StepResult(
        branch=branch,
        offspring=offspring,
        winner="offspring" if winner is offspring else "parent",
        loser="parent" if winner is offspring else "offspring",
        parent_changed=state.parent is not old_parent,
        cached=cached,
        archive_outcome=outcome,
    )
    _log(state, old_parent, res)
    return res


def _random_step(state: OptimizerState) -> StepResult:
    n = state.evaluator.n_features
    while True:
        mask = state.rng.random(n) < 0.5
        if mask.any():
            break
    offspring, cached = _evaluate(state, FeatureSubset(mask))
    outcome = state.archive.try_add(offspring)
    state.iteration += 1
    res = StepResult(RANDOM_SAMPLE, offspring, "parent", "offspring", False, cached, outcome)
    _log(state, state.parent, res)
    return res


def _exhausted(state: OptimizerState, config: OptimizerConfig) -> bool:
    if state.eval_count >= config.max_evaluations:
        return True
    if state.iteration >= config.max_iterations_factor * config.max_evaluations:
        return True
    n = state.evaluator.n_features
    # every non-empty mask has been evaluated
    return n < 63 and state.eval_count >= (1 << n) - 1


def _record(state: OptimizerState, config: OptimizerConfig, split: SplitPair,
            algorithm: str, started: float) -> RunRecord:
    return RunRecord(
        algorithm=algorithm,
        dataset={
            "name": split.train.name,
            "n_features": split.train.n_features,
            "n_train": split.train.n_instances,
            "n_test": split.test.n_instances,
            "split_seed": split.seed,
        },
        config=asdict(config),
        front=state.archive.to_json(),
        history=state.history,
        eval_count=state.eval_count,
        calls=state.evaluator.calls,
        iterations=state.iteration,
        wall_time=time.perf_counter() - started,
        model=state.model.to_dict() if state.model is not None else None,
    )


def run(config: OptimizerConfig, split: SplitPair, algorithm: str = "mmifs") -> RunRecord:
    """Iterate until the evaluation budget is spent.

    Offspring already in the evaluation cache do not consume budget, so the
    loop is also capped at ``max_iterations_factor * max_evaluations``
    iterations and stops once every non-empty mask has been evaluated.
    """
    started = time.perf_counter()
    state = init_run(config, split, algorithm)
    while not _exhausted(state, config):
        if algorithm == "random":
            _random_step(state)
        else:
            step(state, algorithm, config.mutation_rate)
    return _record(state, config, split, algorithm, started)


def run_mmifs(config: OptimizerConfig, split: SplitPair) -> RunRecord:
    return run(config, split, "mmifs")


def run_blind_paes(config: OptimizerConfig, split: SplitPair) -> RunRecord:
    return run(config, split, "blind_paes")


def run_random_search(config: OptimizerConfig, split: SplitPair) -> RunRecord:
    return run(config, split, "random")
