import numpy as np
import pytest

from mmifs.archive import Archive, ArchiveEntry
from mmifs.dataset import load_csv, min_max_normalize, stratified_split
from mmifs.evaluator import FeatureSubset, Objectives
from mmifs.optimizer import (ACCEPTING_BRANCHES, ARCHIVE_DOMINATES, CROWDING_ACCEPT,
                             CROWDING_REJECT, DOMINATES_ARCHIVE, PARENT_DOMINATES,
                             OptimizerConfig, OptimizerState, RunRecord, contest, init_run,
                             propose, run, step)
from mmifs.probability_model import init_uniform

from conftest import DATA, make_split


@pytest.fixture(scope="module")
def wine_split():
    d = min_max_normalize(load_csv(DATA / "wine.csv", "class"))
    return stratified_split(d, 0.75, seed=0)


def cfg(**kw):
    return OptimizerConfig(**{"max_evaluations": 60, "seed": 1, **kw})


def e(bits, err):
    s = FeatureSubset.from_bitstring(bits)
    return ArchiveEntry(s, Objectives(float(err), s.count))


def bare_state(parent, *others, capacity=100, depth=4):
    arc = Archive(capacity, depth)
    for x in (parent, *others):
        arc.try_add(x)
    return OptimizerState(parent=parent, archive=arc, model=None, r=parent.subset.count,
                          rng=np.random.default_rng(0), evaluator=None)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(max_evaluations=1)
    with pytest.raises(ValueError):
        OptimizerConfig(mutation_rate=1.5)
    with pytest.raises(ValueError):
        OptimizerConfig(alpha=0.5, beta=0.4)
    with pytest.raises(ValueError, match="unknown optimizer settings"):
        OptimizerConfig.from_dict({"gamma": 1})


def test_init_run(wine_split):
    a = init_run(cfg(), wine_split)
    b = init_run(cfg(), wine_split)
    assert a.parent.subset == b.parent.subset
    assert a.archive.entries == [a.parent]
    assert a.r == a.parent.subset.count
    assert a.eval_count == 1
    np.testing.assert_array_equal(a.model.sv, np.ones(13))
    full = init_run(cfg(initial_subset_policy="full"), wine_split)
    assert full.parent.subset.count == 13


def test_branch_parent_dominates():
    st = bare_state(e("1100", 5))
    assert contest(st, e("1110", 8)) == (PARENT_DOMINATES, None)


def test_branch_archive_dominates():
    st = bare_state(e("1110", 10), e("1000", 20))
    branch, _ = contest(st, e("0110", 25))
    assert branch == ARCHIVE_DOMINATES
    assert len(st.archive) == 2


def test_branch_dominates_archive_collapses_it():
    st = bare_state(e("1110", 10), e("1100", 20))
    branch, _ = contest(st, e("1000", 1))
    assert branch == DOMINATES_ARCHIVE
    assert [x.objectives for x in st.archive] == [Objectives(1.0, 1)]


def test_branch_crowding_accept_and_reject():
    # depth 1: parent shares a cell with a neighbour, the offspring lands alone
    parent = e("11110000", 0)
    st = bare_state(parent, e("11100000", 1), e("10000000", 50), depth=1)
    branch, _ = contest(st, e("11000000", 10))
    assert branch == CROWDING_ACCEPT
    # equal crowding keeps the parent
    st = bare_state(e("11000000", 10), e("10000000", 40), depth=1)
    branch, _ = contest(st, e("11100000", 5))
    assert branch == CROWDING_REJECT


def test_step_updates_parent_model_and_r(wine_split):
    st = init_run(cfg(), wine_split)
    for _ in range(30):
        old = st.parent
        res = step(st)
        winner = res.offspring if res.winner == "offspring" else old
        assert st.r == winner.subset.count
        assert (st.parent is not old) == (res.branch in ACCEPTING_BRANCHES)
        assert res.parent_changed == (res.branch in ACCEPTING_BRANCHES)


def test_step_equal_mask_leaves_model_unchanged(wine_split):
    st = init_run(cfg(), wine_split)
    st.model = init_uniform(13)
    st.model.sample = lambda r, rng: st.parent.subset  # force O == P
    res = step(st)
    assert res.winner == "parent" and res.branch in (PARENT_DOMINATES, CROWDING_REJECT)
    np.testing.assert_array_equal(st.model.sv, np.ones(13))


@pytest.mark.parametrize("algorithm", ["mmifs", "blind_paes", "random"])
def test_budget_of_two(wine_split, algorithm):
    rec = run(cfg(max_evaluations=2), wine_split, algorithm)
    assert rec.eval_count == 2


@pytest.mark.parametrize("algorithm", ["mmifs", "blind_paes", "random"])
def test_runs_are_deterministic(wine_split, algorithm):
    a = run(cfg(), wine_split, algorithm)
    b = run(cfg(), wine_split, algorithm)
    assert a.front == b.front and a.history == b.history
    assert a.eval_count == 60
    c = run(cfg(seed=2), wine_split, algorithm)
    assert c.history != a.history


def test_final_archive_non_dominated(wine_split):
    rec = run(cfg(max_evaluations=200), wine_split)
    pts = rec.front_objectives()
    for p in pts:
        assert not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in pts)


def test_mutation_rate_zero_keeps_parent(wine_split):
    rec = run(cfg(mutation_rate=0.0, max_evaluations=5, max_iterations_factor=2),
              wine_split, "blind_paes")
    assert rec.eval_count == 1 and rec.iterations == 10
    assert len(rec.front) == 1
    assert set(rec.history["cached"]) == {True}


def test_mutation_rate_one_gives_complement(wine_split):
    st = init_run(cfg(), wine_split, "blind_paes")
    child = propose(st, "blind_paes", 1.0)
    assert np.array_equal(child.mask, ~st.parent.subset.mask)
    full = init_run(cfg(initial_subset_policy="full"), wine_split, "blind_paes")
    assert propose(full, "blind_paes", 1.0) == full.parent.subset


def test_random_search_archive_is_front_of_samples(wine_split):
    rec = run(cfg(max_evaluations=300), wine_split, "random")
    h = rec.history
    pts = set(zip(h["off_err"], h["off_k"])) | {(h["parent_err"][0], h["parent_k"][0])}
    front = {p for p in pts if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in pts)}
    assert {(o.error_pct, o.n_selected) for o in rec.front_objectives()} == front


def test_exhaustion_stops_small_problems():
    rng = np.random.default_rng(0)
    x = rng.random((20, 3))
    y = np.arange(20) % 2
    sp = make_split(x[:12], y[:12], x[12:], y[12:])
    rec = run(cfg(max_evaluations=500), sp, "random")
    assert rec.eval_count == 7  # every non-empty mask of three features


def test_record_roundtrip(wine_split):
    rec = run(cfg(max_evaluations=20), wine_split)
    back = RunRecord.from_dict(rec.to_dict())
    assert back == rec
    with pytest.raises(ValueError, match="schema"):
        RunRecord.from_dict({**rec.to_dict(), "schema_version": 99})
