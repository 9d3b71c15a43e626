"""Bounded Pareto archive with adaptive-grid crowding (PAES style)."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .evaluator import Dominance, FeatureSubset, Objectives, dominates


class AddOutcome(enum.Enum):
    DOMINATED = "dominated_by_archive"
    ADDED = "added"
    ADDED_WITH_EVICTION = "added_with_eviction"
    REJECTED_FULL = "rejected_full"
    # the same mask is already archived; nothing to insert
    ALREADY_PRESENT = "already_present"


@dataclass(frozen=True)
class ArchiveEntry:
    subset: FeatureSubset
    objectives: Objectives

    def __post_init__(self):
        if self.objectives.n_selected != self.subset.count:
            raise ValueError(
                f"objectives report {self.objectives.n_selected} features, "
                f"subset has {self.subset.count}"
            )


def grid_cell(point, lower, upper, depth: int) -> int:
    """Cell id of ``point`` after ``depth`` bisections of each objective range.

    Each axis is halved ``depth`` times; the per-axis bin indices are combined
    as ``bin_0 * 2**depth + bin_1``. Points on or beyond the upper bound fall
    into the last bin; a zero-width range puts everything in bin 0.
    """
    divisions = 1 << depth
    cell = 0
    for v, lo, hi in zip(point, lower, upper):
        lo_b, hi_b = float(lo), float(hi)
        idx = 0
        for _ in range(depth):
            mid = 0.5 * (lo_b + hi_b)
            idx <<= 1
            if hi_b > lo_b and v >= mid:
                idx |= 1
                lo_b = mid
            else:
                hi_b = mid
        cell = cell * divisions + min(idx, divisions - 1)
    return cell


class AdaptiveGrid:
    """Objective-space grid whose box tracks the archive's extent."""

    def __init__(self, depth: int = 4):
        if depth < 1:
            raise ValueError("grid depth must be >= 1")
        self.depth = depth
        self.lower: np.ndarray | None = None
        self.upper: np.ndarray | None = None
        self.occupancy: dict[int, int] = {}

    def contains(self, point) -> bool:
        if self.lower is None:
            return False
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def rebuild(self, points) -> None:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        self.occupancy = {}
        if pts.size == 0:
            self.lower = self.upper = None
            return
        self.lower = pts.min(axis=0)
        self.upper = pts.max(axis=0)
        for p in pts:
            c = self.cell(p)
            self.occupancy[c] = self.occupancy.get(c, 0) + 1

    def cell(self, point) -> int:
        if self.lower is None:
            return 0
        return grid_cell(point, self.lower, self.upper, self.depth)

    def count(self, point) -> int:
        return self.occupancy.get(self.cell(point), 0)

    def add(self, point) -> None:
        c = self.cell(point)
        self.occupancy[c] = self.occupancy.get(c, 0) + 1

    def remove(self, point) -> None:
        c = self.cell(point)
        left = self.occupancy[c] - 1
        if left:
            self.occupancy[c] = left
        else:
            del self.occupancy[c]


class Archive:
    """Mutually non-dominated entries, at most ``capacity`` of them."""

    def __init__(self, capacity: int = 100, depth: int = 4, rng=None):
        if capacity < 1:
            raise ValueError("archive capacity must be >= 1")
        self.capacity = capacity
        self.grid = AdaptiveGrid(depth)
        self.entries: list[ArchiveEntry] = []
        self._keys: set[bytes] = set()
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    def points(self) -> list[Objectives]:
        return [e.objectives for e in self.entries]

    def contains_subset(self, subset: FeatureSubset) -> bool:
        return subset.key in self._keys

    def is_dominated(self, obj) -> bool:
        return any(dominates(e.objectives, obj) is Dominance.FIRST for e in self.entries)

    def dominates_any(self, obj) -> bool:
        return any(dominates(obj, e.objectives) is Dominance.FIRST for e in self.entries)

    def _grid_with(self, obj) -> AdaptiveGrid:
        """The live grid, or a temporary one stretched to cover ``obj``.

        Occupancy only ever counts archived entries.
        """
        if self.grid.contains(obj):
            return self.grid
        tmp = AdaptiveGrid(self.grid.depth)
        tmp.rebuild(self.points() + [obj])
        tmp.remove(obj)
        return tmp

    def crowding(self, obj) -> int:
        """Archived entries sharing ``obj``'s grid cell (``obj`` included if archived)."""
        return self._grid_with(obj).count(obj)

    def _insert(self, entry: ArchiveEntry) -> None:
        self.entries.append(entry)
        self._keys.add(entry.subset.key)
        if self.grid.contains(entry.objectives):
            self.grid.add(entry.objectives)
        else:
            self.grid.rebuild(self.points())

    def _remove_at(self, idx: int) -> ArchiveEntry:
        entry = self.entries.pop(idx)
        self._keys.discard(entry.subset.key)
        p = entry.objectives
        if p[0] in (self.grid.lower[0], self.grid.upper[0]) or \
                p[1] in (self.grid.lower[1], self.grid.upper[1]):
            # the box may shrink
            self.grid.rebuild(self.points())
        else:
            self.grid.remove(p)
        return entry

    def try_add(self, candidate: ArchiveEntry) -> AddOutcome:
        obj = candidate.objectives
        if self.is_dominated(obj):
            return AddOutcome.DOMINATED
        if candidate.subset.key in self._keys:
            return AddOutcome.ALREADY_PRESENT

        beaten = [i for i, e in enumerate(self.entries)
                  if dominates(obj, e.objectives) is Dominance.FIRST]
        if beaten:
            for i in reversed(beaten):
                self._remove_at(i)
            self._insert(candidate)
            return AddOutcome.ADDED
        if not self.is_full:
            self._insert(candidate)
            return AddOutcome.ADDED

        # full and mutually non-dominated: admit only into a less crowded cell
        grid = self._grid_with(obj)
        own = grid.count(obj) + 1
        busiest = max(grid.occupancy.values())
        if own >= busiest:
            return AddOutcome.REJECTED_FULL
        crowded = min(c for c, k in grid.occupancy.items() if k == busiest)
        victims = [i for i, e in enumerate(self.entries)
                   if grid.cell(e.objectives) == crowded]
        self._remove_at(victims[int(self.rng.integers(len(victims)))])
        self._insert(candidate)
        return AddOutcome.ADDED_WITH_EVICTION

    def check_invariants(self) -> None:
        for i, a in enumerate(self.entries):
            for b in self.entries[i + 1:]:
                if dominates(a.objectives, b.objectives) is not Dominance.INCOMPARABLE:
                    raise AssertionError(f"{a.objectives} and {b.objectives} are comparable")
        if len(self.entries) > self.capacity:
            raise AssertionError("archive over capacity")
        if sum(self.grid.occupancy.values()) != len(self.entries):
            raise AssertionError("grid occupancy out of sync with entries")
        if self.entries:
            pts = np.asarray(self.points(), dtype=float)
            if not (np.array_equal(pts.min(axis=0), self.grid.lower)
                    and np.array_equal(pts.max(axis=0), self.grid.upper)):
                raise AssertionError("grid bounds differ from entry extent")
            fresh = AdaptiveGrid(self.grid.depth)
            fresh.rebuild(pts)
            if fresh.occupancy != self.grid.occupancy:
                raise AssertionError("grid occupancy differs from a fresh rebuild")

    def sorted_entries(self) -> list[ArchiveEntry]:
        return sorted(self.entries, key=lambda e: (e.objectives.n_selected,
                                                   e.objectives.error_pct,
                                                   e.subset.bitstring()))

    def to_json(self) -> list[dict]:
        return [
            {"mask": e.subset.bitstring(),
             "error_pct": e.objectives.error_pct,
             "n_selected": e.objectives.n_selected}
            for e in self.sorted_entries()
        ]

    @classmethod
    def from_json(cls, items, capacity: int = 100, depth: int = 4) -> "Archive":
        arc = cls(capacity=max(capacity, len(items)), depth=depth)
        for it in items:
            sub = FeatureSubset.from_bitstring(it["mask"])
            arc._insert(ArchiveEntry(sub, Objectives(float(it["error_pct"]),
                                                     int(it["n_selected"]))))
        return arc
