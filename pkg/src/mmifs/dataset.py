"""Tabular classification datasets: CSV loading, scaling, splitting, projection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or unusable dataset input."""


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    instances: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: tuple[str, ...] = ()
    class_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.array(self.instances, dtype=float)
        y = np.array(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise DatasetError(f"instances must be 2-D, got shape {x.shape}")
        if x.shape[1] < 1:
            raise DatasetError("dataset needs at least one feature")
        if x.shape[0] < 2:
            raise DatasetError("dataset needs at least two rows")
        if y.shape != (x.shape[0],):
            raise DatasetError("labels must have one entry per row")
        if not np.all(np.isfinite(x)):
            raise DatasetError("instances contain non-finite values")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "instances", x)
        object.__setattr__(self, "labels", y)
        if not self.feature_names:
            names = tuple(f"f{i}" for i in range(x.shape[1]))
            object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.instances.shape[1]

    @property
    def n_instances(self) -> int:
        return self.instances.shape[0]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def take_rows(self, rows: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(
            name=name or self.name,
            instances=self.instances[rows],
            labels=self.labels[rows],
            n_classes=self.n_classes,
            feature_names=self.feature_names,
            class_names=self.class_names,
        )


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_fraction: float
    train_rows: np.ndarray
    test_rows: np.ndarray


def load_csv(path, label_column: str | int, name: str | None = None) -> Dataset:
    """Read a headed, comma-delimited CSV into a :class:`Dataset`.

    Args:
        path: CSV file. The first row is the header.
        label_column: Header name or zero-based column index of the class label.
        name: Dataset name; defaults to the file stem.

    Labels are remapped to ``0..n_classes-1`` in order of first appearance.
    Every other column must parse as a real number.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]

    label_idx = resolve_label_column(header, label_column)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    if len(rows) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, got {len(rows)}")

    feature_cols = [j for j in range(len(header)) if j != label_idx]
    x = np.empty((len(rows), len(feature_cols)))
    raw_labels = []
    for i, row in enumerate(rows):
        line = i + 2
        if len(row) != len(header):
            raise DatasetError(
                f"{path}: row {line} has {len(row)} cells, header has {len(header)}"
            )
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {line}, column {header[j]!r}: cannot parse {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise DatasetError(
                    f"{path}: row {line}, column {header[j]!r}: non-finite value {cell!r}"
                )
            x[i, out_j] = value
        raw_labels.append(row[label_idx].strip())

    codes: dict[str, int] = {}
    y = np.array([codes.setdefault(lab, len(codes)) for lab in raw_labels])
    if len(codes) < 2:
        raise DatasetError(f"{path}: label column has a single distinct value")
    return Dataset(
        name=name or path.stem,
        instances=x,
        labels=y,
        n_classes=len(codes),
        feature_names=tuple(header[j] for j in feature_cols),
        class_names=tuple(codes),
    )


def resolve_label_column(header: list[str], label_column: str | int) -> int:
    """Map a label-column name or index onto a header position."""
    if isinstance(label_column, int) or (
        isinstance(label_column, str) and label_column.lstrip("-").isdigit()
        and label_column not in header
    ):
        idx = int(label_column)
        if idx < 0:
            idx += len(header)
        if not 0 <= idx < len(header):
            raise DatasetError(
                f"label column index {label_column} out of range for {len(header)} columns"
            )
        return idx
    if label_column not in header:
        raise DatasetError(f"label column {label_column!r} not in header {header}")
    return header.index(label_column)


def min_max_normalize(d: Dataset) -> Dataset:
    """Scale each column to [0, 1]; constant columns become all zeros."""
    x = d.instances
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (x - lo) / safe, 0.0)
    return Dataset(
        name=d.name,
        instances=scaled,
        labels=d.labels,
        n_classes=d.n_classes,
        feature_names=d.feature_names,
        class_names=d.class_names,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    d: Dataset, train_fraction: float = 0.75, seed: int = 0, stratify: bool = True
) -> SplitPair:
    """Randomly partition rows into train and test sets.

    With ``stratify`` the total train size is ``round(train_fraction * N)`` and
    is shared out over classes by largest remainder, so every class keeps its
    share within one row. Each class keeps at least one row on each side.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    total = d.n_instances
    n_train = _round_half_up(train_fraction * total)

    if not stratify:
        n_train = min(max(n_train, 1), total - 1)
        perm = rng.permutation(total)
        train_rows = np.sort(perm[:n_train])
        test_rows = np.sort(perm[n_train:])
    else:
        counts = d.class_counts()
        for c, cnt in enumerate(counts):
            if cnt < 2:
                cname = d.class_names[c] if d.class_names else str(c)
                raise DatasetError(
                    f"class {cname!r} has {cnt} instance(s); stratified split needs >= 2"
                )
        exact = train_fraction * counts
        alloc = np.floor(exact).astype(int)
        remainder = exact - alloc
        # largest remainder first, lower class id wins ties
        order = sorted(range(len(counts)), key=lambda c: (-remainder[c], c))
        for c in order[: max(n_train - alloc.sum(), 0)]:
            alloc[c] += 1
        alloc = np.clip(alloc, 1, counts - 1)

        train_parts, test_parts = [], []
        for c in range(d.n_classes):
            rows = np.flatnonzero(d.labels == c)
            rows = rows[rng.permutation(rows.size)]
            train_parts.append(rows[: alloc[c]])
            test_parts.append(rows[alloc[c]:])
        train_rows = np.sort(np.concatenate(train_parts))
        test_rows = np.sort(np.concatenate(test_parts))

    return SplitPair(
        train=d.take_rows(train_rows),
        test=d.take_rows(test_rows),
        seed=seed,
        train_fraction=train_fraction,
        train_rows=train_rows,
        test_rows=test_rows,
    )


def project(d: Dataset, subset) -> Dataset:
    """Keep only the columns selected by ``subset`` (a mask or FeatureSubset)."""
    mask = np.asarray(getattr(subset, "mask", subset), dtype=bool)
    if mask.shape != (d.n_features,):
        raise DatasetError(
            f"subset length {mask.size} does not match {d.n_features} features"
        )
    if not mask.any():
        raise DatasetError("empty subset")
    return Dataset(
        name=d.name,
        instances=d.instances[:, mask],
        labels=d.labels,
        n_classes=d.n_classes,
        feature_names=tuple(n for n, keep in zip(d.feature_names, mask) if keep),
        class_names=d.class_names,
    )
