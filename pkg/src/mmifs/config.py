"""Experiment configuration: JSON schema, loading and validation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .dataset import Dataset, DatasetError, load_csv, min_max_normalize, stratified_split
from .optimizer import ALGORITHMS, OptimizerConfig

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "MMIFS_OUTPUT_ROOT"

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "mmifs experiment",
    "type": "object",
    "required": ["schema_version", "datasets", "algorithms"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "datasets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "path", "label_col"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "path": {"type": "string"},
                    "label_col": {"type": ["string", "integer"]},
                },
            },
        },
        "algorithms": {
            "type": "array",
            "minItems": 1,
            "uniqueItems": True,
            "items": {"enum": list(ALGORITHMS)},
        },
        "runs": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "split_seed": {"type": ["integer", "null"], "minimum": 0},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "normalize": {"type": "boolean"},
        "stratify": {"type": "boolean"},
        "write_logs": {"type": "boolean"},
        "optimizer": {"type": "object"},
        "output_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


@dataclass
class DatasetRef:
    name: str
    path: Path
    label_col: str | int


@dataclass
class ExperimentConfig:
    datasets: list[DatasetRef]
    algorithms: list[str]
    runs: int = 10
    base_seed: int = 0
    split_seed: int | None = None
    train_fraction: float = 0.75
    normalize: bool = True
    stratify: bool = True
    write_logs: bool = False
    optimizer: dict = field(default_factory=dict)
    output_dir: Path = Path("results")

    def seed_for(self, run: int) -> int:
        return self.base_seed + run

    def optimizer_config(self, run: int) -> OptimizerConfig:
        return OptimizerConfig.from_dict({**self.optimizer, "seed": self.seed_for(run)})

    def effective_split_seed(self) -> int:
        return self.base_seed if self.split_seed is None else self.split_seed

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "datasets": [{"name": d.name, "path": str(d.path), "label_col": d.label_col}
                         for d in self.datasets],
            "algorithms": list(self.algorithms),
            "runs": self.runs,
            "base_seed": self.base_seed,
            "split_seed": self.split_seed,
            "train_fraction": self.train_fraction,
            "normalize": self.normalize,
            "stratify": self.stratify,
            "write_logs": self.write_logs,
            "optimizer": dict(self.optimizer),
            "output_dir": str(self.output_dir),
        }


def parse_config(data: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a config document; relative paths resolve against ``base_dir``.

    A relative ``output_dir`` resolves against ``$MMIFS_OUTPUT_ROOT`` when set.
    """
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None

    refs = []
    seen = set()
    for d in data["datasets"]:
        if d["name"] in seen:
            raise ConfigError(f"duplicate dataset name {d['name']!r}")
        seen.add(d["name"])
        path = Path(d["path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"dataset {d['name']!r}: file not found: {path}")
        refs.append(DatasetRef(d["name"], path, d["label_col"]))

    out = Path(data.get("output_dir", "results"))
    if not out.is_absolute():
        root = os.environ.get(OUTPUT_ROOT_ENV)
        out = (Path(root) if root else base_dir) / out

    cfg = ExperimentConfig(
        datasets=refs,
        algorithms=list(data["algorithms"]),
        runs=data.get("runs", 10),
        base_seed=data.get("base_seed", 0),
        split_seed=data.get("split_seed"),
        train_fraction=data.get("train_fraction", 0.75),
        normalize=data.get("normalize", True),
        stratify=data.get("stratify", True),
        write_logs=data.get("write_logs", False),
        optimizer=dict(data.get("optimizer", {})),
        output_dir=out,
    )
    if "seed" in cfg.optimizer:
        raise ConfigError("optimizer.seed is derived from base_seed; set base_seed instead")
    try:
        cfg.optimizer_config(0)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    return cfg


def load_dataset(ref: DatasetRef, normalize: bool = True) -> Dataset:
    try:
        d = load_csv(ref.path, ref.label_col, name=ref.name)
    except DatasetError as exc:
        raise ConfigError(f"dataset {ref.name!r}: {exc}") from None
    return min_max_normalize(d) if normalize else d


def prepare_splits(cfg: ExperimentConfig) -> dict:
    """Load, scale and split every dataset once; all runs share the split."""
    splits = {}
    for ref in cfg.datasets:
        d = load_dataset(ref, cfg.normalize)
        try:
            splits[ref.name] = stratified_split(
                d, cfg.train_fraction, cfg.effective_split_seed(), cfg.stratify)
        except DatasetError as exc:
            raise ConfigError(f"dataset {ref.name!r}: {exc}") from None
        k = cfg.optimizer.get("knn_k", 5)
        if k > splits[ref.name].train.n_instances:
            raise ConfigError(f"dataset {ref.name!r}: knn_k={k} exceeds training rows")
    return splits
