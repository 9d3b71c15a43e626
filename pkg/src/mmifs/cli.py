"""Command-line entry point: run experiments, compare fronts, export, metrics.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from pathlib import Path

import numpy as np

from . import metrics
from .config import ConfigError, ExperimentConfig, parse_config, prepare_splits
from .optimizer import run
from .results import (csv_text, front_csv_text, log_csv_text, read_front_csv, read_json,
                      read_record, write_json, write_record, write_text_atomic)

log = logging.getLogger("mmifs")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
MANIFEST_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _job(args):
    algorithm, opt_cfg, split = args
    return run(opt_cfg, split, algorithm)


def cmd_run(config_path, workers: int = 1) -> int:
    config_path = Path(config_path)
    try:
        data = read_json(config_path)
    except FileNotFoundError:
        print(f"error: config not found: {config_path}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: {config_path}: invalid JSON ({exc})", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(data, config_path.parent)
        splits = prepare_splits(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg, splits, workers)


def execute(cfg: ExperimentConfig, splits: dict, workers: int = 1) -> int:
    out = cfg.output_dir
    jobs, entries = [], []
    for ref in cfg.datasets:
        for algorithm in cfg.algorithms:
            for i in range(cfg.runs):
                stem = Path(ref.name) / algorithm / f"run_{i:03d}"
                jobs.append((algorithm, cfg.optimizer_config(i), splits[ref.name]))
                entries.append({
                    "dataset": ref.name,
                    "algorithm": algorithm,
                    "run": i,
                    "seed": cfg.seed_for(i),
                    "record": f"{stem}.json",
                    "front": f"{stem}_front.csv",
                    "log": f"{stem}_log.csv" if cfg.write_logs else None,
                    "status": "pending",
                })

    def finish(entry, result):
        if isinstance(result, BaseException):
            entry["status"] = "failed"
            entry["error"] = f"{type(result).__name__}: {result}"
            log.error("%s/%s run %d failed: %s", entry["dataset"], entry["algorithm"],
                      entry["run"], result)
            return
        write_record(out / entry["record"], result)
        write_text_atomic(out / entry["front"], front_csv_text(result.front_objectives()))
        if entry["log"]:
            write_text_atomic(out / entry["log"], log_csv_text(result.history))
        entry["status"] = "ok"
        log.info("%s/%s run %d: %d evaluations, %d front points", entry["dataset"],
                 entry["algorithm"], entry["run"], result.eval_count, len(result.front))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_job, j) for j in jobs]
            for entry, fut in zip(entries, futures):
                try:
                    res = fut.result()
                except Exception as exc:
                    res = exc
                finish(entry, res)
    else:
        for entry, job in zip(entries, jobs):
            try:
                res = _job(job)
            except Exception as exc:
                res = exc
            finish(entry, res)

    failed = [e for e in entries if e["status"] != "ok"]
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "status": "partial" if failed else "complete",
        "config": cfg.to_json(),
        "datasets": {
            name: {"n_features": sp.train.n_features,
                   "n_train": sp.train.n_instances,
                   "n_test": sp.test.n_instances}
            for name, sp in splits.items()
        },
        "runs": entries,
    }
    write_json(out / "manifest.json", manifest)
    print(out / "manifest.json")
    return EXIT_RUNTIME if failed else EXIT_OK


def _load_manifest_fronts(paths):
    """{dataset: {algorithm: [front, ...]}} plus {dataset: n_features}."""
    fronts = defaultdict(lambda: defaultdict(list))
    n_features = {}
    for p in paths:
        p = Path(p)
        if not p.is_file():
            raise UsageError(f"manifest not found: {p}")
        try:
            man = read_json(p)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{p}: invalid JSON ({exc})") from None
        if man.get("schema_version") != MANIFEST_SCHEMA_VERSION:
            raise UsageError(f"{p}: unsupported manifest schema")
        for name, info in man["datasets"].items():
            if n_features.setdefault(name, info["n_features"]) != info["n_features"]:
                raise UsageError(f"dataset {name!r} has conflicting feature counts")
        for e in sorted(man["runs"], key=lambda e: (e["dataset"], e["algorithm"], e["run"])):
            if e["status"] != "ok":
                continue
            fronts[e["dataset"]][e["algorithm"]].append(read_front_csv(p.parent / e["front"]))
    return fronts, n_features


def compare_tables(fronts, n_features) -> dict[str, str]:
    """CSV tables comparing methods; see :func:`cmd_compare`."""
    methods = sorted({m for per in fronts.values() for m in per})
    datasets = sorted(fronts)
    if len(methods) < 2:
        raise UsageError(f"need at least two methods to compare, got {methods}")
    missing = [f"{m} lacks {d}" for m in methods for d in datasets if m not in fronts[d]]
    if missing:
        raise UsageError("mismatched dataset coverage: " + "; ".join(missing))

    hv_rows, c_rows = [], []
    best_hv = {}
    best_front = {}
    for d in datasets:
        n = n_features[d]
        for m in methods:
            hvs = np.array([metrics.hypervolume(f, n) for f in fronts[d][m]])
            b = int(np.argmax(hvs))
            best_hv[d, m] = float(hvs[b])
            best_front[d, m] = fronts[d][m][b]
            hv_rows.append((d, m, len(hvs), repr(float(hvs[b])), repr(float(hvs.mean())),
                            repr(float(hvs.std())), b))
        for a in methods:
            c_rows.append([d, a] + [repr(metrics.c_metric(best_front[d, a], best_front[d, b]))
                                    for b in methods])

    w_rows = []
    for a, b in combinations(methods, 2):
        counts_match = all(len(fronts[d][a]) == len(fronts[d][b]) for d in datasets)
        diffs = [best_hv[d, a] - best_hv[d, b] for d in datasets]
        p, note = "", ""
        if not counts_match:
            note = "run counts differ"
        else:
            try:
                p = repr(metrics.wilcoxon_exact(diffs))
            except ValueError as exc:
                note = str(exc)
        w_rows.append((a, b, len(datasets), sum(x > 0 for x in diffs),
                       sum(x < 0 for x in diffs), p, note))

    tables = {
        "hypervolume.csv": csv_text(("dataset", "method", "runs", "hv_best", "hv_mean",
                                     "hv_std", "best_run"), hv_rows),
        "c_metric.csv": csv_text(["dataset", "method"] + methods, c_rows),
        "wilcoxon.csv": csv_text(("method_a", "method_b", "datasets", "a_better", "b_better",
                                  "p_value", "note"), w_rows),
    }
    if len(methods) >= 3 and len(datasets) >= 2:
        scores = [[best_hv[d, m] for d in datasets] for m in methods]
        stat, p = metrics.friedman(scores)
        tables["friedman.csv"] = csv_text(("methods", "datasets", "statistic", "p_value"),
                                          [(len(methods), len(datasets), repr(stat), repr(p))])
    return tables


def cmd_compare(manifests, out_dir=None) -> int:
    """Compare methods across one or more run manifests.

    Each method is represented per dataset by its best-HV run. Writes
    ``hypervolume.csv`` (best, mean and std over runs), ``c_metric.csv`` (row
    method covering column method), ``wilcoxon.csv`` (exact test on per-dataset
    best-HV differences) and, for three or more methods, ``friedman.csv``.
    """
    try:
        fronts, n_features = _load_manifest_fronts(manifests)
        tables = compare_tables(fronts, n_features)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(out_dir) if out_dir else Path(manifests[0]).parent / "compare"
    for name, text in tables.items():
        write_text_atomic(out / name, text)
        print(f"# {out / name}\n{text}")
    return EXIT_OK


def cmd_front_export(records, out_dir=None) -> int:
    """Write a plot-ready ``(n_selected, error_pct)`` CSV for each run record."""
    status = EXIT_OK
    for rp in records:
        rp = Path(rp)
        if not rp.is_file():
            print(f"error: run record not found: {rp}", file=sys.stderr)
            return EXIT_USAGE
        try:
            rec = read_record(rp)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_RUNTIME
            continue
        target = (Path(out_dir) if out_dir else rp.parent) / f"{rp.stem}_front.csv"
        write_text_atomic(target, front_csv_text(rec.front_objectives()))
        print(target)
    return status


def _read_any_front(path: Path, n_features):
    if path.suffix == ".json":
        rec = read_record(path)
        return rec.front_objectives(), rec.dataset["n_features"]
    if n_features is None:
        raise UsageError(f"{path}: CSV fronts need --n-features")
    return read_front_csv(path), n_features


def cmd_metrics(fronts, n_features=None, diffs=None, scores=None, out=None) -> int:
    """Pairwise C-metric and HV for front files; optional Wilcoxon/Friedman."""
    chunks = []
    try:
        if fronts:
            loaded = [(Path(f).name, *_read_any_front(Path(f), n_features)) for f in fronts]
            names = [name for name, _, _ in loaded]
            rows = []
            for name, front, n in loaded:
                row = [name, repr(metrics.hypervolume(front, n))]
                row += [repr(metrics.c_metric(front, other)) for _, other, _ in loaded]
                rows.append(row)
            chunks.append(csv_text(["front", "hv"] + [f"C(front,{x})" for x in names], rows))
        if diffs:
            chunks.append(csv_text(("test", "n", "p_value"),
                                   [("wilcoxon_exact", len(diffs),
                                     repr(metrics.wilcoxon_exact(diffs)))]))
        if scores:
            mat = np.loadtxt(scores, delimiter=",", ndmin=2)
            stat, p = metrics.friedman(mat)
            chunks.append(csv_text(("test", "statistic", "p_value"),
                                   [("friedman", repr(stat), repr(p))]))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not chunks:
        print("error: nothing to do; give front files, --diffs or --scores", file=sys.stderr)
        return EXIT_USAGE
    text = "\n".join(chunks)
    if out:
        write_text_atomic(out, text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmifs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run experiments from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("compare", help="compare methods across run manifests")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--out", help="output directory (default: <manifest dir>/compare)")

    p = sub.add_parser("front-export", help="export fronts of run records as CSV")
    p.add_argument("records", nargs="+")
    p.add_argument("--out", help="output directory (default: next to each record)")

    p = sub.add_parser("metrics", help="C-metric/HV of front files and significance tests")
    p.add_argument("fronts", nargs="*", help="front CSV files or run record JSON files")
    p.add_argument("--n-features", type=int, help="feature count for CSV fronts")
    p.add_argument("--diffs", type=float, nargs="+", help="paired differences for Wilcoxon")
    p.add_argument("--scores", help="CSV matrix (methods x datasets) for Friedman")
    p.add_argument("--out", help="also write the tables to this file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "run":
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        return cmd_run(args.config, args.workers)
    if args.command == "compare":
        return cmd_compare(args.manifests, args.out)
    if args.command == "front-export":
        return cmd_front_export(args.records, args.out)
    return cmd_metrics(args.fronts, args.n_features, args.diffs, args.scores, args.out)


if __name__ == "__main__":
    sys.exit(main())
