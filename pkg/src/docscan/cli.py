"""Command-line pipeline: mine / docscan / kmeans / random-baseline / tfidf / blobs / agreement / ablation.

A pipeline spec is a JSON file naming the input files and hyperparameters;
command-line flags override spec fields. Every command is deterministic for a
given spec and seed (report files are byte-identical apart from the
generated_at timestamp).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import evaluate, model as model_mod, neighbors, store
from .kmeans import assign_to_centroids, kmeans
from .errors import DocscanError


@dataclass
class PipelineSpec:
    """Everything one experiment needs: data paths, run config, run count, output dir."""

    train_embeddings: str | None = None
    train_labels: str | None = None
    test_embeddings: str | None = None
    test_labels: str | None = None
    train_corpus: str | None = None
    test_corpus: str | None = None
    featurizer: str = "precomputed"
    tfidf: store.TfidfConfig = field(default_factory=store.TfidfConfig)
    run: model_mod.RunConfig = field(default_factory=model_mod.RunConfig)
    num_runs: int = 10
    num_classes: int | None = None
    out_dir: str = "out"
    dataset: str = "dataset"

    def __post_init__(self):
        if self.featurizer not in ("precomputed", "tfidf"):
            raise ValueError(f'featurizer must be "precomputed" or "tfidf", got {self.featurizer!r}')
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")


def load_spec(path) -> PipelineSpec:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    tfidf_cfg = store.TfidfConfig(**raw.pop("tfidf", {}))
    run_cfg = model_mod.RunConfig(**raw.pop("run", {}))
    spec = PipelineSpec(tfidf=tfidf_cfg, run=run_cfg, **raw)
    base = Path(path).parent
    for attr in ("train_embeddings", "train_labels", "test_embeddings", "test_labels",
                 "train_corpus", "test_corpus"):
        value = getattr(spec, attr)
        if value is not None:
            resolved = Path(value) if Path(value).is_absolute() else base / value
            if not resolved.exists():
                raise ValueError(f"spec field {attr} points to a missing file: {resolved}")
            setattr(spec, attr, str(resolved))
    return spec


@dataclass
class ResolvedData:
    train_x: np.ndarray
    train_y: np.ndarray | None
    test_x: np.ndarray | None
    test_y: np.ndarray | None
    num_classes: int


def resolve_data(spec: PipelineSpec, need_test: bool = True) -> ResolvedData:
    """Load (or featurize) the train and test splits named by the spec."""
    if spec.featurizer == "precomputed":
        if spec.train_embeddings is None:
            raise ValueError("spec needs train_embeddings (featurizer=precomputed)")
        train_x = store.load_embeddings(spec.train_embeddings)
        train_y = store.load_labels(spec.train_labels) if spec.train_labels else None
        test_x = test_y = None
        if need_test:
            if spec.test_embeddings is None:
                raise ValueError("spec needs test_embeddings for test-split evaluation")
            test_x = store.load_embeddings(spec.test_embeddings)
            test_y = store.load_labels(spec.test_labels) if spec.test_labels else None
    else:
        if spec.train_corpus is None:
            raise ValueError("spec needs train_corpus (featurizer=tfidf)")
        train_texts, train_y = store.load_corpus(spec.train_corpus)
        test_texts, test_y = ([], None)
        if need_test:
            if spec.test_corpus is None:
                raise ValueError("spec needs test_corpus for test-split evaluation")
            test_texts, test_y = store.load_corpus(spec.test_corpus)
        # One vocabulary for both splits: fit on the concatenation, then slice.
        combined = store.tfidf_featurize(train_texts + test_texts, spec.tfidf)
        train_x = combined[: len(train_texts)]
        test_x = combined[len(train_texts):] if need_test else None

    if train_y is not None and len(train_y) != len(train_x):
        raise ValueError(f"{len(train_y)} train labels for {len(train_x)} rows")
    if test_y is not None and len(test_y) != len(test_x):
        raise ValueError(f"{len(test_y)} test labels for {len(test_x)} rows")

    if spec.num_classes is not None:
        c = spec.num_classes
    else:
        seen = [int(y.max()) + 1 for y in (train_y, test_y) if y is not None]
        if not seen:
            raise ValueError("num_classes not in spec and no labels to infer it from")
        c = max(seen)
    return ResolvedData(train_x, train_y, test_x, test_y, c)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_summary(out_dir: Path, experiment: str, rows) -> Path:
    """CSV with columns experiment,dataset,mean,ci95."""
    path = out_dir / f"summary_{experiment}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "dataset", "mean", "ci95"])
        for name, dataset, mean, ci95 in rows:
            writer.writerow([name, dataset, repr(mean), "" if ci95 is None else repr(ci95)])
    return path


def _print_result(experiment: str, dataset: str, report: evaluate.EvalReport) -> None:
    if report.ci95_halfwidth is None:
        print(f"{experiment} {dataset}: mean {report.mean:.4f} (single run, no interval)")
    else:
        print(f"{experiment} {dataset}: mean {report.mean:.4f} ± {report.ci95_halfwidth:.4f}")


def _out_dir(spec: PipelineSpec) -> Path:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_mine(spec: PipelineSpec, k: int | None = None) -> Path:
    """Mine nearest neighbors on the train split; print the agreement diagnostic if labels exist."""
    data = resolve_data(spec, need_test=False)
    k = k or spec.run.k_neighbors
    table = neighbors.mine_neighbors(data.train_x, k)
    out = _out_dir(spec)
    path = out / "neighbors.jsonl"
    neighbors.save_neighbor_table(table, path)
    print(f"mined {table.n_rows} rows x {table.k} neighbors -> {path}")
    if data.train_y is not None:
        agreement = neighbors.neighbor_label_agreement(table, data.train_y, k)
        for kp, frac in enumerate(agreement, start=1):
            print(f"neighbor label agreement k'={kp}: {frac:.4f}")
    return path


def _docscan_runs(train_x, table, eval_x, eval_y, c, run_cfg, num_runs, base_seed):
    accuracies, mappings = [], []
    last_model, last_trace = None, None
    for r in range(num_runs):
        cfg = run_cfg.replace(seed=base_seed + r)
        trained, trace = model_mod.train(train_x, table, c, cfg)
        pred = model_mod.predict(trained, eval_x)
        accuracy, mapping = evaluate.clustering_accuracy(pred, eval_y)
        accuracies.append(accuracy)
        mappings.append(mapping)
        last_model, last_trace = trained, trace
    return evaluate.make_report(accuracies, mappings), last_model, last_trace


def cmd_docscan(spec: PipelineSpec) -> evaluate.EvalReport:
    """Train-on-train, score-on-test protocol for the neighbor-consistency model."""
    data = resolve_data(spec)
    if data.test_y is None:
        raise ValueError("docscan needs test labels to score against")
    table = neighbors.mine_neighbors(data.train_x, spec.run.k_neighbors)
    report, last_model, last_trace = _docscan_runs(
        data.train_x, table, data.test_x, data.test_y, data.num_classes,
        spec.run, spec.num_runs, spec.run.seed)
    out = _out_dir(spec)
    evaluate.save_report(report, out / "docscan_report.json",
                         experiment="docscan", dataset=spec.dataset,
                         num_runs=spec.num_runs, seed=spec.run.seed, generated_at=_timestamp())
    model_mod.save_model(last_model, out / "docscan_model_last.json")
    model_mod.save_loss_trace(last_trace, out / "docscan_trace_last.csv")
    _write_summary(out, "docscan", [("docscan", spec.dataset, report.mean, report.ci95_halfwidth)])
    _print_result("docscan", spec.dataset, report)
    return report


def cmd_kmeans(spec: PipelineSpec) -> evaluate.EvalReport:
    """k-means baseline: fit centroids on train, assign and score the test split."""
    data = resolve_data(spec)
    if data.test_y is None:
        raise ValueError("kmeans needs test labels to score against")
    accuracies, mappings = [], []
    for r in range(spec.num_runs):
        result = kmeans(data.train_x, data.num_classes, seed=spec.run.seed + r)
        pred = assign_to_centroids(data.test_x, result.centroids)
        accuracy, mapping = evaluate.clustering_accuracy(pred, data.test_y)
        accuracies.append(accuracy)
        mappings.append(mapping)
    report = evaluate.make_report(accuracies, mappings)
    out = _out_dir(spec)
    evaluate.save_report(report, out / "kmeans_report.json",
                         experiment="kmeans", dataset=spec.dataset,
                         num_runs=spec.num_runs, seed=spec.run.seed, generated_at=_timestamp())
    _write_summary(out, "kmeans", [("kmeans", spec.dataset, report.mean, report.ci95_halfwidth)])
    _print_result("kmeans", spec.dataset, report)
    return report


def cmd_random_baseline(spec: PipelineSpec) -> evaluate.EvalReport:
    data = resolve_data(spec)
    if data.test_y is None:
        raise ValueError("random-baseline needs test labels")
    report = evaluate.random_baseline(data.test_y, seed=spec.run.seed, runs=max(spec.num_runs, 2))
    out = _out_dir(spec)
    evaluate.save_report(report, out / "random_baseline_report.json",
                         experiment="random-baseline", dataset=spec.dataset,
                         num_runs=max(spec.num_runs, 2), seed=spec.run.seed, generated_at=_timestamp())
    _write_summary(out, "random-baseline",
                   [("random-baseline", spec.dataset, report.mean, report.ci95_halfwidth)])
    _print_result("random-baseline", spec.dataset, report)
    return report


def cmd_tfidf(corpus_path: str, out_dir: str, cfg: store.TfidfConfig) -> Path:
    """Featurize a JSONL corpus and write the matrix (and labels, when present)."""
    texts, labels = store.load_corpus(corpus_path)
    matrix = store.tfidf_featurize(texts, cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "embeddings.dse"
    store.save_embeddings(matrix, path)
    if labels is not None:
        store.save_labels(labels, out / "labels.txt")
    print(f"tfidf: {matrix.shape[0]} rows x {matrix.shape[1]} features -> {path}")
    return path


def cmd_blobs(n_per_class: int, num_classes: int, dim: int, separation: float,
              seed: int, out_dir: str) -> Path:
    matrix, labels = store.make_blobs(n_per_class, num_classes, dim, separation, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "embeddings.dse"
    store.save_embeddings(matrix, path)
    store.save_labels(labels, out / "labels.txt")
    print(f"blobs: {matrix.shape[0]} rows x {dim} dims, {num_classes} classes -> {path}")
    return path


def cmd_agreement(embeddings_path: str, labels_path: str, k: int, out_dir: str) -> list[float]:
    """The pair-label agreement curve, printed and written as CSV."""
    matrix = store.load_embeddings(embeddings_path)
    labels = store.load_labels(labels_path)
    table = neighbors.mine_neighbors(matrix, k)
    agreement = neighbors.neighbor_label_agreement(table, labels, k)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "agreement.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "agreement"])
        for kp, frac in enumerate(agreement, start=1):
            writer.writerow([kp, repr(frac)])
            print(f"neighbor label agreement k'={kp}: {frac:.4f}")
    return agreement


def cmd_ablation(spec: PipelineSpec, grid_path: str) -> list:
    """Hyperparameter grid, scored on the train split (cluster-then-evaluate protocol)."""
    with open(grid_path, "r", encoding="utf-8") as fh:
        grid = json.load(fh)
    rows = grid["rows"] if isinstance(grid, dict) else grid
    if not rows:
        raise ValueError("ablation grid is empty")

    data = resolve_data(spec, need_test=False)
    if data.train_y is None:
        raise ValueError("ablation needs train labels (it scores the training split)")

    configs = []
    for i, row in enumerate(rows):
        overrides = {key: value for key, value in row.items() if key != "name"}
        name = row.get("name") or f"row{i}"
        configs.append((name, spec.run.replace(**overrides)))

    max_k = max(cfg.k_neighbors for _, cfg in configs)
    table = neighbors.mine_neighbors(data.train_x, max_k)

    out = _out_dir(spec)
    results = []
    summary_rows = []
    for name, cfg in configs:
        report, _, _ = _docscan_runs(
            data.train_x, table, data.train_x, data.train_y, data.num_classes,
            cfg, spec.num_runs, cfg.seed)
        results.append((name, cfg, report))
        summary_rows.append((f"ablation:{name}", spec.dataset, report.mean, report.ci95_halfwidth))
        safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
        evaluate.save_report(report, out / f"ablation_{safe}.json",
                             experiment=f"ablation:{name}", dataset=spec.dataset,
                             num_runs=spec.num_runs, seed=cfg.seed, generated_at=_timestamp())
        _print_result(f"ablation:{name}", spec.dataset, report)

    with open(out / "ablation_summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "k_neighbors", "entropy_weight", "batch_size",
                        "dropout", "epochs", "mean", "ci95"])
        for name, cfg, report in results:
            writer.writerow([name, cfg.k_neighbors, cfg.entropy_weight, cfg.batch_size,
                            cfg.dropout, cfg.epochs, repr(report.mean),
                            "" if report.ci95_halfwidth is None else repr(report.ci95_halfwidth)])
    _write_summary(out, "ablation", summary_rows)
    return results


def _spec_from_args(args) -> PipelineSpec:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec.run = spec.run.replace(seed=args.seed)
    if args.runs is not None:
        spec.num_runs = args.runs
    if args.out is not None:
        spec.out_dir = args.out
    return spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docscan",
                                     description="Neighbor-consistency document clustering pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_spec=True):
        if with_spec:
            p.add_argument("--spec", required=True, help="pipeline spec JSON")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--runs", type=int, default=None, help="override number of runs")
        p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("mine", help="mine nearest neighbors on the train split")
    add_common(p)
    p.add_argument("--k", type=int, default=None, help="neighbors per row (default: run.k_neighbors)")

    for name, help_text in [("docscan", "train and score the neighbor-consistency model"),
                            ("kmeans", "k-means baseline"),
                            ("random-baseline", "uniform-random assignment baseline")]:
        p = sub.add_parser(name, help=help_text)
        add_common(p)

    p = sub.add_parser("tfidf", help="featurize a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ngram-min", type=int, default=1)
    p.add_argument("--ngram-max", type=int, default=1)
    p.add_argument("--max-features", type=int, default=50_000)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--keep-case", action="store_true")

    p = sub.add_parser("blobs", help="generate synthetic Gaussian clusters")
    p.add_argument("--n-per-class", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--separation", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("agreement", help="neighbor-pair label agreement diagnostic")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default="out")

    p = sub.add_parser("ablation", help="hyperparameter grid scored on the train split")
    add_common(p)
    p.add_argument("--grid", required=True, help="grid JSON: {\"rows\": [{\"name\": ..., overrides}]}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mine":
            cmd_mine(_spec_from_args(args), k=args.k)
        elif args.command == "docscan":
            cmd_docscan(_spec_from_args(args))
        elif args.command == "kmeans":
            cmd_kmeans(_spec_from_args(args))
        elif args.command == "random-baseline":
            cmd_random_baseline(_spec_from_args(args))
        elif args.command == "tfidf":
            cfg = store.TfidfConfig(ngram_min=args.ngram_min, ngram_max=args.ngram_max,
                                    max_features=args.max_features, min_df=args.min_df,
                                    lowercase=not args.keep_case)
            cmd_tfidf(args.corpus, args.out, cfg)
        elif args.command == "blobs":
            cmd_blobs(args.n_per_class, args.classes, args.dim, args.separation, args.seed, args.out)
        elif args.command == "agreement":
            cmd_agreement(args.embeddings, args.labels, args.k, args.out)
        elif args.command == "ablation":
            cmd_ablation(_spec_from_args(args), args.grid)
    except (DocscanError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
