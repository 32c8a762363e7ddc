import csv
import json

import numpy as np
import pytest

from docscan import store
from docscan.cli import PipelineSpec, load_spec, main, resolve_data
from docscan.neighbors import load_neighbor_table


def make_split(dir_path, seed):
    dir_path.mkdir(parents=True, exist_ok=True)
    matrix, labels = store.make_blobs(40, 3, 8, 50.0, seed=seed)
    store.save_embeddings(matrix, dir_path / "embeddings.dse")
    store.save_labels(labels, dir_path / "labels.txt")
    return dir_path


def write_spec(tmp_path, name="spec.json", **overrides):
    train = make_split(tmp_path / "train", seed=0)
    test = make_split(tmp_path / "test", seed=1)
    payload = {
        "train_embeddings": str(train / "embeddings.dse"),
        "train_labels": str(train / "labels.txt"),
        "test_embeddings": str(test / "embeddings.dse"),
        "test_labels": str(test / "labels.txt"),
        "num_runs": 2,
        "out_dir": str(tmp_path / "out"),
        "dataset": "blobs",
        "run": {"epochs": 2, "batch_size": 32, "seed": 0},
    }
    payload.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_pipeline_spec_validation():
    with pytest.raises(ValueError):
        PipelineSpec(featurizer="bert")
    with pytest.raises(ValueError):
        PipelineSpec(num_runs=0)


def test_load_spec_nested_configs(tmp_path):
    path = write_spec(tmp_path, tfidf={"max_features": 99}, run={"epochs": 3, "dropout": 0.2})
    spec = load_spec(path)
    assert spec.tfidf.max_features == 99
    assert spec.run.epochs == 3
    assert spec.run.dropout == 0.2
    assert spec.run.k_neighbors == 5  # untouched default
    assert spec.num_runs == 2


def test_load_spec_resolves_relative_paths(tmp_path):
    make_split(tmp_path / "train", seed=0)
    payload = {"train_embeddings": "train/embeddings.dse", "train_labels": "train/labels.txt"}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(payload))
    spec = load_spec(path)
    assert spec.train_embeddings == str(tmp_path / "train" / "embeddings.dse")


def test_load_spec_missing_data_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"train_embeddings": "nope.dse"}))
    with pytest.raises(ValueError, match="missing file"):
        load_spec(path)


def test_resolve_data_label_count_mismatch(tmp_path):
    train = make_split(tmp_path / "train", seed=0)
    store.save_labels(np.zeros(7, dtype=np.int64), train / "labels.txt")
    spec = PipelineSpec(train_embeddings=str(train / "embeddings.dse"),
                        train_labels=str(train / "labels.txt"))
    with pytest.raises(ValueError, match="labels"):
        resolve_data(spec, need_test=False)


def test_resolve_data_infers_num_classes(tmp_path):
    train = make_split(tmp_path / "train", seed=0)
    spec = PipelineSpec(train_embeddings=str(train / "embeddings.dse"),
                        train_labels=str(train / "labels.txt"))
    data = resolve_data(spec, need_test=False)
    assert data.num_classes == 3
    assert data.train_x.shape == (120, 8)


def test_blobs_command(tmp_path):
    out = tmp_path / "blobs"
    rc = main(["blobs", "--n-per-class", "10", "--classes", "2", "--dim", "4",
               "--separation", "9.0", "--seed", "3", "--out", str(out)])
    assert rc == 0
    matrix = store.load_embeddings(out / "embeddings.dse")
    labels = store.load_labels(out / "labels.txt")
    assert matrix.shape == (20, 4)
    np.testing.assert_array_equal(labels, np.repeat([0, 1], 10))


def test_mine_command(tmp_path, capsys):
    path = write_spec(tmp_path)
    rc = main(["mine", "--spec", str(path), "--k", "3"])
    assert rc == 0
    table = load_neighbor_table(tmp_path / "out" / "neighbors.jsonl")
    assert table.k == 3
    assert table.n_rows == 120
    out = capsys.readouterr().out
    assert "neighbor label agreement k'=1" in out


def test_docscan_end_to_end(tmp_path, capsys):
    path = write_spec(tmp_path)
    rc = main(["docscan", "--spec", str(path)])
    assert rc == 0
    out = tmp_path / "out"
    report = json.loads((out / "docscan_report.json").read_text())
    assert report["experiment"] == "docscan"
    assert report["dataset"] == "blobs"
    assert len(report["per_seed_accuracies"]) == 2
    assert report["mean"] >= 0.95
    assert "generated_at" in report

    with open(out / "summary_docscan.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["experiment", "dataset", "mean", "ci95"]
    assert rows[1][0] == "docscan"
    assert float(rows[1][2]) == pytest.approx(report["mean"])

    with open(out / "docscan_trace_last.csv") as fh:
        trace_rows = list(csv.reader(fh))
    assert trace_rows[0] == ["epoch", "step", "total", "consistency", "entropy"]
    # 120 rows x 5 neighbors = 600 pairs, batch 32 -> 19 steps x 2 epochs
    assert len(trace_rows) == 1 + 19 * 2
    assert (out / "docscan_model_last.json").exists()
    assert "mean" in capsys.readouterr().out


def test_docscan_deterministic_reports(tmp_path):
    path = write_spec(tmp_path)

    def run(out_name):
        rc = main(["docscan", "--spec", str(path), "--out", str(tmp_path / out_name)])
        assert rc == 0
        out = tmp_path / out_name
        report_lines = [line for line in (out / "docscan_report.json").read_text().splitlines()
                        if "generated_at" not in line]
        return (report_lines,
                (out / "docscan_model_last.json").read_bytes(),
                (out / "docscan_trace_last.csv").read_bytes(),
                (out / "summary_docscan.csv").read_bytes())

    assert run("out_a") == run("out_b")


def test_cli_overrides_reach_report(tmp_path):
    path = write_spec(tmp_path)
    rc = main(["docscan", "--spec", str(path), "--seed", "9", "--runs", "3",
               "--out", str(tmp_path / "alt")])
    assert rc == 0
    report = json.loads((tmp_path / "alt" / "docscan_report.json").read_text())
    assert report["seed"] == 9
    assert report["num_runs"] == 3
    assert len(report["per_seed_accuracies"]) == 3


def test_kmeans_command(tmp_path):
    path = write_spec(tmp_path)
    rc = main(["kmeans", "--spec", str(path)])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "kmeans_report.json").read_text())
    assert report["experiment"] == "kmeans"
    assert report["mean"] >= 0.95
    assert (tmp_path / "out" / "summary_kmeans.csv").exists()


def test_random_baseline_command(tmp_path):
    path = write_spec(tmp_path, num_runs=5)
    rc = main(["random-baseline", "--spec", str(path)])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "random_baseline_report.json").read_text())
    assert len(report["per_seed_accuracies"]) == 5
    # chance level for 3 balanced classes, after optimal matching
    assert 0.30 <= report["mean"] <= 0.55


def test_agreement_command(tmp_path, capsys):
    split = make_split(tmp_path / "train", seed=0)
    rc = main(["agreement", "--embeddings", str(split / "embeddings.dse"),
               "--labels", str(split / "labels.txt"), "--k", "4",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    with open(tmp_path / "out" / "agreement.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "agreement"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3, 4]
    # separation 50: every neighbor shares its anchor's class
    assert all(float(r[1]) == 1.0 for r in rows[1:])
    assert "k'=4" in capsys.readouterr().out


def test_tfidf_command(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    docs = [{"text": "alpha beta beta", "label": "x"},
            {"text": "beta gamma", "label": "y"},
            {"text": "alpha gamma gamma", "label": "x"}]
    corpus.write_text("\n".join(json.dumps(d) for d in docs) + "\n")
    rc = main(["tfidf", "--corpus", str(corpus), "--out", str(tmp_path / "feat")])
    assert rc == 0
    matrix = store.load_embeddings(tmp_path / "feat" / "embeddings.dse")
    labels = store.load_labels(tmp_path / "feat" / "labels.txt")
    assert matrix.shape == (3, 3)
    np.testing.assert_allclose(np.linalg.norm(matrix, axis=1), 1.0, atol=1e-6)
    np.testing.assert_array_equal(labels, [0, 1, 0])


def test_ablation_command(tmp_path):
    path = write_spec(tmp_path)
    grid = {"rows": [{"name": "default"},
                     {"name": "lam=0", "entropy_weight": 0.0},
                     {"k_neighbors": 3}]}
    grid_path = tmp_path / "grid.json"
    grid_path.write_text(json.dumps(grid))
    rc = main(["ablation", "--spec", str(path), "--grid", str(grid_path)])
    assert rc == 0
    out = tmp_path / "out"
    with open(out / "ablation_summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["name", "k_neighbors", "entropy_weight", "batch_size",
                       "dropout", "epochs", "mean", "ci95"]
    assert [r[0] for r in rows[1:]] == ["default", "lam=0", "row2"]
    assert rows[2][2] == "0.0"  # entropy_weight override recorded
    assert rows[3][1] == "3"  # k_neighbors override recorded
    assert (out / "ablation_default.json").exists()
    assert (out / "ablation_lam_0.json").exists()  # "=" sanitized
    assert (out / "ablation_row2.json").exists()


def test_ablation_empty_grid_fails(tmp_path):
    path = write_spec(tmp_path)
    grid_path = tmp_path / "grid.json"
    grid_path.write_text(json.dumps({"rows": []}))
    rc = main(["ablation", "--spec", str(path), "--grid", str(grid_path)])
    assert rc == 1


def test_missing_spec_exits_one(tmp_path, capsys):
    rc = main(["docscan", "--spec", str(tmp_path / "absent.json")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error: FileNotFoundError:")
    assert err.count("\n") == 1


def test_malformed_spec_exits_one(tmp_path, capsys):
    path = tmp_path / "spec.json"
    path.write_text("{not json")
    rc = main(["docscan", "--spec", str(path)])
    assert rc == 1
    assert "error: JSONDecodeError" in capsys.readouterr().err


def test_blobs_validation_exits_one(tmp_path, capsys):
    rc = main(["blobs", "--n-per-class", "5", "--classes", "4", "--dim", "2",
               "--separation", "5.0", "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "error: ValueError" in capsys.readouterr().err


def test_docscan_requires_test_labels(tmp_path, capsys):
    train = make_split(tmp_path / "train", seed=0)
    test = make_split(tmp_path / "test", seed=1)
    payload = {
        "train_embeddings": str(train / "embeddings.dse"),
        "test_embeddings": str(test / "embeddings.dse"),
        "num_classes": 3,
        "out_dir": str(tmp_path / "out"),
        "run": {"epochs": 1},
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(payload))
    rc = main(["docscan", "--spec", str(path)])
    assert rc == 1
    assert "test labels" in capsys.readouterr().err
