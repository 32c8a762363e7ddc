import numpy as np
import pytest

from docscan import store
from docscan.errors import KTooLarge
from docscan.neighbors import (
    NeighborTable,
    load_neighbor_table,
    mine_neighbors,
    neighbor_label_agreement,
    save_neighbor_table,
)


def naive_knn(x, k):
    """Quadratic reference: full f64 distance matrix, stable sort, ties by index."""
    x = x.astype(np.float64)
    n = x.shape[0]
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
    dist = np.sqrt(np.take_along_axis(d2, idx, axis=1))
    return idx, dist


def test_matches_naive_on_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(5, 120))
        dim = int(rng.integers(1, 32))
        k = int(rng.integers(1, min(n - 1, 8) + 1))
        x = rng.normal(size=(n, dim)).astype(np.float32)
        table = mine_neighbors(x, k)
        ref_idx, ref_dist = naive_knn(x, k)
        np.testing.assert_array_equal(table.indices, ref_idx)
        np.testing.assert_allclose(table.distances, ref_dist, rtol=1e-6, atol=1e-6)


def test_quantized_ties_match_naive():
    # coordinates on a 0.1 grid create equal real distances whose float64
    # values depend on the summation path; selection must agree with the
    # direct-subtraction oracle including its tie-breaks
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(50, 450))
        dim = int(rng.integers(2, 40))
        k = int(rng.integers(1, 9))
        x = np.round(rng.normal(size=(n, dim)), 1)
        table = mine_neighbors(x, k)
        ref_idx, ref_dist = naive_knn(x, k)
        np.testing.assert_array_equal(table.indices, ref_idx)
        np.testing.assert_allclose(table.distances, ref_dist, atol=1e-12)


def test_three_collinear_points():
    x = np.array([[0.0], [1.0], [2.0]], dtype=np.float32)
    table = mine_neighbors(x, 1)
    np.testing.assert_array_equal(table.indices, [[1], [0], [1]])
    np.testing.assert_allclose(table.distances, [[1.0], [1.0], [1.0]])


def test_duplicate_rows_distance_zero():
    x = np.array([[3.0, 4.0], [3.0, 4.0], [9.0, 9.0]], dtype=np.float32)
    table = mine_neighbors(x, 1)
    assert table.indices[0, 0] == 1
    assert table.indices[1, 0] == 0
    assert table.distances[0, 0] == 0.0
    assert table.distances[1, 0] == 0.0


def test_tie_break_lower_index():
    # rows 1 and 2 are equidistant from row 0
    x = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [5.0, 5.0]], dtype=np.float32)
    table = mine_neighbors(x, 2)
    np.testing.assert_array_equal(table.indices[0], [1, 2])


def test_never_self_neighbor():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(40, 6)).astype(np.float32)
    table = mine_neighbors(x, 5)
    own = np.arange(40)[:, None]
    assert not np.any(table.indices == own)


def test_distances_ascending_per_row():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(60, 10)).astype(np.float32)
    table = mine_neighbors(x, 7)
    assert np.all(np.diff(table.distances, axis=1) >= 0)


def test_k_too_large():
    x = np.zeros((4, 2), dtype=np.float32)
    with pytest.raises(KTooLarge):
        mine_neighbors(x, 4)
    mine_neighbors(x, 3)  # k = n-1 is the limit


def test_blocked_path_matches_naive():
    # force multiple blocks by exceeding the block budget with a wide matrix
    rng = np.random.default_rng(5)
    x = rng.normal(size=(700, 50)).astype(np.float32)
    table = mine_neighbors(x, 3, block_budget=20_000)
    ref_idx, ref_dist = naive_knn(x, 3)
    np.testing.assert_array_equal(table.indices, ref_idx)
    np.testing.assert_allclose(table.distances, ref_dist, rtol=1e-6, atol=1e-6)


def test_table_validation_rejects_self():
    with pytest.raises(ValueError):
        NeighborTable(
            indices=np.array([[0], [0]]),
            distances=np.array([[0.0], [1.0]]),
        )


def test_table_validation_rejects_duplicates():
    with pytest.raises(ValueError):
        NeighborTable(
            indices=np.array([[1, 1], [0, 0]]),
            distances=np.array([[1.0, 1.0], [1.0, 1.0]]),
        )


def test_table_validation_rejects_descending_distances():
    with pytest.raises(ValueError):
        NeighborTable(
            indices=np.array([[1, 2], [0, 2], [0, 1]]),
            distances=np.array([[2.0, 1.0], [1.0, 2.0], [1.0, 2.0]]),
        )


def agreement_by_counting(table, labels, k):
    hits = 0
    for i in range(table.n_rows):
        for j in range(k):
            hits += labels[table.indices[i, j]] == labels[i]
    return hits / (table.n_rows * k)


def test_agreement_matches_pair_counting():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(50, 4)).astype(np.float32)
    labels = rng.integers(0, 3, size=50)
    table = mine_neighbors(x, 5)
    curve = neighbor_label_agreement(table, labels, 5)
    assert len(curve) == 5
    for k in range(1, 6):
        assert curve[k - 1] == pytest.approx(agreement_by_counting(table, labels, k))
    assert all(0.0 <= a <= 1.0 for a in curve)


def test_agreement_perfect_on_separated_blobs():
    x, y = store.make_blobs(30, 2, 4, 1000.0, seed=0)
    table = mine_neighbors(x, 1)
    assert neighbor_label_agreement(table, y, 1) == [1.0]


def test_jsonl_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(25, 3)).astype(np.float32)
    table = mine_neighbors(x, 4)
    path = tmp_path / "table.jsonl"
    save_neighbor_table(table, path)
    out = load_neighbor_table(path)
    np.testing.assert_array_equal(out.indices, table.indices)
    np.testing.assert_allclose(out.distances, table.distances, rtol=0, atol=0)

    first = path.read_text().splitlines()[0]
    assert '"id"' in first and '"neighbors"' in first and '"distances"' in first


def test_jsonl_rejects_gap_in_ids(tmp_path):
    path = tmp_path / "table.jsonl"
    path.write_text(
        '{"id": 0, "neighbors": [1], "distances": [1.0]}\n'
        '{"id": 2, "neighbors": [0], "distances": [1.0]}\n'
    )
    with pytest.raises(ValueError):
        load_neighbor_table(path)
