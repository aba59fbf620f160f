"""Vector table, VA-file, LSH and fingerprint-index behaviour."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mediaseek.errors import DimensionMismatch, DuplicateId, IndexStale, NegativeComponent
from mediaseek.store import (
    FingerprintIndex,
    LSHIndex,
    Metric,
    VAFileIndex,
    VectorStore,
    VectorTable,
    distance,
)


def brute_force_knn(rows, ids, query, k, metric=Metric.L2):
    """Independent oracle: naive loops, no shared code with the store."""
    scored = []
    for row_id, row in zip(ids, rows):
        if metric == Metric.L2:
            d = sum((a - b) ** 2 for a, b in zip(row, query)) ** 0.5
        elif metric == Metric.L1:
            d = sum(abs(a - b) for a, b in zip(row, query))
        else:
            raise ValueError(metric)
        scored.append((d, row_id))
    scored.sort()
    return [(row_id, d) for d, row_id in scored[:k]]


def make_table(n=200, dim=16, metric=Metric.L2, seed=0):
    rng = np.random.default_rng(seed)
    table = VectorTable("test", dim, metric)
    for i in range(n):
        table.insert(f"row{i:05d}", rng.normal(size=dim))
    return table, rng


class TestVectorTable:
    def test_insert_get_identity(self):
        table = VectorTable("t", 4, Metric.L2)
        vec = np.array([1.5, -2.25, 0.125, 7.0], dtype=np.float32)
        table.insert("a", vec)
        assert np.array_equal(table.get("a"), vec)

    def test_duplicate_id(self):
        table = VectorTable("t", 2, Metric.L2)
        table.insert("a", [0, 0])
        with pytest.raises(DuplicateId):
            table.insert("a", [1, 1])

    def test_dimension_mismatch(self):
        table = VectorTable("t", 3, Metric.L2)
        with pytest.raises(DimensionMismatch):
            table.insert("a", [1, 2])

    def test_persistence_round_trip(self, tmp_path):
        table, _ = make_table(n=1000, dim=8, seed=3)
        path = tmp_path / "t.tbl"
        table.save(path)
        loaded = VectorTable.load(path, "test")
        assert len(loaded) == 1000
        for row_id in ["row00000", "row00500", "row00999"]:
            assert np.array_equal(loaded.get(row_id), table.get(row_id))
        assert loaded.ids == table.ids

    def test_knn_exact_self_query(self):
        table, _ = make_table(n=50, dim=8, seed=1)
        q = table.get("row00007")
        result = table.knn_exact(q, 3)
        assert result.hits[0][0] == "row00007"
        assert result.hits[0][1] == pytest.approx(0.0, abs=1e-6)

    def test_k_larger_than_table(self):
        table, _ = make_table(n=5, dim=4, seed=2)
        assert len(table.knn_exact(np.zeros(4), 50).hits) == 5

    def test_matches_brute_force(self):
        table, rng = make_table(n=300, dim=12, seed=4)
        rows = [table.get(i) for i in table.ids]
        for _ in range(10):
            q = rng.normal(size=12)
            expect = brute_force_knn(rows, table.ids, q, 7)
            got = table.knn_exact(q, 7).hits
            assert [r for r, _ in got] == [r for r, _ in expect]
            np.testing.assert_allclose([d for _, d in got], [d for _, d in expect], atol=1e-9)


class TestDistances:
    def test_identity(self):
        x = np.array([1.0, 2.0, 3.0])
        assert distance(Metric.L2, x, x) == 0.0

    def test_cosine_scale_invariant(self):
        x = np.array([0.3, -0.5, 2.0])
        assert distance(Metric.COSINE, x, 2 * x) == pytest.approx(0.0, abs=1e-12)

    def test_cosine_zero_vector(self):
        assert distance(Metric.COSINE, np.zeros(3), np.ones(3)) == 1.0

    def test_chi_squared_formula_oracle(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(0, 1, 20)
        b = rng.uniform(0, 1, 20)
        expected = 0.5 * sum((x - y) ** 2 / (x + y + 1e-10) for x, y in zip(a, b))
        assert distance(Metric.CHISQUARED, a, b) == pytest.approx(expected, abs=1e-12)

    def test_chi_squared_negative(self):
        with pytest.raises(NegativeComponent):
            distance(Metric.CHISQUARED, [-0.1, 0.2], [0.1, 0.2])


class TestVAFile:
    @pytest.mark.parametrize("metric", [Metric.L2, Metric.L1])
    def test_equals_exact(self, metric):
        table, rng = make_table(n=400, dim=10, metric=metric, seed=6)
        index = VAFileIndex(table)
        index.build()
        for _ in range(20):
            q = rng.normal(size=10)
            exact = table.knn_exact(q, 9).hits
            approx = index.knn(q, 9).hits
            assert [r for r, _ in approx] == [r for r, _ in exact]

    def test_prunes_candidates(self):
        table, rng = make_table(n=1000, dim=8, seed=7)
        index = VAFileIndex(table)
        index.build()
        result = index.knn(rng.normal(size=8), 10)
        assert result.candidates_examined <= len(table)

    def test_one_bit_degenerate(self):
        table, rng = make_table(n=100, dim=6, seed=8)
        index = VAFileIndex(table, bits_per_dim=1)
        index.build()
        for _ in range(10):
            q = rng.normal(size=6)
            assert index.knn(q, 5).ids() == table.knn_exact(q, 5).ids()

    def test_stale_after_insert(self):
        table, _ = make_table(n=10, dim=4, seed=9)
        index = VAFileIndex(table)
        index.build()
        table.insert("fresh", np.zeros(4))
        with pytest.raises(IndexStale):
            index.knn(np.zeros(4), 3)

    def test_persistence(self, tmp_path):
        table, rng = make_table(n=150, dim=5, seed=10)
        index = VAFileIndex(table)
        index.build()
        index.save(tmp_path / "t.va")
        loaded = VAFileIndex.load(tmp_path / "t.va", table)
        q = rng.normal(size=5)
        assert loaded.knn(q, 5).ids() == index.knn(q, 5).ids()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 12))
    def test_property_equals_exact(self, seed, k):
        table, rng = make_table(n=120, dim=6, seed=seed % 1000)
        index = VAFileIndex(table)
        index.build()
        q = np.random.default_rng(seed).normal(size=6) * 3
        assert index.knn(q, k).ids() == table.knn_exact(q, k).ids()


class TestLSH:
    def test_self_query_found(self):
        table, _ = make_table(n=200, dim=16, seed=11)
        index = LSHIndex(table, seed=42)
        index.build()
        q = table.get("row00050")
        result = index.knn(q, 5)
        assert result.hits[0][0] == "row00050"

    def test_sorted_and_bounded(self):
        table, rng = make_table(n=200, dim=16, seed=12)
        index = LSHIndex(table, seed=42)
        index.build()
        result = index.knn(rng.normal(size=16), 7)
        assert len(result.hits) <= 7
        dists = [d for _, d in result.hits]
        assert dists == sorted(dists)

    def test_distances_are_true_distances(self):
        table, rng = make_table(n=100, dim=8, seed=13)
        index = LSHIndex(table, seed=42)
        index.build()
        q = rng.normal(size=8)
        for row_id, d in index.knn(q, 10).hits:
            assert d == pytest.approx(float(np.linalg.norm(table.get(row_id) - q)), abs=1e-9)

    def test_clustered_recall(self):
        # 10 Gaussian clusters (sigma 0.1) with centres 10 apart
        rng = np.random.default_rng(42)
        dim = 64
        centers = rng.normal(size=(10, dim))
        centers = centers / np.linalg.norm(centers, axis=1, keepdims=True) * 10
        table = VectorTable("c", dim, Metric.L2)
        for ci, center in enumerate(centers):
            for j in range(100):
                table.insert(f"c{ci}_{j}", center + rng.normal(0, 0.1, dim))
        index = LSHIndex(table, seed=42)
        index.build()
        recalls = []
        for center in centers:
            exact = set(table.knn_exact(center, 10).ids())
            got = set(index.knn(center, 10).ids())
            recalls.append(len(exact & got) / 10)
        assert float(np.mean(recalls)) >= 0.8

    def test_deterministic_given_seed(self):
        table, rng = make_table(n=80, dim=8, seed=14)
        a = LSHIndex(table, seed=7)
        b = LSHIndex(table, seed=7)
        a.build()
        b.build()
        q = rng.normal(size=8)
        assert a.knn(q, 5).hits == b.knn(q, 5).hits


class TestFingerprintIndex:
    def test_lookup_coherent_offsets(self):
        index = FingerprintIndex()
        hashes = [(100 + 7919 * i, 10 + i) for i in range(20)]
        index.add("seg", hashes)
        query = [(100 + 7919 * i, 50 + i) for i in range(20)]  # constant offset 40
        results = index.lookup(query)
        assert results[0] == ("seg", 20)

    def test_lookup_tolerates_dt_jitter(self):
        # peak-pair spans may round one frame differently at query time
        index = FingerprintIndex()
        index.add("seg", [(100 + 7919 * i, 10 + i) for i in range(20)])
        query = [(100 + 7919 * i + (i % 3) - 1, 50 + i) for i in range(20)]
        results = index.lookup(query)
        assert results and results[0][0] == "seg"
        assert results[0][1] >= 18

    def test_no_match(self):
        index = FingerprintIndex()
        index.add("seg", [(1, 0), (2, 3)])
        assert index.lookup([(999, 0)] * 10) == []

    def test_votes_below_threshold_dropped(self):
        index = FingerprintIndex()
        index.add("seg", [(i, 0) for i in range(4)])
        assert index.lookup([(i, 5) for i in range(4)]) == []

    def test_persistence(self, tmp_path):
        index = FingerprintIndex()
        index.add("a", [(7, 1), (9, 2)])
        index.add("b", [(7, 5)])
        index.save(tmp_path / "f.fp")
        loaded = FingerprintIndex.load(tmp_path / "f.fp")
        assert loaded.postings == index.postings


class TestVectorStore:
    def test_full_round_trip(self, tmp_path):
        store = VectorStore(tmp_path / "data")
        store.create_table("feat", 4, Metric.L2)
        rng = np.random.default_rng(15)
        for i in range(50):
            store.insert("feat", f"s{i}", rng.normal(size=4))
        store.build_indexes(seed=42)
        store.fingerprints.add("s0", [(5, 2)])
        store.flush()

        reopened = VectorStore.open(tmp_path / "data")
        assert len(reopened.table("feat")) == 50
        q = store.table("feat").get("s25")
        assert reopened.knn_va("feat", q, 3).ids() == store.knn_va("feat", q, 3).ids()
        assert reopened.fingerprints.postings == store.fingerprints.postings
        assert reopened.d_max("feat") == store.d_max("feat")

    def test_dmax_positive(self, tmp_path):
        store = VectorStore(tmp_path / "d")
        store.create_table("feat", 3, Metric.L2)
        rng = np.random.default_rng(16)
        for i in range(30):
            store.insert("feat", f"r{i}", rng.normal(size=3))
        store.build_indexes()
        assert store.d_max("feat") > 0

    def test_concurrent_reads_match_serial(self, tmp_path):
        import threading

        store = VectorStore(tmp_path / "c")
        store.create_table("feat", 8, Metric.L2)
        rng = np.random.default_rng(17)
        for i in range(200):
            store.insert("feat", f"r{i:03d}", rng.normal(size=8))
        store.build_indexes()
        queries = [rng.normal(size=8) for _ in range(16)]
        serial = [store.knn_va("feat", q, 5).ids() for q in queries]

        outputs: list[list[str] | None] = [None] * len(queries)

        def worker(idx: int) -> None:
            with store.lock.read():
                outputs[idx] = store.knn_va("feat", queries[idx], 5).ids()

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(len(queries))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outputs == serial
