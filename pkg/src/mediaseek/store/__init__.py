"""Persistence facade: catalog, vector tables, indexes, fingerprints.

One :class:`VectorStore` owns a data directory:

    data_dir/
      catalog.bin            object + segment entities
      tables/<category>.tbl  vector tables (see table.py for the format)
      tables/<category>.tbl.va / .tbl.lsh   index sidecars
      fingerprints.fp        inverted constellation-hash index
      stats.json             per-category distance scale (d_max) + seeds

Concurrency contract: many readers or one writer. Index builds and ingest
run under the writer lock; queries take the reader lock.
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from mediaseek.catalog import Catalog
from mediaseek.errors import UnknownCategory
from mediaseek.store.distances import Metric, distance, distances_to_rows
from mediaseek.store.fingerprints import FingerprintIndex
from mediaseek.store.lsh import LSHIndex
from mediaseek.store.table import CatalogCodec, KnnResult, VectorTable
from mediaseek.store.vafile import VAFileIndex

__all__ = [
    "FingerprintIndex",
    "KnnResult",
    "LSHIndex",
    "Metric",
    "VAFileIndex",
    "VectorStore",
    "VectorTable",
    "distance",
    "distances_to_rows",
]

DMAX_SAMPLE_PAIRS = 1000


class _RWLock:
    """Many readers / single writer; writers wait for readers to drain."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class VectorStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.tables: dict[str, VectorTable] = {}
        self.va_indexes: dict[str, VAFileIndex] = {}
        self.lsh_indexes: dict[str, LSHIndex] = {}
        self.fingerprints = FingerprintIndex()
        self.catalog = Catalog()
        self.stats: dict[str, dict] = {}
        self.lock = _RWLock()

    # -- tables --------------------------------------------------------------

    def create_table(self, category: str, dim: int, metric: Metric) -> VectorTable:
        if category not in self.tables:
            self.tables[category] = VectorTable(category, dim, metric)
        return self.tables[category]

    def table(self, category: str) -> VectorTable:
        if category not in self.tables:
            raise UnknownCategory(f"no table for category {category!r}")
        return self.tables[category]

    def insert(self, category: str, row_id: str, vector: np.ndarray) -> None:
        self.table(category).insert(row_id, vector)

    # -- search --------------------------------------------------------------

    def knn_exact(self, category: str, query: np.ndarray, k: int) -> KnnResult:
        return self.table(category).knn_exact(query, k)

    def knn_va(self, category: str, query: np.ndarray, k: int) -> KnnResult:
        return self.va_indexes[category].knn(query, k)

    def knn_lsh(self, category: str, query: np.ndarray, k: int) -> KnnResult:
        return self.lsh_indexes[category].knn(query, k)

    def knn(self, category: str, query: np.ndarray, k: int) -> KnnResult:
        """VA-backed search when a fresh index exists, exact scan otherwise."""
        index = self.va_indexes.get(category)
        if index is not None and not index.stale:
            return index.knn(query, k)
        return self.knn_exact(category, query, k)

    # -- index lifecycle -----------------------------------------------------

    def build_indexes(self, seed: int = 42) -> None:
        for category, table in self.tables.items():
            if len(table) == 0:
                continue
            if table.metric in (Metric.L2, Metric.L1):
                index = VAFileIndex(table)
                index.build()
                self.va_indexes[category] = index
            if table.metric == Metric.L2:
                lsh = LSHIndex(table, seed=seed)
                lsh.build()
                self.lsh_indexes[category] = lsh
            self.stats[category] = {
                "d_max": self._sample_dmax(table, seed),
                "seed": seed,
            }

    def _sample_dmax(self, table: VectorTable, seed: int) -> float:
        """Distance scale: 95th percentile of sampled pairwise distances."""
        n = len(table)
        if n < 2:
            return 1.0
        rng = np.random.default_rng(seed)
        a = rng.integers(0, n, DMAX_SAMPLE_PAIRS)
        b = rng.integers(0, n, DMAX_SAMPLE_PAIRS)
        keep = a != b
        if not keep.any():
            return 1.0
        dists = [
            distance(table.metric, table.matrix[i], table.matrix[j])
            for i, j in zip(a[keep], b[keep])
        ]
        p95 = float(np.percentile(dists, 95))
        return p95 if p95 > 0 else 1.0

    def d_max(self, category: str) -> float:
        entry = self.stats.get(category)
        return float(entry["d_max"]) if entry else 1.0

    # -- persistence ---------------------------------------------------------

    def flush(self) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        tables_dir = self.data_dir / "tables"
        tables_dir.mkdir(exist_ok=True)
        CatalogCodec.save(self.catalog, self.data_dir / "catalog.bin")
        for category, table in self.tables.items():
            table.save(tables_dir / f"{category}.tbl")
        for category, index in self.va_indexes.items():
            index.save(tables_dir / f"{category}.tbl.va")
        for category, index in self.lsh_indexes.items():
            index.save(tables_dir / f"{category}.tbl.lsh")
        self.fingerprints.save(self.data_dir / "fingerprints.fp")
        (self.data_dir / "stats.json").write_text(json.dumps(self.stats, indent=2, sort_keys=True))

    @classmethod
    def open(cls, data_dir: str | Path) -> "VectorStore":
        store = cls(data_dir)
        catalog_path = store.data_dir / "catalog.bin"
        if catalog_path.exists():
            store.catalog = CatalogCodec.load(catalog_path)
        tables_dir = store.data_dir / "tables"
        if tables_dir.is_dir():
            for path in sorted(tables_dir.glob("*.tbl")):
                category = path.stem
                table = VectorTable.load(path, category)
                store.tables[category] = table
                va_path = path.with_suffix(".tbl.va")
                if va_path.exists():
                    store.va_indexes[category] = VAFileIndex.load(va_path, table)
                lsh_path = path.with_suffix(".tbl.lsh")
                if lsh_path.exists():
                    store.lsh_indexes[category] = LSHIndex.load(lsh_path, table)
        fp_path = store.data_dir / "fingerprints.fp"
        if fp_path.exists():
            store.fingerprints = FingerprintIndex.load(fp_path)
        stats_path = store.data_dir / "stats.json"
        if stats_path.exists():
            store.stats = json.loads(stats_path.read_text())
        return store
