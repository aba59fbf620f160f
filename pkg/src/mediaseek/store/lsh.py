"""Locality-sensitive hashing for approximate L2 kNN.

Classic p-stable scheme: ``h(v) = floor((a.v + b) / w)`` with Gaussian
``a``; ``k`` such hashes form one table key and ``L`` independent tables
are unioned at query time. Candidates are re-ranked by true distance, so
every reported distance is exact even though neighbours can be missed.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from mediaseek.errors import CorruptFile, IndexStale
from mediaseek.store.distances import Metric, distances_to_rows
from mediaseek.store.table import KnnResult, VectorTable

LSH_MAGIC = b"LSH1"
DEFAULT_TABLES = 8
DEFAULT_HASHES = 8
DEFAULT_WIDTH = 4.0


class LSHIndex:
    def __init__(
        self,
        table: VectorTable,
        n_tables: int = DEFAULT_TABLES,
        n_hashes: int = DEFAULT_HASHES,
        width: float = DEFAULT_WIDTH,
        seed: int = 42,
    ):
        if table.metric != Metric.L2:
            raise ValueError("LSH index supports L2 tables only")
        self.table = table
        self.n_tables = n_tables
        self.n_hashes = n_hashes
        self.width = width
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.projections = rng.normal(0.0, 1.0, (n_tables, n_hashes, table.dim))
        self.offsets = rng.uniform(0.0, width, (n_tables, n_hashes))
        self.buckets: list[dict[tuple[int, ...], list[int]]] = []
        self.built_mutation = -1

    def _keys(self, vector: np.ndarray) -> list[tuple[int, ...]]:
        hashes = np.floor((self.projections @ vector + self.offsets) / self.width).astype(np.int64)
        return [tuple(int(h) for h in hashes[t]) for t in range(self.n_tables)]

    def build(self) -> None:
        self.buckets = [{} for _ in range(self.n_tables)]
        for i in range(len(self.table)):
            for t, key in enumerate(self._keys(self.table.matrix[i])):
                self.buckets[t].setdefault(key, []).append(i)
        self.built_mutation = self.table.mutation_count

    @property
    def stale(self) -> bool:
        return self.built_mutation != self.table.mutation_count

    def knn(self, query: np.ndarray, k: int) -> KnnResult:
        if self.stale:
            raise IndexStale(f"{self.table.category}: LSH index built before last insert")
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        candidates: set[int] = set()
        for t, key in enumerate(self._keys(query)):
            candidates.update(self.buckets[t].get(key, ()))
        if not candidates:
            return KnnResult([], 0)
        idx = sorted(candidates)
        dists = distances_to_rows(Metric.L2, self.table.matrix[idx], query)
        ranked = sorted(zip(dists, (self.table.ids[i] for i in idx)))[:k]
        return KnnResult([(row_id, float(d)) for d, row_id in ranked], len(idx))

    # -- persistence: parameters + seed; buckets rebuild deterministically ---

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(LSH_MAGIC)
            fh.write(struct.pack("<HIIdqQ", 1, self.n_tables, self.n_hashes,
                                 self.width, self.seed, len(self.table)))

    @classmethod
    def load(cls, path: str | Path, table: VectorTable) -> "LSHIndex":
        data = Path(path).read_bytes()
        if data[:4] != LSH_MAGIC:
            raise CorruptFile(f"{path}: bad LSH index magic")
        _, n_tables, n_hashes, width, seed, count = struct.unpack_from("<HIIdqQ", data, 4)
        index = cls(table, n_tables, n_hashes, width, seed)
        if count == len(table):
            index.build()
        return index
