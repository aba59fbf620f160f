"""Vector-approximation file: exact kNN with signature-based pruning.

Per-dimension equi-width partitions over the observed min/max give each row
a small cell signature. At query time a lower bound on the true distance is
computed from signatures alone; rows are refined in lower-bound order and
the scan stops once no remaining lower bound can beat the current k-th best
true distance, which makes the result identical to an exhaustive scan.
"""

from __future__ import annotations

import heapq
import struct
from pathlib import Path

import numpy as np

from mediaseek.errors import CorruptFile, IndexStale
from mediaseek.store.distances import Metric, distance
from mediaseek.store.table import KnnResult, VectorTable

VA_MAGIC = b"VAF1"
DEFAULT_BITS = 6


class VAFileIndex:
    def __init__(self, table: VectorTable, bits_per_dim: int = DEFAULT_BITS):
        if table.metric not in (Metric.L2, Metric.L1):
            raise ValueError("VA-file supports L2 and L1 tables only")
        if not 1 <= bits_per_dim <= 8:
            raise ValueError("bits_per_dim must be in [1, 8]")
        self.table = table
        self.bits_per_dim = bits_per_dim
        self.partitions = 1 << bits_per_dim
        self.mins: np.ndarray | None = None
        self.widths: np.ndarray | None = None
        self.cells: np.ndarray | None = None  # uint8 (rows, dim)
        self.built_mutation = -1

    def build(self) -> None:
        matrix = self.table.matrix
        self.mins = matrix.min(axis=0) if len(matrix) else np.zeros(self.table.dim)
        maxs = matrix.max(axis=0) if len(matrix) else np.ones(self.table.dim)
        widths = (maxs - self.mins) / self.partitions
        widths[widths <= 0] = 1.0  # constant dimension: everything in cell 0
        self.widths = widths
        self.cells = self._cells_for(matrix)
        self.built_mutation = self.table.mutation_count

    def _cells_for(self, matrix: np.ndarray) -> np.ndarray:
        raw = np.floor((matrix - self.mins) / self.widths).astype(np.int64)
        return np.clip(raw, 0, self.partitions - 1).astype(np.uint8)

    @property
    def stale(self) -> bool:
        return self.built_mutation != self.table.mutation_count

    def _bound_tables(self, query: np.ndarray) -> np.ndarray:
        """Per-dimension lower-bound contribution for every possible cell."""
        dim = self.table.dim
        parts = self.partitions
        lower_edges = self.mins[:, None] + self.widths[:, None] * np.arange(parts)[None, :]
        upper_edges = lower_edges + self.widths[:, None]
        q = query[:, None]
        below = np.maximum(q - upper_edges, 0.0)   # query above the cell
        above = np.maximum(lower_edges - q, 0.0)   # query below the cell
        gap = np.maximum(below, above)             # 0 when query falls in the cell
        if self.table.metric == Metric.L2:
            return gap * gap
        return gap

    def knn(self, query: np.ndarray, k: int) -> KnnResult:
        if self.stale:
            raise IndexStale(f"{self.table.category}: VA index built before last insert")
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if len(query) != self.table.dim:
            raise CorruptFile(f"query dim {len(query)} != table dim {self.table.dim}")
        n = len(self.table)
        if n == 0:
            return KnnResult([], 0)

        contrib = self._bound_tables(query)  # (dim, partitions)
        lb = np.zeros(n)
        for d in range(self.table.dim):
            lb += contrib[d][self.cells[:, d]]
        if self.table.metric == Metric.L2:
            lb = np.sqrt(lb)

        order = np.argsort(lb, kind="stable")
        worst: list[float] = []  # max-heap via negation: k best true distances
        examined: list[tuple[float, str]] = []
        for idx in order:
            i = int(idx)
            if len(worst) >= k and lb[i] > -worst[0]:
                break
            d = distance(self.table.metric, self.table.matrix[i], query)
            examined.append((d, self.table.ids[i]))
            if len(worst) < k:
                heapq.heappush(worst, -d)
            elif d < -worst[0]:
                heapq.heapreplace(worst, -d)
        examined.sort()
        return KnnResult([(row_id, dist) for dist, row_id in examined[:k]], len(examined))

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(VA_MAGIC)
            fh.write(struct.pack("<HBIQ", 1, self.bits_per_dim, self.table.dim, len(self.table)))
            fh.write(self.mins.astype("<f8").tobytes())
            fh.write(self.widths.astype("<f8").tobytes())
            fh.write(self.cells.tobytes())

    @classmethod
    def load(cls, path: str | Path, table: VectorTable) -> "VAFileIndex":
        data = Path(path).read_bytes()
        if data[:4] != VA_MAGIC:
            raise CorruptFile(f"{path}: bad VA index magic")
        _, bits, dim, count = struct.unpack_from("<HBIQ", data, 4)
        if dim != table.dim:
            raise CorruptFile(f"{path}: dim mismatch with table")
        index = cls(table, bits)
        pos = 4 + struct.calcsize("<HBIQ")
        index.mins = np.frombuffer(data, dtype="<f8", count=dim, offset=pos).copy()
        pos += dim * 8
        index.widths = np.frombuffer(data, dtype="<f8", count=dim, offset=pos).copy()
        pos += dim * 8
        index.cells = np.frombuffer(data, dtype=np.uint8, count=count * dim, offset=pos).copy().reshape(count, dim)
        index.built_mutation = table.mutation_count if count == len(table) else -1
        return index
