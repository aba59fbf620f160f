"""On-disk vector tables and the entity catalog.

Table file layout (little-endian):

    magic "VTRS" | format version u16 | metric u8 | dim u32 | row count u64
    then per row: id length u16 | id bytes (utf-8) | dim * float32

The catalog file reuses the framing with a schema id in the metric slot and
a JSON payload per row.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mediaseek.catalog import Catalog, MediaObject, MediaType, SegmentKind, SegmentRecord
from mediaseek.errors import CorruptFile, DimensionMismatch, DuplicateId
from mediaseek.store.distances import Metric, distances_to_rows

MAGIC = b"VTRS"
FORMAT_VERSION = 1
CATALOG_SCHEMA = 0xC1


@dataclass
class KnnResult:
    """Nearest rows sorted ascending by (distance, row_id)."""

    hits: list[tuple[str, float]]
    candidates_examined: int = 0

    def ids(self) -> list[str]:
        return [row_id for row_id, _ in self.hits]


class VectorTable:
    def __init__(self, category: str, dim: int, metric: Metric):
        self.category = category
        self.dim = int(dim)
        self.metric = Metric(metric)
        self.ids: list[str] = []
        self._index_of: dict[str, int] = {}
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None
        self.mutation_count = 0

    def __len__(self) -> int:
        return len(self.ids)

    def insert(self, row_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32).reshape(-1)
        if len(vec) != self.dim:
            raise DimensionMismatch(f"{self.category}: expected dim {self.dim}, got {len(vec)}")
        if row_id in self._index_of:
            raise DuplicateId(f"{self.category}: row {row_id!r} already present")
        self._index_of[row_id] = len(self.ids)
        self.ids.append(row_id)
        self._rows.append(vec)
        self._matrix = None
        self.mutation_count += 1

    def get(self, row_id: str) -> np.ndarray:
        return self._rows[self._index_of[row_id]].copy()

    def __contains__(self, row_id: str) -> bool:
        return row_id in self._index_of

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._rows:
                self._matrix = np.vstack(self._rows).astype(np.float64)
            else:
                self._matrix = np.zeros((0, self.dim), dtype=np.float64)
        return self._matrix

    def knn_exact(self, query: np.ndarray, k: int) -> KnnResult:
        """True k nearest rows by full scan; ties broken by row id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.ids:
            return KnnResult([], 0)
        dists = distances_to_rows(self.metric, self.matrix, query)
        order = sorted(range(len(dists)), key=lambda i: (dists[i], self.ids[i]))[:k]
        return KnnResult([(self.ids[i], float(dists[i])) for i in order], len(dists))

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HBIQ", FORMAT_VERSION, int(self.metric), self.dim, len(self.ids)))
            for row_id, vec in zip(self.ids, self._rows):
                encoded = row_id.encode("utf-8")
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
                fh.write(vec.astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path, category: str) -> "VectorTable":
        data = Path(path).read_bytes()
        if data[:4] != MAGIC:
            raise CorruptFile(f"{path}: bad table magic")
        version, metric, dim, count = struct.unpack_from("<HBIQ", data, 4)
        if version != FORMAT_VERSION:
            raise CorruptFile(f"{path}: unsupported format version {version}")
        table = cls(category, dim, Metric(metric))
        pos = 4 + struct.calcsize("<HBIQ")
        for _ in range(count):
            if pos + 2 > len(data):
                raise CorruptFile(f"{path}: truncated row header")
            (id_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            row_id = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            end = pos + dim * 4
            if end > len(data):
                raise CorruptFile(f"{path}: truncated row payload")
            vec = np.frombuffer(data[pos:end], dtype="<f4").copy()
            pos = end
            table._index_of[row_id] = len(table.ids)
            table.ids.append(row_id)
            table._rows.append(vec)
        table.mutation_count = 0
        return table


@dataclass
class CatalogCodec:
    """Serializes the object/segment catalog in the table-file framing."""

    @staticmethod
    def save(catalog: Catalog, path: str | Path) -> None:
        entries: list[tuple[str, dict]] = []
        for obj in catalog.objects.values():
            entries.append((obj.object_id, {
                "entity": "object",
                "media_type": obj.media_type.value,
                "path": obj.path,
                "name": obj.name,
                "size": obj.size,
            }))
        for seg in catalog.segments.values():
            entries.append((seg.segment_id, {
                "entity": "segment",
                "object_id": seg.object_id,
                "sequence_number": seg.sequence_number,
                "start": seg.start,
                "end": seg.end,
                "kind": seg.kind.value,
            }))
        entries.sort(key=lambda e: (e[1]["entity"], e[0]))
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HBIQ", FORMAT_VERSION, CATALOG_SCHEMA, 0, len(entries)))
            for row_id, payload in entries:
                encoded = row_id.encode("utf-8")
                body = json.dumps(payload, sort_keys=True).encode("utf-8")
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<I", len(body)))
                fh.write(body)

    @staticmethod
    def load(path: str | Path) -> Catalog:
        data = Path(path).read_bytes()
        if data[:4] != MAGIC:
            raise CorruptFile(f"{path}: bad catalog magic")
        version, schema, _, count = struct.unpack_from("<HBIQ", data, 4)
        if version != FORMAT_VERSION or schema != CATALOG_SCHEMA:
            raise CorruptFile(f"{path}: not a catalog file")
        catalog = Catalog()
        pos = 4 + struct.calcsize("<HBIQ")
        for _ in range(count):
            (id_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            row_id = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            (body_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            payload = json.loads(data[pos : pos + body_len].decode("utf-8"))
            pos += body_len
            if payload["entity"] == "object":
                catalog.add_object(MediaObject(
                    object_id=row_id,
                    media_type=MediaType(payload["media_type"]),
                    path=payload["path"],
                    name=payload["name"],
                    size=payload["size"],
                ))
            else:
                catalog.add_segment(SegmentRecord(
                    segment_id=row_id,
                    object_id=payload["object_id"],
                    sequence_number=payload["sequence_number"],
                    start=payload["start"],
                    end=payload["end"],
                    kind=SegmentKind(payload["kind"]),
                ))
        return catalog
