"""Inverted index over constellation fingerprint hashes.

Matching is offset-coherence voting: a query hash that also occurs in the
index casts a vote for (segment, query_anchor - stored_anchor); the score of
a segment is the size of its largest offset bin.
"""

from __future__ import annotations

import struct
from pathlib import Path

from mediaseek.errors import CorruptFile

FP_MAGIC = b"VTFP"
OFFSET_BIN = 3     # frames per offset-histogram bin
MIN_VOTES = 5


class FingerprintIndex:
    def __init__(self) -> None:
        self.postings: dict[int, list[tuple[str, int]]] = {}
        self.hash_count = 0

    def add(self, segment_id: str, hashes: list[tuple[int, int]]) -> None:
        """Insert (hash, anchor_time) pairs for one segment."""
        for hash_value, anchor in hashes:
            self.postings.setdefault(hash_value, []).append((segment_id, anchor))
            self.hash_count += 1
        for hash_value, _ in hashes:
            self.postings[hash_value].sort()

    def lookup(self, query_hashes: list[tuple[int, int]]) -> list[tuple[str, int]]:
        """Segments sorted by descending offset-coherent votes (>= MIN_VOTES).

        Each query hash also probes the dt +/- 1 variants: a query excerpt
        rarely starts on a frame boundary, so peak-pair spans may round one
        frame differently than they did at index time."""
        bins: dict[str, dict[int, int]] = {}
        for hash_value, query_anchor in query_hashes:
            dt = hash_value & 0xFFF
            probes = {hash_value}
            if dt > 1:
                probes.add(hash_value - 1)
            if dt < 0xFFF:
                probes.add(hash_value + 1)
            matched: set[tuple[str, int]] = set()
            for probe in probes:
                matched.update(self.postings.get(probe, ()))
            for segment_id, stored_anchor in matched:
                offset_bin = (query_anchor - stored_anchor) // OFFSET_BIN
                seg_bins = bins.setdefault(segment_id, {})
                seg_bins[offset_bin] = seg_bins.get(offset_bin, 0) + 1
        votes = [
            (segment_id, max(seg_bins.values()))
            for segment_id, seg_bins in bins.items()
        ]
        votes = [(s, v) for s, v in votes if v >= MIN_VOTES]
        votes.sort(key=lambda sv: (-sv[1], sv[0]))
        return votes

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(FP_MAGIC)
            fh.write(struct.pack("<HQ", 1, len(self.postings)))
            for hash_value in sorted(self.postings):
                entries = self.postings[hash_value]
                fh.write(struct.pack("<II", hash_value, len(entries)))
                for segment_id, anchor in entries:
                    encoded = segment_id.encode("utf-8")
                    fh.write(struct.pack("<H", len(encoded)))
                    fh.write(encoded)
                    fh.write(struct.pack("<I", anchor))

    @classmethod
    def load(cls, path: str | Path) -> "FingerprintIndex":
        data = Path(path).read_bytes()
        if data[:4] != FP_MAGIC:
            raise CorruptFile(f"{path}: bad fingerprint index magic")
        _, bucket_count = struct.unpack_from("<HQ", data, 4)
        index = cls()
        pos = 4 + struct.calcsize("<HQ")
        for _ in range(bucket_count):
            hash_value, entry_count = struct.unpack_from("<II", data, pos)
            pos += 8
            entries = []
            for _ in range(entry_count):
                (id_len,) = struct.unpack_from("<H", data, pos)
                pos += 2
                segment_id = data[pos : pos + id_len].decode("utf-8")
                pos += id_len
                (anchor,) = struct.unpack_from("<I", data, pos)
                pos += 4
                entries.append((segment_id, anchor))
            index.postings[hash_value] = entries
            index.hash_count += entry_count
        return index
