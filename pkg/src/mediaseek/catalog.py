"""Catalog entities: media objects and the segments retrieval operates on."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class MediaType(str, Enum):
    IMAGE = "IMAGE"
    AUDIO = "AUDIO"
    VIDEO = "VIDEO"
    MODEL_3D = "MODEL_3D"


class SegmentKind(str, Enum):
    WHOLE = "whole"        # image / mesh: spans the entire object
    SHOT = "shot"          # video: [start, end) in frame indices
    WINDOW = "window"      # audio: [start, end) in sample indices


def object_id_for_bytes(data: bytes) -> str:
    """Content-derived object id: hex of a 128-bit hash of the file bytes."""
    return hashlib.blake2b(data, digest_size=16).hexdigest()


def object_id_for_file(path: str | Path) -> str:
    return object_id_for_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class MediaObject:
    object_id: str
    media_type: MediaType
    path: str
    name: str
    size: int = 0


@dataclass(frozen=True)
class SegmentRecord:
    """One retrieval unit.

    ``start``/``end`` are frame indices for video shots, sample indices for
    audio windows, and 0/length for whole-object segments.
    """

    segment_id: str
    object_id: str
    sequence_number: int
    start: int
    end: int
    kind: SegmentKind = SegmentKind.WHOLE

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"segment bounds must satisfy start < end, got [{self.start}, {self.end})")


def segment_id_for(object_id: str, sequence_number: int) -> str:
    return f"{object_id}:{sequence_number}"


@dataclass
class Catalog:
    """In-memory object/segment catalog; persistence lives in the store layer."""

    objects: dict[str, MediaObject] = field(default_factory=dict)
    segments: dict[str, SegmentRecord] = field(default_factory=dict)

    def add_object(self, obj: MediaObject) -> None:
        self.objects[obj.object_id] = obj

    def add_segment(self, seg: SegmentRecord) -> None:
        self.segments[seg.segment_id] = seg

    def segments_of(self, object_id: str) -> list[SegmentRecord]:
        found = [s for s in self.segments.values() if s.object_id == object_id]
        return sorted(found, key=lambda s: s.sequence_number)

    def find_by_name(self, substring: str) -> list[MediaObject]:
        needle = substring.lower()
        return sorted(
            (o for o in self.objects.values() if needle in o.name.lower()),
            key=lambda o: o.object_id,
        )
