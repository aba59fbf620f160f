"""Offline ingest workflow: decode, segment, extract, persist.

Vector row ids: single-vector categories use the segment id; multi-vector
categories append ``#<index>`` (shingles) or ``#v<view>`` (light-field
views). Segment ids never contain ``#``, so the mapping back is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mediaseek.catalog import MediaObject, MediaType, SegmentKind, object_id_for_bytes
from mediaseek.config import Config
from mediaseek.errors import InsufficientData, MediaseekError, UnsupportedFormat
from mediaseek.features import CATEGORIES
from mediaseek.features.audio import extract_audio_category, fingerprint, stft
from mediaseek.features.image import (
    Codebook,
    average_color_grid,
    bow_histogram,
    detect_local_descriptors,
    edge_histogram,
    hog_descriptor,
    train_codebook,
)
from mediaseek.features.mesh3d import lightfield_descriptor, normalize_mesh, sh_descriptor
from mediaseek.io import load_audio, load_image, load_mesh, load_video_manifest
from mediaseek.io.audio_io import AudioBuffer
from mediaseek.io.image_io import RasterImage
from mediaseek.segmentation import segment_audio_windows, segment_video_shots, trivial_segment
from mediaseek.store import Metric, VectorStore, VectorTable

LOCAL_DESCRIPTOR_TABLE = "surf_local"

_EXTENSION_TYPES = {
    ".png": MediaType.IMAGE,
    ".ppm": MediaType.IMAGE,
    ".wav": MediaType.AUDIO,
    ".obj": MediaType.MODEL_3D,
    ".manifest": MediaType.VIDEO,
    ".vmf": MediaType.VIDEO,
}

IMAGE_EXTRACTORS = {
    "average_color": average_color_grid,
    "edge_histogram": edge_histogram,
    "hog": hog_descriptor,
}


def media_type_for(path: str | Path) -> MediaType:
    suffix = Path(path).suffix.lower()
    if suffix not in _EXTENSION_TYPES:
        raise UnsupportedFormat(f"{path}: unknown extension {suffix!r}")
    return _EXTENSION_TYPES[suffix]


def keyframe_index(start: int, end: int) -> int:
    return start + (end - start) // 2


@dataclass
class IngestReport:
    object_id: str
    path: str
    media_type: str
    segments: int
    vectors: int


@dataclass
class IngestErrors:
    failures: list[tuple[str, str]] = field(default_factory=list)


class IngestPipeline:
    def __init__(self, store: VectorStore, config: Config):
        self.store = store
        self.config = config

    def _table(self, category: str, dim: int) -> VectorTable:
        metric = CATEGORIES[category].metric if category in CATEGORIES else Metric.L2
        return self.store.create_table(category, dim, metric)

    def _put(self, category: str, row_id: str, values: np.ndarray) -> int:
        self._table(category, len(values)).insert(row_id, values)
        return 1

    # -- per-type ingestion ---------------------------------------------------

    def _ingest_image_segment(self, segment_id: str, img: RasterImage) -> int:
        count = 0
        for category in self.config.image_categories:
            if category == "surf_bow":
                locals_ = detect_local_descriptors(img)
                for i, vec in enumerate(locals_):
                    count += self._put(LOCAL_DESCRIPTOR_TABLE, f"{segment_id}#{i}", vec)
            elif category in IMAGE_EXTRACTORS:
                desc = IMAGE_EXTRACTORS[category](img)
                count += self._put(category, segment_id, desc.values)
        return count

    def _ingest_audio_segments(self, audio: AudioBuffer, segments) -> int:
        count = 0
        for seg in segments:
            spec = stft(audio.slice(seg.start, seg.end))
            for category in self.config.audio_categories:
                if category == "fingerprint":
                    hashes = fingerprint(spec, seg.segment_id)
                    self.store.fingerprints.add(
                        seg.segment_id, [(h.hash, h.anchor_time) for h in hashes]
                    )
                    count += len(hashes)
                else:
                    for i, desc in enumerate(extract_audio_category(spec, category)):
                        count += self._put(category, f"{seg.segment_id}#{i}", desc.values)
        return count

    def ingest_file(self, path: str | Path) -> IngestReport:
        path = Path(path)
        data = path.read_bytes()
        object_id = object_id_for_bytes(data)
        media_type = media_type_for(path)
        obj = MediaObject(object_id, media_type, str(path), path.stem, len(data))

        if object_id in self.store.catalog.objects:
            existing = self.store.catalog.segments_of(object_id)
            return IngestReport(object_id, str(path), media_type.value, len(existing), 0)

        vectors = 0
        segments = []
        if media_type == MediaType.IMAGE:
            img = load_image(path)
            seg = trivial_segment(obj)
            segments = [seg]
            vectors += self._ingest_image_segment(seg.segment_id, img)
        elif media_type == MediaType.AUDIO:
            audio = load_audio(path)
            segments = segment_audio_windows(audio, object_id)
            vectors += self._ingest_audio_segments(audio, segments)
        elif media_type == MediaType.MODEL_3D:
            mesh = load_mesh(path)
            seg = trivial_segment(obj)
            segments = [seg]
            nm = normalize_mesh(mesh)
            if "sphharm" in self.config.mesh_categories:
                vectors += self._put("sphharm", seg.segment_id, sh_descriptor(nm).values)
            if "lightfield" in self.config.mesh_categories:
                descriptor = lightfield_descriptor(nm)
                for v, view in enumerate(descriptor.views):
                    vectors += self._put("lightfield", f"{seg.segment_id}#v{v}", view)
        elif media_type == MediaType.VIDEO:
            video = load_video_manifest(path)
            shots = segment_video_shots(video, object_id)
            segments = list(shots)
            for shot in shots:
                frame = video.frame(keyframe_index(shot.start, shot.end))
                vectors += self._ingest_image_segment(shot.segment_id, frame)
            if video.audio is not None:
                audio_segments = segment_audio_windows(
                    video.audio, object_id, first_sequence=len(shots)
                )
                segments.extend(audio_segments)
                vectors += self._ingest_audio_segments(video.audio, audio_segments)

        self.store.catalog.add_object(obj)
        for seg in segments:
            self.store.catalog.add_segment(seg)
        return IngestReport(object_id, str(path), media_type.value, len(segments), vectors)

    def ingest_paths(self, paths: list[str | Path]) -> tuple[list[IngestReport], IngestErrors]:
        """Ingest everything reachable; corrupt files are reported, not fatal."""
        reports: list[IngestReport] = []
        errors = IngestErrors()
        for path in paths:
            try:
                reports.append(self.ingest_file(path))
            except MediaseekError as exc:
                errors.failures.append((str(path), str(exc)))
        return reports, errors

    # -- offline index build --------------------------------------------------

    def build_codebook(self) -> Codebook | None:
        """Train the BoW codebook on all stored local descriptors and fill
        the surf_bow table; returns None when there is nothing to train on."""
        if LOCAL_DESCRIPTOR_TABLE not in self.store.tables:
            return None
        locals_table = self.store.tables[LOCAL_DESCRIPTOR_TABLE]
        if len(locals_table) < 2:
            return None
        k = min(self.config.bow_k, len(locals_table))
        try:
            codebook = train_codebook(
                locals_table.matrix, k, seed=self.config.seed, category="surf_bow"
            )
        except InsufficientData:
            return None

        cb_table = self.store.create_table("surf_bow.codebook", locals_table.dim, Metric.L2)
        for i, centroid in enumerate(codebook.centroids):
            row_id = f"centroid{i:05d}"
            if row_id not in cb_table:
                cb_table.insert(row_id, centroid)

        per_segment: dict[str, list[np.ndarray]] = {}
        for row_id in locals_table.ids:
            segment_id = row_id.rsplit("#", 1)[0]
            per_segment.setdefault(segment_id, []).append(locals_table.get(row_id))
        bow_table = self._table("surf_bow", codebook.k)
        for seg in self.store.catalog.segments.values():
            if seg.kind not in (SegmentKind.WHOLE, SegmentKind.SHOT):
                continue
            obj = self.store.catalog.objects.get(seg.object_id)
            if obj is None or obj.media_type == MediaType.MODEL_3D:
                continue
            if seg.segment_id in bow_table:
                continue
            hist = bow_histogram(per_segment.get(seg.segment_id, []), codebook)
            bow_table.insert(seg.segment_id, hist.values)
        return codebook

    def load_codebook(self) -> Codebook | None:
        table = self.store.tables.get("surf_bow.codebook")
        if table is None or len(table) < 2:
            return None
        return Codebook("surf_bow", table.matrix)

    def build(self) -> None:
        """Offline finishing pass: codebook, indexes, distance scales, flush."""
        with self.store.lock.write():
            if "surf_bow" in self.config.image_categories:
                self.build_codebook()
            self.store.build_indexes(seed=self.config.seed)
            self.store.flush()
