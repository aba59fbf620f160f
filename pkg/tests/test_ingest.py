"""Offline ingest workflow: full pipeline behaviour per media type."""

import numpy as np
import pytest

import synth
from mediaseek.catalog import SegmentKind
from mediaseek.config import Config
from mediaseek.errors import UnsupportedFormat
from mediaseek.ingest import IngestPipeline, media_type_for
from mediaseek.io import encode_png, write_wav
from mediaseek.store import VectorStore


@pytest.fixture()
def pipeline(tmp_path):
    config = Config(data_dir=str(tmp_path / "data"), bow_k=4)
    store = VectorStore(config.data_dir)
    return IngestPipeline(store, config), store, config, tmp_path


def make_video(root, n_scenes=2, frames_per_scene=8, with_audio=True):
    frames_dir = root / "frames"
    frames_dir.mkdir()
    index = 0
    for scene in range(n_scenes):
        level = 30 + scene * 180
        for _ in range(frames_per_scene):
            img = synth.solid_image(32, 32, (level, level, level))
            (frames_dir / f"f{index:04d}.png").write_bytes(encode_png(img))
            index += 1
    lines = ["fps=8", "frames=frames"]
    if with_audio:
        (root / "track.wav").write_bytes(
            write_wav(synth.melody(50, duration=12.0, timbre="rich"))
        )
        lines.append("audio=track.wav")
    manifest = root / "clip.manifest"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


class TestVideoIngest:
    def test_shots_plus_audio_windows(self, pipeline):
        pipe, store, config, tmp_path = pipeline
        manifest = make_video(tmp_path)
        report = pipe.ingest_file(manifest)
        assert report.media_type == "VIDEO"

        segments = store.catalog.segments_of(report.object_id)
        shots = [s for s in segments if s.kind == SegmentKind.SHOT]
        windows = [s for s in segments if s.kind == SegmentKind.WINDOW]
        assert len(shots) == 2          # two scenes, hard cut
        assert len(windows) == 2        # 12 s audio -> [0,10) + 3 s tail
        assert [s.sequence_number for s in segments] == list(range(len(segments)))

        # keyframe descriptors stored per shot
        hog = store.table("hog")
        for shot in shots:
            assert shot.segment_id in hog
        # audio windows contributed fingerprints
        assert store.fingerprints.hash_count > 0

    def test_video_without_audio(self, pipeline):
        pipe, store, config, tmp_path = pipeline
        manifest = make_video(tmp_path, with_audio=False)
        report = pipe.ingest_file(manifest)
        segments = store.catalog.segments_of(report.object_id)
        assert all(s.kind == SegmentKind.SHOT for s in segments)


class TestIngestInvariants:
    def test_reingest_same_bytes_same_id(self, pipeline):
        pipe, store, config, tmp_path = pipeline
        p = tmp_path / "a.png"
        p.write_bytes(encode_png(synth.shapes_image(1)))
        first = pipe.ingest_file(p)
        second = pipe.ingest_file(p)
        assert first.object_id == second.object_id
        assert len(store.catalog.segments_of(first.object_id)) == 1
        assert second.vectors == 0  # nothing re-extracted

    def test_unknown_extension(self):
        with pytest.raises(UnsupportedFormat):
            media_type_for("file.mp4")

    def test_bow_codebook_round_trip(self, pipeline):
        pipe, store, config, tmp_path = pipeline
        rng = np.random.default_rng(0)
        for seed in range(6):
            # blob-rich input so the keypoint detector has something to find
            arr = np.full((128, 128, 3), 235, dtype=np.uint8)
            yy, xx = np.mgrid[0:128, 0:128]
            for cx, cy, r in rng.integers(18, 110, (4, 3)):
                arr[(xx - cx) ** 2 + (yy - cy) ** 2 <= (r // 4 + 6) ** 2] = (
                    rng.integers(0, 60, 3)
                )
            p = tmp_path / f"img{seed}.png"
            from mediaseek.io.image_io import RasterImage

            p.write_bytes(encode_png(RasterImage(arr)))
            pipe.ingest_file(p)
        pipe.build()

        codebook = pipe.load_codebook()
        assert codebook is not None
        assert "surf_bow" in store.tables
        reopened = VectorStore.open(config.data_dir)
        assert "surf_bow.codebook" in reopened.tables
        assert np.array_equal(
            reopened.tables["surf_bow.codebook"].matrix, codebook.centroids
        )
        # bow histograms are L1-normalized or zero
        bow = reopened.tables["surf_bow"]
        for row_id in bow.ids:
            total = bow.get(row_id).sum()
            assert total == pytest.approx(1.0, abs=1e-6) or total == 0.0

    def test_mesh_lightfield_rows(self, pipeline):
        pipe, store, config, tmp_path = pipeline
        p = tmp_path / "m.obj"
        p.write_text(synth.obj_text(synth.torus_mesh()))
        report = pipe.ingest_file(p)
        lf = store.table("lightfield")
        rows = [r for r in lf.ids if r.startswith(report.object_id)]
        assert len(rows) == 10
        assert "sphharm" in store.tables
