"""Decoder tests: PPM/PNG images, PCM WAV audio, OBJ meshes, video manifests."""

import io

import numpy as np
import pytest
from PIL import Image

import synth
from mediaseek.catalog import object_id_for_bytes, object_id_for_file
from mediaseek.errors import CorruptFile, MissingFrame, UnsupportedFormat
from mediaseek.io import (
    encode_png,
    load_audio,
    load_image,
    load_mesh,
    load_video_manifest,
    write_wav,
)
from mediaseek.io.image_io import RasterImage


class TestPpm:
    def test_all_zero_payload(self, tmp_path):
        p = tmp_path / "black.ppm"
        p.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        img = load_image(p)
        assert (img.width, img.height) == (2, 2)
        assert not img.array.any()

    def test_header_arithmetic(self, tmp_path):
        p = tmp_path / "wide.ppm"
        p.write_bytes(b"P6 3 2 255\n" + bytes(18))
        img = load_image(p)
        assert (img.width, img.height) == (3, 2)

    def test_comments_and_values(self, tmp_path):
        arr = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        p = tmp_path / "c.ppm"
        p.write_bytes(b"P6\n# comment line\n4 2\n255\n" + arr.tobytes())
        assert np.array_equal(load_image(p).array, arr)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "short.ppm"
        p.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(CorruptFile):
            load_image(p)

    def test_ascii_ppm_rejected(self, tmp_path):
        p = tmp_path / "ascii.ppm"
        p.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(UnsupportedFormat):
            load_image(p)

    def test_sixteen_bit_truncates_to_high_byte(self, tmp_path):
        # one pixel, samples 0x1234 0x00ff 0xff00 -> high bytes 0x12 0x00 0xff
        p = tmp_path / "deep.ppm"
        p.write_bytes(b"P6\n1 1\n65535\n" + bytes([0x12, 0x34, 0x00, 0xFF, 0xFF, 0x00]))
        assert load_image(p).array.reshape(-1).tolist() == [0x12, 0x00, 0xFF]


class TestPng:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_reference_encoder_round_trip(self, tmp_path, seed):
        # Oracle: Pillow is the reference codec; our decoder must reproduce
        # its pixel bytes exactly.
        arr = synth.random_image(seed, 37, 23).array
        p = tmp_path / "ref.png"
        Image.fromarray(arr, "RGB").save(p, optimize=True)
        assert np.array_equal(load_image(p).array, arr)

    def test_reference_round_trip_all_filters(self, tmp_path):
        # A smooth gradient pushes Pillow's adaptive filtering through
        # Sub/Up/Average/Paeth rows.
        g = np.add.outer(np.arange(64), np.arange(64)) * 2
        arr = np.dstack([g, g // 2, 255 - g]).astype(np.uint8)
        p = tmp_path / "grad.png"
        Image.fromarray(arr, "RGB").save(p)
        assert np.array_equal(load_image(p).array, arr)

    def test_grayscale_and_rgba(self, tmp_path):
        gray = (np.arange(64, dtype=np.uint8).reshape(8, 8) * 3).astype(np.uint8)
        p = tmp_path / "gray.png"
        Image.fromarray(gray, "L").save(p)
        img = load_image(p)
        assert np.array_equal(img.array[:, :, 0], gray)
        assert np.array_equal(img.array[:, :, 0], img.array[:, :, 2])

        rgba = np.zeros((4, 4, 4), dtype=np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 7
        p2 = tmp_path / "rgba.png"
        Image.fromarray(rgba, "RGBA").save(p2)
        out = load_image(p2)
        assert (out.array[..., 0] == 200).all()

    def test_palette_png(self, tmp_path):
        arr = synth.random_image(9, 16, 16).array
        p = tmp_path / "pal.png"
        Image.fromarray(arr, "RGB").convert("P", palette=Image.ADAPTIVE).save(p)
        expected = np.array(Image.open(p).convert("RGB"))
        assert np.array_equal(load_image(p).array, expected)

    def test_sixteen_bit_truncation(self, tmp_path):
        high = np.array([[[10, 200, 0]]], dtype=np.uint8)
        low = np.array([[[255, 1, 128]]], dtype=np.uint8)
        p = tmp_path / "deep.png"
        p.write_bytes(synth.png16_bytes(high, low))
        assert np.array_equal(load_image(p).array, high)

    def test_own_encoder_decodes_in_reference(self, tmp_path):
        arr = synth.random_image(4, 31, 17).array
        data = encode_png(RasterImage(arr))
        assert np.array_equal(np.array(Image.open(io.BytesIO(data)).convert("RGB")), arr)

    def test_bad_crc(self, tmp_path):
        arr = synth.random_image(5, 8, 8).array
        data = bytearray(encode_png(RasterImage(arr)))
        data[20] ^= 0xFF  # flip a byte inside IHDR
        p = tmp_path / "broken.png"
        p.write_bytes(bytes(data))
        with pytest.raises(CorruptFile):
            load_image(p)

    def test_truncated(self, tmp_path):
        data = encode_png(synth.random_image(6, 8, 8))
        p = tmp_path / "trunc.png"
        p.write_bytes(data[: len(data) // 2])
        with pytest.raises(CorruptFile):
            load_image(p)

    def test_unknown_extension_content(self, tmp_path):
        p = tmp_path / "who.dat"
        p.write_bytes(b"\x00\x01\x02\x03 garbage")
        with pytest.raises(UnsupportedFormat):
            load_image(p)

    def test_decode_deterministic(self, tmp_path):
        arr = synth.random_image(7, 20, 20).array
        p = tmp_path / "d.png"
        Image.fromarray(arr, "RGB").save(p)
        a = load_image(p)
        b = load_image(p)
        assert np.array_equal(a.array, b.array)


class TestWav:
    def test_mono_zeros(self, tmp_path):
        p = tmp_path / "z.wav"
        p.write_bytes(synth.wav_bytes(np.zeros(22050)))
        buf = load_audio(p)
        assert buf.sample_rate == 22050
        assert len(buf.samples) == 22050
        assert not buf.samples.any()

    def test_resample_length(self, tmp_path):
        n = 44100 + 13
        p = tmp_path / "hi.wav"
        p.write_bytes(synth.wav_bytes(np.zeros(n), rate=44100))
        assert len(load_audio(p).samples) == round(n * 22050 / 44100)

    def test_stereo_cancellation(self, tmp_path):
        left = np.full(1000, 0.5)
        right = np.full(1000, -0.5)
        interleaved = np.stack([left, right], axis=1)
        p = tmp_path / "s.wav"
        p.write_bytes(synth.wav_bytes(interleaved, channels=2))
        buf = load_audio(p)
        assert np.allclose(buf.samples, 0.0, atol=1 / 32768)

    def test_non_pcm_rejected(self, tmp_path):
        data = bytearray(synth.wav_bytes(np.zeros(100)))
        data[20] = 3  # IEEE float format code
        p = tmp_path / "f.wav"
        p.write_bytes(bytes(data))
        with pytest.raises(UnsupportedFormat):
            load_audio(p)

    def test_not_riff(self, tmp_path):
        p = tmp_path / "x.wav"
        p.write_bytes(b"OggS" + bytes(100))
        with pytest.raises(UnsupportedFormat):
            load_audio(p)

    def test_load_save_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        samples = rng.uniform(-0.9, 0.9, 5000)
        p = tmp_path / "r.wav"
        p.write_bytes(write_wav(samples))
        out = load_audio(p).samples
        assert len(out) == len(samples)
        assert np.abs(out - samples).max() <= 1 / 32768


class TestObj:
    def test_single_triangle(self, tmp_path):
        p = tmp_path / "t.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        mesh = load_mesh(p)
        assert len(mesh.vertices) == 3
        assert len(mesh.faces) == 1
        assert mesh.faces[0].tolist() == [0, 1, 2]

    def test_quad_fan(self, tmp_path):
        p = tmp_path / "q.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = load_mesh(p)
        assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]

    def test_unit_cube(self, tmp_path):
        p = tmp_path / "cube.obj"
        p.write_text(synth.obj_text(synth.box_mesh()).replace("f ", "f "))
        mesh = load_mesh(p)
        assert len(mesh.faces) == 12

    def test_slash_indices_and_comments(self, tmp_path):
        p = tmp_path / "s.obj"
        p.write_text("# hi\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n")
        assert len(load_mesh(p).faces) == 1

    def test_bad_index(self, tmp_path):
        p = tmp_path / "b.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n")
        with pytest.raises(CorruptFile):
            load_mesh(p)


class TestManifest:
    def _make_video(self, tmp_path, n_frames=30, fps=10.0, audio=False, skip=None):
        frames = tmp_path / "frames"
        frames.mkdir()
        for i in range(n_frames):
            if i == skip:
                continue
            arr = synth.solid_image(8, 8, (i * 8 % 256, 0, 0)).array
            (frames / f"frame_{i:05d}.ppm").write_bytes(synth.ppm_bytes(arr))
        lines = [f"fps={fps}", "frames=frames"]
        if audio:
            (tmp_path / "track.wav").write_bytes(synth.wav_bytes(synth.sine(440, 1.0)))
            lines.append("audio=track.wav")
        else:
            lines.append("audio=none")
        manifest = tmp_path / "clip.manifest"
        manifest.write_text("\n".join(lines) + "\n")
        return manifest

    def test_basic(self, tmp_path):
        doc = load_video_manifest(self._make_video(tmp_path))
        assert doc.frame_count == 30
        assert doc.fps == 10.0
        assert doc.audio is None
        assert doc.duration == pytest.approx(3.0)

    def test_missing_frame(self, tmp_path):
        with pytest.raises(MissingFrame):
            load_video_manifest(self._make_video(tmp_path, skip=7))

    def test_audio_track(self, tmp_path):
        doc = load_video_manifest(self._make_video(tmp_path, audio=True))
        assert doc.audio is not None
        assert len(doc.audio.samples) == 22050

    def test_lazy_frame_access(self, tmp_path):
        doc = load_video_manifest(self._make_video(tmp_path))
        img = doc.frame(3)
        assert img.array[0, 0, 0] == 24

    def test_bad_fps(self, tmp_path):
        manifest = self._make_video(tmp_path)
        manifest.write_text("fps=0\nframes=frames\n")
        with pytest.raises(CorruptFile):
            load_video_manifest(manifest)


class TestObjectId:
    def test_pure_function_of_bytes(self, tmp_path):
        p = tmp_path / "a.bin"
        p.write_bytes(b"hello media")
        assert object_id_for_file(p) == object_id_for_bytes(b"hello media")
        assert object_id_for_file(p) == object_id_for_file(p)
        assert len(object_id_for_bytes(b"x")) == 32  # 128-bit hex

    def test_differs_for_different_bytes(self):
        assert object_id_for_bytes(b"a") != object_id_for_bytes(b"b")
