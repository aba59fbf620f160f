"""Decoders for the supported ingest formats.

Supported inputs: PNG and binary PPM (P6) images, RIFF/WAVE PCM16 audio,
Wavefront OBJ meshes (v/f subset) and key-value video manifests. Anything
else raises :class:`~mediaseek.errors.UnsupportedFormat`.
"""

from mediaseek.io.audio_io import AudioBuffer, load_audio, write_wav
from mediaseek.io.image_io import RasterImage, encode_png, load_image, resize_bilinear
from mediaseek.io.mesh_io import TriangleMesh, load_mesh
from mediaseek.io.video_io import VideoDocument, load_video_manifest

__all__ = [
    "AudioBuffer",
    "RasterImage",
    "TriangleMesh",
    "VideoDocument",
    "encode_png",
    "load_audio",
    "load_image",
    "load_mesh",
    "load_video_manifest",
    "resize_bilinear",
    "write_wav",
]
