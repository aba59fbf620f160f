"""Video ingest via frame-sequence manifests.

Manifest format (UTF-8, one `key=value` per line, `#` comments):

    fps=10
    frames=frames_dir
    audio=track.wav        # or `audio=none`, or omitted

``frames`` names a directory of PNG/PPM files. Each frame file must carry
its index as the last run of digits in the stem (``frame_0007.png``); the
indices must be contiguous, otherwise the absent one is reported as a
:class:`~mediaseek.errors.MissingFrame`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from mediaseek.errors import CorruptFile, MissingFrame
from mediaseek.io.audio_io import AudioBuffer, load_audio
from mediaseek.io.image_io import RasterImage, load_image

_FRAME_EXTENSIONS = {".png", ".ppm"}
_INDEX_RE = re.compile(r"(\d+)(?!.*\d)")


@dataclass
class VideoDocument:
    frame_paths: list[Path]
    fps: float
    audio: AudioBuffer | None = None
    _cache: dict[int, RasterImage] = field(default_factory=dict, repr=False)

    @property
    def frame_count(self) -> int:
        return len(self.frame_paths)

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps

    def frame(self, index: int) -> RasterImage:
        """Load (and cache) the frame at ``index``."""
        if index not in self._cache:
            path = self.frame_paths[index]
            if not path.exists():
                raise MissingFrame(f"frame {index} vanished: {path}")
            self._cache[index] = load_image(path)
        return self._cache[index]


def load_video_manifest(path: str | Path) -> VideoDocument:
    manifest = Path(path)
    fields: dict[str, str] = {}
    try:
        text = manifest.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable manifest") from exc

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CorruptFile(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()

    if "fps" not in fields or "frames" not in fields:
        raise CorruptFile(f"{path}: manifest must name fps and frames")
    try:
        fps = float(fields["fps"])
    except ValueError as exc:
        raise CorruptFile(f"{path}: bad fps value {fields['fps']!r}") from exc
    if fps <= 0:
        raise CorruptFile(f"{path}: fps must be positive")

    frames_dir = manifest.parent / fields["frames"]
    if not frames_dir.is_dir():
        raise CorruptFile(f"{path}: frame directory {frames_dir} missing")

    indexed: dict[int, Path] = {}
    for entry in frames_dir.iterdir():
        if entry.suffix.lower() not in _FRAME_EXTENSIONS:
            continue
        match = _INDEX_RE.search(entry.stem)
        if match is None:
            raise CorruptFile(f"{path}: frame file {entry.name} carries no index")
        index = int(match.group(1))
        if index in indexed:
            raise CorruptFile(f"{path}: duplicate frame index {index}")
        indexed[index] = entry
    if not indexed:
        raise CorruptFile(f"{path}: frame directory {frames_dir} is empty")

    lo, hi = min(indexed), max(indexed)
    for i in range(lo, hi + 1):
        if i not in indexed:
            raise MissingFrame(f"{path}: frame {i} listed by numbering but absent")
    frame_paths = [indexed[i] for i in range(lo, hi + 1)]

    audio = None
    audio_field = fields.get("audio", "none")
    if audio_field and audio_field.lower() != "none":
        audio = load_audio(manifest.parent / audio_field)

    return VideoDocument(frame_paths=frame_paths, fps=fps, audio=audio)
