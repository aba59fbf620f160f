"""RIFF/WAVE PCM16 decoding normalized to 22050 Hz mono."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mediaseek.errors import CorruptFile, UnsupportedFormat

TARGET_RATE = 22050


@dataclass
class AudioBuffer:
    """Mono float samples in [-1, 1] at the normalized 22050 Hz rate."""

    samples: np.ndarray  # float64, 1-D
    sample_rate: int = TARGET_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio samples must be finite")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def slice(self, start: int, end: int) -> "AudioBuffer":
        return AudioBuffer(self.samples[start:end].copy(), self.sample_rate)


def load_audio(path: str | Path) -> AudioBuffer:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptFile("WAV: short fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            if len(body) < size:
                raise CorruptFile("WAV: truncated data chunk")
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise CorruptFile("WAV: missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat(f"WAV: non-PCM format code {audio_format}")
    if bits != 16:
        raise UnsupportedFormat(f"WAV: {bits}-bit samples not supported (PCM16 only)")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"WAV: {channels} channels not supported")
    if rate < 1:
        raise CorruptFile("WAV: invalid sample rate")

    frames = np.frombuffer(payload[: len(payload) - len(payload) % (2 * channels)], dtype="<i2")
    x = frames.astype(np.float64) / 32768.0
    if channels == 2:
        x = x.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(_resample_linear(x, rate, TARGET_RATE), TARGET_RATE)


def _resample_linear(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    if src_rate == dst_rate or len(x) == 0:
        return x.copy()
    out_len = int(round(len(x) * dst_rate / src_rate))
    if out_len == 0:
        return np.zeros(0)
    positions = np.arange(out_len) * (src_rate / dst_rate)
    return np.interp(positions, np.arange(len(x)), x)


def write_wav(samples: np.ndarray, sample_rate: int = TARGET_RATE) -> bytes:
    """Encode mono float samples in [-1, 1] as PCM16 WAV bytes."""
    quantized = np.clip(np.rint(np.asarray(samples, dtype=np.float64) * 32768.0), -32768, 32767)
    pcm = quantized.astype("<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16)
    return header + fmt + b"data" + struct.pack("<I", len(pcm)) + pcm
