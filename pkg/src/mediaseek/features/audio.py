"""Music descriptors: chroma (HPCP/CENS) shingles, MFCC shingles and a
constellation fingerprint, all computed from one shared STFT geometry.

Query routing follows the three audio query categories: fingerprinting
uses the fingerprint + MFCC modules; audio matching and version
identification use the chroma shingles and leave fingerprinting out.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.fft import dct
from scipy.ndimage import maximum_filter

from mediaseek.features import DescriptorVector
from mediaseek.io.audio_io import AudioBuffer

SAMPLE_RATE = 22050
WINDOW = 4096
HOP = 1024
BIN_COUNT = WINDOW // 2 + 1

HPCP_MIN_FREQ = 100.0
HPCP_MAX_FREQ = 5000.0
HPCP_PEAK_FLOOR = 1e-4
HPCP_WINDOW_SEMITONES = 4.0 / 3.0   # total width; weight reaches zero at half of it

CENS_QUANT_THRESHOLDS = (0.05, 0.1, 0.2, 0.4)
CENS_SMOOTH = 41
CENS_DOWNSAMPLE = 10

SHINGLE_W = 30
SHINGLE_HOP = 10
# CENS frames arrive 10x downsampled, so a chroma-rate shingle would outgrow
# a 10 s audio window; 20 CENS frames (~9.3 s) is the widest that fits.
CENS_SHINGLE_W = 20
CENS_SHINGLE_HOP = 5

MEL_FILTERS = 26
MEL_FMAX = 8000.0
MFCC_COEFFS = 13

FP_NEIGH_FRAMES = 15
FP_NEIGH_BINS = 31
FP_PEAKS_PER_SECOND = 5
FP_FANOUT = 5
FP_MAX_DT = 100
FP_MAX_DBIN = 128
FP_MAX_BIN = 1023


class AudioQueryCategory(str, Enum):
    FINGERPRINT = "FINGERPRINT"
    MATCHING = "MATCHING"
    VERSION_ID = "VERSION_ID"


@dataclass
class Spectrogram:
    magnitudes: np.ndarray  # (frames, BIN_COUNT), nonnegative
    sample_rate: int = SAMPLE_RATE
    window: int = WINDOW
    hop: int = HOP

    @property
    def frame_count(self) -> int:
        return self.magnitudes.shape[0]


@dataclass
class ChromaSequence:
    frames: np.ndarray  # (n, 12), C..B
    variant: str        # "HPCP" | "CENS"


@dataclass(frozen=True)
class FingerprintHash:
    """32-bit packed peak pair: f1 (10 bits) | f2 (10 bits) | dt (12 bits)."""

    hash: int
    anchor_time: int
    segment_id: str = ""


def pack_hash(f1: int, f2: int, dt: int) -> int:
    if not (0 <= f1 <= FP_MAX_BIN and 0 <= f2 <= FP_MAX_BIN and 1 <= dt <= 4095):
        raise ValueError(f"unpackable peak pair ({f1}, {f2}, {dt})")
    return (f1 << 22) | (f2 << 12) | dt


def unpack_hash(value: int) -> tuple[int, int, int]:
    return (value >> 22) & 0x3FF, (value >> 12) & 0x3FF, value & 0xFFF


# ---------------------------------------------------------------------------
# STFT

_HANN = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(WINDOW) / WINDOW))


def stft(audio: AudioBuffer) -> Spectrogram:
    x = np.asarray(audio.samples, dtype=np.float64)
    if len(x) < WINDOW:
        x = np.pad(x, (0, WINDOW - len(x)))
    n_frames = (len(x) - WINDOW) // HOP + 1
    idx = np.arange(WINDOW)[None, :] + HOP * np.arange(n_frames)[:, None]
    frames = x[idx] * _HANN[None, :]
    return Spectrogram(np.abs(np.fft.rfft(frames, axis=1)))


# ---------------------------------------------------------------------------
# HPCP

_FREQS = np.arange(BIN_COUNT) * SAMPLE_RATE / WINDOW
_HPCP_BIN_LO = int(np.searchsorted(_FREQS, HPCP_MIN_FREQ))
_HPCP_BIN_HI = int(np.searchsorted(_FREQS, HPCP_MAX_FREQ, side="right"))


def hpcp(spec: Spectrogram) -> ChromaSequence:
    """Weighted spectral peaks folded onto 12 pitch classes, max-normalized."""
    mags = spec.magnitudes
    out = np.zeros((spec.frame_count, 12))
    half_window = HPCP_WINDOW_SEMITONES / 2.0
    for t in range(spec.frame_count):
        frame = mags[t]
        peak_floor = frame.max() * HPCP_PEAK_FLOOR
        if frame.max() <= 0:
            continue
        band = frame[_HPCP_BIN_LO:_HPCP_BIN_HI]
        inner = (band[1:-1] > band[:-2]) & (band[1:-1] > band[2:]) & (band[1:-1] > peak_floor)
        bins = np.nonzero(inner)[0] + _HPCP_BIN_LO + 1
        if len(bins) == 0:
            continue
        semis = 12.0 * np.log2(_FREQS[bins] / 440.0)
        class_pos = (semis + 9.0) % 12.0
        weights = frame[bins] ** 2
        acc = np.zeros(12)
        for pitch_class in range(12):
            d = np.abs(class_pos - pitch_class)
            d = np.minimum(d, 12.0 - d)
            close = d <= half_window
            if close.any():
                w = np.cos((np.pi / 2.0) * d[close] / half_window) ** 2
                acc[pitch_class] = (weights[close] * w).sum()
        peak = acc.max()
        if peak > 0:
            out[t] = acc / peak
    return ChromaSequence(out, "HPCP")


# ---------------------------------------------------------------------------
# CENS

def cens(chroma: ChromaSequence) -> ChromaSequence:
    """Quantized, smoothed, downsampled chroma; unit L2 frames (or zero)."""
    frames = np.asarray(chroma.frames, dtype=np.float64)
    sums = frames.sum(axis=1, keepdims=True)
    normed = np.divide(frames, sums, out=np.zeros_like(frames), where=sums > 0)

    quantized = np.zeros_like(normed)
    for threshold in CENS_QUANT_THRESHOLDS:
        quantized += (normed >= threshold).astype(np.float64)

    smoothing = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(CENS_SMOOTH) / (CENS_SMOOTH - 1)))
    smoothed = np.stack(
        [np.convolve(quantized[:, c], smoothing, mode="same") for c in range(12)], axis=1
    )
    down = smoothed[::CENS_DOWNSAMPLE]
    norms = np.linalg.norm(down, axis=1, keepdims=True)
    out = np.divide(down, norms, out=np.zeros_like(down), where=norms > 0)
    return ChromaSequence(out, "CENS")


# ---------------------------------------------------------------------------
# shingling

def shingle(seq: np.ndarray, category: str, w: int = SHINGLE_W,
            hop: int = SHINGLE_HOP) -> list[DescriptorVector]:
    """Concatenate w consecutive frames into unit vectors; empty when too short."""
    frames = np.asarray(seq, dtype=np.float64)
    n = len(frames)
    if n < w:
        return []
    out = []
    for i, start in enumerate(range(0, n - w + 1, hop)):
        flat = frames[start : start + w].reshape(-1)
        norm = np.linalg.norm(flat)
        # the guard keeps numerically-silent windows at exactly zero
        if norm > 1e-9:
            flat = flat / norm
        else:
            flat = np.zeros_like(flat)
        out.append(DescriptorVector(category, flat))
    return out


def hpcp_shingles(spec: Spectrogram) -> list[DescriptorVector]:
    return shingle(hpcp(spec).frames, "hpcp_shingle", SHINGLE_W, SHINGLE_HOP)


def cens_shingles(spec: Spectrogram) -> list[DescriptorVector]:
    return shingle(cens(hpcp(spec)).frames, "cens_shingle", CENS_SHINGLE_W, CENS_SHINGLE_HOP)


# ---------------------------------------------------------------------------
# MFCC

def mel_scale(freq_hz: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_filterbank() -> np.ndarray:
    """(MEL_FILTERS, BIN_COUNT) triangular weights on the mel scale, 0-8 kHz."""
    points_mel = np.linspace(0.0, float(mel_scale(MEL_FMAX)), MEL_FILTERS + 2)
    points_hz = 700.0 * (10.0 ** (points_mel / 2595.0) - 1.0)
    bank = np.zeros((MEL_FILTERS, BIN_COUNT))
    for i in range(MEL_FILTERS):
        lo, mid, hi = points_hz[i], points_hz[i + 1], points_hz[i + 2]
        rising = (_FREQS - lo) / (mid - lo)
        falling = (hi - _FREQS) / (hi - mid)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


_MEL_BANK = mel_filterbank()


def mfcc_frames(spec: Spectrogram) -> np.ndarray:
    """Cepstral coefficients 1..13 per frame (0th dropped)."""
    power = spec.magnitudes**2
    energies = np.maximum(power @ _MEL_BANK.T, 1e-10)
    cepstra = dct(np.log(energies), type=2, axis=1)
    return cepstra[:, 1 : MFCC_COEFFS + 1]


def mfcc_shingles(spec: Spectrogram) -> list[DescriptorVector]:
    return shingle(mfcc_frames(spec), "mfcc_shingle", SHINGLE_W, SHINGLE_HOP)


# ---------------------------------------------------------------------------
# constellation fingerprint

def constellation_peaks(spec: Spectrogram) -> list[tuple[int, int, float]]:
    """(frame, bin, magnitude) peaks: local maxima over a 15x31 neighbourhood,
    top 5 per second, bins above FP_MAX_BIN discarded."""
    mag = spec.magnitudes
    local_max = maximum_filter(mag, size=(FP_NEIGH_FRAMES, FP_NEIGH_BINS), mode="constant", cval=-1.0)
    ts, bs = np.nonzero((mag == local_max) & (mag > 0))
    keep = bs <= FP_MAX_BIN
    ts, bs = ts[keep], bs[keep]

    by_second: dict[int, list[tuple[float, int, int]]] = {}
    for t, b in zip(ts, bs):
        second = (int(t) * HOP) // SAMPLE_RATE
        by_second.setdefault(second, []).append((float(mag[t, b]), int(t), int(b)))
    peaks: list[tuple[int, int, float]] = []
    for second in sorted(by_second):
        ranked = sorted(by_second[second], key=lambda p: (-p[0], p[1], p[2]))
        peaks.extend((t, b, m) for m, t, b in ranked[:FP_PEAKS_PER_SECOND])
    peaks.sort()
    return peaks


def fingerprint(spec: Spectrogram, segment_id: str = "") -> list[FingerprintHash]:
    peaks = constellation_peaks(spec)
    hashes: list[FingerprintHash] = []
    for i, (t1, b1, _) in enumerate(peaks):
        paired = 0
        for t2, b2, _ in peaks[i + 1 :]:
            dt = t2 - t1
            if dt < 1:
                continue
            if dt > FP_MAX_DT:
                break
            if abs(b2 - b1) > FP_MAX_DBIN:
                continue
            hashes.append(FingerprintHash(pack_hash(b1, b2, dt), t1, segment_id))
            paired += 1
            if paired >= FP_FANOUT:
                break
    return hashes


# ---------------------------------------------------------------------------
# category routing

ROUTING: dict[AudioQueryCategory, tuple[str, ...]] = {
    AudioQueryCategory.FINGERPRINT: ("fingerprint", "mfcc_shingle"),
    AudioQueryCategory.MATCHING: ("cens_shingle", "hpcp_shingle"),
    AudioQueryCategory.VERSION_ID: ("cens_shingle", "hpcp_shingle"),
}


def audio_features_for_category(category: AudioQueryCategory) -> tuple[str, ...]:
    return ROUTING[AudioQueryCategory(category)]


def extract_audio_category(spec: Spectrogram, category: str) -> list[DescriptorVector]:
    if category == "hpcp_shingle":
        return hpcp_shingles(spec)
    if category == "cens_shingle":
        return cens_shingles(spec)
    if category == "mfcc_shingle":
        return mfcc_shingles(spec)
    raise ValueError(f"not a vector audio category: {category}")
