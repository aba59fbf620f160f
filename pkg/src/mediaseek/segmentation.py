"""Split decoded media into retrieval segments.

Video is cut into shots with a histogram-difference detector; audio is cut
into fixed overlapping windows; images and meshes are single whole-object
segments.
"""

from __future__ import annotations

import numpy as np

from mediaseek.catalog import MediaObject, MediaType, SegmentKind, SegmentRecord, segment_id_for
from mediaseek.errors import WrongMediaType
from mediaseek.io.audio_io import AudioBuffer
from mediaseek.io.image_io import RasterImage
from mediaseek.io.video_io import VideoDocument

SHOT_THRESHOLD = 0.35
MIN_SHOT_FRAMES = 5
HISTOGRAM_BINS = 32

AUDIO_WINDOW = 220500   # 10 s at 22050 Hz
AUDIO_HOP = 198450      # 9 s (1 s overlap)
AUDIO_MIN_TAIL = 22050  # 1 s


def frame_histogram(img: RasterImage) -> np.ndarray:
    """32-bin grayscale histogram normalized to sum 1."""
    gray = img.array.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    bins = np.clip((gray / 8.0).astype(np.int64), 0, HISTOGRAM_BINS - 1)
    hist = np.bincount(bins.reshape(-1), minlength=HISTOGRAM_BINS).astype(np.float64)
    return hist / hist.sum()


def shot_boundaries(histograms: list[np.ndarray]) -> list[int]:
    """Frame indices where a new shot starts (always includes 0)."""
    cuts = [0]
    for i in range(1, len(histograms)):
        if float(np.abs(histograms[i] - histograms[i - 1]).sum()) > SHOT_THRESHOLD:
            cuts.append(i)
    return cuts


def segment_video_shots(video: VideoDocument, object_id: str) -> list[SegmentRecord]:
    n = video.frame_count
    histograms = [frame_histogram(video.frame(i)) for i in range(n)]
    cuts = shot_boundaries(histograms)
    shots = [(cuts[i], cuts[i + 1] if i + 1 < len(cuts) else n) for i in range(len(cuts))]

    # Merge shots shorter than the minimum into the preceding shot; a short
    # head shot (no predecessor) is merged into its successor instead.
    while len(shots) > 1:
        short = next((i for i, (s, e) in enumerate(shots) if e - s < MIN_SHOT_FRAMES), None)
        if short is None:
            break
        if short > 0:
            s0, _ = shots[short - 1]
            _, e1 = shots[short]
            shots[short - 1 : short + 1] = [(s0, e1)]
        else:
            s0, _ = shots[0]
            _, e1 = shots[1]
            shots[0:2] = [(s0, e1)]

    return [
        SegmentRecord(segment_id_for(object_id, i), object_id, i, s, e, SegmentKind.SHOT)
        for i, (s, e) in enumerate(shots)
    ]


def audio_window_bounds(sample_count: int) -> list[tuple[int, int]]:
    """Window [start, end) bounds for a buffer of ``sample_count`` samples.

    Full 10 s windows advance on the 9 s hop grid. One trailing shorter
    window (at the next hop position) is kept only when it contributes at
    least 1 s of audio not covered by any full window.
    """
    bounds: list[tuple[int, int]] = []
    start = 0
    while start + AUDIO_WINDOW <= sample_count:
        bounds.append((start, start + AUDIO_WINDOW))
        start += AUDIO_HOP
    covered = bounds[-1][1] if bounds else 0
    if sample_count - covered >= AUDIO_MIN_TAIL:
        bounds.append((start, sample_count))
    return bounds


def segment_audio_windows(audio: AudioBuffer, object_id: str, first_sequence: int = 0) -> list[SegmentRecord]:
    return [
        SegmentRecord(
            segment_id_for(object_id, first_sequence + i),
            object_id,
            first_sequence + i,
            s,
            e,
            SegmentKind.WINDOW,
        )
        for i, (s, e) in enumerate(audio_window_bounds(len(audio.samples)))
    ]


def trivial_segment(obj: MediaObject, length: int = 1) -> SegmentRecord:
    if obj.media_type not in (MediaType.IMAGE, MediaType.MODEL_3D):
        raise WrongMediaType(f"{obj.media_type.value} objects are not single-segment")
    return SegmentRecord(segment_id_for(obj.object_id, 0), obj.object_id, 0, 0, max(1, length), SegmentKind.WHOLE)
