"""Feature categories: named descriptor families with one table + metric each."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mediaseek.store.distances import Metric


@dataclass
class DescriptorVector:
    """Fixed-dimension real vector labeled with its feature category."""

    category: str
    values: np.ndarray
    segment_id: str = ""

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.category}: non-finite descriptor values")

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CategorySpec:
    name: str
    metric: Metric
    dim: int | None          # None: decided at ingest time (BoW codebook size)
    media: str               # "image" | "audio" | "mesh"
    multi_vector: bool = False


# One global registry; dims follow the extractor definitions in this package.
CATEGORIES: dict[str, CategorySpec] = {
    spec.name: spec
    for spec in [
        CategorySpec("average_color", Metric.L2, 192, "image"),
        CategorySpec("edge_histogram", Metric.CHISQUARED, 80, "image"),
        CategorySpec("hog", Metric.L2, 8100, "image"),
        CategorySpec("surf_bow", Metric.CHISQUARED, None, "image"),
        CategorySpec("hpcp_shingle", Metric.L2, 360, "audio", multi_vector=True),
        CategorySpec("cens_shingle", Metric.L2, 240, "audio", multi_vector=True),
        CategorySpec("mfcc_shingle", Metric.L2, 390, "audio", multi_vector=True),
        CategorySpec("fingerprint", Metric.L2, 0, "audio", multi_vector=True),
        CategorySpec("sphharm", Metric.L2, 160, "mesh"),
        CategorySpec("lightfield", Metric.L1, 45, "mesh", multi_vector=True),
    ]
}

IMAGE_CATEGORIES = [c.name for c in CATEGORIES.values() if c.media == "image"]
AUDIO_CATEGORIES = [c.name for c in CATEGORIES.values() if c.media == "audio"]
MESH_CATEGORIES = [c.name for c in CATEGORIES.values() if c.media == "mesh"]
