"""Query composition model: terms AND-ed within a component, components OR-ed."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mediaseek.catalog import MediaType
from mediaseek.errors import InvalidQuery
from mediaseek.features.audio import AudioQueryCategory
from mediaseek.io.audio_io import AudioBuffer
from mediaseek.io.image_io import RasterImage
from mediaseek.io.mesh_io import TriangleMesh


class TermType(str, Enum):
    IMAGE = "IMAGE"
    AUDIO = "AUDIO"
    MODEL_3D = "MODEL_3D"
    MOTION = "MOTION"  # reserved; execution raises UnsupportedTerm


Reference = RasterImage | AudioBuffer | TriangleMesh


@dataclass
class QueryTerm:
    term_type: TermType
    reference: Reference
    categories: dict[str, float]  # category name -> weight in [0, 1]
    audio_category: AudioQueryCategory | None = None

    def validate(self) -> None:
        if not self.categories:
            raise InvalidQuery("term needs at least one category")
        weights = np.array(list(self.categories.values()), dtype=np.float64)
        if not np.all(np.isfinite(weights)) or (weights < 0).any():
            raise InvalidQuery("category weights must be finite and nonnegative")
        if not (weights > 0).any():
            raise InvalidQuery("term needs at least one category with weight > 0")


@dataclass
class QueryComponent:
    terms: list[QueryTerm]

    def validate(self) -> None:
        if not self.terms:
            raise InvalidQuery("component must contain at least one active term")
        seen: set[TermType] = set()
        for term in self.terms:
            if term.term_type in seen:
                raise InvalidQuery(f"component has two active {term.term_type.value} terms")
            seen.add(term.term_type)
            term.validate()


@dataclass
class Query:
    components: list[QueryComponent]
    k: int = 100
    media_filter: set[MediaType] | None = None

    def validate(self) -> None:
        if not self.components:
            raise InvalidQuery("query must contain at least one component")
        if self.k < 1:
            raise InvalidQuery("k must be >= 1")
        for component in self.components:
            component.validate()


@dataclass
class ScoredResult:
    segment_id: str
    object_id: str
    score: float
    per_category_scores: dict[str, float] = field(default_factory=dict)
