"""Online retrieval: extract from reference documents, search, fuse, refine.

Fusion contract: within a component, term scores combine by arithmetic mean
(logical AND; a segment absent from a term scores 0 there); across
components the maximum wins (logical OR). A term's score is the weighted
mean of its category similarities with absent-as-zero.
"""

from __future__ import annotations

import numpy as np

from mediaseek.catalog import MediaType
from mediaseek.config import Config
from mediaseek.engine.model import Query, QueryTerm, ScoredResult, TermType
from mediaseek.engine.session import CachedQuery, CachedTerm, SessionCache
from mediaseek.errors import (
    ExtractionFailed,
    InvalidQuery,
    MediaseekError,
    MissingVectors,
    UnknownCategory,
    UnknownSegment,
    UnsupportedTerm,
)
from mediaseek.features import CATEGORIES
from mediaseek.features.audio import (
    AudioQueryCategory,
    audio_features_for_category,
    extract_audio_category,
    fingerprint,
    stft,
)
from mediaseek.features.image import bow_histogram, detect_local_descriptors
from mediaseek.features.mesh3d import (
    LightFieldDescriptor,
    lightfield_descriptor,
    lightfield_distance,
    normalize_mesh,
    sh_descriptor,
    sketch_to_lightfield_query,
)
from mediaseek.ingest import IMAGE_EXTRACTORS, IngestPipeline
from mediaseek.io.audio_io import AudioBuffer
from mediaseek.io.image_io import RasterImage
from mediaseek.io.mesh_io import TriangleMesh
from mediaseek.store import VectorStore


def segment_of_row(row_id: str) -> str:
    return row_id.rsplit("#", 1)[0] if "#" in row_id else row_id


class RetrievalEngine:
    def __init__(self, store: VectorStore, config: Config | None = None):
        self.store = store
        self.config = config or Config()
        self.sessions = SessionCache(self.config.session_ttl)
        self._pipeline = IngestPipeline(store, self.config)

    # -- score normalization ---------------------------------------------------

    def correspondence(self, category: str, distance: float) -> float:
        """Map a raw distance to a similarity in [0, 1]."""
        d_max = self.store.d_max(category)
        return max(0.0, 1.0 - distance / d_max)

    # -- reference-document extraction ------------------------------------------

    def _query_vectors(self, term: QueryTerm, category: str) -> list[np.ndarray]:
        ref = term.reference
        if category in IMAGE_EXTRACTORS:
            if not isinstance(ref, RasterImage):
                raise ExtractionFailed(f"{category} needs an image reference")
            return [IMAGE_EXTRACTORS[category](ref).values]
        if category == "surf_bow":
            if not isinstance(ref, RasterImage):
                raise ExtractionFailed("surf_bow needs an image reference")
            codebook = self._pipeline.load_codebook()
            if codebook is None:
                raise ExtractionFailed("surf_bow codebook has not been trained")
            return [bow_histogram(detect_local_descriptors(ref), codebook).values]
        if category in ("hpcp_shingle", "cens_shingle", "mfcc_shingle"):
            if not isinstance(ref, AudioBuffer):
                raise ExtractionFailed(f"{category} needs an audio reference")
            vectors = [d.values for d in extract_audio_category(stft(ref), category)]
            if not vectors:
                raise ExtractionFailed(f"reference audio too short for {category}")
            return vectors
        if category == "sphharm":
            if not isinstance(ref, TriangleMesh):
                raise ExtractionFailed("sphharm needs a mesh reference")
            return [sh_descriptor(normalize_mesh(ref)).values]
        raise UnknownCategory(category)

    def _fingerprint_scores(self, audio: AudioBuffer) -> dict[str, float]:
        hashes = fingerprint(stft(audio))
        if not hashes:
            return {}
        votes = self.store.fingerprints.lookup([(h.hash, h.anchor_time) for h in hashes])
        return {seg: min(1.0, v / len(hashes)) for seg, v in votes}

    def _lightfield_rows(self) -> dict[str, np.ndarray]:
        """segment_id -> (10, 45) stored view matrix."""
        table = self.store.tables.get("lightfield")
        if table is None:
            return {}
        grouped: dict[str, dict[int, np.ndarray]] = {}
        for row_id in table.ids:
            segment_id, suffix = row_id.rsplit("#", 1)
            grouped.setdefault(segment_id, {})[int(suffix[1:])] = table.get(row_id)
        return {
            seg: np.stack([views[i] for i in sorted(views)])
            for seg, views in grouped.items()
            if len(views) == 10
        }

    def _lightfield_scores(self, term: QueryTerm) -> dict[str, float]:
        stored = self._lightfield_rows()
        if not stored:
            return {}
        if isinstance(term.reference, TriangleMesh):
            query = lightfield_descriptor(normalize_mesh(term.reference))
            distance_of = lambda views: lightfield_distance(query, LightFieldDescriptor(views))
        elif isinstance(term.reference, RasterImage):
            try:
                sketch_view = sketch_to_lightfield_query(term.reference)
            except MediaseekError as exc:
                raise ExtractionFailed(f"sketch silhouette extraction failed: {exc}") from exc
            distance_of = lambda views: float(
                np.abs(views - sketch_view[None, :]).sum(axis=1).min()
            )
        else:
            raise ExtractionFailed("lightfield needs a mesh or sketch reference")
        return {
            seg: self.correspondence("lightfield", distance_of(views))
            for seg, views in stored.items()
        }

    def _vector_scores(self, term: QueryTerm, category: str, k: int) -> dict[str, float]:
        if category not in self.store.tables:
            return {}  # nothing ingested for it: contributes 0 everywhere
        queries = self._query_vectors(term, category)
        fetch = max(k * self.config.fetch_multiplier, k)
        best: dict[str, float] = {}
        for query in queries:
            result = self.store.knn(category, query, fetch)
            for row_id, distance in result.hits:
                seg = segment_of_row(row_id)
                sim = self.correspondence(category, distance)
                if sim > best.get(seg, -1.0):
                    best[seg] = sim
        return best

    # -- term / query execution --------------------------------------------------

    def category_scores_for_term(self, term: QueryTerm, k: int) -> dict[str, dict[str, float]]:
        if term.term_type == TermType.MOTION:
            raise UnsupportedTerm("motion sketches are reserved but not executable")
        scores: dict[str, dict[str, float]] = {}
        for category, weight in term.categories.items():
            if category not in CATEGORIES:
                raise UnknownCategory(category)
            if category == "fingerprint":
                if not isinstance(term.reference, AudioBuffer):
                    raise ExtractionFailed("fingerprint needs an audio reference")
                scores[category] = self._fingerprint_scores(term.reference)
            elif category == "lightfield":
                scores[category] = self._lightfield_scores(term)
            else:
                scores[category] = self._vector_scores(term, category, k)
        return scores

    @staticmethod
    def fuse_term(category_scores: dict[str, dict[str, float]],
                  weights: dict[str, float]) -> dict[str, float]:
        """Weighted mean over categories; a segment absent from a category
        contributes 0 for it."""
        total_weight = sum(w for w in weights.values() if w > 0)
        if total_weight <= 0:
            raise InvalidQuery("all category weights are zero")
        segments: set[str] = set()
        for category, w in weights.items():
            if w > 0:
                segments.update(category_scores.get(category, {}))
        fused = {}
        for seg in segments:
            acc = 0.0
            for category, w in weights.items():
                if w > 0:
                    acc += w * category_scores.get(category, {}).get(seg, 0.0)
            fused[seg] = acc / total_weight
        return fused

    def execute_term(self, term: QueryTerm, k: int) -> dict[str, tuple[float, dict[str, float]]]:
        """segment -> (term score, per-category similarities)."""
        category_scores = self.category_scores_for_term(term, k)
        fused = self.fuse_term(category_scores, term.categories)
        return {
            seg: (
                score,
                {c: category_scores[c][seg] for c in category_scores if seg in category_scores[c]},
            )
            for seg, score in fused.items()
        }

    def _fuse_cached(self, cached: CachedQuery) -> list[ScoredResult]:
        component_results: list[dict[str, tuple[float, dict[str, float]]]] = []
        for terms in cached.components:
            term_maps = []
            for entry in terms:
                term_maps.append((self.fuse_term(entry.category_scores, entry.weights), entry))
            segments: set[str] = set()
            for fused, _ in term_maps:
                segments.update(fused)
            component: dict[str, tuple[float, dict[str, float]]] = {}
            for seg in segments:
                total = 0.0
                per_category: dict[str, float] = {}
                for fused, entry in term_maps:
                    total += fused.get(seg, 0.0)
                    for category, seg_scores in entry.category_scores.items():
                        if seg in seg_scores:
                            per_category[category] = seg_scores[seg]
                component[seg] = (total / len(term_maps), per_category)
            component_results.append(component)

        best: dict[str, tuple[float, dict[str, float]]] = {}
        for component in component_results:
            for seg, (score, per_category) in component.items():
                if seg not in best or score > best[seg][0]:
                    best[seg] = (score, per_category)

        results = []
        for seg, (score, per_category) in best.items():
            record = self.store.catalog.segments.get(seg)
            object_id = record.object_id if record else seg.split(":", 1)[0]
            if cached.media_filter is not None:
                obj = self.store.catalog.objects.get(object_id)
                if obj is None or obj.media_type not in cached.media_filter:
                    continue
            results.append(ScoredResult(seg, object_id, score, per_category))
        results.sort(key=lambda r: (-r.score, r.segment_id))
        return results[: cached.k]

    def execute_query(self, query: Query, session_id: str | None = None) -> list[ScoredResult]:
        query.validate()
        with self.store.lock.read():
            components = []
            for component in query.components:
                cached_terms = []
                for term in component.terms:
                    cached_terms.append(CachedTerm(
                        category_scores=self.category_scores_for_term(term, query.k),
                        weights=dict(term.categories),
                    ))
                components.append(cached_terms)
        cached = CachedQuery(components, query.k, query.media_filter)
        if session_id is not None:
            self.sessions.put(session_id, cached)
        return self._fuse_cached(cached)

    # -- More-Like-This ------------------------------------------------------------

    def _stored_vectors(self, segment_id: str, category: str) -> list[np.ndarray]:
        table = self.store.tables.get(category)
        if table is None:
            return []
        if segment_id in table:
            return [table.get(segment_id)]
        return [
            table.get(row_id)
            for row_id in table.ids
            if row_id.startswith(segment_id + "#")
        ]

    def more_like_this(self, segment_id: str, categories: dict[str, float] | list[str],
                       k: int) -> list[ScoredResult]:
        if segment_id not in self.store.catalog.segments:
            raise UnknownSegment(segment_id)
        if isinstance(categories, list):
            categories = {c: 1.0 for c in categories}
        if not categories:
            raise InvalidQuery("more-like-this needs at least one category")

        with self.store.lock.read():
            category_scores: dict[str, dict[str, float]] = {}
            any_vectors = False
            for category, weight in categories.items():
                if category not in CATEGORIES:
                    raise UnknownCategory(category)
                if category == "fingerprint":
                    raise MissingVectors("fingerprint hashes are not seedable vectors")
                if category == "lightfield":
                    stored = self._lightfield_rows()
                    if segment_id not in stored:
                        category_scores[category] = {}
                        continue
                    any_vectors = True
                    seed_views = LightFieldDescriptor(stored[segment_id])
                    category_scores[category] = {
                        seg: self.correspondence(
                            "lightfield",
                            lightfield_distance(seed_views, LightFieldDescriptor(views)),
                        )
                        for seg, views in stored.items()
                    }
                    continue
                vectors = self._stored_vectors(segment_id, category)
                if not vectors:
                    category_scores[category] = {}
                    continue
                any_vectors = True
                fetch = max(k * self.config.fetch_multiplier, k) + 1
                best: dict[str, float] = {}
                for vec in vectors:
                    for row_id, distance in self.store.knn(category, vec, fetch).hits:
                        seg = segment_of_row(row_id)
                        sim = self.correspondence(category, distance)
                        if sim > best.get(seg, -1.0):
                            best[seg] = sim
                category_scores[category] = best
            if not any_vectors:
                raise MissingVectors(f"segment {segment_id} has no vectors for {sorted(categories)}")

        fused = self.fuse_term(category_scores, categories)
        fused.pop(segment_id, None)  # the seed never appears in its own results
        results = []
        for seg, score in fused.items():
            record = self.store.catalog.segments.get(seg)
            object_id = record.object_id if record else seg.split(":", 1)[0]
            per_category = {
                c: category_scores[c][seg] for c in category_scores if seg in category_scores[c]
            }
            results.append(ScoredResult(seg, object_id, score, per_category))
        results.sort(key=lambda r: (-r.score, r.segment_id))
        return results[:k]

    # -- refinement ------------------------------------------------------------------

    def refine(self, session_id: str, new_weights: dict[str, float] | None = None,
               media_filter: set[MediaType] | None | str = "unchanged") -> list[ScoredResult]:
        cached = self.sessions.get(session_id)
        if new_weights:
            for terms in cached.components:
                for entry in terms:
                    for category, weight in new_weights.items():
                        if category in entry.weights:
                            entry.weights[category] = weight
        if media_filter != "unchanged":
            cached.media_filter = media_filter  # type: ignore[assignment]
        return self._fuse_cached(cached)

    # -- rollup -------------------------------------------------------------------------

    @staticmethod
    def aggregate_objects(results: list[ScoredResult]) -> list[tuple[str, float]]:
        """Object score = max over its segments; sorted descending."""
        best: dict[str, float] = {}
        for r in results:
            if r.score > best.get(r.object_id, -1.0):
                best[r.object_id] = r.score
        return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
