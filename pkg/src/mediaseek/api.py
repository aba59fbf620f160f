"""REST + WebSocket API over the retrieval engine.

REST endpoints (JSON; numbers serialized at full precision):

    POST /api/query            run a composed query, return the fused list
    POST /api/more-like-this   kNN from a stored segment's vectors
    POST /api/refine           re-fuse a cached session under new weights
    GET  /api/objects/{id}     catalog lookup (object or segment id)
    GET  /api/objects?name=    substring lookup over display names
    GET  /api/segments/{id}/preview   thumbnail / excerpt / render
    POST /api/ingest           offline ingest of server-local paths
    POST /api/index/build      rebuild indexes + codebook

WebSocket /ws speaks the same payloads wrapped in typed messages:
client sends QUERY / MLT / REFINE; the server answers QUERY_START, one
RESULT_BATCH per feature category as it completes, then QUERY_END with the
fused list. Every response echoes the request_id. protocol_version = 1.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import time

import numpy as np
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect

from mediaseek.catalog import MediaType, SegmentKind
from mediaseek.config import Config
from mediaseek.engine import Query, QueryComponent, QueryTerm, RetrievalEngine, ScoredResult, TermType
from mediaseek.engine.session import CachedQuery, CachedTerm
from mediaseek.errors import (
    InvalidQuery,
    MediaseekError,
    MissingVectors,
    SessionExpired,
    UnknownCategory,
    UnknownSegment,
)
from mediaseek.features.audio import AudioQueryCategory, audio_features_for_category
from mediaseek.features.mesh3d import lightfield_projections, normalize_mesh
from mediaseek.ingest import IngestPipeline
from mediaseek.io import encode_png, load_audio, load_image, load_mesh, resize_bilinear, write_wav
from mediaseek.io.image_io import RasterImage

PROTOCOL_VERSION = 1
PREVIEW_MAX_SIDE = 256


def _decode_reference(term_payload: dict, config: Config):
    data = base64.b64decode(term_payload["data_b64"])
    if len(data) > config.max_reference_bytes:
        raise _TooLarge(len(data))
    fmt = term_payload.get("format", "").lower()
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / f"reference.{fmt or 'bin'}"
        path.write_bytes(data)
        if fmt in ("png", "ppm"):
            return load_image(path)
        if fmt == "wav":
            return load_audio(path)
        if fmt == "obj":
            return load_mesh(path)
    raise InvalidQuery(f"unknown reference format {fmt!r}")


class _TooLarge(Exception):
    def __init__(self, size: int):
        self.size = size


def parse_query_payload(payload: dict, config: Config) -> Query:
    try:
        components = []
        for comp in payload["components"]:
            terms = []
            for term_payload in comp["terms"]:
                term_type = TermType(term_payload["type"])
                audio_category = None
                if "audio_category" in term_payload and term_payload["audio_category"]:
                    audio_category = AudioQueryCategory(term_payload["audio_category"])
                categories = term_payload.get("categories")
                if not categories:
                    if term_type == TermType.AUDIO:
                        routing = audio_category or AudioQueryCategory.MATCHING
                        categories = {c: 1.0 for c in audio_features_for_category(routing)}
                    elif term_type == TermType.IMAGE:
                        categories = {c: 1.0 for c in config.image_categories}
                    elif term_type == TermType.MODEL_3D:
                        categories = {c: 1.0 for c in config.mesh_categories}
                    else:
                        categories = {}
                reference = _decode_reference(term_payload, config)
                if term_type == TermType.MODEL_3D and isinstance(reference, RasterImage):
                    categories = {"lightfield": categories.get("lightfield", 1.0)}
                terms.append(QueryTerm(term_type, reference, dict(categories), audio_category))
            components.append(QueryComponent(terms))
        media_filter = None
        if payload.get("media_filter"):
            media_filter = {MediaType(m) for m in payload["media_filter"]}
        return Query(components, k=int(payload.get("k", config.result_k)),
                     media_filter=media_filter)
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidQuery(f"malformed query payload: {exc}") from exc


def result_rows(results: list[ScoredResult]) -> list[dict]:
    return [
        {
            "segment_id": r.segment_id,
            "object_id": r.object_id,
            "score": r.score,
            "per_category_scores": r.per_category_scores,
        }
        for r in results
    ]


def create_app(engine: RetrievalEngine) -> FastAPI:
    app = FastAPI(title="mediaseek", version="0.1.0")
    config = engine.config
    app.state.engine = engine

    def authorized(request: Request) -> bool:
        return not config.token or request.headers.get("x-token") == config.token

    def error(status: int, message: str) -> Response:
        return Response(json.dumps({"error": message}), status_code=status,
                        media_type="application/json")

    async def run_guarded(func, *args):
        loop = asyncio.get_running_loop()
        return await asyncio.wait_for(
            loop.run_in_executor(None, func, *args), timeout=config.request_timeout
        )

    # -- REST -----------------------------------------------------------------

    @app.post("/api/query")
    async def api_query(request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        payload = await request.json()
        try:
            query = parse_query_payload(payload, config)
            session_id = payload.get("session_id")
            results = await run_guarded(engine.execute_query, query, session_id)
        except _TooLarge as exc:
            return error(413, f"reference document of {exc.size} bytes exceeds the limit")
        except (InvalidQuery, UnknownCategory, MediaseekError) as exc:
            return error(400, str(exc))
        except asyncio.TimeoutError:
            return error(503, "query timed out")
        return {
            "protocol_version": PROTOCOL_VERSION,
            "results": result_rows(results),
            "objects": [
                {"object_id": o, "score": s}
                for o, s in engine.aggregate_objects(results)
            ],
        }

    @app.post("/api/more-like-this")
    async def api_mlt(request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        payload = await request.json()
        try:
            results = await run_guarded(
                engine.more_like_this,
                payload["segment_id"],
                payload.get("categories") or ["average_color", "edge_histogram", "hog"],
                int(payload.get("k", config.result_k)),
            )
        except KeyError as exc:
            return error(400, f"missing field {exc}")
        except UnknownSegment as exc:
            return error(404, str(exc))
        except (MissingVectors, InvalidQuery, UnknownCategory) as exc:
            return error(400, str(exc))
        except asyncio.TimeoutError:
            return error(503, "more-like-this timed out")
        return {"protocol_version": PROTOCOL_VERSION, "results": result_rows(results)}

    @app.post("/api/refine")
    async def api_refine(request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        payload = await request.json()
        media_filter: object = "unchanged"
        if "media_filter" in payload:
            raw = payload["media_filter"]
            media_filter = {MediaType(m) for m in raw} if raw else None
        try:
            results = engine.refine(
                payload["session_id"], payload.get("weights") or {}, media_filter
            )
        except KeyError as exc:
            return error(400, f"missing field {exc}")
        except SessionExpired as exc:
            return error(410, str(exc))
        except InvalidQuery as exc:
            return error(400, str(exc))
        return {"protocol_version": PROTOCOL_VERSION, "results": result_rows(results)}

    @app.get("/api/objects")
    async def api_find_objects(request: Request, name: str = ""):
        if not authorized(request):
            return error(401, "bad or missing token")
        matches = engine.store.catalog.find_by_name(name) if name else []
        return {"objects": [
            {"object_id": o.object_id, "media_type": o.media_type.value,
             "name": o.name, "path": o.path, "size": o.size}
            for o in matches
        ]}

    @app.get("/api/objects/{entity_id}")
    async def api_lookup(entity_id: str, request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        catalog = engine.store.catalog
        if entity_id in catalog.objects:
            obj = catalog.objects[entity_id]
            return {
                "object_id": obj.object_id,
                "media_type": obj.media_type.value,
                "name": obj.name,
                "path": obj.path,
                "size": obj.size,
                "segments": [
                    {
                        "segment_id": s.segment_id,
                        "sequence_number": s.sequence_number,
                        "start": s.start,
                        "end": s.end,
                        "kind": s.kind.value,
                    }
                    for s in catalog.segments_of(entity_id)
                ],
            }
        if entity_id in catalog.segments:
            s = catalog.segments[entity_id]
            return {
                "segment_id": s.segment_id,
                "object_id": s.object_id,
                "sequence_number": s.sequence_number,
                "start": s.start,
                "end": s.end,
                "kind": s.kind.value,
            }
        return error(404, f"unknown id {entity_id!r}")

    @app.get("/api/segments/{segment_id}/preview")
    async def api_preview(segment_id: str, request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        try:
            data, media_type = await run_guarded(render_preview, engine, segment_id)
        except UnknownSegment as exc:
            return error(404, str(exc))
        except asyncio.TimeoutError:
            return error(503, "preview timed out")
        return Response(data, media_type=media_type)

    @app.post("/api/ingest")
    async def api_ingest(request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        payload = await request.json()
        paths = payload.get("paths") or []
        pipeline = IngestPipeline(engine.store, config)

        def work():
            with engine.store.lock.write():
                return pipeline.ingest_paths(paths)

        reports, errors = await asyncio.get_running_loop().run_in_executor(None, work)
        return {
            "ingested": [
                {"object_id": r.object_id, "path": r.path, "media_type": r.media_type,
                 "segments": r.segments, "vectors": r.vectors}
                for r in reports
            ],
            "failures": [{"path": p, "error": e} for p, e in errors.failures],
        }

    @app.post("/api/index/build")
    async def api_index_build(request: Request):
        if not authorized(request):
            return error(401, "bad or missing token")
        pipeline = IngestPipeline(engine.store, config)
        await asyncio.get_running_loop().run_in_executor(None, pipeline.build)
        return {"status": "built", "categories": sorted(engine.store.tables)}

    # -- WebSocket ---------------------------------------------------------------

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({
                        "message_type": "ERROR", "request_id": "",
                        "payload": {"error": "unparseable message"},
                    }))
                    continue
                await _handle_ws_message(ws, engine, message)
        except WebSocketDisconnect:
            return

    return app


async def _handle_ws_message(ws: WebSocket, engine: RetrievalEngine, message: dict) -> None:
    config = engine.config
    request_id = str(message.get("request_id", ""))

    def msg(message_type: str, payload: dict) -> str:
        return json.dumps({
            "message_type": message_type,
            "request_id": request_id,
            "protocol_version": PROTOCOL_VERSION,
            "payload": payload,
        })

    if config.token and message.get("token") != config.token:
        await ws.send_text(msg("ERROR", {"error": "bad or missing token"}))
        return

    message_type = message.get("message_type")
    payload = message.get("payload") or {}
    loop = asyncio.get_running_loop()

    if message_type == "QUERY":
        try:
            query = parse_query_payload(payload, config)
        except (_TooLarge, InvalidQuery, MediaseekError) as exc:
            await ws.send_text(msg("ERROR", {"error": str(exc)}))
            return
        await ws.send_text(msg("QUERY_START", {}))

        # progressive per-category batches, then the fused final list
        session_id = payload.get("session_id")
        try:
            def run_terms():
                query.validate()
                with engine.store.lock.read():
                    components = []
                    for component in query.components:
                        cached_terms = []
                        for term in component.terms:
                            cached_terms.append(CachedTerm(
                                engine.category_scores_for_term(term, query.k),
                                dict(term.categories),
                            ))
                        components.append(cached_terms)
                return components

            components = await loop.run_in_executor(None, run_terms)
            for terms in components:
                for entry in terms:
                    for category, seg_scores in entry.category_scores.items():
                        ranked = sorted(seg_scores.items(), key=lambda kv: (-kv[1], kv[0]))
                        await ws.send_text(msg("RESULT_BATCH", {
                            "category": category,
                            "results": [
                                {"segment_id": seg, "score": score}
                                for seg, score in ranked[: query.k]
                            ],
                        }))
            cached = CachedQuery(components, query.k, query.media_filter)
            if session_id:
                engine.sessions.put(session_id, cached)
            results = engine._fuse_cached(cached)
        except MediaseekError as exc:
            await ws.send_text(msg("ERROR", {"error": str(exc)}))
            return
        await ws.send_text(msg("QUERY_END", {"results": result_rows(results)}))

    elif message_type == "MLT":
        try:
            results = await loop.run_in_executor(
                None,
                engine.more_like_this,
                payload.get("segment_id", ""),
                payload.get("categories") or ["average_color", "edge_histogram", "hog"],
                int(payload.get("k", config.result_k)),
            )
        except MediaseekError as exc:
            await ws.send_text(msg("ERROR", {"error": str(exc)}))
            return
        await ws.send_text(msg("QUERY_END", {"results": result_rows(results)}))

    elif message_type == "REFINE":
        media_filter: object = "unchanged"
        if "media_filter" in payload:
            raw = payload["media_filter"]
            media_filter = {MediaType(m) for m in raw} if raw else None
        try:
            results = engine.refine(
                payload.get("session_id", ""), payload.get("weights") or {}, media_filter
            )
        except MediaseekError as exc:
            await ws.send_text(msg("ERROR", {"error": str(exc)}))
            return
        await ws.send_text(msg("QUERY_END", {"results": result_rows(results)}))

    else:
        await ws.send_text(msg("ERROR", {"error": f"unknown message_type {message_type!r}"}))


# ---------------------------------------------------------------------------
# previews

def thumbnail(img: RasterImage, max_side: int = PREVIEW_MAX_SIDE) -> bytes:
    scale = max_side / max(img.width, img.height)
    w = max(1, round(img.width * scale))
    h = max(1, round(img.height * scale))
    return encode_png(resize_bilinear(img, w, h))


def render_preview(engine: RetrievalEngine, segment_id: str) -> tuple[bytes, str]:
    catalog = engine.store.catalog
    if segment_id not in catalog.segments:
        raise UnknownSegment(segment_id)
    segment = catalog.segments[segment_id]
    obj = catalog.objects[segment.object_id]

    if obj.media_type == MediaType.IMAGE:
        return thumbnail(load_image(obj.path)), "image/png"
    if obj.media_type == MediaType.MODEL_3D:
        mesh = load_mesh(obj.path)
        silhouette = lightfield_projections(normalize_mesh(mesh))[0]
        raster = RasterImage(np.repeat(silhouette[:, :, None] * 255, 3, axis=2).astype(np.uint8))
        return encode_png(raster), "image/png"
    if obj.media_type == MediaType.AUDIO:
        audio = load_audio(obj.path)
        excerpt = audio.samples[segment.start : segment.end]
        return write_wav(excerpt), "audio/wav"
    if obj.media_type == MediaType.VIDEO:
        from mediaseek.io import load_video_manifest
        from mediaseek.ingest import keyframe_index

        video = load_video_manifest(obj.path)
        if segment.kind == SegmentKind.SHOT:
            frame = video.frame(keyframe_index(segment.start, segment.end))
            return thumbnail(frame), "image/png"
        if video.audio is not None:
            excerpt = video.audio.samples[segment.start : segment.end]
            return write_wav(excerpt), "audio/wav"
    raise UnknownSegment(f"{segment_id}: no preview for this segment")
