"""Batch CLI: ingest, index build, query, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from mediaseek.config import Config
from mediaseek.engine import Query, QueryComponent, QueryTerm, RetrievalEngine, TermType
from mediaseek.errors import MediaseekError
from mediaseek.features.audio import AudioQueryCategory, audio_features_for_category
from mediaseek.ingest import IngestPipeline
from mediaseek.io import load_audio, load_image, load_mesh
from mediaseek.io.image_io import RasterImage
from mediaseek.store import VectorStore

TERM_KINDS = ("image", "sketch", "audio", "mesh", "sketch3d")


class _OrderedTermAction(argparse.Action):
    """Collects --term and --component in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        items = getattr(namespace, "term_sequence", None) or []
        if option_string == "--component":
            items.append(("component", None))
        else:
            items.append(("term", values))
        namespace.term_sequence = items


def _load_config(args) -> Config:
    if args.config:
        return Config.from_file(args.config)
    return Config()


def _open_engine(config: Config) -> RetrievalEngine:
    return RetrievalEngine(VectorStore.open(config.data_dir), config)


def cmd_ingest(args) -> int:
    config = _load_config(args)
    store = VectorStore.open(config.data_dir)
    pipeline = IngestPipeline(store, config)
    paths: list[Path] = []
    for raw in args.paths:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(q for q in p.rglob("*") if q.is_file()))
        else:
            paths.append(p)
    with store.lock.write():
        reports, errors = pipeline.ingest_paths(paths)
    pipeline.build()
    for r in reports:
        print(f"{r.object_id}  {r.media_type:<9} segments={r.segments:<4} "
              f"vectors={r.vectors:<6} {r.path}")
    print(f"ingested {len(reports)} objects into {config.data_dir}")
    if errors.failures:
        print(f"{len(errors.failures)} files failed:", file=sys.stderr)
        for path, message in errors.failures:
            print(f"  {path}: {message}", file=sys.stderr)
        return 1
    return 0


def cmd_index_build(args) -> int:
    config = _load_config(args)
    store = VectorStore.open(config.data_dir)
    pipeline = IngestPipeline(store, config)
    pipeline.build()
    print(f"indexes rebuilt for {len(store.tables)} tables in {config.data_dir}")
    return 0


def _build_term(kind: str, path: str, config: Config,
                audio_category: str | None) -> QueryTerm:
    if kind in ("image", "sketch"):
        categories = {c: 1.0 for c in config.image_categories}
        return QueryTerm(TermType.IMAGE, load_image(path), categories)
    if kind == "audio":
        routing = AudioQueryCategory((audio_category or "MATCHING").upper())
        categories = {c: 1.0 for c in audio_features_for_category(routing)}
        return QueryTerm(TermType.AUDIO, load_audio(path), categories, routing)
    if kind == "mesh":
        categories = {c: 1.0 for c in config.mesh_categories}
        return QueryTerm(TermType.MODEL_3D, load_mesh(path), categories)
    if kind == "sketch3d":
        return QueryTerm(TermType.MODEL_3D, load_image(path), {"lightfield": 1.0})
    raise MediaseekError(f"unknown term kind {kind!r}")


def cmd_query(args, parser: argparse.ArgumentParser) -> int:
    sequence = getattr(args, "term_sequence", None) or []
    term_specs = [v for kind, v in sequence if kind == "term"]
    if not term_specs:
        parser.error("query needs at least one --term")
    config = _load_config(args)
    engine = _open_engine(config)

    components: list[list[QueryTerm]] = [[]]
    for kind, value in sequence:
        if kind == "component":
            if components[-1]:
                components.append([])
            continue
        if "=" not in value:
            parser.error(f"--term must look like kind=path, got {value!r}")
        term_kind, path = value.split("=", 1)
        if term_kind not in TERM_KINDS:
            parser.error(f"unknown term kind {term_kind!r} (use one of {TERM_KINDS})")
        components[-1].append(_build_term(term_kind, path, config, args.audio_category))
    components = [c for c in components if c]

    query = Query([QueryComponent(terms) for terms in components], k=args.k)
    results = engine.execute_query(query)
    objects = engine.aggregate_objects(results)
    if args.json:
        print(json.dumps({
            "protocol_version": 1,
            "results": [
                {"segment_id": r.segment_id, "object_id": r.object_id,
                 "score": r.score, "per_category_scores": r.per_category_scores}
                for r in results
            ],
            "objects": [{"object_id": o, "score": s} for o, s in objects],
        }))
    else:
        for rank, r in enumerate(results, start=1):
            name = engine.store.catalog.objects.get(r.object_id)
            label = name.name if name else r.object_id
            print(f"{rank:>3}. {r.score:.4f}  {r.segment_id}  ({label})")
        if not results:
            print("no results")
    return 0


def cmd_eval(args) -> int:
    from mediaseek.evalharness import format_report, report_rows, run_scenarios

    config = _load_config(args)
    results = run_scenarios(args.scenarios, config.data_dir)
    print(format_report(results))
    if args.json_out:
        Path(args.json_out).write_text(report_rows(results))
        print(f"machine-readable report written to {args.json_out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from mediaseek.api import create_app

    config = _load_config(args)
    if args.port:
        config.port = args.port
    engine = _open_engine(config)
    app = create_app(engine)

    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(frontend), html=True), name="ui")
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mediaseek",
                                     description="content-based multimedia retrieval engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="decode, segment and index media files")
    p_ingest.add_argument("paths", nargs="+", help="files or directories to ingest")
    p_ingest.add_argument("--config", help="config file (key=value lines)")

    p_index = sub.add_parser("index", help="index maintenance")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p_build = index_sub.add_parser("build", help="rebuild VA/LSH/fingerprint indexes")
    p_build.add_argument("--config")

    p_query = sub.add_parser("query", help="run a composed query")
    p_query.add_argument("--term", action=_OrderedTermAction,
                         help="kind=path with kind in " + ",".join(TERM_KINDS))
    p_query.add_argument("--component", action=_OrderedTermAction, nargs=0,
                         help="start a new query component (OR branch)")
    p_query.add_argument("--audio-category", choices=["fingerprint", "matching", "version_id"],
                         help="feature routing for audio terms")
    p_query.add_argument("--k", type=int, default=100)
    p_query.add_argument("--json", action="store_true", help="machine-readable output")
    p_query.add_argument("--config")

    p_eval = sub.add_parser("eval", help="run scripted evaluation scenarios")
    p_eval.add_argument("--scenarios", required=True)
    p_eval.add_argument("--json-out", help="also write machine-readable rows here")
    p_eval.add_argument("--config")

    p_serve = sub.add_parser("serve", help="start the REST/WebSocket API")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--config")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "index":
            return cmd_index_build(args)
        if args.command == "query":
            return cmd_query(args, parser)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "serve":
            return cmd_serve(args)
    except MediaseekError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
