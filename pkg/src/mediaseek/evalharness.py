"""Ranked-retrieval metrics and a scripted scenario runner.

Scenario scripts are key-value text blocks:

    [scenario]
    id = fp-1
    term = audio:queries/excerpt.wav     # image: / audio: / mesh: / sketch:
    audio_category = FINGERPRINT         # optional routing for audio terms
    weights = cens_shingle:1.0           # optional category weights
    truth_path = corpus/track07.wav      # planted item(s) -> rating 3
    class_path = corpus/track08.wav      # same-class item(s) -> rating 2

Results are auto-rated from the ground truth (planted item 3, same-class 2,
otherwise 0), judged over the top 15 objects per scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mediaseek.catalog import object_id_for_file
from mediaseek.engine import Query, QueryComponent, QueryTerm, RetrievalEngine, TermType
from mediaseek.errors import EngineUnreachable, InvalidRating, MalformedScript
from mediaseek.features.audio import AudioQueryCategory, audio_features_for_category
from mediaseek.io import load_audio, load_image, load_mesh

JUDGED_DEPTH = 15
VALID_RATINGS = (0, 1, 2, 3)


# ---------------------------------------------------------------------------
# metrics

def to_binary(ratings: list[int]) -> list[int]:
    """Ratings 2 and 3 are hits; 0 and 1 are misses."""
    out = []
    for r in ratings:
        if r not in VALID_RATINGS:
            raise InvalidRating(f"rating {r!r} outside the four-point scale")
        out.append(1 if r >= 2 else 0)
    return out


def precision_at_k(hits: list[int], k: int = JUDGED_DEPTH) -> float:
    padded = list(hits[:k]) + [0] * max(0, k - len(hits))
    return sum(padded) / k


def mrr(hits: list[int]) -> float:
    for i, h in enumerate(hits, start=1):
        if h:
            return 1.0 / i
    return 0.0


def average_precision(hits: list[int]) -> float:
    precisions = []
    seen = 0
    for i, h in enumerate(hits, start=1):
        if h:
            seen += 1
            precisions.append(seen / i)
    return float(np.mean(precisions)) if precisions else 0.0


def ndcg_at_k(ratings: list[int], k: int = JUDGED_DEPTH) -> float:
    """Linear gain, log2(i+1) discount; all-zero ratings give 0."""
    for r in ratings:
        if r not in VALID_RATINGS:
            raise InvalidRating(f"rating {r!r} outside the four-point scale")
    padded = list(ratings[:k]) + [0] * max(0, k - len(ratings))
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = float(np.asarray(padded, dtype=float) @ discounts)
    ideal = sorted(padded, reverse=True)
    idcg = float(np.asarray(ideal, dtype=float) @ discounts)
    return dcg / idcg if idcg > 0 else 0.0


# ---------------------------------------------------------------------------
# scenario model

@dataclass
class RelevanceJudgment:
    rank: int  # 1-based
    rating: int

    def __post_init__(self) -> None:
        if self.rating not in VALID_RATINGS:
            raise InvalidRating(f"rating {self.rating} outside the four-point scale")


@dataclass
class ScenarioSpec:
    scenario_id: str
    terms: list[tuple[str, str]]  # (kind, path)
    audio_category: AudioQueryCategory | None = None
    weights: dict[str, float] = field(default_factory=dict)
    truth_ids: set[str] = field(default_factory=set)
    class_ids: set[str] = field(default_factory=set)


@dataclass
class ScenarioResult:
    scenario_id: str
    judgments: list[RelevanceJudgment]
    query_count: int
    success: bool
    metrics: dict[str, float]


def parse_script(path: str | Path) -> list[ScenarioSpec]:
    scenarios: list[ScenarioSpec] = []
    current: dict | None = None
    base = Path(path).parent

    def finish():
        if current is None:
            return
        if "id" not in current or not current.get("terms"):
            raise MalformedScript(f"{path}: scenario needs an id and at least one term")
        scenarios.append(ScenarioSpec(
            scenario_id=current["id"],
            terms=current["terms"],
            audio_category=current.get("audio_category"),
            weights=current.get("weights", {}),
            truth_ids=current.get("truth_ids", set()),
            class_ids=current.get("class_ids", set()),
        ))

    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise MalformedScript(f"{path}: unreadable script") from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[scenario]":
            finish()
            current = {"terms": []}
            continue
        if current is None or "=" not in line:
            raise MalformedScript(f"{path}:{lineno}: expected [scenario] or key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "id":
            current["id"] = value
        elif key == "term":
            if ":" not in value:
                raise MalformedScript(f"{path}:{lineno}: term must be kind:path")
            kind, doc_path = value.split(":", 1)
            if kind not in ("image", "audio", "mesh", "sketch", "sketch3d"):
                raise MalformedScript(f"{path}:{lineno}: unknown term kind {kind!r}")
            current["terms"].append((kind, str(base / doc_path)))
        elif key == "audio_category":
            current["audio_category"] = AudioQueryCategory(value)
        elif key == "weights":
            weights = {}
            for pair in value.split(","):
                name, w = pair.split(":")
                weights[name.strip()] = float(w)
            current["weights"] = weights
        elif key in ("truth_path", "class_path"):
            ids = {object_id_for_file(base / p.strip()) for p in value.split(",") if p.strip()}
            slot = "truth_ids" if key == "truth_path" else "class_ids"
            current.setdefault(slot, set()).update(ids)
        elif key in ("truth_id", "class_id"):
            slot = "truth_ids" if key == "truth_id" else "class_ids"
            current.setdefault(slot, set()).update(
                v.strip() for v in value.split(",") if v.strip()
            )
        else:
            raise MalformedScript(f"{path}:{lineno}: unknown key {key!r}")
    finish()
    if not scenarios:
        raise MalformedScript(f"{path}: no scenarios found")
    return scenarios


def _build_term(kind: str, doc_path: str, spec: ScenarioSpec,
                engine: RetrievalEngine) -> QueryTerm:
    config = engine.config
    if kind in ("image", "sketch"):
        categories = spec.weights or {
            c: 1.0 for c in config.image_categories if c != "surf_bow"
        }
        return QueryTerm(TermType.IMAGE, load_image(doc_path), categories)
    if kind == "sketch3d":
        return QueryTerm(TermType.MODEL_3D, load_image(doc_path),
                         spec.weights or {"lightfield": 1.0})
    if kind == "audio":
        routing = spec.audio_category or AudioQueryCategory.MATCHING
        categories = spec.weights or {
            c: 1.0 for c in audio_features_for_category(routing)
        }
        return QueryTerm(TermType.AUDIO, load_audio(doc_path), categories, routing)
    if kind == "mesh":
        categories = spec.weights or {"sphharm": 1.0}
        return QueryTerm(TermType.MODEL_3D, load_mesh(doc_path), categories)
    raise MalformedScript(f"unknown term kind {kind!r}")


def run_scenario(spec: ScenarioSpec, engine: RetrievalEngine) -> ScenarioResult:
    terms = [_build_term(kind, p, spec, engine) for kind, p in spec.terms]
    query = Query([QueryComponent(terms)], k=max(100, JUDGED_DEPTH))
    results = engine.execute_query(query)
    objects = engine.aggregate_objects(results)[:JUDGED_DEPTH]

    ratings = []
    for object_id, _score in objects:
        if object_id in spec.truth_ids:
            ratings.append(3)
        elif object_id in spec.class_ids:
            ratings.append(2)
        else:
            ratings.append(0)
    ratings += [0] * (JUDGED_DEPTH - len(ratings))
    judgments = [RelevanceJudgment(i + 1, r) for i, r in enumerate(ratings)]

    hits = to_binary(ratings)
    metrics = {
        "ndcg@15": ndcg_at_k(ratings),
        "p@15": precision_at_k(hits),
        "mrr": mrr(hits),
        "map": average_precision(hits),
    }
    return ScenarioResult(
        scenario_id=spec.scenario_id,
        judgments=judgments,
        query_count=1,
        success=any(r == 3 for r in ratings),
        metrics=metrics,
    )


def run_scenarios(script_path: str | Path, data_dir: str | Path,
                  engine: RetrievalEngine | None = None) -> list[ScenarioResult]:
    if engine is None:
        from mediaseek.store import VectorStore

        if not (Path(data_dir) / "catalog.bin").exists():
            raise EngineUnreachable(f"no engine data at {data_dir}")
        engine = RetrievalEngine(VectorStore.open(data_dir))
    if not engine.store.catalog.objects:
        raise EngineUnreachable("engine catalog is empty")
    return [run_scenario(spec, engine) for spec in parse_script(script_path)]


def format_report(results: list[ScenarioResult]) -> str:
    header = f"{'scenario':<16}{'NDCG@15':>9}{'p@15':>8}{'MRR':>7}{'MAP':>7}{'success':>9}{'queries':>9}"
    lines = [header, "-" * len(header)]
    for r in results:
        m = r.metrics
        lines.append(
            f"{r.scenario_id:<16}{m['ndcg@15']:>9.3f}{m['p@15']:>8.3f}"
            f"{m['mrr']:>7.3f}{m['map']:>7.3f}{str(r.success):>9}{r.query_count:>9}"
        )
    return "\n".join(lines)


def report_rows(results: list[ScenarioResult]) -> str:
    rows = [
        {
            "scenario": r.scenario_id,
            "metrics": r.metrics,
            "success": r.success,
            "query_count": r.query_count,
            "ratings": [j.rating for j in r.judgments],
        }
        for r in results
    ]
    return json.dumps(rows, indent=2, sort_keys=True)
