from mediaseek.engine.executor import RetrievalEngine, segment_of_row
from mediaseek.engine.model import Query, QueryComponent, QueryTerm, ScoredResult, TermType

__all__ = [
    "Query",
    "QueryComponent",
    "QueryTerm",
    "RetrievalEngine",
    "ScoredResult",
    "TermType",
    "segment_of_row",
]
