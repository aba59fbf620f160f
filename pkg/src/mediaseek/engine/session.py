"""Per-session cache of raw category scores, enabling cheap re-weighting."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from mediaseek.catalog import MediaType
from mediaseek.errors import SessionExpired


@dataclass
class CachedTerm:
    """Raw per-category segment scores for one executed term."""

    category_scores: dict[str, dict[str, float]]  # category -> segment -> sim
    weights: dict[str, float]


@dataclass
class CachedQuery:
    components: list[list[CachedTerm]]
    k: int
    media_filter: set[MediaType] | None
    last_access: float = field(default_factory=time.monotonic)


class SessionCache:
    def __init__(self, ttl: float = 900.0):
        self.ttl = ttl
        self._entries: dict[str, CachedQuery] = {}
        self._lock = threading.Lock()

    def put(self, session_id: str, cached: CachedQuery) -> None:
        with self._lock:
            self._purge()
            cached.last_access = time.monotonic()
            self._entries[session_id] = cached

    def get(self, session_id: str) -> CachedQuery:
        with self._lock:
            self._purge()
            entry = self._entries.get(session_id)
            if entry is None:
                raise SessionExpired(f"no cached query for session {session_id!r}")
            entry.last_access = time.monotonic()
            return entry

    def _purge(self) -> None:
        deadline = time.monotonic() - self.ttl
        expired = [sid for sid, e in self._entries.items() if e.last_access < deadline]
        for sid in expired:
            del self._entries[sid]
