"""Engine configuration: one documented key-value text file per deployment.

Format: UTF-8 lines `key=value`, `#` comments. Unknown keys are rejected so
typos fail loudly. All experiment-relevant parameters (seeds, codebook
size, category lists) live here for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from mediaseek.errors import CorruptFile


@dataclass
class Config:
    data_dir: str = "data"
    port: int = 8765
    token: str = ""                  # empty disables API auth
    seed: int = 42
    bow_k: int = 512
    result_k: int = 100
    fetch_multiplier: int = 4        # kNN fetch depth = k * this
    session_ttl: float = 900.0       # seconds; 15 min idle eviction
    request_timeout: float = 30.0
    max_reference_bytes: int = 32 * 1024 * 1024
    image_categories: list[str] = field(
        default_factory=lambda: ["average_color", "edge_histogram", "hog", "surf_bow"]
    )
    audio_categories: list[str] = field(
        default_factory=lambda: ["fingerprint", "mfcc_shingle", "cens_shingle", "hpcp_shingle"]
    )
    mesh_categories: list[str] = field(default_factory=lambda: ["sphharm", "lightfield"])

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        cfg = cls()
        known = {f.name: f for f in fields(cls)}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CorruptFile(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise CorruptFile(f"{path}:{lineno}: unknown config key {key!r}")
            kind = known[key].type
            if kind == "int":
                setattr(cfg, key, int(value))
            elif kind == "float":
                setattr(cfg, key, float(value))
            elif kind == "list[str]":
                setattr(cfg, key, [v.strip() for v in value.split(",") if v.strip()])
            else:
                setattr(cfg, key, value)
        return cfg

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ",".join(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"
