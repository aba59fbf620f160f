"""Wavefront OBJ loading (v/f subset, fan triangulation)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mediaseek.errors import CorruptFile


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # float64, shape (n, 3)
    faces: np.ndarray     # int64, shape (m, 3), 0-based

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and int(self.faces.max()) >= len(self.vertices):
            raise ValueError("face index out of range")
        if len(self.faces) and int(self.faces.min()) < 0:
            raise ValueError("negative face index")


def load_mesh(path: str | Path) -> TriangleMesh:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise CorruptFile(f"{path}:{lineno}: vertex needs 3 coordinates")
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise CorruptFile(f"{path}:{lineno}: malformed vertex") from exc
        elif parts[0] == "f":
            if len(parts) < 4:
                raise CorruptFile(f"{path}:{lineno}: face needs at least 3 vertices")
            idx = [_face_index(p, len(vertices), path, lineno) for p in parts[1:]]
            for i in range(1, len(idx) - 1):  # fan triangulation
                faces.append((idx[0], idx[i], idx[i + 1]))
        # vn / vt / usemtl / o / g / s records are ignored

    try:
        return TriangleMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                            np.array(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc


def _face_index(token: str, vertex_count: int, path: str | Path, lineno: int) -> int:
    head = token.split("/", 1)[0]
    try:
        one_based = int(head)
    except ValueError as exc:
        raise CorruptFile(f"{path}:{lineno}: malformed face index {token!r}") from exc
    if one_based < 1 or one_based > vertex_count:
        raise CorruptFile(f"{path}:{lineno}: face index {one_based} out of range")
    return one_based - 1
