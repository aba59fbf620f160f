"""Pure-NumPy implementations of the hot geometry kernels.

Selected automatically when the compiled extension is unavailable (or when
``MEDIASEEK_PURE=1``). Semantics are identical to ``_native``; the test
suite asserts bit-equality between the two backends.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_EPS = 1e-12


def _tri_box_overlap_batch(tri: np.ndarray, centers: np.ndarray, half: float) -> np.ndarray:
    """Separating-axis triangle/cube overlap for one triangle vs many cubes."""
    v = tri[None, :, :] - centers[:, None, :]  # (n, 3, 3)
    ok = np.ones(len(centers), dtype=bool)

    # Box face normals (AABB vs AABB).
    for axis in range(3):
        lo = v[:, :, axis].min(axis=1)
        hi = v[:, :, axis].max(axis=1)
        ok &= (lo <= half + _EPS) & (hi >= -half - _EPS)

    # Triangle plane.
    e0 = tri[1] - tri[0]
    e1 = tri[2] - tri[1]
    e2 = tri[0] - tri[2]
    normal = np.cross(e0, tri[2] - tri[0])
    r = half * np.abs(normal).sum()
    d = v[:, 0, :] @ normal
    ok &= np.abs(d) <= r + _EPS

    # Nine edge cross-products with the box axes.
    for edge in (e0, e1, e2):
        for axis in range(3):
            a = np.zeros(3)
            a[(axis + 1) % 3] = -edge[(axis + 2) % 3]
            a[(axis + 2) % 3] = edge[(axis + 1) % 3]
            p = v @ a  # (n, 3)
            rad = half * np.abs(a).sum()
            ok &= (p.min(axis=1) <= rad + _EPS) & (p.max(axis=1) >= -rad - _EPS)
    return ok


def voxelize_triangles(vertices: np.ndarray, faces: np.ndarray, grid: int) -> np.ndarray:
    """Surface voxelization over [-1, 1]^3: a voxel is set if any triangle
    intersects its cube."""
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    occupancy = np.zeros((grid, grid, grid), dtype=np.uint8)
    cell = 2.0 / grid
    half = cell / 2.0

    for face in faces:
        tri = vertices[face]
        lo = np.clip(np.floor((tri.min(axis=0) + 1.0) / cell - 1e-9).astype(int), 0, grid - 1)
        hi = np.clip(np.floor((tri.max(axis=0) + 1.0) / cell + 1e-9).astype(int), 0, grid - 1)
        ii, jj, kk = np.meshgrid(
            np.arange(lo[0], hi[0] + 1),
            np.arange(lo[1], hi[1] + 1),
            np.arange(lo[2], hi[2] + 1),
            indexing="ij",
        )
        idx = np.stack([ii.reshape(-1), jj.reshape(-1), kk.reshape(-1)], axis=1)
        if len(idx) == 0:
            continue
        centers = (idx + 0.5) * cell - 1.0
        hit = _tri_box_overlap_batch(tri, centers, half)
        sel = idx[hit]
        occupancy[sel[:, 0], sel[:, 1], sel[:, 2]] = 1
    return occupancy


def _draw_segment(img: np.ndarray, p: np.ndarray, q: np.ndarray, size: int, cell: float) -> None:
    lo = np.minimum(p, q) - cell
    hi = np.maximum(p, q) + cell
    j0 = max(0, int(np.floor((lo[0] + 1.0) / cell)))
    j1 = min(size - 1, int(np.floor((hi[0] + 1.0) / cell)))
    i0 = max(0, int(np.floor((1.0 - hi[1]) / cell)))
    i1 = min(size - 1, int(np.floor((1.0 - lo[1]) / cell)))
    if j1 < j0 or i1 < i0:
        return
    jj, ii = np.meshgrid(np.arange(j0, j1 + 1), np.arange(i0, i1 + 1))
    cx = -1.0 + (jj + 0.5) * cell
    cy = 1.0 - (ii + 0.5) * cell
    d = q - p
    len2 = float(d @ d)
    if len2 < _EPS:
        dist2 = (cx - p[0]) ** 2 + (cy - p[1]) ** 2
    else:
        t = np.clip(((cx - p[0]) * d[0] + (cy - p[1]) * d[1]) / len2, 0.0, 1.0)
        dist2 = (cx - (p[0] + t * d[0])) ** 2 + (cy - (p[1] + t * d[1])) ** 2
    hit = dist2 <= (cell / 2.0) ** 2
    img[ii[hit], jj[hit]] = 1


def rasterize_silhouette(triangles: np.ndarray, size: int) -> np.ndarray:
    """Binary orthographic silhouette over the [-1, 1]^2 image plane.

    A pixel is set when its centre lies inside a projected triangle. Row 0
    is the top of the image (y = +1). Exactly degenerate (zero-area)
    triangles are drawn as half-pixel-wide segments so edge-on geometry
    stays visible.
    """
    triangles = np.ascontiguousarray(triangles, dtype=np.float64).reshape(-1, 3, 2)
    img = np.zeros((size, size), dtype=np.uint8)
    cell = 2.0 / size

    for tri in triangles:
        a, b, c = tri
        area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area2) < _EPS:
            _draw_segment(img, a, b, size, cell)
            _draw_segment(img, b, c, size, cell)
            _draw_segment(img, c, a, size, cell)
            continue
        lo = tri.min(axis=0)
        hi = tri.max(axis=0)
        j0 = max(0, int(np.floor((lo[0] + 1.0) / cell)))
        j1 = min(size - 1, int(np.floor((hi[0] + 1.0) / cell)))
        i0 = max(0, int(np.floor((1.0 - hi[1]) / cell)))
        i1 = min(size - 1, int(np.floor((1.0 - lo[1]) / cell)))
        if j1 < j0 or i1 < i0:
            continue
        jj, ii = np.meshgrid(np.arange(j0, j1 + 1), np.arange(i0, i1 + 1))
        px = -1.0 + (jj + 0.5) * cell
        py = 1.0 - (ii + 0.5) * cell
        sign = 1.0 if area2 > 0 else -1.0
        w0 = ((b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])) * sign
        w1 = ((c[0] - b[0]) * (py - b[1]) - (c[1] - b[1]) * (px - b[0])) * sign
        w2 = ((a[0] - c[0]) * (py - c[1]) - (a[1] - c[1]) * (px - c[0])) * sign
        inside = (w0 >= -_EPS) & (w1 >= -_EPS) & (w2 >= -_EPS)
        img[ii[inside], jj[inside]] = 1
    return img
