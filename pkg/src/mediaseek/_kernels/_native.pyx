# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the geometry kernels in ``_fallback``.

Same inputs, same outputs, same epsilon handling; only the inner loops are
written out in C. Keep both files in sync."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()

BACKEND = "native"

cdef double _EPS = 1e-12


cdef inline double _dmin3(double a, double b, double c) nogil:
    cdef double m = a
    if b < m:
        m = b
    if c < m:
        m = c
    return m


cdef inline double _dmax3(double a, double b, double c) nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    return m


cdef bint _tri_box_overlap(double[3][3] v, double half) nogil:
    cdef double lo, hi, d, r, p0, p1, p2
    cdef double e[3][3]
    cdef double n[3]
    cdef double a[3]
    cdef int axis, i, k

    for axis in range(3):
        lo = _dmin3(v[0][axis], v[1][axis], v[2][axis])
        hi = _dmax3(v[0][axis], v[1][axis], v[2][axis])
        if lo > half + _EPS or hi < -half - _EPS:
            return 0

    for k in range(3):
        for axis in range(3):
            e[k][axis] = v[(k + 1) % 3][axis] - v[k][axis]

    n[0] = e[0][1] * (v[2][2] - v[0][2]) - e[0][2] * (v[2][1] - v[0][1])
    n[1] = e[0][2] * (v[2][0] - v[0][0]) - e[0][0] * (v[2][2] - v[0][2])
    n[2] = e[0][0] * (v[2][1] - v[0][1]) - e[0][1] * (v[2][0] - v[0][0])
    r = half * (fabs(n[0]) + fabs(n[1]) + fabs(n[2]))
    d = v[0][0] * n[0] + v[0][1] * n[1] + v[0][2] * n[2]
    if fabs(d) > r + _EPS:
        return 0

    for k in range(3):
        for axis in range(3):
            a[0] = 0.0
            a[1] = 0.0
            a[2] = 0.0
            a[(axis + 1) % 3] = -e[k][(axis + 2) % 3]
            a[(axis + 2) % 3] = e[k][(axis + 1) % 3]
            p0 = v[0][0] * a[0] + v[0][1] * a[1] + v[0][2] * a[2]
            p1 = v[1][0] * a[0] + v[1][1] * a[1] + v[1][2] * a[2]
            p2 = v[2][0] * a[0] + v[2][1] * a[1] + v[2][2] * a[2]
            r = half * (fabs(a[0]) + fabs(a[1]) + fabs(a[2]))
            if _dmin3(p0, p1, p2) > r + _EPS or _dmax3(p0, p1, p2) < -r - _EPS:
                return 0
    return 1


def voxelize_triangles(vertices, faces, int grid):
    """Surface voxelization over [-1, 1]^3; see the fallback docstring."""
    cdef double[:, ::1] verts = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef long long[:, ::1] tris = np.ascontiguousarray(faces, dtype=np.int64)
    occupancy = np.zeros((grid, grid, grid), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] occ = occupancy
    cdef double cell = 2.0 / grid
    cdef double half = cell / 2.0
    cdef double tri[3][3]
    cdef double v[3][3]
    cdef double lo, hi, center
    cdef int ilo[3]
    cdef int ihi[3]
    cdef Py_ssize_t f, i, j, k, axis, vi
    cdef int gi, gj, gk

    for f in range(tris.shape[0]):
        for vi in range(3):
            for axis in range(3):
                tri[vi][axis] = verts[tris[f, vi], axis]
        for axis in range(3):
            lo = _dmin3(tri[0][axis], tri[1][axis], tri[2][axis])
            hi = _dmax3(tri[0][axis], tri[1][axis], tri[2][axis])
            ilo[axis] = <int>floor((lo + 1.0) / cell - 1e-9)
            ihi[axis] = <int>floor((hi + 1.0) / cell + 1e-9)
            if ilo[axis] < 0:
                ilo[axis] = 0
            if ilo[axis] > grid - 1:
                ilo[axis] = grid - 1
            if ihi[axis] < 0:
                ihi[axis] = 0
            if ihi[axis] > grid - 1:
                ihi[axis] = grid - 1
        for gi in range(ilo[0], ihi[0] + 1):
            for gj in range(ilo[1], ihi[1] + 1):
                for gk in range(ilo[2], ihi[2] + 1):
                    if occ[gi, gj, gk]:
                        continue
                    for vi in range(3):
                        center = (gi + 0.5) * cell - 1.0
                        v[vi][0] = tri[vi][0] - center
                        center = (gj + 0.5) * cell - 1.0
                        v[vi][1] = tri[vi][1] - center
                        center = (gk + 0.5) * cell - 1.0
                        v[vi][2] = tri[vi][2] - center
                    if _tri_box_overlap(v, half):
                        occ[gi, gj, gk] = 1
    return occupancy


cdef void _draw_segment(unsigned char[:, ::1] img, double px, double py,
                        double qx, double qy, int size, double cell) nogil:
    cdef double lox = (px if px < qx else qx) - cell
    cdef double hix = (px if px > qx else qx) + cell
    cdef double loy = (py if py < qy else qy) - cell
    cdef double hiy = (py if py > qy else qy) + cell
    cdef int j0 = <int>floor((lox + 1.0) / cell)
    cdef int j1 = <int>floor((hix + 1.0) / cell)
    cdef int i0 = <int>floor((1.0 - hiy) / cell)
    cdef int i1 = <int>floor((1.0 - loy) / cell)
    cdef double dx = qx - px
    cdef double dy = qy - py
    cdef double len2 = dx * dx + dy * dy
    cdef double cx, cy, t, ddx, ddy, dist2
    cdef int i, j
    if j0 < 0:
        j0 = 0
    if j1 > size - 1:
        j1 = size - 1
    if i0 < 0:
        i0 = 0
    if i1 > size - 1:
        i1 = size - 1
    for i in range(i0, i1 + 1):
        cy = 1.0 - (i + 0.5) * cell
        for j in range(j0, j1 + 1):
            cx = -1.0 + (j + 0.5) * cell
            if len2 < _EPS:
                ddx = cx - px
                ddy = cy - py
            else:
                t = ((cx - px) * dx + (cy - py) * dy) / len2
                if t < 0.0:
                    t = 0.0
                if t > 1.0:
                    t = 1.0
                ddx = cx - (px + t * dx)
                ddy = cy - (py + t * dy)
            dist2 = ddx * ddx + ddy * ddy
            if dist2 <= (cell / 2.0) * (cell / 2.0):
                img[i, j] = 1


def rasterize_silhouette(triangles, int size):
    """Binary silhouette rasterization; see the fallback docstring."""
    cdef double[:, :, ::1] tris = np.ascontiguousarray(triangles, dtype=np.float64).reshape(-1, 3, 2)
    image = np.zeros((size, size), dtype=np.uint8)
    cdef unsigned char[:, ::1] img = image
    cdef double cell = 2.0 / size
    cdef double ax, ay, bx, by, cx, cy, area2, sign
    cdef double lox, hix, loy, hiy, px, py, w0, w1, w2
    cdef int j0, j1, i0, i1, i, j
    cdef Py_ssize_t f

    for f in range(tris.shape[0]):
        ax = tris[f, 0, 0]
        ay = tris[f, 0, 1]
        bx = tris[f, 1, 0]
        by = tris[f, 1, 1]
        cx = tris[f, 2, 0]
        cy = tris[f, 2, 1]
        area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if fabs(area2) < _EPS:
            _draw_segment(img, ax, ay, bx, by, size, cell)
            _draw_segment(img, bx, by, cx, cy, size, cell)
            _draw_segment(img, cx, cy, ax, ay, size, cell)
            continue
        sign = 1.0 if area2 > 0 else -1.0
        lox = _dmin3(ax, bx, cx)
        hix = _dmax3(ax, bx, cx)
        loy = _dmin3(ay, by, cy)
        hiy = _dmax3(ay, by, cy)
        j0 = <int>floor((lox + 1.0) / cell)
        j1 = <int>floor((hix + 1.0) / cell)
        i0 = <int>floor((1.0 - hiy) / cell)
        i1 = <int>floor((1.0 - loy) / cell)
        if j0 < 0:
            j0 = 0
        if j1 > size - 1:
            j1 = size - 1
        if i0 < 0:
            i0 = 0
        if i1 > size - 1:
            i1 = size - 1
        if j1 < j0 or i1 < i0:
            continue
        for i in range(i0, i1 + 1):
            py = 1.0 - (i + 0.5) * cell
            for j in range(j0, j1 + 1):
                if img[i, j]:
                    continue
                px = -1.0 + (j + 0.5) * cell
                w0 = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) * sign
                w1 = ((cx - bx) * (py - by) - (cy - by) * (px - bx)) * sign
                w2 = ((ax - cx) * (py - cy) - (ay - cy) * (px - cx)) * sign
                if w0 >= -_EPS and w1 >= -_EPS and w2 >= -_EPS:
                    img[i, j] = 1
    return image
