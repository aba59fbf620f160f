"""3D shape descriptors.

Two families: a rotation-invariant spherical-harmonics energy signature
(sampled from a surface voxelization) and a light-field descriptor built
from silhouettes rendered along the ten antipodal vertex axes of a
dodecahedron (Zernike + contour-Fourier magnitudes per view).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import label as nd_label
from scipy.special import lpmv

# (interior filling below relies on nd_label's default 6-connectivity)

from mediaseek._kernels import rasterize_silhouette, voxelize_triangles
from mediaseek.errors import DegenerateMesh, EmptyImage
from mediaseek.features import DescriptorVector
from mediaseek.io.image_io import RasterImage
from mediaseek.io.mesh_io import TriangleMesh

VOXEL_GRID = 64
SH_SHELLS = 32
SH_MAX_DEGREE = 4
SH_GRID = 64  # equiangular theta x phi samples per shell

SILHOUETTE_SIZE = 256
ZERNIKE_MAX_ORDER = 10
FOURIER_HARMONICS = 10
FOURIER_SAMPLES = 128

_GOLDEN = (1 + 5**0.5) / 2

# One canonical vertex per antipodal pair of the dodecahedron; order is fixed.
VIEW_AXES = np.array([
    (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
    (0, 1 / _GOLDEN, _GOLDEN), (0, 1 / _GOLDEN, -_GOLDEN),
    (1 / _GOLDEN, _GOLDEN, 0), (1 / _GOLDEN, -_GOLDEN, 0),
    (_GOLDEN, 0, 1 / _GOLDEN), (_GOLDEN, 0, -1 / _GOLDEN),
], dtype=np.float64)
VIEW_AXES /= np.linalg.norm(VIEW_AXES, axis=1, keepdims=True)


@dataclass
class NormalizedMesh:
    mesh: TriangleMesh
    applied_translation: np.ndarray
    applied_scale: float


@dataclass
class LightFieldDescriptor:
    views: np.ndarray  # (10, 45): 35 Zernike + 10 Fourier magnitudes per view


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    c = mesh.vertices[mesh.faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def normalize_mesh(mesh: TriangleMesh) -> NormalizedMesh:
    """Area-weighted surface centroid to the origin, max vertex radius to 1."""
    if len(mesh.faces) == 0:
        raise DegenerateMesh("mesh has no faces")
    areas = triangle_areas(mesh)
    total = float(areas.sum())
    if total <= 0:
        raise DegenerateMesh("mesh surface area is zero")
    tri_centroids = mesh.vertices[mesh.faces].mean(axis=1)
    centroid = (areas[:, None] * tri_centroids).sum(axis=0) / total
    shifted = mesh.vertices - centroid
    radius = float(np.linalg.norm(shifted, axis=1).max())
    if radius <= 0:
        raise DegenerateMesh("mesh collapses to a point")
    scale = 1.0 / radius
    return NormalizedMesh(
        TriangleMesh(shifted * scale, mesh.faces.copy()),
        applied_translation=-centroid,
        applied_scale=scale,
    )


# ---------------------------------------------------------------------------
# spherical harmonics descriptor

def real_sph_harm(degree: int, order: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonics (order < 0 selects the sine form)."""
    m = abs(order)
    norm = math.sqrt((2 * degree + 1) / (4 * math.pi)
                     * math.factorial(degree - m) / math.factorial(degree + m))
    legendre = lpmv(m, degree, np.cos(theta))
    if order == 0:
        return norm * legendre
    if order > 0:
        return math.sqrt(2.0) * norm * legendre * np.cos(m * phi)
    return math.sqrt(2.0) * norm * legendre * np.sin(m * phi)


@lru_cache(maxsize=1)
def _sh_sampling():
    """Unit directions on the equiangular grid plus the weighted SH basis."""
    thetas = (np.arange(SH_GRID) + 0.5) * np.pi / SH_GRID
    phis = (np.arange(SH_GRID) + 0.5) * 2.0 * np.pi / SH_GRID
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    theta = tt.reshape(-1)
    phi = pp.reshape(-1)
    dirs = np.stack([
        np.sin(theta) * np.cos(phi),
        np.sin(theta) * np.sin(phi),
        np.cos(theta),
    ], axis=1)
    quad_weight = np.sin(theta) * (np.pi / SH_GRID) * (2.0 * np.pi / SH_GRID)
    basis = []
    for degree in range(SH_MAX_DEGREE + 1):
        for order in range(-degree, degree + 1):
            basis.append(real_sph_harm(degree, order, theta, phi) * quad_weight)
    return dirs, np.array(basis)  # basis: (25, SH_GRID^2) with weights folded in


def voxelize(nm: NormalizedMesh, grid: int = VOXEL_GRID) -> np.ndarray:
    """Surface voxelization: set where any triangle intersects the voxel."""
    return voxelize_triangles(nm.mesh.vertices, nm.mesh.faces, grid)


def solid_occupancy(nm: NormalizedMesh, grid: int = VOXEL_GRID) -> np.ndarray:
    """Surface voxels plus enclosed interior (complement of the exterior
    flood fill). The solid field is what the shells sample: a thin surface
    band alone changes thickness with orientation, which breaks rotation
    invariance at this grid size."""
    surface = voxelize(nm, grid)
    labels, _ = nd_label(surface == 0)
    border = np.unique(np.concatenate([
        labels[0].reshape(-1), labels[-1].reshape(-1),
        labels[:, 0].reshape(-1), labels[:, -1].reshape(-1),
        labels[:, :, 0].reshape(-1), labels[:, :, -1].reshape(-1),
    ]))
    exterior = np.isin(labels, border[border != 0])
    return (~exterior).astype(np.uint8)


def shell_samples(occupancy: np.ndarray) -> np.ndarray:
    """(SH_SHELLS, SH_GRID^2) shell functions sampled from the occupancy grid
    by trilinear interpolation at voxel centres."""
    grid = occupancy.shape[0]
    occ = occupancy.astype(np.float64)
    dirs, _ = _sh_sampling()
    radii = (np.arange(SH_SHELLS) + 1.0) / SH_SHELLS
    points = radii[:, None, None] * dirs[None, :, :]
    g = (points + 1.0) * 0.5 * grid - 0.5
    g0 = np.clip(np.floor(g).astype(np.int64), 0, grid - 1)
    g1 = np.clip(g0 + 1, 0, grid - 1)
    w = np.clip(g - g0, 0.0, 1.0)
    out = np.zeros(points.shape[:2])
    for dx in (0, 1):
        wx = w[..., 0] if dx else 1.0 - w[..., 0]
        ix = (g1 if dx else g0)[..., 0]
        for dy in (0, 1):
            wy = w[..., 1] if dy else 1.0 - w[..., 1]
            iy = (g1 if dy else g0)[..., 1]
            for dz in (0, 1):
                wz = w[..., 2] if dz else 1.0 - w[..., 2]
                iz = (g1 if dz else g0)[..., 2]
                out += wx * wy * wz * occ[ix, iy, iz]
    return out


def sh_descriptor(nm: NormalizedMesh) -> DescriptorVector:
    """Per-shell, per-degree SH energy: SH_SHELLS x (SH_MAX_DEGREE+1) values."""
    shells = shell_samples(solid_occupancy(nm))
    _, basis = _sh_sampling()
    coeffs = shells @ basis.T  # (shells, 25)
    energies = np.zeros((SH_SHELLS, SH_MAX_DEGREE + 1))
    col = 0
    for degree in range(SH_MAX_DEGREE + 1):
        width = 2 * degree + 1
        energies[:, degree] = (coeffs[:, col : col + width] ** 2).sum(axis=1)
        col += width
    return DescriptorVector("sphharm", energies.reshape(-1))


# ---------------------------------------------------------------------------
# light field: silhouettes from the canonical view axes

def view_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = direction / np.linalg.norm(direction)
    up = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(up, d)
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    return u, v


def lightfield_projections(nm: NormalizedMesh) -> list[np.ndarray]:
    """Ten binary silhouettes (SILHOUETTE_SIZE^2) in canonical view order."""
    if len(nm.mesh.faces) == 0:
        raise DegenerateMesh("mesh has no faces")
    images = []
    for axis in VIEW_AXES:
        u, v = view_basis(axis)
        proj = np.stack([nm.mesh.vertices @ u, nm.mesh.vertices @ v], axis=1)
        images.append(rasterize_silhouette(proj[nm.mesh.faces], SILHOUETTE_SIZE))
    return images


# ---------------------------------------------------------------------------
# Zernike moments

@lru_cache(maxsize=None)
def _zernike_radial_coeffs(n: int, m: int) -> tuple[tuple[int, float], ...]:
    terms = []
    for s in range((n - m) // 2 + 1):
        coeff = ((-1) ** s * math.factorial(n - s)
                 / (math.factorial(s)
                    * math.factorial((n + m) // 2 - s)
                    * math.factorial((n - m) // 2 - s)))
        terms.append((n - 2 * s, float(coeff)))
    return tuple(terms)


def zernike_pairs() -> list[tuple[int, int]]:
    """(n, m) with n <= 10, m >= 0, n - m even; (0, 0) dropped -> 35 pairs."""
    pairs = [(n, m) for n in range(ZERNIKE_MAX_ORDER + 1) for m in range(n % 2, n + 1, 2)]
    return pairs[1:]


def zernike_magnitudes(silhouette: np.ndarray) -> np.ndarray:
    """35 |A_nm| moments of a binary image, centred and scaled to the unit disc."""
    rows, cols = np.nonzero(silhouette)
    if len(rows) == 0:
        raise EmptyImage("no set pixels in silhouette")
    cy, cx = rows.mean(), cols.mean()
    radius = np.sqrt(((rows - cy) ** 2 + (cols - cx) ** 2)).max()
    if radius <= 0:
        radius = 1.0
    x = (cols - cx) / radius
    y = (rows - cy) / radius
    rho = np.hypot(x, y)
    inside = rho <= 1.0
    rho = rho[inside]
    theta = np.arctan2(y[inside], x[inside])
    pixel_area = 1.0 / (radius * radius)

    powers = {p: rho**p for p in range(ZERNIKE_MAX_ORDER + 1)}
    out = np.empty(len(zernike_pairs()))
    for i, (n, m) in enumerate(zernike_pairs()):
        radial = np.zeros_like(rho)
        for power, coeff in _zernike_radial_coeffs(n, m):
            radial += coeff * powers[power]
        re = (radial * np.cos(m * theta)).sum()
        im = (radial * np.sin(m * theta)).sum()
        out[i] = (n + 1) / np.pi * pixel_area * np.hypot(re, im)
    return out


# ---------------------------------------------------------------------------
# Fourier contour signature

_MOORE = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def largest_component(silhouette: np.ndarray) -> np.ndarray:
    labels, count = nd_label(silhouette > 0, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        raise EmptyImage("no set pixels in silhouette")
    sizes = np.bincount(labels.reshape(-1))
    sizes[0] = 0
    return labels == sizes.argmax()


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Outer boundary of a connected mask via Moore-neighbour tracing.

    The walk keeps the previously examined empty neighbour as a backtrack
    position and stops when the start pixel is re-entered from the original
    direction (Jacob's criterion)."""
    rows, cols = np.nonzero(mask)
    start = (int(rows.min()), int(cols[rows == rows.min()].min()))
    h, w = mask.shape

    def is_set(p):
        return 0 <= p[0] < h and 0 <= p[1] < w and bool(mask[p])

    current = start
    backtrack = (start[0], start[1] - 1)  # scanned in from the west
    contour = [start]
    first_state: tuple | None = None
    for _ in range(4 * mask.size):
        offset = (backtrack[0] - current[0], backtrack[1] - current[1])
        base = _MOORE.index(offset)
        for step in range(1, 9):
            d = (base + step) % 8
            candidate = (current[0] + _MOORE[d][0], current[1] + _MOORE[d][1])
            if is_set(candidate):
                prev = (d - 1) % 8
                next_backtrack = (current[0] + _MOORE[prev][0], current[1] + _MOORE[prev][1])
                break
        else:
            return np.array(contour)  # isolated pixel
        # boundary is closed once the first move recurs with the same entry
        state = (candidate, next_backtrack)
        if first_state is None:
            first_state = state
        elif state == first_state:
            return np.array(contour)
        contour.append(candidate)
        current, backtrack = candidate, next_backtrack
    raise RuntimeError("contour tracing did not terminate")


def fourier_contour(silhouette: np.ndarray) -> np.ndarray:
    """Magnitudes of harmonics 1..10 of the centroid-distance signature,
    normalized by harmonic 0."""
    mask = largest_component(silhouette)
    contour = trace_contour(mask).astype(np.float64)
    centroid = contour.mean(axis=0)

    if len(contour) < 2:
        return np.zeros(FOURIER_HARMONICS)
    closed = np.vstack([contour, contour[:1]])
    steps = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    total = arc[-1]
    if total <= 0:
        return np.zeros(FOURIER_HARMONICS)
    targets = np.arange(FOURIER_SAMPLES) * total / FOURIER_SAMPLES
    ys = np.interp(targets, arc, closed[:, 0])
    xs = np.interp(targets, arc, closed[:, 1])
    signature = np.hypot(ys - centroid[0], xs - centroid[1])

    spectrum = np.abs(np.fft.fft(signature))
    if spectrum[0] <= 0:
        return np.zeros(FOURIER_HARMONICS)
    return spectrum[1 : FOURIER_HARMONICS + 1] / spectrum[0]


# ---------------------------------------------------------------------------
# full light-field descriptor + alignment distance

def view_descriptor(silhouette: np.ndarray) -> np.ndarray:
    return np.concatenate([zernike_magnitudes(silhouette), fourier_contour(silhouette)])


def lightfield_descriptor(nm: NormalizedMesh) -> LightFieldDescriptor:
    views = np.stack([view_descriptor(s) for s in lightfield_projections(nm)])
    return LightFieldDescriptor(views)


def _rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    k = np.array([
        [0, -axis[2], axis[1]],
        [axis[2], 0, -axis[0]],
        [-axis[1], axis[0], 0],
    ])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


@lru_cache(maxsize=1)
def rotation_group_permutations() -> tuple[tuple[int, ...], ...]:
    """The 60 rotations of the dodecahedral group as permutations of the
    ten view axes (antipodal images count as the same axis)."""
    # 5-fold face axis of THIS vertex layout (dual icosahedron is anti-cyclic)
    gen_a = _rotation_about(np.array([0.0, _GOLDEN, 1.0]), 2 * np.pi / 5)
    gen_b = _rotation_about(np.array([1.0, 1.0, 1.0]), 2 * np.pi / 3)     # vertex axis
    group: list[np.ndarray] = [np.eye(3)]

    def key(m: np.ndarray) -> tuple:
        return tuple(np.round(m, 9).reshape(-1))

    seen = {key(np.eye(3))}
    frontier = [np.eye(3)]
    while frontier:
        nxt = []
        for m in frontier:
            for g in (gen_a, gen_b):
                cand = g @ m
                k = key(cand)
                if k not in seen:
                    seen.add(k)
                    group.append(cand)
                    nxt.append(cand)
        frontier = nxt
    if len(group) != 60:
        raise RuntimeError(f"expected 60 rotations, generated {len(group)}")

    perms = set()
    for m in group:
        rotated = VIEW_AXES @ m.T
        cos = np.abs(rotated @ VIEW_AXES.T)
        mapping = tuple(int(j) for j in cos.argmax(axis=1))
        if sorted(mapping) != list(range(10)):
            raise RuntimeError("rotation does not permute the view axes")
        perms.add(mapping)
    return tuple(sorted(perms))


def lightfield_distance(a: LightFieldDescriptor, b: LightFieldDescriptor) -> float:
    """Min over the 60 rotation alignments of the summed per-view L1 distance."""
    pairwise = np.abs(a.views[:, None, :] - b.views[None, :, :]).sum(axis=2)  # (10, 10)
    best = np.inf
    for perm in rotation_group_permutations():
        total = pairwise[np.arange(10), list(perm)].sum()
        if total < best:
            best = float(total)
    return best


# ---------------------------------------------------------------------------
# sketch-based queries

def otsu_threshold(gray: np.ndarray) -> float:
    hist, edges = np.histogram(gray.reshape(-1), bins=256, range=(0.0, 255.0))
    total = hist.sum()
    centers = (edges[:-1] + edges[1:]) / 2
    best_t, best_var = 127.5, -1.0
    w0 = np.cumsum(hist)
    sum0 = np.cumsum(hist * centers)
    grand = sum0[-1]
    for t in range(1, 256):
        n0 = w0[t - 1]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = sum0[t - 1] / n0
        mu1 = (grand - sum0[t - 1]) / n1
        var = n0 * n1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var = var
            best_t = centers[t - 1]
    return float(best_t)


def sketch_silhouette(sketch: RasterImage) -> np.ndarray:
    """Binarize dark strokes and flood-fill enclosed interiors to a solid shape."""
    gray = sketch.array.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    strokes = gray < otsu_threshold(gray)
    if not strokes.any():
        raise EmptyImage("blank sketch")
    open_space, count = nd_label(~strokes)
    border_labels = set(np.concatenate([
        open_space[0, :], open_space[-1, :], open_space[:, 0], open_space[:, -1]
    ]).tolist()) - {0}
    background = np.isin(open_space, sorted(border_labels))
    return (~background).astype(np.uint8)


def sketch_to_lightfield_query(sketch: RasterImage) -> np.ndarray:
    """45-value view descriptor of the flood-filled sketch silhouette."""
    return view_descriptor(sketch_silhouette(sketch))


def sketch_view_distance(query_view: np.ndarray, descriptor: LightFieldDescriptor) -> float:
    """Distance from a single sketched view to a stored model: best view wins."""
    return float(np.abs(descriptor.views - query_view[None, :]).sum(axis=1).min())
