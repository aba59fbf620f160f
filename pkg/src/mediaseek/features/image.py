"""Image descriptors: color layout, edge histogram, HOG, local keypoints + BoW.

Sketches go through the same extractors as photographic input; video shots
are represented by their middle frame.
"""

from __future__ import annotations

import numpy as np

from mediaseek.errors import DimensionMismatch, InsufficientData
from mediaseek.features import DescriptorVector
from mediaseek.io.image_io import RasterImage

GRID = 8                      # average-color grid
EHD_THRESHOLD = 11.0 / 255.0
HOG_SIZE = 128
HOG_BINS = 9
HOG_CELL = 8
HOG_EPS = 1e-5
HOG_CLIP = 0.2
SURF_THRESHOLD = 600.0
SURF_OCTAVE_SIZES = [[9, 15, 21, 27], [15, 27, 39, 51], [27, 51, 75, 99]]

_LUMA = np.array([0.299, 0.587, 0.114])


def luma(img: RasterImage) -> np.ndarray:
    """Grayscale plane in [0, 255]."""
    return img.array.astype(np.float64) @ _LUMA


# ---------------------------------------------------------------------------
# average color grid (CIELAB, D65)

def _srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    m = np.array([
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ])
    xyz = lin @ m.T
    xyz /= np.array([0.95047, 1.0, 1.08883])
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _cell_bounds(extent: int, parts: int, i: int) -> tuple[int, int]:
    # never-empty ranges even when the image is smaller than the grid
    lo = min(extent - 1, (i * extent) // parts)
    hi = max(lo + 1, ((i + 1) * extent) // parts)
    return lo, hi


def average_color_grid(img: RasterImage) -> DescriptorVector:
    """Per-cell mean RGB of an 8x8 grid, mapped to CIELAB; 192 values."""
    arr = img.array.astype(np.float64)
    h, w = arr.shape[:2]
    out = np.zeros((GRID, GRID, 3))
    for i in range(GRID):
        r0, r1 = _cell_bounds(h, GRID, i)
        for j in range(GRID):
            c0, c1 = _cell_bounds(w, GRID, j)
            out[i, j] = _srgb_to_lab(arr[r0:r1, c0:c1].reshape(-1, 3).mean(axis=0))
    return DescriptorVector("average_color", out.reshape(-1))


# ---------------------------------------------------------------------------
# edge histogram (MPEG-7 style, 4x4 subimages x 5 edge types)

_EHD_FILTERS = np.array([
    [1, -1, 1, -1],                 # vertical
    [1, 1, -1, -1],                 # horizontal
    [np.sqrt(2), 0, 0, -np.sqrt(2)],  # 45 degrees
    [0, np.sqrt(2), -np.sqrt(2), 0],  # 135 degrees
    [2, -2, -2, 2],                 # non-directional
])


def edge_histogram(img: RasterImage) -> DescriptorVector:
    gray = luma(img) / 255.0
    h, w = gray.shape
    values = np.zeros((4, 4, 5))
    for si in range(4):
        r0, r1 = _cell_bounds(h, 4, si)
        for sj in range(4):
            c0, c1 = _cell_bounds(w, 4, sj)
            sub = gray[r0:r1, c0:c1]
            bh, bw = sub.shape[0] // 2, sub.shape[1] // 2
            if bh == 0 or bw == 0:
                continue
            blocks = sub[: bh * 2, : bw * 2].reshape(bh, 2, bw, 2).transpose(0, 2, 1, 3)
            quad = blocks.reshape(bh * bw, 4)  # (a b; c d) flattened row-major
            responses = np.abs(quad @ _EHD_FILTERS.T)  # (blocks, 5)
            strongest = responses.argmax(axis=1)
            passes = responses[np.arange(len(quad)), strongest] > EHD_THRESHOLD
            counts = np.bincount(strongest[passes], minlength=5)
            values[si, sj] = counts / (bh * bw)
    return DescriptorVector("edge_histogram", values.reshape(-1))


# ---------------------------------------------------------------------------
# HOG

def _resize_gray(gray: np.ndarray, width: int, height: int) -> np.ndarray:
    h, w = gray.shape
    ys = np.clip((np.arange(height) + 0.5) * h / height - 0.5, 0, h - 1)
    xs = np.clip((np.arange(width) + 0.5) * w / width - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = gray[y0][:, x0] * (1 - fx) + gray[y0][:, x1] * fx
    bot = gray[y1][:, x0] * (1 - fx) + gray[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def _hog_cell_histograms(gray: np.ndarray) -> np.ndarray:
    """Orientation histograms for 8x8 cells of a 128x128 grayscale plane."""
    padded = np.pad(gray, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0

    # bin centres at i*20 degrees; linear vote split between neighbours
    pos = ang / 20.0
    b0 = np.floor(pos).astype(int) % HOG_BINS
    frac = pos - np.floor(pos)
    b1 = (b0 + 1) % HOG_BINS

    n_cells = HOG_SIZE // HOG_CELL
    cy = (np.arange(HOG_SIZE) // HOG_CELL)[:, None] * np.ones(HOG_SIZE, dtype=int)
    cx = (np.arange(HOG_SIZE) // HOG_CELL)[None, :] * np.ones((HOG_SIZE, 1), dtype=int)
    flat0 = (cy * n_cells + cx) * HOG_BINS + b0
    flat1 = (cy * n_cells + cx) * HOG_BINS + b1
    hist = np.zeros(n_cells * n_cells * HOG_BINS)
    np.add.at(hist, flat0.reshape(-1), (mag * (1 - frac)).reshape(-1))
    np.add.at(hist, flat1.reshape(-1), (mag * frac).reshape(-1))
    return hist.reshape(n_cells, n_cells, HOG_BINS)


def hog_descriptor(img: RasterImage) -> DescriptorVector:
    """9-bin unsigned HOG on a fixed 128x128 canvas; 15*15*36 = 8100 values."""
    gray = _resize_gray(luma(img), HOG_SIZE, HOG_SIZE)
    cells = _hog_cell_histograms(gray)
    n_cells = cells.shape[0]
    blocks = []
    for by in range(n_cells - 1):
        for bx in range(n_cells - 1):
            v = cells[by : by + 2, bx : bx + 2].reshape(-1)
            v = v / np.sqrt((v * v).sum() + HOG_EPS)
            v = np.minimum(v, HOG_CLIP)
            v = v / np.sqrt((v * v).sum() + HOG_EPS)
            blocks.append(v)
    return DescriptorVector("hog", np.concatenate(blocks))


# ---------------------------------------------------------------------------
# SURF-style local descriptors (upright)

def _integral(gray: np.ndarray) -> np.ndarray:
    ii = np.zeros((gray.shape[0] + 1, gray.shape[1] + 1))
    ii[1:, 1:] = gray.cumsum(0).cumsum(1)
    return ii


def _box(ii: np.ndarray, row: int, col: int, rows: int, cols: int) -> float:
    """Clamped box sum; (row, col) is the top-left corner."""
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    r0 = min(max(row, 0), h)
    c0 = min(max(col, 0), w)
    r1 = min(max(row + rows, 0), h)
    c1 = min(max(col + cols, 0), w)
    if r1 <= r0 or c1 <= c0:
        return 0.0
    return float(ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0])


def _box_grid(ii: np.ndarray, r0: np.ndarray, c0: np.ndarray, rows: int, cols: int) -> np.ndarray:
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    a0 = np.clip(r0, 0, h)
    b0 = np.clip(c0, 0, w)
    a1 = np.clip(r0 + rows, 0, h)
    b1 = np.clip(c0 + cols, 0, w)
    return ii[a1, b1] - ii[a0, b1] - ii[a1, b0] + ii[a0, b0]


def _hessian_response(ii: np.ndarray, size: int, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    lobe = size // 3
    border = (size - 1) // 2
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    inv_area = 1.0 / (size * size)

    dxx = (_box_grid(ii, yy - lobe + 1, xx - border, 2 * lobe - 1, size)
           - 3.0 * _box_grid(ii, yy - lobe + 1, xx - lobe // 2, 2 * lobe - 1, lobe)) * inv_area
    dyy = (_box_grid(ii, yy - border, xx - lobe + 1, size, 2 * lobe - 1)
           - 3.0 * _box_grid(ii, yy - lobe // 2, xx - lobe + 1, lobe, 2 * lobe - 1)) * inv_area
    dxy = (_box_grid(ii, yy - lobe, xx + 1, lobe, lobe)
           + _box_grid(ii, yy + 1, xx - lobe, lobe, lobe)
           - _box_grid(ii, yy - lobe, xx - lobe, lobe, lobe)
           - _box_grid(ii, yy + 1, xx + 1, lobe, lobe)) * inv_area

    response = dxx * dyy - (0.9 * dxy) ** 2
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    valid = ((yy - border >= 0) & (yy + border < h) & (xx - border >= 0) & (xx + border < w))
    return np.where(valid, response, -np.inf)


def detect_keypoints(img: RasterImage) -> list[tuple[int, int, float, float]]:
    """(y, x, scale sigma, response) via determinant-of-Hessian box filters."""
    from scipy.ndimage import maximum_filter

    gray = luma(img)
    ii = _integral(gray)
    h, w = gray.shape
    keypoints = []
    for octave, sizes in enumerate(SURF_OCTAVE_SIZES):
        step = 1 << octave
        ys = np.arange(0, h, step)
        xs = np.arange(0, w, step)
        if len(ys) < 3 or len(xs) < 3:
            continue
        stack = np.stack([_hessian_response(ii, s, ys, xs) for s in sizes])
        peaks = maximum_filter(stack, size=(3, 3, 3), mode="constant", cval=np.inf)
        for si, i, j in np.argwhere((stack == peaks) & (stack > SURF_THRESHOLD)):
            if si not in (1, 2) or not (1 <= i < len(ys) - 1 and 1 <= j < len(xs) - 1):
                continue
            patch = stack[si - 1 : si + 2, i - 1 : i + 2, j - 1 : j + 2]
            if (patch == stack[si, i, j]).sum() == 1:  # strict, unique maximum
                sigma = 1.2 * sizes[si] / 9.0
                keypoints.append((int(ys[i]), int(xs[j]), sigma, float(stack[si, i, j])))
    keypoints.sort(key=lambda kp: (-kp[3], kp[0], kp[1]))
    return keypoints


def describe_keypoint(ii: np.ndarray, y: int, x: int, sigma: float) -> np.ndarray | None:
    """Upright 64-d descriptor: 4x4 subregions of Haar sums over a 20-sigma window."""
    s = max(1, int(round(sigma)))
    offsets = (np.arange(-10, 10) + 0.5) * sigma
    py = np.rint(y + offsets).astype(int)[:, None] * np.ones(20, dtype=int)[None, :]
    px = np.rint(x + offsets).astype(int)[None, :] * np.ones(20, dtype=int)[:, None]
    dx = _box_grid(ii, py - s, px, 2 * s, s) - _box_grid(ii, py - s, px - s, 2 * s, s)
    dy = _box_grid(ii, py, px - s, s, 2 * s) - _box_grid(ii, py - s, px - s, s, 2 * s)

    parts = np.stack([dx, np.abs(dx), dy, np.abs(dy)], axis=-1)  # (20, 20, 4)
    sums = parts.reshape(4, 5, 4, 5, 4).sum(axis=(1, 3))         # (4, 4, 4) subregions
    vec = sums.reshape(-1)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return None
    return vec / norm


def detect_local_descriptors(img: RasterImage, max_keypoints: int = 200) -> list[np.ndarray]:
    """SURF-style pipeline; empty list when the image has no blob structure."""
    keypoints = detect_keypoints(img)[:max_keypoints]
    ii = _integral(luma(img))
    descriptors = []
    for y, x, sigma, _ in keypoints:
        vec = describe_keypoint(ii, y, x, sigma)
        if vec is not None:
            descriptors.append(vec)
    return descriptors


# ---------------------------------------------------------------------------
# codebook + bag of words

class Codebook:
    def __init__(self, category: str, centroids: np.ndarray):
        self.category = category
        self.centroids = np.asarray(centroids, dtype=np.float64)
        if len(self.centroids) < 2:
            raise ValueError("a codebook needs at least 2 centroids")

    @property
    def k(self) -> int:
        return len(self.centroids)

    def assign(self, descriptors: np.ndarray) -> np.ndarray:
        """Nearest-centroid index per descriptor; ties resolve to the lowest index."""
        if descriptors.shape[1] != self.centroids.shape[1]:
            raise DimensionMismatch(
                f"descriptor dim {descriptors.shape[1]} != codebook dim {self.centroids.shape[1]}"
            )
        d2 = ((descriptors[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)


def train_codebook(descriptors: list[np.ndarray] | np.ndarray, k: int, seed: int,
                   category: str = "surf_bow", max_iter: int = 50, tol: float = 1e-4) -> Codebook:
    """k-means with k-means++ seeding; deterministic for a given seed."""
    data = np.asarray(descriptors, dtype=np.float64)
    if data.ndim != 2 or len(data) < k:
        raise InsufficientData(f"need >= {k} descriptors, got {len(data)}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, data.shape[1]))
    centroids[0] = data[rng.integers(len(data))]
    d2 = ((data - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = data[rng.integers(len(data))]
        else:
            target = rng.random() * total
            centroids[c] = data[int(np.searchsorted(np.cumsum(d2), target))]
        d2 = np.minimum(d2, ((data - centroids[c]) ** 2).sum(axis=1))

    for _ in range(max_iter):
        dist = ((data[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = dist.argmin(axis=1)
        moved = 0.0
        for c in range(k):
            members = data[assign == c]
            if len(members) == 0:
                # deterministic re-seed: the point farthest from its centroid
                far = int(dist[np.arange(len(data)), assign].argmax())
                new = data[far]
            else:
                new = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new - centroids[c])))
            centroids[c] = new
        if moved < tol:
            break
    return Codebook(category, centroids)


def bow_histogram(descriptors: list[np.ndarray], codebook: Codebook) -> DescriptorVector:
    """L1-normalized assignment histogram; zero vector for an empty list."""
    if not len(descriptors):
        return DescriptorVector(codebook.category, np.zeros(codebook.k))
    assign = codebook.assign(np.asarray(descriptors, dtype=np.float64))
    counts = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    return DescriptorVector(codebook.category, counts / counts.sum())
