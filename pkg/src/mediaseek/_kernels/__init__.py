"""Hot geometry kernels: compiled extension with a NumPy fallback.

The compiled module is preferred when importable; set ``MEDIASEEK_PURE=1``
to force the fallback (used by the benchmark and the equivalence tests).
"""

import os

if os.environ.get("MEDIASEEK_PURE") == "1":
    from mediaseek._kernels import _fallback as _impl
else:
    try:
        from mediaseek._kernels import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from mediaseek._kernels import _fallback as _impl

BACKEND = _impl.BACKEND
rasterize_silhouette = _impl.rasterize_silhouette
voxelize_triangles = _impl.voxelize_triangles

__all__ = ["BACKEND", "rasterize_silhouette", "voxelize_triangles"]
