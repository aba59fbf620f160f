"""Compare the compiled geometry kernels against the NumPy fallback.

Run:  python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
import synth  # noqa: E402

from mediaseek._kernels import _fallback  # noqa: E402

try:
    from mediaseek._kernels import _native
except ImportError:
    _native = None

from mediaseek.features.mesh3d import VIEW_AXES, normalize_mesh, view_basis  # noqa: E402


def timed(func, *args, repeat: int = 5):
    best = np.inf
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = func(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    meshes = {
        "torus (576 tris)": synth.torus_mesh(),
        "icosphere-3 (1280 tris)": synth.icosphere(3),
        "icosphere-4 (5120 tris)": synth.icosphere(4),
    }
    backends = [("python", _fallback)] + ([("native", _native)] if _native else [])
    if _native is None:
        print("note: compiled extension not importable; benchmarking fallback only")

    print(f"{'kernel':<44}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    print("-" * (44 + 12 * len(backends) + 10))

    for label, mesh in meshes.items():
        nm = normalize_mesh(mesh)
        times = []
        outputs = []
        for _, impl in backends:
            t, out = timed(impl.voxelize_triangles, nm.mesh.vertices, nm.mesh.faces, 64)
            times.append(t)
            outputs.append(out)
        if len(outputs) == 2:
            assert np.array_equal(outputs[0], outputs[1]), "backend outputs differ"
        speedup = f"{times[0] / times[-1]:9.1f}x" if len(times) == 2 else ""
        print(f"{'voxelize 64^3  ' + label:<44}"
              + "".join(f"{t * 1000:>10.1f}ms" for t in times) + speedup)

    for label, mesh in meshes.items():
        nm = normalize_mesh(mesh)
        u, v = view_basis(VIEW_AXES[0])
        proj = np.stack([nm.mesh.vertices @ u, nm.mesh.vertices @ v], axis=1)
        tris = proj[nm.mesh.faces]
        times = []
        outputs = []
        for _, impl in backends:
            t, out = timed(impl.rasterize_silhouette, tris, 256)
            times.append(t)
            outputs.append(out)
        if len(outputs) == 2:
            assert np.array_equal(outputs[0], outputs[1]), "backend outputs differ"
        speedup = f"{times[0] / times[-1]:9.1f}x" if len(times) == 2 else ""
        print(f"{'rasterize 256px  ' + label:<44}"
              + "".join(f"{t * 1000:>10.1f}ms" for t in times) + speedup)
    return 0


if __name__ == "__main__":
    sys.exit(main())
