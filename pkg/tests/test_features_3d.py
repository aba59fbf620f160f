"""3D descriptor correctness: normalization, SH energies, light fields."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import synth
from mediaseek.errors import DegenerateMesh, EmptyImage
from mediaseek.features.mesh3d import (
    SH_GRID,
    SH_MAX_DEGREE,
    SH_SHELLS,
    VIEW_AXES,
    LightFieldDescriptor,
    fourier_contour,
    lightfield_descriptor,
    lightfield_distance,
    lightfield_projections,
    normalize_mesh,
    rotation_group_permutations,
    shell_samples,
    sh_descriptor,
    sketch_to_lightfield_query,
    sketch_view_distance,
    solid_occupancy,
    view_basis,
    voxelize,
    zernike_magnitudes,
    zernike_pairs,
)
from mediaseek._kernels import rasterize_silhouette
from mediaseek.io.image_io import RasterImage
from mediaseek.io.mesh_io import TriangleMesh


def rel_diff(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b))


class TestNormalizeMesh:
    def test_shifted_cube(self):
        cube = synth.box_mesh()
        shifted = TriangleMesh(cube.vertices + 5.0, cube.faces)
        nm = normalize_mesh(shifted)
        np.testing.assert_allclose(nm.applied_translation, [-5, -5, -5], atol=1e-9)
        radius = np.linalg.norm(nm.mesh.vertices, axis=1).max()
        assert radius == pytest.approx(1.0, abs=1e-12)

    def test_centroid_at_origin(self):
        nm = normalize_mesh(synth.cone_mesh())
        areas_v = nm.mesh.vertices[nm.mesh.faces]
        areas = 0.5 * np.linalg.norm(
            np.cross(areas_v[:, 1] - areas_v[:, 0], areas_v[:, 2] - areas_v[:, 0]), axis=1
        )
        centroid = (areas[:, None] * areas_v.mean(axis=1)).sum(axis=0) / areas.sum()
        np.testing.assert_allclose(centroid, 0.0, atol=1e-9)

    def test_idempotent(self):
        rng_mesh = synth.torus_mesh()
        once = normalize_mesh(rng_mesh)
        twice = normalize_mesh(once.mesh)
        np.testing.assert_allclose(twice.applied_translation, 0.0, atol=1e-7)
        assert twice.applied_scale == pytest.approx(1.0, abs=1e-7)
        np.testing.assert_allclose(twice.mesh.vertices, once.mesh.vertices, atol=1e-7)

    def test_degenerate(self):
        flat = TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 2]]))
        with pytest.raises(DegenerateMesh):
            normalize_mesh(flat)


def _reference_real_sh(degree, order, x, y, z):
    """Hardcoded orthonormal real spherical harmonics (textbook table)."""
    s = np.sqrt
    pi = np.pi
    table = {
        (0, 0): lambda: 0.5 * s(1 / pi) * np.ones_like(z),
        (1, -1): lambda: s(3 / (4 * pi)) * y,
        (1, 0): lambda: s(3 / (4 * pi)) * z,
        (1, 1): lambda: s(3 / (4 * pi)) * x,
        (2, -2): lambda: 0.5 * s(15 / pi) * x * y,
        (2, -1): lambda: 0.5 * s(15 / pi) * y * z,
        (2, 0): lambda: 0.25 * s(5 / pi) * (3 * z**2 - 1),
        (2, 1): lambda: 0.5 * s(15 / pi) * x * z,
        (2, 2): lambda: 0.25 * s(15 / pi) * (x**2 - y**2),
        (3, -3): lambda: 0.25 * s(35 / (2 * pi)) * y * (3 * x**2 - y**2),
        (3, -2): lambda: 0.5 * s(105 / pi) * x * y * z,
        (3, -1): lambda: 0.25 * s(21 / (2 * pi)) * y * (5 * z**2 - 1),
        (3, 0): lambda: 0.25 * s(7 / pi) * (5 * z**3 - 3 * z),
        (3, 1): lambda: 0.25 * s(21 / (2 * pi)) * x * (5 * z**2 - 1),
        (3, 2): lambda: 0.25 * s(105 / pi) * (x**2 - y**2) * z,
        (3, 3): lambda: 0.25 * s(35 / (2 * pi)) * x * (x**2 - 3 * y**2),
        (4, -4): lambda: 0.75 * s(35 / pi) * x * y * (x**2 - y**2),
        (4, -3): lambda: 0.75 * s(35 / (2 * pi)) * y * z * (3 * x**2 - y**2),
        (4, -2): lambda: 0.75 * s(5 / pi) * x * y * (7 * z**2 - 1),
        (4, -1): lambda: 0.75 * s(5 / (2 * pi)) * y * z * (7 * z**2 - 3),
        (4, 0): lambda: (3 / 16) * s(1 / pi) * (35 * z**4 - 30 * z**2 + 3),
        (4, 1): lambda: 0.75 * s(5 / (2 * pi)) * x * z * (7 * z**2 - 3),
        (4, 2): lambda: (3 / 8) * s(5 / pi) * (x**2 - y**2) * (7 * z**2 - 1),
        (4, 3): lambda: 0.75 * s(35 / (2 * pi)) * x * z * (x**2 - 3 * y**2),
        (4, 4): lambda: (3 / 16) * s(35 / pi) * (x**4 - 6 * x**2 * y**2 + y**4),
    }
    return table[(degree, order)]()


def _sh_energy_oracle(shell_fields):
    """Naive quadrature over the sampled shell functions: explicit grid,
    explicit SH table, explicit sums."""
    thetas = (np.arange(SH_GRID) + 0.5) * np.pi / SH_GRID
    phis = (np.arange(SH_GRID) + 0.5) * 2 * np.pi / SH_GRID
    d_theta = np.pi / SH_GRID
    d_phi = 2 * np.pi / SH_GRID
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    theta, phi = tt.reshape(-1), pp.reshape(-1)
    x = np.sin(theta) * np.cos(phi)
    y = np.sin(theta) * np.sin(phi)
    z = np.cos(theta)
    energies = np.zeros((SH_SHELLS, SH_MAX_DEGREE + 1))
    for shell in range(SH_SHELLS):
        f = shell_fields[shell]
        for degree in range(SH_MAX_DEGREE + 1):
            total = 0.0
            for order in range(-degree, degree + 1):
                yv = _reference_real_sh(degree, order, x, y, z)
                coeff = (f * yv * np.sin(theta)).sum() * d_theta * d_phi
                total += coeff**2
            energies[shell, degree] = total
    return energies.reshape(-1)


class TestShDescriptor:
    def test_sphere_energy_is_degree_zero(self):
        nm = normalize_mesh(synth.icosphere(3))
        desc = sh_descriptor(nm).values.reshape(SH_SHELLS, SH_MAX_DEGREE + 1)
        coverage = shell_samples(solid_occupancy(nm)).mean(axis=1)
        # occupied = the shell lies inside the solid; grazing shells keep
        # sampling-noise anisotropy and are not informative
        occupied = np.nonzero(coverage >= 0.5)[0]
        assert len(occupied) > 20  # the filled sphere covers most shells
        for shell in occupied:
            assert desc[shell, 0] > 10 * desc[shell, 1:].sum()
        assert desc[:, 0].sum() > 10 * desc[:, 1:].sum()

    @pytest.mark.parametrize("mesh_name", ["ellipsoid", "box", "torus", "cone"])
    def test_rotation_invariance(self, mesh_name):
        mesh = {
            "ellipsoid": synth.icosphere(2, stretch=(1.0, 0.8, 0.65)),
            "box": synth.box_mesh(1.0, 0.7, 0.45),
            "torus": synth.torus_mesh(),
            "cone": synth.cone_mesh(),
        }[mesh_name]
        base = sh_descriptor(normalize_mesh(mesh)).values
        for seed in (1, 2):
            rotated = synth.rotate_mesh(mesh, synth.rotation_matrix(seed))
            other = sh_descriptor(normalize_mesh(rotated)).values
            assert rel_diff(base, other) < 0.05

    def test_translation_and_scale_exactly_invariant(self):
        mesh = synth.box_mesh(1.0, 0.7, 0.4)
        base = sh_descriptor(normalize_mesh(mesh)).values
        moved = TriangleMesh(mesh.vertices * 3.7 + np.array([4.0, -2.0, 9.0]), mesh.faces)
        assert np.array_equal(base, sh_descriptor(normalize_mesh(moved)).values)

    def test_matches_quadrature_oracle(self):
        nm = normalize_mesh(synth.box_mesh(1.0, 0.8, 0.5))
        expected = _sh_energy_oracle(shell_samples(solid_occupancy(nm)))
        got = sh_descriptor(nm).values
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_solid_fill_covers_interior(self):
        nm = normalize_mesh(synth.icosphere(2))
        surface = voxelize(nm)
        solid = solid_occupancy(nm)
        assert solid.sum() > 3 * surface.sum()
        center = solid.shape[0] // 2
        assert solid[center, center, center] == 1
        assert solid[0, 0, 0] == 0


class TestLightfieldProjections:
    def test_sphere_silhouettes_are_discs(self):
        nm = normalize_mesh(synth.icosphere(3))
        for sil in lightfield_projections(nm):
            area = sil.sum()
            radius = np.sqrt(area / np.pi)
            assert radius == pytest.approx(128, abs=2)

    def test_flat_square_views(self):
        square = TriangleMesh(
            np.array([[-0.8, -0.8, 0], [0.8, -0.8, 0], [0.8, 0.8, 0], [-0.8, 0.8, 0]]),
            np.array([[0, 1, 2], [0, 2, 3]]),
        )
        u, v = view_basis(np.array([0.0, 0.0, 1.0]))
        proj = np.stack([square.vertices @ u, square.vertices @ v], axis=1)
        filled = rasterize_silhouette(proj[square.faces], 256)
        assert filled.sum() == pytest.approx((0.8 * 256) ** 2, rel=0.02)

        u, v = view_basis(np.array([1.0, 0.0, 0.0]))
        proj = np.stack([square.vertices @ u, square.vertices @ v], axis=1)
        edge_on = rasterize_silhouette(proj[square.faces], 256)
        rows = np.nonzero(edge_on.any(axis=1))[0]
        assert 1 <= len(rows) <= 2

    def test_area_matches_per_pixel_oracle(self):
        nm = normalize_mesh(synth.icosphere(1))
        axis = VIEW_AXES[0]
        u, v = view_basis(axis)
        proj = np.stack([nm.mesh.vertices @ u, nm.mesh.vertices @ v], axis=1)
        tris = proj[nm.mesh.faces]
        img = rasterize_silhouette(tris, 256)

        # oracle: test every pixel centre against every triangle
        cell = 2.0 / 256
        js = np.arange(256)
        px = -1.0 + (js + 0.5) * cell
        py = 1.0 - (np.arange(256) + 0.5) * cell
        xx, yy = np.meshgrid(px, py)
        covered = np.zeros((256, 256), dtype=bool)
        for a, b, c in tris:
            area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(area2) < 1e-12:
                continue
            sign = np.sign(area2)
            w0 = ((b[0] - a[0]) * (yy - a[1]) - (b[1] - a[1]) * (xx - a[0])) * sign
            w1 = ((c[0] - b[0]) * (yy - b[1]) - (c[1] - b[1]) * (xx - b[0])) * sign
            w2 = ((a[0] - c[0]) * (yy - c[1]) - (a[1] - c[1]) * (xx - c[0])) * sign
            covered |= (w0 >= -1e-12) & (w1 >= -1e-12) & (w2 >= -1e-12)
        assert abs(int(img.sum()) - int(covered.sum())) <= 0.005 * covered.sum()


def disc_image(radius=90, size=256, cx=None, cy=None):
    cx = size // 2 if cx is None else cx
    cy = size // 2 if cy is None else cy
    yy, xx = np.mgrid[0:size, 0:size]
    return (((xx - cx) ** 2 + (yy - cy) ** 2) <= radius**2).astype(np.uint8)


def square_image(half=70, size=256):
    img = np.zeros((size, size), dtype=np.uint8)
    c = size // 2
    img[c - half : c + half, c - half : c + half] = 1
    return img


class TestZernike:
    def test_pair_count(self):
        assert len(zernike_pairs()) == 35

    def test_disc_rotationally_symmetric(self):
        mags = zernike_magnitudes(disc_image())
        for (n, m), value in zip(zernike_pairs(), mags):
            if m == 0:
                continue
            if m % 4 == 0:
                # the pixel grid itself carries 4-fold anisotropy; a binary
                # disc cannot cancel the m=4k harmonics below ~1e-2 at 256px
                assert value < 2e-2, f"A_{n}{m} = {value}"
            else:
                assert value < 1e-3, f"A_{n}{m} = {value}"

    def test_rotation_invariance(self):
        img = (square_image(60) | disc_image(40, cx=180, cy=100)).astype(np.uint8)
        a = zernike_magnitudes(img)
        b = zernike_magnitudes(np.rot90(img).copy())
        np.testing.assert_allclose(a, b, atol=1e-3)

    def test_matches_direct_summation(self):
        import math

        img = square_image(55) | disc_image(30, cx=70, cy=70)
        got = zernike_magnitudes(img)

        rows, cols = np.nonzero(img)
        cy, cx = rows.mean(), cols.mean()
        radius = np.sqrt(((rows - cy) ** 2 + (cols - cx) ** 2)).max()
        x = (cols - cx) / radius
        y = (rows - cy) / radius
        rho = np.hypot(x, y)
        keep = rho <= 1.0
        rho, theta = rho[keep], np.arctan2(y[keep], x[keep])
        for i, (n, m) in enumerate(zernike_pairs()):
            radial = np.zeros_like(rho)
            for s_idx in range((n - m) // 2 + 1):
                coeff = ((-1) ** s_idx * math.factorial(n - s_idx)
                         / (math.factorial(s_idx)
                            * math.factorial((n + m) // 2 - s_idx)
                            * math.factorial((n - m) // 2 - s_idx)))
                radial = radial + coeff * rho ** (n - 2 * s_idx)
            moment = (radial * np.exp(-1j * m * theta)).sum()
            expected = (n + 1) / np.pi / radius**2 * abs(moment)
            assert got[i] == pytest.approx(expected, abs=1e-9)

    def test_empty_image(self):
        with pytest.raises(EmptyImage):
            zernike_magnitudes(np.zeros((64, 64), dtype=np.uint8))


class TestFourierContour:
    def test_disc_flat_spectrum(self):
        desc = fourier_contour(disc_image())
        assert (desc < 0.01).all()

    def test_scale_invariance(self):
        a = fourier_contour(square_image(40))
        b = fourier_contour(square_image(80))
        np.testing.assert_allclose(a, b, atol=1e-2)

    def test_square_dominant_fourth_harmonic(self):
        desc = fourier_contour(square_image(70))
        assert int(desc.argmax()) + 1 == 4

        # analytic square signature: distance from centre to the boundary
        ts = np.arange(128) / 128  # arc-length parameter, 4 equal sides
        side_pos = (ts * 4) % 1.0
        signature = 1.0 / np.cos(np.abs(side_pos - 0.5) * np.pi / 2)
        spectrum = np.abs(np.fft.fft(signature))
        assert int(spectrum[1:11].argmax()) + 1 == 4


class TestLightfieldDistance:
    def _descriptor(self, seed):
        rng = np.random.default_rng(seed)
        return LightFieldDescriptor(rng.uniform(0, 1, (10, 45)))

    def test_group_has_60_permutations(self):
        perms = rotation_group_permutations()
        assert len(perms) == 60
        assert tuple(range(10)) in perms

    @staticmethod
    def _oracle_permutations():
        """Independent enumeration: axis permutations preserving the pairwise
        |cos| structure (Gram-matrix backtracking) that are realizable by a
        proper rotation. The combinatorial search alone finds 120 candidates;
        half are improper (reflections)."""
        gram = np.round(np.abs(VIEW_AXES @ VIEW_AXES.T), 9)
        candidates = []

        def extend(partial):
            i = len(partial)
            if i == 10:
                candidates.append(tuple(partial))
                return
            for c in range(10):
                if c in partial:
                    continue
                if all(gram[i, j] == gram[c, partial[j]] for j in range(i)):
                    extend(partial + [c])

        extend([])

        base = (0, 4, 8)  # linearly independent axis triple
        a_inv = np.linalg.inv(VIEW_AXES[list(base)].T)
        realizable = []
        for perm in candidates:
            for signs in np.ndindex(2, 2, 2):
                cols = [(-1) ** s * VIEW_AXES[perm[b]] for s, b in zip(signs, base)]
                rot = np.stack(cols, axis=1) @ a_inv
                if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-8):
                    continue
                if np.linalg.det(rot) < 0:
                    continue
                aligned = np.abs((VIEW_AXES @ rot.T) @ VIEW_AXES.T)
                if np.allclose(aligned[np.arange(10), list(perm)], 1.0, atol=1e-8):
                    realizable.append(perm)
                    break
        return realizable

    def test_matches_angle_preserving_permutation_oracle(self):
        oracle = self._oracle_permutations()
        assert len(oracle) == 60
        assert set(rotation_group_permutations()) == set(oracle)

    def test_scipy_group_also_gives_60(self):
        # sanity: the icosahedral rotation group has order 60
        assert len(Rotation.create_group("I")) == 60

    def test_identity_and_symmetry(self):
        a, b = self._descriptor(1), self._descriptor(2)
        assert lightfield_distance(a, a) == 0.0
        assert lightfield_distance(a, b) == pytest.approx(lightfield_distance(b, a), abs=1e-9)

    def test_exhaustive_alignment_oracle(self):
        a, b = self._descriptor(3), self._descriptor(4)
        best = min(
            sum(np.abs(a.views[i] - b.views[perm[i]]).sum() for i in range(10))
            for perm in self._oracle_permutations()
        )
        assert lightfield_distance(a, b) == pytest.approx(best, abs=1e-9)

    def test_rotated_mesh_small_distance(self):
        mesh = synth.box_mesh(1.0, 0.7, 0.45)
        a = lightfield_descriptor(normalize_mesh(mesh))
        rotated = synth.rotate_mesh(mesh, synth.rotation_matrix(5))
        b = lightfield_descriptor(normalize_mesh(rotated))
        c = lightfield_descriptor(normalize_mesh(synth.icosphere(2)))
        assert lightfield_distance(a, b) < lightfield_distance(a, c)


class TestSketch:
    def test_blank_sketch(self):
        blank = RasterImage(np.full((100, 100, 3), 255, dtype=np.uint8))
        with pytest.raises(EmptyImage):
            sketch_to_lightfield_query(blank)

    def test_scale_invariance(self):
        a = sketch_to_lightfield_query(synth.sketch_outline("circle", 200))
        b = sketch_to_lightfield_query(synth.sketch_outline("circle", 400))
        np.testing.assert_allclose(a, b, atol=1e-2)

    def test_circle_matches_sphere_not_cube(self):
        query = sketch_to_lightfield_query(synth.sketch_outline("circle"))
        sphere = lightfield_descriptor(normalize_mesh(synth.icosphere(2)))
        cube = lightfield_descriptor(normalize_mesh(synth.box_mesh()))
        assert sketch_view_distance(query, sphere) < sketch_view_distance(query, cube)
