import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resectsim.errors import InputDataError
from resectsim.mesh import (
    EllipsoidAxes,
    EulerAngles,
    IcosphereSpec,
    TriangleMesh,
    build_cuboid,
    build_icosphere,
    mesh_volume,
    perturb_radially,
    semiaxes_from_volume,
    transform_mesh,
)
from resectsim.noise import NoiseParams

SPHERE_VOLUME = 4.0 * math.pi / 3.0


class TestIcosphere:
    @pytest.mark.parametrize("f,nv,nf", [(0, 12, 20), (1, 42, 80),
                                         (2, 162, 320), (3, 642, 1280)])
    def test_counts(self, f, nv, nf):
        mesh = build_icosphere(IcosphereSpec(f))
        assert mesh.n_vertices == nv
        assert mesh.n_faces == nf

    @pytest.mark.parametrize("f", range(6))
    def test_combinatorics(self, f):
        mesh = build_icosphere(IcosphereSpec(f))
        assert mesh.n_vertices == 10 * 4 ** f + 2
        assert mesh.n_faces == 20 * 4 ** f
        assert len(mesh.edges()) == 30 * 4 ** f
        assert mesh.euler_characteristic() == 2
        assert mesh.is_watertight()

    def test_f2_unique_edges(self):
        assert len(build_icosphere(IcosphereSpec(2)).edges()) == 480

    def test_unit_norms(self):
        mesh = build_icosphere(IcosphereSpec(3))
        norms = np.linalg.norm(mesh.vertices, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-9

    def test_frequency_guard(self):
        with pytest.raises(ValueError):
            IcosphereSpec(8)
        with pytest.raises(ValueError):
            IcosphereSpec(-1)


class TestPerturb:
    def test_zero_amplitude_is_identity(self):
        mesh = build_icosphere(IcosphereSpec(2))
        out = perturb_radially(mesh, NoiseParams(), amplitude=0.0)
        assert np.array_equal(out.vertices, mesh.vertices)
        assert np.array_equal(out.faces, mesh.faces)

    def test_unit_amplitude_bounds(self):
        mesh = build_icosphere(IcosphereSpec(3))
        noise = NoiseParams(zeta=0.3, mu=(12.3, 45.6, 78.9))
        out = perturb_radially(mesh, noise, amplitude=1.0)
        norms = np.linalg.norm(out.vertices, axis=1)
        assert norms.min() >= 0.05 - 1e-12
        assert norms.max() <= 2.0 + 1e-12

    def test_mu_controls_stochasticity(self):
        mesh = build_icosphere(IcosphereSpec(2))
        a = perturb_radially(mesh, NoiseParams(mu=(1.0, 2.0, 3.0)))
        b = perturb_radially(mesh, NoiseParams(mu=(1.0, 2.0, 3.0)))
        c = perturb_radially(mesh, NoiseParams(mu=(4.0, 5.0, 6.0)))
        assert np.array_equal(a.vertices, b.vertices)
        assert not np.array_equal(a.vertices, c.vertices)

    def test_topology_preserved(self):
        mesh = build_icosphere(IcosphereSpec(3))
        out = perturb_radially(mesh, NoiseParams(zeta=0.4, mu=(9.0, 9.0, 9.0)))
        assert out.faces is mesh.faces or np.array_equal(out.faces, mesh.faces)
        assert out.is_watertight()
        assert out.euler_characteristic() == 2

    def test_radius_clamp(self):
        mesh = build_icosphere(IcosphereSpec(2))
        out = perturb_radially(mesh, NoiseParams(zeta=0.2, mu=(7.0, 8.0, 9.0)),
                               amplitude=5.0)
        assert np.linalg.norm(out.vertices, axis=1).min() >= 0.05 - 1e-12


class TestSemiaxes:
    def test_paper_formula(self):
        axes = semiaxes_from_volume(1000.0, 1.0)
        expected = 9.085602964160698  # (3*1000/4)**(1/3)
        assert axes.r1 == pytest.approx(expected, rel=1e-12)
        assert axes.r2 == pytest.approx(expected, rel=1e-12)
        assert axes.r3 == pytest.approx(expected, rel=1e-12)

    def test_lambda_scaling(self):
        axes = semiaxes_from_volume(1000.0, 2.0)
        assert axes.r1 == pytest.approx(9.085602964160698, rel=1e-12)
        assert axes.r2 == pytest.approx(18.171205928321395, rel=1e-12)
        assert axes.r3 == pytest.approx(4.542801482080349, rel=1e-12)

    def test_exact_volume_mode(self):
        axes = semiaxes_from_volume(1000.0, 1.5, exact_volume=True)
        assert 4.0 / 3.0 * math.pi * axes.r1 * axes.r2 * axes.r3 == \
            pytest.approx(1000.0, rel=1e-12)

    @given(v=st.floats(1.0, 1e6), lam=st.floats(1.0, 10.0))
    @settings(max_examples=100, deadline=None)
    def test_product_invariant(self, v, lam):
        axes = semiaxes_from_volume(v, lam)
        assert axes.r1 * axes.r2 * axes.r3 == pytest.approx(3.0 * v / 4.0,
                                                            rel=1e-9)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            semiaxes_from_volume(0.0, 1.0)
        with pytest.raises(ValueError):
            semiaxes_from_volume(-5.0, 1.0)
        with pytest.raises(ValueError):
            semiaxes_from_volume(1000.0, 0.5)


class TestTransform:
    def test_identity(self):
        mesh = build_icosphere(IcosphereSpec(2))
        out = transform_mesh(mesh, EulerAngles(), EllipsoidAxes(1, 1, 1))
        assert np.array_equal(out.vertices, mesh.vertices)

    def test_ellipsoid_volume(self):
        mesh = build_icosphere(IcosphereSpec(3))
        axes = EllipsoidAxes(8.0, 14.0, 5.0)
        out = transform_mesh(mesh, EulerAngles(), axes)
        expected = SPHERE_VOLUME * axes.r1 * axes.r2 * axes.r3
        assert abs(mesh_volume(out) - expected) / expected < 0.01

    def test_rotation_preserves_volume(self):
        mesh = build_icosphere(IcosphereSpec(3))
        rng = np.random.default_rng(11)
        base = mesh_volume(mesh)
        for _ in range(5):
            angles = EulerAngles(*rng.uniform(0, 2 * math.pi, 3))
            rotated = transform_mesh(mesh, angles, EllipsoidAxes(1, 1, 1))
            assert abs(mesh_volume(rotated) - base) / base < 1e-9

    def test_translation(self):
        mesh = build_icosphere(IcosphereSpec(1))
        out = transform_mesh(mesh, EulerAngles(), EllipsoidAxes(1, 1, 1),
                             (10.0, -4.0, 2.5))
        assert np.allclose(out.vertices.mean(axis=0) - mesh.vertices.mean(axis=0),
                           [10.0, -4.0, 2.5])

    def test_composition_order(self):
        # scaling must happen after rotation: rotating the x-unit vector to y
        # and then scaling by (2, 1, 1) must NOT stretch it
        point = TriangleMesh(np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]),
                             np.array([[0, 1, 2]]))
        quarter = EulerAngles(z=math.pi / 2.0)  # x -> y
        out = transform_mesh(point, quarter, EllipsoidAxes(2.0, 1.0, 1.0))
        assert np.allclose(out.vertices[0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_rejects_non_finite(self):
        mesh = build_icosphere(IcosphereSpec(0))
        with pytest.raises(InputDataError):
            transform_mesh(mesh, EulerAngles(), EllipsoidAxes(1, 1, 1),
                           (math.nan, 0, 0))

    def test_angle_range_validated(self):
        with pytest.raises(ValueError):
            EulerAngles(x=2.0 * math.pi)
        with pytest.raises(ValueError):
            EulerAngles(y=-0.1)


class TestCuboid:
    def test_cube_dimensions(self):
        cube = build_cuboid(1000.0, 1.0)
        spans = cube.vertices.max(axis=0) - cube.vertices.min(axis=0)
        assert np.allclose(spans, 2 * 9.085602964160698, rtol=1e-12)

    def test_volume_exact(self):
        box = build_cuboid(4000.0, 1.7)
        axes = semiaxes_from_volume(4000.0, 1.7)
        expected = 8.0 * axes.r1 * axes.r2 * axes.r3
        assert abs(mesh_volume(box) - expected) / expected < 1e-9

    def test_topology(self):
        box = build_cuboid(1000.0, 1.2)
        assert box.n_vertices == 8
        assert box.n_faces == 12
        assert len(box.edges()) == 18
        assert box.euler_characteristic() == 2
        assert box.is_watertight()


class TestMeshVolume:
    def test_icosphere_f4(self):
        v = mesh_volume(build_icosphere(IcosphereSpec(4)))
        assert v < SPHERE_VOLUME  # inscribed polyhedron
        assert abs(v - SPHERE_VOLUME) / SPHERE_VOLUME < 0.005

    def test_box_1_2_3(self):
        box = build_cuboid(6.0, 1.0)
        scale = np.array([0.5, 1.0, 1.5]) / semiaxes_from_volume(6.0, 1.0).r1
        stretched = TriangleMesh(box.vertices * scale, box.faces)
        assert mesh_volume(stretched) == pytest.approx(6.0, abs=1e-9)

    def test_inverted_winding_flips_sign(self):
        mesh = build_icosphere(IcosphereSpec(2))
        flipped = TriangleMesh(mesh.vertices, mesh.faces[:, ::-1])
        assert mesh_volume(flipped) == pytest.approx(-mesh_volume(mesh),
                                                     rel=1e-12)

    def test_rejects_open_mesh(self):
        mesh = build_icosphere(IcosphereSpec(1))
        holed = TriangleMesh(mesh.vertices, mesh.faces[:-1])
        with pytest.raises(InputDataError):
            mesh_volume(holed)


class TestTriangleMesh:
    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))

    def test_vertices_read_only(self):
        mesh = build_icosphere(IcosphereSpec(0))
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0
