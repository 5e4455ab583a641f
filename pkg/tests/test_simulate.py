import math

import numpy as np
import pytest

from resectsim.errors import ConfigError, InputDataError, SimulationError
from resectsim.parcellation import resectable_mask
from resectsim.simulate import (
    ResectionParams,
    sample_params,
    simulate_resection,
)
from resectsim.testing import PHANTOM_LABELS, synthetic_scheme
from resectsim.volume import Grid, LabelVolume, ScalarVolume, hadamard

L = PHANTOM_LABELS


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


class TestResectionParams:
    def test_defaults_valid(self):
        params = ResectionParams()
        assert params.shape == "noisy"
        assert params.smoothing.closing_radius == 3

    def test_lambda_minimum(self):
        with pytest.raises(ConfigError, match="lambda_range"):
            ResectionParams(lambda_range=(0.5, 2.0))

    def test_volume_positive(self):
        with pytest.raises(ConfigError, match="volume_range"):
            ResectionParams(volume_range=(0.0, 100.0))

    def test_ranges_ordered(self):
        with pytest.raises(ConfigError, match="blur_sigma_range"):
            ResectionParams(blur_sigma_range=(2.0, 1.0))

    def test_shape_checked(self):
        with pytest.raises(ConfigError, match="shape"):
            ResectionParams(shape="spherical")

    def test_rotation_bounds(self):
        with pytest.raises(ConfigError, match="rotation_range"):
            ResectionParams(rotation_range=(0.0, 7.0))

    def test_single_rotation_pair_broadcasts(self):
        params = ResectionParams(rotation_range=(0.0, 1.0))
        assert params.rotation_range == ((0.0, 1.0),) * 3

    def test_from_mapping(self):
        params = ResectionParams.from_mapping({"shape": "cuboid",
                                               "frequency": 2})
        assert params.shape == "cuboid"
        assert params.frequency == 2
        with pytest.raises(ConfigError, match="unknown"):
            ResectionParams.from_mapping({"sharpness": 1})


class TestSampleParams:
    def test_degenerate_ranges_exact(self):
        params = ResectionParams(
            volume_range=(500.0, 500.0), lambda_range=(1.5, 1.5),
            rotation_range=(1.0, 1.0), zeta_range=(0.4, 0.4),
            mu_range=(10.0, 10.0), blur_sigma_range=(0.25, 0.25))
        draw = sample_params(params, rng_for(0))
        assert draw.volume == 500.0
        assert draw.lam == 1.5
        assert (draw.angles.x, draw.angles.y, draw.angles.z) == (1.0,) * 3
        assert draw.zeta == 0.4
        assert draw.mu == (10.0,) * 3
        assert draw.blur_sigma == (0.25,) * 3

    def test_hemisphere_balance(self):
        params = ResectionParams()
        n = 10_000
        lefts = sum(sample_params(params, rng_for(seed)).hemisphere == "left"
                    for seed in range(n))
        sigma = math.sqrt(n * 0.25)
        assert abs(lefts - n / 2) < 4 * sigma

    def test_same_seed_identical(self):
        params = ResectionParams()
        assert sample_params(params, rng_for(9)) == \
            sample_params(params, rng_for(9))

    def test_volume_log_uniform_within_range(self):
        params = ResectionParams(volume_range=(500.0, 50_000.0))
        draws = [sample_params(params, rng_for(s)).volume for s in range(500)]
        assert min(draws) >= 500.0 and max(draws) <= 50_000.0
        # log-uniform: median near geometric midpoint, not arithmetic one
        geometric_mid = math.sqrt(500.0 * 50_000.0)
        assert np.median(draws) == pytest.approx(geometric_mid, rel=0.25)


@pytest.fixture(scope="module")
def sim(phantom96):
    image, parcellation, scheme = phantom96
    params = ResectionParams()
    result = simulate_resection(image, parcellation, scheme, params,
                                seed=101, keep_debug=True)
    return image, parcellation, scheme, params, result


class TestSimulate:
    def test_label_nonempty_and_constrained(self, sim):
        image, parcellation, scheme, params, result = sim
        assert result.y_sim.count > 0
        resectable = resectable_mask(parcellation, scheme,
                                     result.meta["hemisphere"],
                                     params.smoothing)
        outside = result.y_sim.as_bool() & ~resectable.as_bool()
        assert not outside.any()

    def test_label_equals_full_volume_intersection(self, sim):
        # windowed computation must match the whole-volume definition
        image, parcellation, scheme, params, result = sim
        resectable = resectable_mask(parcellation, scheme,
                                     result.meta["hemisphere"],
                                     params.smoothing)
        expected = hadamard(result.debug.cavity_mask, resectable)
        assert np.array_equal(result.y_sim.data, expected.data)

    def test_seed_voxel_in_gray_matter(self, sim):
        image, parcellation, scheme, params, result = sim
        from resectsim.parcellation import gray_matter_mask
        gm = gray_matter_mask(parcellation, scheme,
                              result.meta["hemisphere"])
        assert gm.data[tuple(result.meta["seed_voxel"])] == 1

    def test_deterministic(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams()
        a = simulate_resection(image, parcellation, scheme, params, seed=11)
        b = simulate_resection(image, parcellation, scheme, params, seed=11)
        assert np.array_equal(a.x_sim.data, b.x_sim.data)
        assert np.array_equal(a.y_sim.data, b.y_sim.data)
        assert a.meta == b.meta

    def test_seeds_differ(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams()
        labels = [simulate_resection(image, parcellation, scheme, params,
                                     seed=s).y_sim for s in (1, 2, 3)]
        assert not np.array_equal(labels[0].data, labels[1].data)
        assert not np.array_equal(labels[1].data, labels[2].data)

    def test_unchanged_where_alpha_zero(self, sim):
        image, parcellation, scheme, params, result = sim
        window = result.debug.window
        inside = np.zeros(image.grid.dims, dtype=bool)
        inside[window] = result.debug.alpha.data > 0
        assert np.array_equal(result.x_sim.data[~inside],
                              image.data[~inside])

    def test_hard_boundaries_with_zero_sigma(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams(blur_sigma_range=(0.0, 0.0))
        result = simulate_resection(image, parcellation, scheme, params,
                                    seed=21, keep_debug=True)
        y = result.y_sim.as_bool()
        assert np.array_equal(result.x_sim.data[~y], image.data[~y])
        csf = np.zeros(image.grid.dims, dtype=np.float32)
        csf[result.debug.window] = result.debug.csf.data
        assert np.array_equal(result.x_sim.data[y], csf[y])

    def test_soft_boundaries_with_blur(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams(blur_sigma_range=(5.0, 5.0))
        result = simulate_resection(image, parcellation, scheme, params,
                                    seed=22)
        y = result.y_sim.as_bool()
        changed = result.x_sim.data != image.data
        assert (changed & ~y).any()        # shell outside the label changed
        far = np.ones_like(changed)
        sl = result.y_sim.bounding_slices(pad=21)
        far[sl] = False
        assert not (changed & far).any()   # but only within kernel reach

    def test_meta_contents(self, sim):
        *_, result = sim
        meta = result.meta
        assert meta["shape"] == "noisy"
        assert meta["hemisphere"] in ("left", "right")
        assert meta["cavity_voxels"] == result.y_sim.count
        assert meta["attempts"] >= 1
        assert len(meta["blur_sigma_mm"]) == 3

    def test_grid_mismatch_rejected(self, phantom96):
        image, parcellation, scheme = phantom96
        other = LabelVolume(Grid((10, 10, 10)),
                            np.zeros((10, 10, 10), dtype=np.int32))
        with pytest.raises(InputDataError):
            simulate_resection(image, other, scheme, ResectionParams(), 0)


class TestShapeVariants:
    def test_ellipsoid_has_zero_displacement(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams(shape="ellipsoid")
        result = simulate_resection(image, parcellation, scheme, params,
                                    seed=33)
        meta = result.meta
        center = image.grid.index_to_world(meta["seed_voxel"])
        # invert scale o rotation: all vertices must sit on the unit sphere
        from resectsim.mesh import EulerAngles, _rotation_matrix
        from resectsim.mesh import semiaxes_from_volume
        rot = _rotation_matrix(EulerAngles(*meta["angles_rad"]))
        axes = semiaxes_from_volume(meta["volume_mm3"], meta["lambda"])
        local = (result.placed_mesh.vertices - center) @ \
            np.linalg.inv(np.diag(axes.as_array()) @ rot).T
        assert np.abs(np.linalg.norm(local, axis=1) - 1.0).max() < 1e-9

    def test_cuboid_axis_aligned_box(self, phantom96):
        image, parcellation, scheme = phantom96
        params = ResectionParams(shape="cuboid")
        result = simulate_resection(image, parcellation, scheme, params,
                                    seed=34, keep_debug=True)
        meta = result.meta
        assert meta["shape"] == "cuboid"
        verts = result.placed_mesh.vertices
        assert verts.shape == (8, 3)
        center = image.grid.index_to_world(meta["seed_voxel"])
        from resectsim.mesh import semiaxes_from_volume
        axes = semiaxes_from_volume(meta["volume_mm3"], meta["lambda"])
        spans = verts.max(axis=0) - verts.min(axis=0)
        assert np.allclose(spans, 2.0 * axes.as_array(), rtol=1e-9)
        assert np.allclose(verts.mean(axis=0), center, atol=1e-9)
        # the pre-intersection cavity is exactly the discrete box
        x, y, z = np.meshgrid(*[np.arange(n) for n in image.grid.dims],
                              indexing="ij")
        expected = ((np.abs(x - meta["seed_voxel"][0]) <= axes.r1)
                    & (np.abs(y - meta["seed_voxel"][1]) <= axes.r2)
                    & (np.abs(z - meta["seed_voxel"][2]) <= axes.r3))
        assert np.array_equal(result.debug.cavity_mask.as_bool(), expected)

    def test_noisy_differs_from_ellipsoid(self, phantom96):
        image, parcellation, scheme = phantom96
        noisy = simulate_resection(image, parcellation, scheme,
                                   ResectionParams(shape="noisy"), seed=35)
        smooth = simulate_resection(image, parcellation, scheme,
                                    ResectionParams(shape="ellipsoid"),
                                    seed=35)
        assert not np.array_equal(noisy.y_sim.data, smooth.y_sim.data)


class TestFailureModes:
    def _scheme(self):
        return synthetic_scheme()

    def test_missing_gray_matter(self):
        grid = Grid((24, 24, 24))
        data = np.zeros(grid.dims, dtype=np.int32)
        data[4:20, 4:20, 4:20] = L["left_wm"]
        data[10:14, 10:14, 10:14] = L["ventricles"]
        parc = LabelVolume(grid, data)
        image = ScalarVolume(grid, np.zeros(grid.dims))
        params = ResectionParams()
        # whichever hemisphere is drawn, there is no cortical GM anywhere
        with pytest.raises(InputDataError, match="gray matter"):
            simulate_resection(image, parc, self._scheme(), params, seed=0)

    def test_missing_ventricles(self):
        grid = Grid((24, 24, 24))
        data = np.zeros(grid.dims, dtype=np.int32)
        data[4:20, 4:20, 4:20] = L["left_gm"]
        data[4:20, 12:20, 4:20] = L["right_gm"]
        parc = LabelVolume(grid, data)
        image = ScalarVolume(grid, np.zeros(grid.dims))
        with pytest.raises(InputDataError, match="ventricle"):
            simulate_resection(image, parc, self._scheme(),
                               ResectionParams(), seed=0)

    def test_placement_failure_after_retries(self):
        # a single isolated GM voxel: smoothing (opening radius 2) wipes the
        # resectable mask, so every attempt intersects to nothing
        grid = Grid((32, 32, 32))
        data = np.zeros(grid.dims, dtype=np.int32)
        data[16, 16, 16] = L["left_gm"]
        data[2, 2, 2] = L["ventricles"]
        data[1, 1, 1] = L["right_gm"]
        parc = LabelVolume(grid, data)
        image = ScalarVolume(grid, np.zeros(grid.dims))
        params = ResectionParams(volume_range=(500.0, 500.0))
        with pytest.raises(SimulationError, match="placement failed"):
            simulate_resection(image, parc, self._scheme(), params, seed=1)
