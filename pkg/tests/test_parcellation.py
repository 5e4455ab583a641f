import numpy as np
import pytest

from resectsim.errors import ConfigError, InputDataError
from resectsim.parcellation import (
    ParcellationScheme,
    SmoothingRecipe,
    gif_scheme,
    gray_matter_mask,
    raw_resectable_mask,
    resectable_mask,
    ventricle_mask,
)
from resectsim.testing import PHANTOM_LABELS, synthetic_scheme
from resectsim.volume import Grid, LabelVolume, morphology


def tiny_parcellation(assignments, dims=(6, 6, 6)):
    data = np.zeros(dims, dtype=np.int32)
    for voxel, label in assignments.items():
        data[voxel] = label
    return LabelVolume(Grid(dims), data)


SCHEME = synthetic_scheme()
L = PHANTOM_LABELS


class TestGrayMatter:
    def test_single_voxel(self):
        p = tiny_parcellation({(1, 2, 3): L["left_gm"]})
        mask = gray_matter_mask(p, SCHEME, "left")
        assert mask.count == 1
        assert mask.data[1, 2, 3] == 1

    def test_contralateral_empty(self):
        p = tiny_parcellation({(1, 2, 3): L["left_gm"]})
        assert gray_matter_mask(p, SCHEME, "right").is_empty

    def test_left_right_union_is_all_gm(self, phantom96):
        _, parcellation, scheme = phantom96
        left = gray_matter_mask(parcellation, scheme, "left")
        right = gray_matter_mask(parcellation, scheme, "right")
        all_gm = parcellation.label_mask(scheme.left_cortical_gm
                                         | scheme.right_cortical_gm)
        assert np.array_equal(left.as_bool() | right.as_bool(), all_gm)

    def test_empty_scheme_set_rejected(self):
        scheme = ParcellationScheme(
            background=frozenset({0}), brainstem=frozenset({7}),
            cerebellum=frozenset({8}),
            left_hemisphere=frozenset({1}), right_hemisphere=frozenset({3}),
            left_cortical_gm=frozenset(), right_cortical_gm=frozenset(),
            ventricles=frozenset({5}))
        p = tiny_parcellation({(0, 0, 0): 1})
        with pytest.raises(ConfigError):
            gray_matter_mask(p, scheme, "left")

    def test_bad_hemisphere(self):
        p = tiny_parcellation({})
        with pytest.raises(ValueError):
            gray_matter_mask(p, SCHEME, "middle")


class TestResectable:
    def test_exclusions(self):
        p = tiny_parcellation({
            (0, 0, 0): L["cerebellum"],
            (1, 0, 0): L["brainstem"],
            (2, 0, 0): L["left_wm"],      # ipsilateral for h=left
            (3, 0, 0): L["right_wm"],     # contralateral for h=left
            (4, 0, 0): 99,                # unlisted label
        })
        raw = raw_resectable_mask(p, SCHEME, "left")
        assert raw.data[0, 0, 0] == 0   # cerebellum excluded
        assert raw.data[1, 0, 0] == 0   # brainstem excluded
        assert raw.data[2, 0, 0] == 1   # ipsilateral white matter kept
        assert raw.data[3, 0, 0] == 0   # contralateral excluded
        assert raw.data[4, 0, 0] == 1   # unlisted labels resectable
        assert raw.data[5, 0, 0] == 0   # background

    def test_hemisphere_masks_disjoint_on_hemisphere_labels(self, phantom96):
        _, parcellation, scheme = phantom96
        left = raw_resectable_mask(parcellation, scheme, "left").as_bool()
        right = raw_resectable_mask(parcellation, scheme, "right").as_bool()
        hemispheres = parcellation.label_mask(scheme.left_hemisphere
                                              | scheme.right_hemisphere)
        assert not np.any(left & right & hemispheres)

    def test_midline_kept_in_both(self):
        p = tiny_parcellation({(2, 2, 2): L["ventricles"]})
        assert raw_resectable_mask(p, SCHEME, "left").data[2, 2, 2] == 1
        assert raw_resectable_mask(p, SCHEME, "right").data[2, 2, 2] == 1

    def test_gm_subset_of_raw_resectable(self, phantom96):
        _, parcellation, scheme = phantom96
        for h in ("left", "right"):
            gm = gray_matter_mask(parcellation, scheme, h).as_bool()
            raw = raw_resectable_mask(parcellation, scheme, h).as_bool()
            assert not np.any(gm & ~raw)

    def test_smoothing_stays_within_dilated_raw(self, phantom96):
        _, parcellation, scheme = phantom96
        recipe = SmoothingRecipe(closing_radius=3, opening_radius=2)
        raw = raw_resectable_mask(parcellation, scheme, "left")
        smoothed = resectable_mask(parcellation, scheme, "left", recipe)
        bound = morphology(raw, "dilate", recipe.closing_radius)
        assert not np.any(smoothed.as_bool() & ~bound.as_bool())

    def test_zero_radius_recipe_is_raw(self, phantom96):
        _, parcellation, scheme = phantom96
        raw = raw_resectable_mask(parcellation, scheme, "right")
        out = resectable_mask(parcellation, scheme, "right",
                              SmoothingRecipe(0, 0))
        assert np.array_equal(out.data, raw.data)


class TestVentricles:
    def test_exact_voxels(self):
        voxels = {(1, 1, 1): L["ventricles"], (2, 2, 2): L["ventricles"]}
        p = tiny_parcellation(voxels)
        mask = ventricle_mask(p, SCHEME)
        assert mask.count == 2

    def test_missing_ventricles_error(self):
        p = tiny_parcellation({(0, 0, 0): L["left_wm"]})
        with pytest.raises(InputDataError, match="ventricle"):
            ventricle_mask(p, SCHEME)

    def test_disjoint_from_background(self, phantom96):
        _, parcellation, scheme = phantom96
        vent = ventricle_mask(parcellation, scheme).as_bool()
        background = parcellation.label_mask(scheme.background)
        assert not np.any(vent & background)


class TestScheme:
    def test_roles_must_be_disjoint(self):
        with pytest.raises(ConfigError, match="overlap"):
            ParcellationScheme(
                background=frozenset({0, 7}), brainstem=frozenset({7}),
                cerebellum=frozenset({8}),
                left_hemisphere=frozenset({1, 2}),
                right_hemisphere=frozenset({3, 4}),
                left_cortical_gm=frozenset({2}),
                right_cortical_gm=frozenset({4}),
                ventricles=frozenset({5}))

    def test_gm_must_be_subset(self):
        with pytest.raises(ConfigError, match="subset"):
            ParcellationScheme(
                background=frozenset({0}), brainstem=frozenset({7}),
                cerebellum=frozenset({8}),
                left_hemisphere=frozenset({1}),
                right_hemisphere=frozenset({3, 4}),
                left_cortical_gm=frozenset({2}),
                right_cortical_gm=frozenset({4}),
                ventricles=frozenset({5}))

    def test_from_mapping_validates(self):
        with pytest.raises(ConfigError, match="missing"):
            ParcellationScheme.from_mapping({"background": [0]})
        good = {role: [] for role in
                ("brainstem", "cerebellum", "left_cortical_gm",
                 "right_cortical_gm")}
        good.update({"background": [0], "left_hemisphere": [1],
                     "right_hemisphere": [2], "ventricles": [3]})
        scheme = ParcellationScheme.from_mapping(good)
        assert scheme.background == frozenset({0})
        bad = dict(good)
        bad["extra_role"] = [9]
        with pytest.raises(ConfigError, match="unknown"):
            ParcellationScheme.from_mapping(bad)
        bad = dict(good)
        bad["background"] = ["zero"]
        with pytest.raises(ConfigError, match="integers"):
            ParcellationScheme.from_mapping(bad)

    def test_gif_scheme_loads(self):
        scheme = gif_scheme()
        assert 35 in scheme.brainstem
        assert scheme.left_cortical_gm <= scheme.left_hemisphere
        assert scheme.right_cortical_gm <= scheme.right_hemisphere
        assert not scheme.left_hemisphere & scheme.right_hemisphere

    def test_smoothing_recipe_validation(self):
        with pytest.raises(ConfigError):
            SmoothingRecipe(closing_radius=-1)
        assert SmoothingRecipe(3, 2).reach == 10
