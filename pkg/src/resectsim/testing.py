"""Synthetic phantom data for tests, demos and benchmarks.

Builds a procedural head phantom: an ellipsoidal brain split into left and
right hemispheres (white matter core, cortical gray matter shell), central
ventricles, a brainstem and a cerebellum, with matching T1-like intensities.
No clinical data required.
"""

import numpy as np

from resectsim.parcellation import ParcellationScheme
from resectsim.volume import Grid, LabelVolume, ScalarVolume

__all__ = ["synthetic_scheme", "make_phantom", "PHANTOM_LABELS"]

PHANTOM_LABELS = {
    "background": 0,
    "left_wm": 1, "left_gm": 2,
    "right_wm": 3, "right_gm": 4,
    "ventricles": 5,
    "brainstem": 7,
    "cerebellum": 8,
}

_INTENSITY = {0: 0.0, 1: 110.0, 2: 75.0, 3: 110.0, 4: 75.0,
              5: 28.0, 7: 95.0, 8: 85.0}


def synthetic_scheme() -> ParcellationScheme:
    L = PHANTOM_LABELS
    return ParcellationScheme(
        background=frozenset({L["background"]}),
        brainstem=frozenset({L["brainstem"]}),
        cerebellum=frozenset({L["cerebellum"]}),
        left_hemisphere=frozenset({L["left_wm"], L["left_gm"]}),
        right_hemisphere=frozenset({L["right_wm"], L["right_gm"]}),
        left_cortical_gm=frozenset({L["left_gm"]}),
        right_cortical_gm=frozenset({L["right_gm"]}),
        ventricles=frozenset({L["ventricles"]}),
    )


def _ellipsoid(coords, center, radii) -> np.ndarray:
    x, y, z = coords
    return (((x - center[0]) / radii[0]) ** 2
            + ((y - center[1]) / radii[1]) ** 2
            + ((z - center[2]) / radii[2]) ** 2) <= 1.0


def make_phantom(dims=(96, 96, 96), spacing=(1.0, 1.0, 1.0), seed=0,
                 noise_std=4.0):
    """Return ``(image, parcellation, scheme)`` for a synthetic head.

    The image is the per-structure intensity plus a mild intensity ramp and
    seeded Gaussian noise.
    """
    dims = tuple(int(d) for d in dims)
    grid = Grid(dims, spacing)
    nx, ny, nz = dims
    cx, cy, cz = (nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0
    sx, sy, sz = nx / 96.0, ny / 96.0, nz / 96.0
    x, y, z = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                          indexing="ij")
    coords = (x.astype(np.float64), y.astype(np.float64),
              z.astype(np.float64))

    labels = np.zeros(dims, dtype=np.int32)
    L = PHANTOM_LABELS

    brain_radii = (0.42 * nx, 0.42 * ny, 0.38 * nz)
    brain_center = (cx, cy, cz + 0.04 * nz)
    brain = _ellipsoid(coords, brain_center, brain_radii)
    # normalized ellipsoidal radius separates the cortical shell from WM
    rnorm = np.sqrt(((coords[0] - brain_center[0]) / brain_radii[0]) ** 2
                    + ((coords[1] - brain_center[1]) / brain_radii[1]) ** 2
                    + ((coords[2] - brain_center[2]) / brain_radii[2]) ** 2)
    shell = brain & (rnorm > 0.82)
    core = brain & ~shell
    left = coords[0] < cx
    labels[core & left] = L["left_wm"]
    labels[shell & left] = L["left_gm"]
    labels[core & ~left] = L["right_wm"]
    labels[shell & ~left] = L["right_gm"]

    for side in (-1.0, 1.0):
        ventricle = _ellipsoid(
            coords, (cx + side * 7.0 * sx, cy, cz + 0.02 * nz),
            (4.5 * sx, 11.0 * sy, 7.0 * sz))
        labels[ventricle & brain] = L["ventricles"]

    brainstem = _ellipsoid(coords, (cx, cy - 0.04 * ny, cz - 0.32 * nz),
                           (6.0 * sx, 7.0 * sy, 13.0 * sz))
    labels[brainstem] = L["brainstem"]

    cerebellum = _ellipsoid(coords, (cx, cy + 0.24 * ny, cz - 0.26 * nz),
                            (15.0 * sx, 11.0 * sy, 9.0 * sz))
    labels[cerebellum] = L["cerebellum"]

    intensity_lut = np.zeros(max(_INTENSITY) + 1)
    for label, value in _INTENSITY.items():
        intensity_lut[label] = value
    image = intensity_lut[labels]
    image += np.where(labels > 0, 6.0 * (coords[2] / max(nz - 1, 1)), 0.0)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    image = image + noise_std * rng.standard_normal(dims)
    image = np.clip(image, 0.0, None)

    return (ScalarVolume(grid, image), LabelVolume(grid, labels),
            synthetic_scheme())
