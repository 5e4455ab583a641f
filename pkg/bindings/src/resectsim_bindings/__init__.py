"""In-process array interface to the resection simulator.

Lets training pipelines invoke the simulator per mini-batch without file
I/O::

    x_sim, y_sim, meta = resectsim_bindings.simulate(
        image, image_affine, parcellation, parcellation_affine,
        params={"shape": "noisy"}, seed=42)

Results are bit-identical to the ``resectsim`` CLI on the same data,
parameters and seed: this module only marshals arrays to the core pipeline
and never reimplements any of it.  Inputs are copied once into immutable
volumes (non-contiguous inputs warn); the returned arrays are read-only
zero-copy views of the result buffers.  The heavy kernels release the GIL,
so data-loader worker threads scale.
"""

import warnings

import numpy as np

from resectsim import gif_scheme
from resectsim.parcellation import ParcellationScheme
from resectsim.simulate import ResectionParams, simulate_resection
from resectsim.volume import Grid, LabelVolume, ScalarVolume

__all__ = ["simulate"]

__version__ = "0.1.0"

_AFFINE_TOL = 1e-6


def _grid_from_affine(shape, affine, what: str) -> Grid:
    affine = np.asarray(affine, dtype=np.float64)
    if affine.shape != (4, 4):
        raise ValueError(f"{what} affine must be 4x4, got {affine.shape}")
    linear = affine[:3, :3]
    spacing = np.linalg.norm(linear, axis=0)
    if np.any(spacing <= 0):
        raise ValueError(f"{what} affine has a zero-length axis")
    return Grid(tuple(shape), tuple(spacing), tuple(affine[:3, 3]),
                linear / spacing)


def _as_contiguous(array, what: str) -> np.ndarray:
    array = np.asarray(array)
    if array.ndim != 3:
        raise ValueError(f"{what} must be a 3D array, got shape {array.shape}")
    if not array.flags.c_contiguous:
        warnings.warn(f"{what} array is not C-contiguous; copying",
                      RuntimeWarning, stacklevel=3)
        array = np.ascontiguousarray(array)
    return array


def simulate(image, image_affine, parcellation, parcellation_affine,
             params: dict | None = None, seed: int = 0):
    """Run one resection simulation on in-memory arrays.

    image/parcellation: 3D float and integer arrays with 4x4 index-to-world
    affines (equal shapes; affines equal within 1e-6).  ``params`` maps
    :class:`resectsim.ResectionParams` field names to values; an optional
    ``"scheme"`` entry overrides the parcellation label roles (default: the
    built-in GIF scheme).

    Returns ``(x_sim, y_sim, meta)``: a float32 image, a uint8 label (both
    read-only views) and the provenance metadata mapping.
    """
    image = _as_contiguous(image, "image")
    parcellation = _as_contiguous(parcellation, "parcellation")
    if image.shape != parcellation.shape:
        raise ValueError(
            f"image and parcellation shapes differ: {image.shape} vs "
            f"{parcellation.shape}")
    image_grid = _grid_from_affine(image.shape, image_affine, "image")
    parc_grid = _grid_from_affine(parcellation.shape, parcellation_affine,
                                  "parcellation")
    if not image_grid.close_to(parc_grid, tol=_AFFINE_TOL):
        raise ValueError("image and parcellation affines differ beyond "
                         f"{_AFFINE_TOL}")

    mapping = dict(params or {})
    scheme_spec = mapping.pop("scheme", None)
    scheme = ParcellationScheme.from_mapping(scheme_spec) \
        if scheme_spec is not None else gif_scheme()
    resection_params = ResectionParams.from_mapping(mapping)

    result = simulate_resection(ScalarVolume(image_grid, image),
                                LabelVolume(parc_grid, parcellation),
                                scheme, resection_params, int(seed))
    return result.x_sim.data, result.y_sim.data, dict(result.meta)
