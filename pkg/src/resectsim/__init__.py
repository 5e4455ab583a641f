"""resectsim: synthesize postoperative brain-resection training data.

Generates realistic resected images and cavity labels from a preoperative
T1 MRI and its brain parcellation: a noise-perturbed icosphere is placed at
a random gray-matter seed, constrained to the resectable hemisphere, and
filled with CSF-like texture blended through a smooth alpha channel.
"""

from resectsim.errors import (
    ConfigError,
    GridMismatchError,
    InputDataError,
    ResectSimError,
    SimulationError,
)
from resectsim.evaluate import ScoreSummary, dice, median_iqr, threshold_mask
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
from resectsim.noise import NoiseParams, fractal_noise, simplex3
from resectsim.parcellation import (
    ParcellationScheme,
    SmoothingRecipe,
    gif_scheme,
    gray_matter_mask,
    resectable_mask,
    ventricle_mask,
)
from resectsim.simulate import (
    RealizedParams,
    ResectionParams,
    SimulationResult,
    sample_params,
    simulate_resection,
)
from resectsim.volume import (
    BinaryMask,
    Grid,
    LabelVolume,
    ScalarVolume,
    blend,
    gaussian_blur,
    hadamard,
    largest_component,
    masked_stats,
    morphology,
    sample_positive_voxel,
    synth_gaussian_image,
    voxelize,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "ConfigError", "EllipsoidAxes", "EulerAngles", "Grid",
    "GridMismatchError", "IcosphereSpec", "InputDataError", "LabelVolume",
    "NoiseParams", "ParcellationScheme", "RealizedParams", "ResectSimError",
    "ResectionParams", "ScalarVolume", "ScoreSummary", "SimulationError",
    "SimulationResult", "SmoothingRecipe", "TriangleMesh", "blend",
    "build_cuboid", "build_icosphere", "dice", "fractal_noise",
    "gaussian_blur", "gif_scheme", "gray_matter_mask", "hadamard",
    "largest_component", "masked_stats", "median_iqr", "mesh_volume",
    "morphology", "perturb_radially", "resectable_mask",
    "sample_params", "sample_positive_voxel", "semiaxes_from_volume",
    "simplex3", "simulate_resection", "synth_gaussian_image",
    "threshold_mask", "transform_mesh", "ventricle_mask", "voxelize",
]
