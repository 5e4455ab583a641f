"""The end-to-end generative pipeline: sample parameters, build and place a
cavity mesh, derive the cavity label, and synthesize the resected image.

Given a preoperative image, its parcellation and a seed, the pipeline is a
pure function: one counter-based RNG stream (Philox) is consumed in a fixed
documented order, so results are bit-reproducible and independent of any
surrounding parallelism.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from resectsim.errors import ConfigError, InputDataError, SimulationError
from resectsim.mesh import (
    EulerAngles,
    IcosphereSpec,
    TriangleMesh,
    build_cuboid,
    build_icosphere,
    perturb_radially,
    semiaxes_from_volume,
    transform_mesh,
)
from resectsim.noise import NoiseParams
from resectsim.parcellation import (
    ParcellationScheme,
    SmoothingRecipe,
    gray_matter_mask,
    ventricle_mask,
)
from resectsim.volume import (
    BinaryMask,
    LabelVolume,
    ScalarVolume,
    _blur_data,
    gaussian_kernel1d,
    grids_match,
    masked_stats,
    sample_positive_voxel,
    synth_gaussian_image,
    voxelize,
)

__all__ = ["ResectionParams", "RealizedParams", "SimulationResult",
           "SimulationDebug", "sample_params", "simulate_resection",
           "SHAPES", "MAX_PLACEMENT_ATTEMPTS"]

SHAPES = ("noisy", "ellipsoid", "cuboid")
MAX_PLACEMENT_ATTEMPTS = 10

_TWO_PI = 2.0 * math.pi


def _check_range(name, pair, lo_min=None, strict_lo=False):
    try:
        lo, hi = (float(pair[0]), float(pair[1]))
    except (TypeError, ValueError, IndexError):
        raise ConfigError(f"{name} must be a (min, max) pair") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ConfigError(f"{name} must satisfy min <= max, got {pair}")
    if lo_min is not None:
        if strict_lo and not lo > lo_min:
            raise ConfigError(f"{name} minimum must be > {lo_min}, got {lo}")
        if not strict_lo and not lo >= lo_min:
            raise ConfigError(f"{name} minimum must be >= {lo_min}, got {lo}")
    return (lo, hi)


@dataclass(frozen=True)
class ResectionParams:
    """Sampling ranges and fixed settings of the simulation.

    Volumes are drawn log-uniformly from ``volume_range`` (mm^3); all other
    ranges are uniform.  ``zeta_range`` is in unit-sphere coordinates.
    """

    shape: str = "noisy"
    volume_range: tuple[float, float] = (500.0, 50000.0)
    lambda_range: tuple[float, float] = (1.0, 2.0)
    rotation_range: tuple = ((0.0, _TWO_PI),) * 3
    zeta_range: tuple[float, float] = (0.2, 1.0)
    mu_range: tuple[float, float] = (0.0, 1000.0)
    octaves: int = 4
    persistence: float = 0.5
    blur_sigma_range: tuple[float, float] = (0.5, 2.0)
    frequency: int = 3
    amplitude: float = 0.5
    exact_volume: bool = False
    closing_radius: int = 3
    opening_radius: int = 2

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        object.__setattr__(self, "volume_range",
                           _check_range("volume_range", self.volume_range,
                                        0.0, strict_lo=True))
        object.__setattr__(self, "lambda_range",
                           _check_range("lambda_range", self.lambda_range, 1.0))
        rot = self.rotation_range
        if len(rot) == 2 and np.isscalar(rot[0]):
            rot = (rot,) * 3
        if len(rot) != 3:
            raise ConfigError("rotation_range must be one (min, max) pair "
                              "or three of them")
        rot = tuple(_check_range(f"rotation_range[{i}]", pair, 0.0)
                    for i, pair in enumerate(rot))
        for i, (lo, hi) in enumerate(rot):
            if hi > _TWO_PI:
                raise ConfigError(
                    f"rotation_range[{i}] maximum must be <= 2*pi, got {hi}")
        object.__setattr__(self, "rotation_range", rot)
        object.__setattr__(self, "zeta_range",
                           _check_range("zeta_range", self.zeta_range,
                                        0.0, strict_lo=True))
        object.__setattr__(self, "mu_range",
                           _check_range("mu_range", self.mu_range))
        object.__setattr__(self, "blur_sigma_range",
                           _check_range("blur_sigma_range",
                                        self.blur_sigma_range, 0.0))
        if int(self.octaves) < 1:
            raise ConfigError(f"octaves must be >= 1, got {self.octaves}")
        object.__setattr__(self, "octaves", int(self.octaves))
        if not 0.0 < float(self.persistence) <= 1.0:
            raise ConfigError(
                f"persistence must be in (0, 1], got {self.persistence}")
        object.__setattr__(self, "persistence", float(self.persistence))
        try:
            IcosphereSpec(self.frequency)
        except ValueError as exc:
            raise ConfigError(f"frequency: {exc}") from None
        object.__setattr__(self, "frequency", int(self.frequency))
        if not (np.isfinite(self.amplitude) and float(self.amplitude) >= 0):
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "exact_volume", bool(self.exact_volume))
        for name in ("closing_radius", "opening_radius"):
            value = int(getattr(self, name))
            if value < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    @property
    def smoothing(self) -> SmoothingRecipe:
        return SmoothingRecipe(self.closing_radius, self.opening_radius)

    @classmethod
    def from_mapping(cls, mapping) -> "ResectionParams":
        """Build from a plain dict with field names as keys."""
        fields = set(cls.__dataclass_fields__)
        unknown = set(mapping) - fields
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: mapping[k] for k in mapping})


@dataclass(frozen=True)
class RealizedParams:
    """One concrete parameter draw."""

    volume: float
    lam: float
    angles: EulerAngles
    zeta: float
    mu: tuple[float, float, float]
    blur_sigma: tuple[float, float, float]
    hemisphere: str


def _draw_angles(params: ResectionParams, rng) -> EulerAngles:
    draws = [float(rng.uniform(lo, hi)) for lo, hi in params.rotation_range]
    return EulerAngles(*(min(a, np.nextafter(_TWO_PI, 0.0)) for a in draws))


def sample_params(params: ResectionParams, rng: np.random.Generator
                  ) -> RealizedParams:
    """Draw one parameter realization.

    Draw order is fixed: volume (log-uniform), lambda, the three rotation
    angles, zeta, the three mu components, the three blur sigmas, then the
    hemisphere (0 = left, 1 = right).
    """
    v_lo, v_hi = params.volume_range
    log_v = float(rng.uniform(math.log(v_lo), math.log(v_hi)))
    volume = v_lo if v_lo == v_hi else math.exp(log_v)
    lam = float(rng.uniform(*params.lambda_range))
    angles = _draw_angles(params, rng)
    zeta = float(rng.uniform(*params.zeta_range))
    mu = tuple(float(rng.uniform(*params.mu_range)) for _ in range(3))
    sigma = tuple(float(rng.uniform(*params.blur_sigma_range))
                  for _ in range(3))
    hemisphere = "left" if int(rng.integers(2)) == 0 else "right"
    return RealizedParams(volume, lam, angles, zeta, mu, sigma, hemisphere)


@dataclass(frozen=True)
class SimulationDebug:
    """Large intermediates, kept only on request."""

    cavity_mask: BinaryMask          # M_Sa before hemisphere restriction
    alpha: ScalarVolume              # blend weights on the texture window
    csf: ScalarVolume                # synthesized CSF on the texture window
    window: tuple                    # grid slices of the texture window


@dataclass(frozen=True)
class SimulationResult:
    """The simulated image/label pair plus provenance metadata."""

    x_sim: ScalarVolume
    y_sim: BinaryMask
    meta: dict
    placed_mesh: TriangleMesh
    debug: Optional[SimulationDebug] = None


def _build_base_mesh(params: ResectionParams, realized: RealizedParams
                     ) -> TriangleMesh:
    if params.shape == "cuboid":
        return build_cuboid(realized.volume, realized.lam, params.exact_volume)
    sphere = build_icosphere(IcosphereSpec(params.frequency))
    if params.shape == "noisy":
        noise = NoiseParams(params.octaves, params.persistence,
                            realized.zeta, realized.mu)
        sphere = perturb_radially(sphere, noise, params.amplitude)
    return sphere


def _place_mesh(base: TriangleMesh, params: ResectionParams,
                realized: RealizedParams, angles: EulerAngles,
                center_world) -> TriangleMesh:
    if params.shape == "cuboid":
        # cuboids are already sized; never rotated
        return TriangleMesh(base.vertices + np.asarray(center_world),
                            base.faces)
    axes = semiaxes_from_volume(realized.volume, realized.lam,
                                params.exact_volume)
    return transform_mesh(base, angles, axes, center_world)


def simulate_resection(x_pre: ScalarVolume, p: LabelVolume,
                       scheme: ParcellationScheme, params: ResectionParams,
                       seed: int, keep_debug: bool = False
                       ) -> SimulationResult:
    """Simulate one resection: returns (X_sim, Y_sim) plus metadata.

    Pipeline: sample parameters; derive the gray-matter and resectable
    masks; build the cavity mesh (icosphere + noise + rotation + scaling
    for ``noisy``, no noise for ``ellipsoid``, unrotated box for
    ``cuboid``); center it on a random gray-matter voxel; voxelize;
    intersect with the smoothed resectable mask; fit CSF statistics from
    the ventricles; synthesize CSF texture; blur the label into an alpha
    channel; blend.  If the intersected label comes out empty, a fresh seed
    voxel and rotation are drawn (up to 10 attempts).

    Raster work runs on tight windows around the cavity; results are
    identical to whole-volume operation because every operator's
    dependency radius is covered by the window padding.  The CSF texture is
    synthesized on the blend window only.
    """
    grids_match(x_pre, p, "image and parcellation")
    grid = x_pre.grid
    rng = np.random.Generator(np.random.Philox(int(seed)))
    realized = sample_params(params, rng)
    h = realized.hemisphere

    gm = gray_matter_mask(p, scheme, h)
    if gm.is_empty:
        raise InputDataError(f"gray matter mask for hemisphere {h!r} is empty")
    ventricles = ventricle_mask(p, scheme)

    base = _build_base_mesh(params, realized)
    smoothing = params.smoothing

    placed = y_data = crop = None
    seed_voxel = None
    angles = realized.angles
    attempts = 0
    for attempt in range(MAX_PLACEMENT_ATTEMPTS):
        attempts = attempt + 1
        seed_voxel = sample_positive_voxel(gm, rng)
        if attempt > 0:
            angles = _draw_angles(params, rng)
        center = grid.index_to_world(seed_voxel)
        candidate = _place_mesh(base, params, realized, angles, center)
        cavity = voxelize(candidate, grid)
        bbox = cavity.bounding_slices(pad=smoothing.reach)
        if bbox is None:
            continue
        sub = grid.subgrid(bbox)
        raw_crop = BinaryMask(sub, _raw_resectable_window(p, scheme, h, bbox))
        smooth_crop = smoothing.apply(raw_crop)
        y_crop = cavity.data[bbox] & smooth_crop.data
        if y_crop.any():
            placed = candidate
            y_data = np.zeros(grid.dims, dtype=np.uint8)
            y_data[bbox] = y_crop
            crop = bbox
            assert not (y_crop & ~smooth_crop.data).any()
            break
    if placed is None:
        raise SimulationError(
            f"cavity placement failed after {MAX_PLACEMENT_ATTEMPTS} attempts")
    y_sim = BinaryMask(grid, y_data)

    csf_mean, csf_std = masked_stats(x_pre, ventricles)

    sigma_vox = np.asarray(realized.blur_sigma) / np.asarray(grid.spacing)
    radii = [len(gaussian_kernel1d(s)) // 2 for s in sigma_vox]
    window = tuple(
        slice(max(0, s.start - r), min(n, s.stop + r))
        for s, r, n in zip(y_sim.bounding_slices(), radii, grid.dims))
    wgrid = grid.subgrid(window)

    csf = synth_gaussian_image(wgrid, csf_mean, csf_std, rng)

    bcs = [(1 if w.start == 0 else 0, 1 if w.stop == n else 0)
           for w, n in zip(window, grid.dims)]
    alpha = _blur_data(y_sim.data[window].astype(np.float64), sigma_vox, bcs)
    np.clip(alpha, 0.0, 1.0, out=alpha)

    x_data = np.array(x_pre.data)
    pre_w = x_data[window].astype(np.float64)
    blended = alpha * csf.data.astype(np.float64) + (1.0 - alpha) * pre_w
    x_data[window] = blended.astype(np.float32)
    x_sim = ScalarVolume(grid, x_data)

    meta = {
        "seed": int(seed),
        "shape": params.shape,
        "hemisphere": h,
        "seed_voxel": list(seed_voxel),
        "volume_mm3": realized.volume,
        "lambda": realized.lam,
        "angles_rad": [angles.x, angles.y, angles.z],
        "zeta": realized.zeta,
        "mu": list(realized.mu),
        "blur_sigma_mm": list(realized.blur_sigma),
        "amplitude": params.amplitude if params.shape == "noisy" else 0.0,
        "csf_mean": csf_mean,
        "csf_std": csf_std,
        "cavity_voxels": int(y_sim.count),
        "attempts": attempts,
    }

    debug = None
    if keep_debug:
        cavity_full = voxelize(placed, grid)
        debug = SimulationDebug(cavity_full, ScalarVolume(wgrid, alpha),
                                csf, window)
    return SimulationResult(x_sim, y_sim, meta, placed, debug)


def _raw_resectable_window(p: LabelVolume, scheme: ParcellationScheme,
                           h: str, bbox) -> np.ndarray:
    """Raw resectable mask restricted to a window (cheap LUT on the crop)."""
    contralateral = "right" if h == "left" else "left"
    excluded = (scheme.background | scheme.brainstem | scheme.cerebellum
                | scheme.hemisphere(contralateral))
    crop = p.data[bbox]
    table_size = int(crop.max(initial=0)) + 1
    lut = np.ones(table_size, dtype=bool)
    lut[[i for i in excluded if i < table_size]] = False
    return lut[crop].astype(np.uint8)
