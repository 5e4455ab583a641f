"""Core 3D raster types and operations.

Volumes are immutable values: data arrays are copied on construction and
marked read-only, so they are safe to share across threads.  All operations
allocate fresh outputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from resectsim import _kernels
from resectsim.errors import GridMismatchError, InputDataError
from resectsim.mesh import TriangleMesh

__all__ = [
    "Grid", "ScalarVolume", "BinaryMask", "LabelVolume",
    "voxelize", "gaussian_blur", "morphology", "largest_component",
    "sample_positive_voxel", "masked_stats", "synth_gaussian_image",
    "blend", "hadamard", "grids_match",
]

_GRID_TOL = 1e-6


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Grid:
    """Voxel lattice geometry: dims, spacing (mm), origin (mm), direction.

    World coordinates of voxel index i are
    ``origin + direction @ (spacing * i)``.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    direction: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError(f"dims must be three sizes >= 1, got {dims}")
        if len(spacing) != 3 or any(not s > 0 for s in spacing):
            raise ValueError(f"spacing must be three values > 0, got {spacing}")
        d = _frozen(self.direction, np.float64)
        if d.shape != (3, 3):
            raise ValueError(f"direction must be 3x3, got {d.shape}")
        if not np.allclose(d @ d.T, np.eye(3), atol=_GRID_TOL):
            raise ValueError("direction matrix is not orthonormal "
                             f"(within {_GRID_TOL})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", d)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.dims

    @property
    def n_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def affine(self) -> np.ndarray:
        """4x4 index-to-world affine."""
        a = np.eye(4)
        a[:3, :3] = self.direction * np.asarray(self.spacing)
        a[:3, 3] = self.origin
        return a

    def index_to_world(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return (idx * self.spacing) @ self.direction.T + self.origin

    def world_to_index(self, world) -> np.ndarray:
        world = np.asarray(world, dtype=np.float64)
        return ((world - self.origin) @ self.direction) / self.spacing

    def close_to(self, other: "Grid", tol: float = _GRID_TOL) -> bool:
        return (self.dims == other.dims
                and np.allclose(self.spacing, other.spacing, atol=tol)
                and np.allclose(self.origin, other.origin, atol=tol)
                and np.allclose(self.direction, other.direction, atol=tol))

    def subgrid(self, slices) -> "Grid":
        """Grid of the window selected by three slices (unit step)."""
        start = [s.start or 0 for s in slices]
        dims = [s.stop - (s.start or 0) for s in slices]
        return Grid(tuple(dims), self.spacing,
                    tuple(self.index_to_world(start)), self.direction)


def grids_match(a, b, what: str = "volumes") -> None:
    if not a.grid.close_to(b.grid):
        raise GridMismatchError(f"{what} are not on the same grid")


@dataclass(frozen=True, eq=False)
class ScalarVolume:
    """Real-valued image on a grid; stored as float32, all values finite."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.float32)
        if data.shape != self.grid.dims:
            raise ValueError(
                f"data shape {data.shape} != grid dims {self.grid.dims}")
        if not np.all(np.isfinite(data)):
            raise InputDataError("scalar volume contains non-finite values")
        object.__setattr__(self, "data", data)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """{0, 1}-valued image on a grid, stored as uint8."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.uint8)
        if data.shape != self.grid.dims:
            raise ValueError(
                f"data shape {data.shape} != grid dims {self.grid.dims}")
        if data.max() > 1:
            raise ValueError("mask values must be 0 or 1")
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def as_bool(self) -> np.ndarray:
        return self.data.view(bool)

    def bounding_slices(self, pad: int = 0):
        """Slices of the tight bounding box (padded, clamped), or None."""
        idx = np.nonzero(self.data)
        if len(idx[0]) == 0:
            return None
        return tuple(
            slice(max(0, int(ax.min()) - pad),
                  min(n, int(ax.max()) + pad + 1))
            for ax, n in zip(idx, self.grid.dims))


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """Non-negative integer anatomical labels on a grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype.kind not in "iu":
            raise InputDataError(
                f"label volume must be integer-typed, got {data.dtype}")
        data = _frozen(data, data.dtype)
        if data.shape != self.grid.dims:
            raise ValueError(
                f"data shape {data.shape} != grid dims {self.grid.dims}")
        if data.min() < 0:
            raise InputDataError("labels must be non-negative")
        object.__setattr__(self, "data", data)

    def label_mask(self, labels) -> np.ndarray:
        """Boolean array of voxels whose label is in ``labels``."""
        table_size = int(self.data.max(initial=0)) + 1
        lut = np.zeros(table_size, dtype=bool)
        ids = [i for i in labels if i < table_size]
        lut[ids] = True
        return lut[self.data]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def voxelize(mesh: TriangleMesh, grid: Grid) -> BinaryMask:
    """Rasterize a watertight mesh: a voxel is set iff its center lies inside
    the closed surface (x-axis scanline ray parity)."""
    if not mesh.is_watertight():
        raise InputDataError("voxelize requires a watertight mesh")
    verts_idx = grid.world_to_index(mesh.vertices)
    data = _kernels.active.voxelize_mask(verts_idx, mesh.faces, *grid.dims)
    return BinaryMask(grid, data)


def gaussian_kernel1d(sigma_vox: float) -> np.ndarray:
    """Sampled Gaussian truncated at 4*sigma, renormalized to sum 1."""
    radius = int(math.floor(4.0 * sigma_vox))
    if sigma_vox <= 0 or radius < 1:
        return np.ones(1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma_vox) ** 2)
    return w / w.sum()


def _blur_data(data: np.ndarray, sigma_vox, bcs) -> np.ndarray:
    """Separable Gaussian on a float array; ``bcs[axis] = (low, high)`` with
    0 = zero fill and 1 = reflect."""
    out = np.asarray(data, dtype=np.float64)
    for axis in range(3):
        kernel = gaussian_kernel1d(sigma_vox[axis])
        if len(kernel) == 1:
            continue
        moved = np.ascontiguousarray(np.moveaxis(out, axis, 2))
        moved = _kernels.active.convolve1d_last(moved, kernel, *bcs[axis])
        out = np.moveaxis(moved, 2, axis)
    return np.ascontiguousarray(out)


def gaussian_blur(vol: ScalarVolume, sigma) -> ScalarVolume:
    """Separable Gaussian blur, kernel truncated at 4*sigma and renormalized,
    reflect boundaries. ``sigma`` is millimeters per axis; 0 is the identity.
    """
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (3,))
    if np.any(sigma < 0):
        raise ValueError(f"sigma must be >= 0, got {tuple(sigma)}")
    sigma_vox = sigma / np.asarray(vol.grid.spacing)
    data = _blur_data(vol.data, sigma_vox, [(1, 1)] * 3)
    return ScalarVolume(vol.grid, data)


def morphology(mask: BinaryMask, op: str, radius: int) -> BinaryMask:
    """Binary morphology with a discrete Euclidean ball (voxels at distance
    <= radius). open = dilate(erode(.)), close = erode(dilate(.))."""
    radius = int(radius)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    kern = _kernels.active
    data = mask.data
    if op == "erode":
        data = kern.binary_erode(data, radius)
    elif op == "dilate":
        data = kern.binary_dilate(data, radius)
    elif op == "open":
        data = kern.binary_dilate(kern.binary_erode(data, radius), radius)
    elif op == "close":
        data = kern.binary_erode(kern.binary_dilate(data, radius), radius)
    else:
        raise ValueError(f"unknown morphology op {op!r}")
    return BinaryMask(mask.grid, data)


def largest_component(mask: BinaryMask, connectivity: int = 26) -> BinaryMask:
    """Keep only the largest connected component.

    Ties are broken by the smallest linear index of the component's first
    voxel in x-fastest scan order.
    """
    if connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    if mask.is_empty:
        return mask
    labels, count = _kernels.active.label_components(mask.data, connectivity)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    sizes[0] = -1
    best = sizes.max()
    candidates = np.flatnonzero(sizes == best)
    if len(candidates) > 1:
        nx, ny, _ = mask.grid.dims
        ix, iy, iz = np.nonzero(labels)
        xfirst = ix + nx * (iy + ny * iz)
        first = np.full(count + 1, np.iinfo(np.int64).max)
        np.minimum.at(first, labels[ix, iy, iz], xfirst)
        winner = candidates[np.argmin(first[candidates])]
    else:
        winner = candidates[0]
    return BinaryMask(mask.grid, (labels == winner).astype(np.uint8))


def sample_positive_voxel(mask: BinaryMask, rng: np.random.Generator):
    """Uniformly random index of a positive voxel."""
    flat = np.flatnonzero(mask.data)
    if len(flat) == 0:
        raise InputDataError("no candidate seed voxels")
    choice = flat[int(rng.integers(len(flat)))]
    return tuple(int(i) for i in np.unravel_index(choice, mask.grid.dims))


def masked_stats(vol: ScalarVolume, mask: BinaryMask):
    """(mean, population stddev) of the voxels selected by the mask."""
    grids_match(vol, mask)
    if mask.is_empty:
        raise InputDataError("masked_stats requires a nonempty mask")
    values = vol.data[mask.as_bool()].astype(np.float64)
    mean = float(values.mean())
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    return mean, std


def synth_gaussian_image(grid: Grid, mean: float, stddev: float,
                         rng: np.random.Generator) -> ScalarVolume:
    """I.i.d. normal voxels via Box-Muller over the generator's uniforms.

    One (u1, u2) pair is consumed per voxel in C order:
    ``z = sqrt(-2*ln(1 - u1)) * cos(2*pi*u2)``.
    """
    stddev = float(stddev)
    if stddev < 0:
        raise ValueError(f"stddev must be >= 0, got {stddev}")
    n = grid.n_voxels
    u1 = rng.random(n)
    u2 = rng.random(n)
    z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
    data = (float(mean) + stddev * z).reshape(grid.dims)
    return ScalarVolume(grid, data)


def blend(x_pre: ScalarVolume, x_csf: ScalarVolume,
          alpha: ScalarVolume) -> ScalarVolume:
    """Per-voxel convex combination ``alpha*x_csf + (1 - alpha)*x_pre``.

    Where alpha is exactly 0 (resp. 1) the output equals x_pre (resp. x_csf)
    bit for bit.
    """
    grids_match(x_pre, x_csf)
    grids_match(x_pre, alpha)
    a = alpha.data.astype(np.float64)
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError("alpha values must lie in [0, 1]")
    out = a * x_csf.data.astype(np.float64) \
        + (1.0 - a) * x_pre.data.astype(np.float64)
    return ScalarVolume(x_pre.grid, out)


def hadamard(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    """Voxelwise logical AND of two masks."""
    grids_match(a, b, "masks")
    return BinaryMask(a.grid, a.data & b.data)
