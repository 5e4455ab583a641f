"""Cavity surface meshes: icosphere construction, radial noise perturbation,
rigid/scaling transforms, the cuboid variant, and volume measurement.

All meshes are closed genus-0 triangle surfaces in millimeter coordinates
with outward (counter-clockwise) winding.
"""

import math
from dataclasses import dataclass

import numpy as np

from resectsim.errors import InputDataError
from resectsim.noise import NoiseParams, fractal_noise_at

__all__ = [
    "TriangleMesh", "IcosphereSpec", "EllipsoidAxes", "EulerAngles",
    "build_icosphere", "build_cuboid", "perturb_radially",
    "semiaxes_from_volume", "transform_mesh", "mesh_volume",
    "MAX_ICOSPHERE_FREQUENCY", "MIN_PERTURBED_RADIUS",
]

MAX_ICOSPHERE_FREQUENCY = 7
# Radial clamp keeping perturbed spheres star-shaped and non-degenerate.
MIN_PERTURBED_RADIUS = 0.05


@dataclass(frozen=True)
class TriangleMesh:
    """Closed triangle surface: (n, 3) float vertices, (m, 3) int faces."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face indices out of range")
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as a sorted (e, 2) array."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                            self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def is_watertight(self) -> bool:
        """Every undirected edge shared by exactly 2 faces, each once per
        direction (consistent winding)."""
        directed = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                                   self.faces[:, [2, 0]]])
        if len(np.unique(directed, axis=0)) != len(directed):
            return False
        undirected = np.sort(directed, axis=1)
        _, counts = np.unique(undirected, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_faces


@dataclass(frozen=True)
class IcosphereSpec:
    """Subdivision count for the geodesic sphere (each step splits every
    triangle 4-way and reprojects onto the unit sphere)."""

    frequency: int = 3

    def __post_init__(self):
        f = int(self.frequency)
        if f < 0:
            raise ValueError(f"frequency must be >= 0, got {f}")
        if f > MAX_ICOSPHERE_FREQUENCY:
            raise ValueError(
                f"frequency {f} exceeds the maximum "
                f"{MAX_ICOSPHERE_FREQUENCY} (runaway face count)")
        object.__setattr__(self, "frequency", f)


@dataclass(frozen=True)
class EllipsoidAxes:
    """Ellipsoid semiaxis lengths in mm, each > 0."""

    r1: float
    r2: float
    r3: float

    def __post_init__(self):
        for name in ("r1", "r2", "r3"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3])


@dataclass(frozen=True)
class EulerAngles:
    """Rotation angles in radians, each in [0, 2*pi)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        two_pi = 2.0 * math.pi
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not (0.0 <= value < two_pi):
                raise ValueError(
                    f"angle {name}={value} outside [0, 2*pi)")
            object.__setattr__(self, name, value)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    return verts, faces


def _subdivide(verts: np.ndarray, faces: np.ndarray):
    """One 4-way midpoint subdivision with vertices pushed to the unit sphere."""
    verts = list(verts)
    midpoint_cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        cached = midpoint_cache.get(key)
        if cached is not None:
            return cached
        m = verts[a] + verts[b]
        m /= np.linalg.norm(m)
        verts.append(m)
        midpoint_cache[key] = len(verts) - 1
        return midpoint_cache[key]

    new_faces = []
    for a, b, c in faces:
        ab = midpoint(a, b)
        bc = midpoint(b, c)
        ca = midpoint(c, a)
        new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return np.array(verts), np.array(new_faces, dtype=np.int64)


def build_icosphere(spec: IcosphereSpec) -> TriangleMesh:
    """Unit-radius geodesic sphere centered at the origin.

    Vertex/face counts follow V = 10*4**f + 2, F = 20*4**f.
    """
    verts, faces = _icosahedron()
    for _ in range(spec.frequency):
        verts, faces = _subdivide(verts, faces)
    return TriangleMesh(verts, faces)


def perturb_radially(mesh: TriangleMesh, noise: NoiseParams,
                     amplitude: float = 0.5) -> TriangleMesh:
    """Displace each vertex radially by the fractal noise sampled there.

    The new radius is ``|v| + amplitude * noise(v)``, clamped from below so
    the surface stays star-shaped.  Face topology is untouched.
    """
    verts = mesh.vertices
    norms = np.linalg.norm(verts, axis=1)
    if np.any(norms < 1e-12):
        raise InputDataError("perturb_radially requires nonzero vertex radii")
    delta = fractal_noise_at(verts, noise)
    radii = np.maximum(norms + float(amplitude) * delta, MIN_PERTURBED_RADIUS)
    scaled = verts * (radii / norms)[:, None]
    return TriangleMesh(scaled, mesh.faces)


def semiaxes_from_volume(v: float, lam: float,
                         exact_volume: bool = False) -> EllipsoidAxes:
    """Semiaxes (r, lam*r, r/lam) for a target cavity volume v (mm^3).

    Default radius rule is ``r = (3v/4)**(1/3)``; with ``exact_volume`` the
    4/3*pi ellipsoid volume identity is used instead, giving
    ``r = (3v/(4*pi))**(1/3)`` so the ellipsoid volume equals v.
    """
    v = float(v)
    lam = float(lam)
    if not v > 0:
        raise ValueError(f"volume must be > 0, got {v}")
    if not lam >= 1:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    denom = 4.0 * math.pi if exact_volume else 4.0
    r = (3.0 * v / denom) ** (1.0 / 3.0)
    return EllipsoidAxes(r, lam * r, r / lam)


def _rotation_matrix(angles: EulerAngles) -> np.ndarray:
    cx, sx = math.cos(angles.x), math.sin(angles.x)
    cy, sy = math.cos(angles.y), math.sin(angles.y)
    cz, sz = math.cos(angles.z), math.sin(angles.z)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rx @ ry @ rz


def transform_mesh(mesh: TriangleMesh, rotation: EulerAngles,
                   axes: EllipsoidAxes,
                   translation=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Apply translation o scaling o rotation to the vertices (rotation first)."""
    if not np.all(np.isfinite(mesh.vertices)):
        raise InputDataError("mesh vertices must be finite")
    t = np.asarray(translation, dtype=np.float64)
    if t.shape != (3,) or not np.all(np.isfinite(t)):
        raise InputDataError(f"translation must be a finite 3-vector, got {t}")
    m = axes.as_array()[:, None] * _rotation_matrix(rotation)
    verts = mesh.vertices @ m.T + t
    return TriangleMesh(verts, mesh.faces)


def build_cuboid(v: float, lam: float,
                 exact_volume: bool = False) -> TriangleMesh:
    """Axis-aligned box centered at the origin with edges (2*r1, 2*r2, 2*r3).

    Cuboid cavities are used as-is downstream: never rotated, never
    noise-perturbed.
    """
    axes = semiaxes_from_volume(v, lam, exact_volume)
    r1, r2, r3 = axes.r1, axes.r2, axes.r3
    verts = np.array([
        (-r1, -r2, -r3), (r1, -r2, -r3), (r1, r2, -r3), (-r1, r2, -r3),
        (-r1, -r2, r3), (r1, -r2, r3), (r1, r2, r3), (-r1, r2, r3),
    ])
    faces = np.array([
        (0, 2, 1), (0, 3, 2),          # bottom (z = -r3)
        (4, 5, 6), (4, 6, 7),          # top
        (0, 1, 5), (0, 5, 4),          # front (y = -r2)
        (2, 3, 7), (2, 7, 6),          # back
        (0, 4, 7), (0, 7, 3),          # left (x = -r1)
        (1, 2, 6), (1, 6, 5),          # right
    ], dtype=np.int64)
    return TriangleMesh(verts, faces)


def mesh_volume(mesh: TriangleMesh) -> float:
    """Signed volume by the divergence theorem; positive for outward winding."""
    if not mesh.is_watertight():
        raise InputDataError("mesh_volume requires a watertight mesh")
    v = mesh.vertices
    f = mesh.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)
