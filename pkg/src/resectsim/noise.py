"""3D simplex noise and its fractal (multi-octave) sum.

The noise field is a fixed deterministic function of position (classic
simplex noise over a published permutation table); callers randomize it by
shifting coordinates with ``mu``, which acts like a seed.
"""

from dataclasses import dataclass

import numpy as np

from resectsim import _kernels

__all__ = ["NoiseParams", "simplex3", "fractal_noise", "fractal_noise_at"]


@dataclass(frozen=True)
class NoiseParams:
    """Fractal noise configuration.

    octaves: number of frequency-doubled layers (>= 1)
    persistence: per-octave amplitude decay, in (0, 1]
    zeta: coordinate divisor controlling smoothness (> 0)
    mu: coordinate shift adding stochasticity
    """

    octaves: int = 4
    persistence: float = 0.5
    zeta: float = 1.0
    mu: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.octaves) < 1:
            raise ValueError(f"octaves must be >= 1, got {self.octaves}")
        if not 0.0 < self.persistence <= 1.0:
            raise ValueError(
                f"persistence must be in (0, 1], got {self.persistence}")
        if not self.zeta > 0.0:
            raise ValueError(f"zeta must be > 0, got {self.zeta}")
        mu = tuple(float(x) for x in self.mu)
        if len(mu) != 3 or not all(np.isfinite(mu)):
            raise ValueError(f"mu must be a finite 3-vector, got {self.mu}")
        object.__setattr__(self, "mu", mu)


def simplex3(p) -> float:
    """Simplex noise at a single 3D point; value in [-1, 1]."""
    p = np.asarray(p, dtype=np.float64).reshape(1, 3)
    if not np.all(np.isfinite(p)):
        raise ValueError("point must be finite")
    return float(_kernels.active.simplex3_batch(p)[0])


def fractal_noise(p, params: NoiseParams) -> float:
    """Normalized persistence-weighted sum of octaves at a single point.

    Octave n samples ``simplex3(2**(n-1) * (p + mu) / zeta)`` with weight
    ``persistence**(n-1)``; the sum is divided by the total weight so the
    result stays in [-1, 1].
    """
    return float(fractal_noise_at(np.asarray(p, dtype=np.float64).reshape(1, 3),
                                  params)[0])


def fractal_noise_at(points, params: NoiseParams) -> np.ndarray:
    """Vectorized :func:`fractal_noise` over an (n, 3) array of points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    out = _kernels.active.fractal_noise_batch(
        pts, np.asarray(params.mu, dtype=np.float64), params.zeta,
        params.octaves, params.persistence)
    if not np.all(np.isfinite(out)):
        raise AssertionError("noise produced non-finite values")
    return out
