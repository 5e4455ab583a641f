"""Benchmark the compiled kernels against the pure-numpy fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py [--repeats N]

Times each hot kernel on realistic workloads plus one full simulation under
each backend, and verifies on the way that both backends return identical
results.
"""

import argparse
import time

import numpy as np

from resectsim import _kernels
from resectsim.mesh import IcosphereSpec, build_icosphere, perturb_radially
from resectsim.noise import NoiseParams
from resectsim.simulate import ResectionParams, simulate_resection
from resectsim.testing import make_phantom


def timed(fn, repeats):
    best = float("inf")
    value = None
    for _ in range(repeats):
        start = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - start)
    return best, value


def bench_case(name, make_call, repeats, check_equal=np.array_equal):
    rows = []
    reference = None
    for backend_name, backend in sorted(_kernels._BACKENDS.items()):
        seconds, value = timed(make_call(backend), repeats)
        rows.append((backend_name, seconds))
        if reference is None:
            reference = value
        elif value is not None and not check_equal(reference, value):
            raise AssertionError(f"{name}: backends disagree")
    fallback_s = dict(rows)["fallback"]
    print(f"{name:34s}", end="")
    for backend_name, seconds in rows:
        speedup = fallback_s / seconds if seconds else float("inf")
        print(f"  {backend_name}: {seconds * 1e3:9.2f} ms ({speedup:5.1f}x)",
              end="")
    print()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if "compiled" not in _kernels._BACKENDS:
        print("compiled kernels are not built; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"backends available: {sorted(_kernels._BACKENDS)}")
    print()

    pts = rng.uniform(-100, 100, size=(1_000_000, 3))
    mu = rng.uniform(0, 1000, 3)
    bench_case("fractal noise, 1e6 points x 4 oct",
               lambda b: lambda: b.fractal_noise_batch(pts, mu, 0.5, 4, 0.5),
               args.repeats)

    sphere = perturb_radially(build_icosphere(IcosphereSpec(4)),
                              NoiseParams(zeta=0.5, mu=(3.0, 4.0, 5.0)))
    verts = sphere.vertices * 30.0 + 48.0
    bench_case("voxelize, 2.6k faces on 96^3",
               lambda b: lambda: b.voxelize_mask(verts, sphere.faces,
                                                 96, 96, 96),
               args.repeats)

    volume = rng.normal(size=(128, 128, 128))
    kernel = np.exp(-0.5 * (np.arange(-8, 9) / 2.0) ** 2)
    kernel /= kernel.sum()
    bench_case("convolve axis, 128^3 x 17 taps",
               lambda b: lambda: b.convolve1d_last(volume, kernel, 1, 1),
               args.repeats)

    mask = (rng.random((128, 128, 128)) < 0.4).astype(np.uint8)
    bench_case("binary erode r=3, 128^3",
               lambda b: lambda: b.binary_erode(mask, 3),
               args.repeats)
    bench_case("binary dilate r=3, 128^3",
               lambda b: lambda: b.binary_dilate(mask, 3),
               args.repeats)

    blobs = (rng.random((128, 128, 128)) < 0.2).astype(np.uint8)
    bench_case("label components 26-conn, 128^3",
               lambda b: lambda: b.label_components(blobs, 26),
               args.repeats,
               check_equal=lambda a, b: a[1] == b[1]
               and np.array_equal(a[0], b[0]))

    print()
    image, parcellation, scheme = make_phantom(dims=(193, 229, 193), seed=1)
    params = ResectionParams()
    for backend_name in sorted(_kernels._BACKENDS):
        with _kernels.use(backend_name):
            simulate_resection(image, parcellation, scheme, params, 0)
            seconds, _ = timed(
                lambda: simulate_resection(image, parcellation, scheme,
                                           params, 1), args.repeats)
        print(f"full simulation 193x229x193       {backend_name}: "
              f"{seconds * 1e3:9.2f} ms")


if __name__ == "__main__":
    main()
