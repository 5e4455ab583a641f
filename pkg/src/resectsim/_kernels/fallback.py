"""Pure-numpy implementations of the hot kernels.

Selected at import time when the compiled extension is unavailable (see
``resectsim._kernels``).  Every function here is the semantic reference for
its compiled twin: identical arithmetic in identical order, so the two
backends agree bit-for-bit on float outputs and exactly on integer ones.
"""

import math

import numpy as np

from .tables import GRAD3, PERM512

name = "fallback"

_F3 = 1.0 / 3.0
_G3 = 1.0 / 6.0

# Rays are cast at voxel centers shifted by this offset (in voxel units) in
# y and z, so grazing a mesh vertex or edge exactly is impossible for the
# axis-aligned meshes that produce such ties.
VOXELIZE_RAY_EPS = 2.0 ** -23


def simplex3_batch(points):
    """Classic 3D simplex noise at each row of ``points``, in [-1, 1]."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]

    s = (x + y + z) * _F3
    i = np.floor(x + s)
    j = np.floor(y + s)
    k = np.floor(z + s)
    t = (i + j + k) * _G3
    x0 = x - (i - t)
    y0 = y - (j - t)
    z0 = z - (k - t)

    # Offsets of the second and third simplex corners, ranked by coordinate.
    xy = x0 >= y0
    yz = y0 >= z0
    xz = x0 >= z0
    i1 = (xy & (yz | xz)).astype(np.int64)
    j1 = (~xy & yz).astype(np.int64)
    k1 = (~yz & (~xy | ~xz)).astype(np.int64)
    i2 = (xy | (yz & xz)).astype(np.int64)
    j2 = (~xy | yz).astype(np.int64)
    k2 = (~(yz & (xy | xz))).astype(np.int64)

    x1 = (x0 - i1) + _G3
    y1 = (y0 - j1) + _G3
    z1 = (z0 - k1) + _G3
    x2 = (x0 - i2) + 2.0 * _G3
    y2 = (y0 - j2) + 2.0 * _G3
    z2 = (z0 - k2) + 2.0 * _G3
    x3 = (x0 - 1.0) + 3.0 * _G3
    y3 = (y0 - 1.0) + 3.0 * _G3
    z3 = (z0 - 1.0) + 3.0 * _G3

    ii = i.astype(np.int64) & 255
    jj = j.astype(np.int64) & 255
    kk = k.astype(np.int64) & 255
    gi0 = PERM512[ii + PERM512[jj + PERM512[kk]]] % 12
    gi1 = PERM512[ii + i1 + PERM512[jj + j1 + PERM512[kk + k1]]] % 12
    gi2 = PERM512[ii + i2 + PERM512[jj + j2 + PERM512[kk + k2]]] % 12
    gi3 = PERM512[ii + 1 + PERM512[jj + 1 + PERM512[kk + 1]]] % 12

    total = np.zeros_like(x)
    for gi, dx, dy, dz in ((gi0, x0, y0, z0), (gi1, x1, y1, z1),
                           (gi2, x2, y2, z2), (gi3, x3, y3, z3)):
        tt = 0.6 - dx * dx - dy * dy - dz * dz
        g = GRAD3[gi]
        dot = g[:, 0] * dx + g[:, 1] * dy + g[:, 2] * dz
        tt2 = tt * tt
        contrib = tt2 * tt2 * dot
        total += np.where(tt > 0.0, contrib, 0.0)

    # Theoretical extrema sit just inside +-1 for this gradient set; the clip
    # makes the documented codomain a hard guarantee against rounding.
    return np.clip(32.0 * total, -1.0, 1.0)


def fractal_noise_batch(points, mu, zeta, octaves, persistence):
    """Persistence-weighted multi-octave simplex noise, normalized to [-1, 1].

    Octave ``n`` samples at frequency ``2**(n-1)``; the weighted sum is
    divided by the total weight so the output range never leaves [-1, 1].
    """
    pts = np.asarray(points, dtype=np.float64)
    q = (pts + np.asarray(mu, dtype=np.float64)) / float(zeta)
    value = np.zeros(len(q), dtype=np.float64)
    weight = 1.0
    weight_sum = 0.0
    for _ in range(int(octaves)):
        value += weight * simplex3_batch(q)
        weight_sum += weight
        weight *= float(persistence)
        q = q * 2.0
    return value / weight_sum


def _edge_crossings(yq, zq, ya, za, yb, zb):
    """Parity contribution of one projected edge at query points (yq, zq)."""
    straddle = (za <= zq) != (zb <= zq)
    dz = zb - za
    dz = np.where(dz == 0.0, 1.0, dz)  # masked out by straddle
    yint = ya + (zq - za) * (yb - ya) / dz
    return straddle & (yint > yq)


def voxelize_mask(verts, faces, nx, ny, nz):
    """Rasterize a closed triangle mesh by x-axis scanline ray parity.

    ``verts`` are continuous grid-index coordinates (voxel centers at
    integers).  A voxel is set when its center lies inside the closed
    surface; centers exactly on the surface count as inside.
    """
    out = np.zeros((nx, ny, nz), dtype=np.uint8)
    verts = np.asarray(verts, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    eps = VOXELIZE_RAY_EPS

    ray_ids = []
    x_stars = []
    for f in range(len(faces)):
        v1, v2, v3 = verts[faces[f]]
        ymin = min(v1[1], v2[1], v3[1])
        ymax = max(v1[1], v2[1], v3[1])
        zmin = min(v1[2], v2[2], v3[2])
        zmax = max(v1[2], v2[2], v3[2])
        jlo = max(0, math.ceil(ymin - eps))
        jhi = min(ny - 1, math.floor(ymax - eps))
        klo = max(0, math.ceil(zmin - eps))
        khi = min(nz - 1, math.floor(zmax - eps))
        if jlo > jhi or klo > khi:
            continue

        jj, kk = np.meshgrid(np.arange(jlo, jhi + 1), np.arange(klo, khi + 1),
                             indexing="ij")
        yq = jj + eps
        zq = kk + eps
        cnt = _edge_crossings(yq, zq, v1[1], v1[2], v2[1], v2[2]).astype(np.int8)
        cnt += _edge_crossings(yq, zq, v2[1], v2[2], v3[1], v3[2])
        cnt += _edge_crossings(yq, zq, v3[1], v3[2], v1[1], v1[2])
        inside = (cnt & 1).astype(bool)
        if not inside.any():
            continue

        det = (v2[1] - v1[1]) * (v3[2] - v1[2]) - (v3[1] - v1[1]) * (v2[2] - v1[2])
        if det == 0.0:
            continue
        yr = yq[inside] - v1[1]
        zr = zq[inside] - v1[2]
        beta = (yr * (v3[2] - v1[2]) - zr * (v3[1] - v1[1])) / det
        gamma = (zr * (v2[1] - v1[1]) - yr * (v2[2] - v1[2])) / det
        xs = v1[0] + beta * (v2[0] - v1[0]) + gamma * (v3[0] - v1[0])
        ray_ids.append((jj[inside] * nz + kk[inside]).astype(np.int64))
        x_stars.append(xs)

    if not ray_ids:
        return out
    rays = np.concatenate(ray_ids)
    xs = np.concatenate(x_stars)
    order = np.lexsort((xs, rays))
    rays = rays[order]
    xs = xs[order]

    boundaries = np.flatnonzero(np.diff(rays)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(rays)]))
    for s, e in zip(starts, ends):
        j, k = divmod(int(rays[s]), nz)
        xr = xs[s:e]
        for m in range(0, len(xr) - 1, 2):
            a = max(0, math.ceil(xr[m]))
            b = min(nx - 1, math.floor(xr[m + 1]))
            if a <= b:
                out[a:b + 1, j, k] = 1
    return out


def convolve1d_last(data, kernel, bc_low, bc_high):
    """Correlate along the last axis. ``bc``: 0 = zero fill, 1 = reflect."""
    data = np.asarray(data, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    r = len(kernel) // 2
    if r == 0:
        return data * kernel[0]
    n = data.shape[-1]
    pad_shape = data.shape[:-1] + (n + 2 * r,)
    padded = np.zeros(pad_shape, dtype=np.float64)
    padded[..., r:r + n] = data
    if bc_low == 1:
        padded[..., :r] = np.pad(data, [(0, 0)] * (data.ndim - 1) + [(r, 0)],
                                 mode="symmetric")[..., :r]
    if bc_high == 1:
        padded[..., r + n:] = np.pad(data, [(0, 0)] * (data.ndim - 1) + [(0, r)],
                                     mode="symmetric")[..., n:]
    out = kernel[0] * padded[..., 0:n]
    for k in range(1, 2 * r + 1):
        out += kernel[k] * padded[..., k:k + n]
    return out


def _ball_offsets(radius):
    r = int(radius)
    rng = np.arange(-r, r + 1)
    dx, dy, dz = np.meshgrid(rng, rng, rng, indexing="ij")
    keep = dx * dx + dy * dy + dz * dz <= r * r
    return np.stack([dx[keep], dy[keep], dz[keep]], axis=1)


def _shifted(mask, ox, oy, oz, fill):
    out = np.full(mask.shape, fill, dtype=bool)
    src = []
    dst = []
    for o, n in zip((ox, oy, oz), mask.shape):
        if o >= 0:
            dst.append(slice(o, n))
            src.append(slice(0, n - o))
        else:
            dst.append(slice(0, n + o))
            src.append(slice(-o, n))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def binary_dilate(mask, radius):
    """Dilation with a Euclidean ball; the grid exterior contributes nothing."""
    m = np.asarray(mask, dtype=bool)
    out = np.zeros(m.shape, dtype=bool)
    for ox, oy, oz in _ball_offsets(radius):
        out |= _shifted(m, ox, oy, oz, False)
    return out.astype(np.uint8)


def binary_erode(mask, radius):
    """Erosion with a Euclidean ball; the grid exterior counts as zero."""
    m = np.asarray(mask, dtype=bool)
    out = np.ones(m.shape, dtype=bool)
    for ox, oy, oz in _ball_offsets(radius):
        out &= _shifted(m, ox, oy, oz, False)
    return out.astype(np.uint8)


def label_components(mask, connectivity):
    """Label connected components, numbered by first voxel in C-scan order.

    Run-length encodes each (x, y) line along z, then unions runs between
    neighboring lines.  Returns ``(labels, count)`` with labels in
    ``0..count`` (0 = background).
    """
    m = np.asarray(mask, dtype=bool)
    nx, ny, nz = m.shape
    labels = np.zeros(m.shape, dtype=np.int32)
    if not m.any():
        return labels, 0

    rows = m.reshape(nx * ny, nz)
    padded = np.zeros((nx * ny, nz + 2), dtype=np.int8)
    padded[:, 1:-1] = rows
    d = np.diff(padded, axis=1)
    srow, sz = np.nonzero(d == 1)
    erow, ez = np.nonzero(d == -1)
    z0 = sz            # inclusive start (offset cancels with diff shift)
    z1 = ez - 1        # inclusive end
    nruns = len(srow)

    row_begin = np.searchsorted(srow, np.arange(nx * ny), side="left")
    row_end = np.searchsorted(srow, np.arange(nx * ny), side="right")

    parent = np.arange(nruns, dtype=np.int64)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb

    if connectivity == 6:
        neighbor_rows = ((-1, 0, 0), (0, -1, 0))
    else:
        neighbor_rows = ((-1, 0, 1), (0, -1, 1), (-1, -1, 1), (-1, 1, 1))
    reach = 1 if connectivity == 26 else 0

    for run in range(nruns):
        row = srow[run]
        x, y = divmod(int(row), ny)
        a0, a1 = z0[run], z1[run]
        for dx, dy, _ in neighbor_rows:
            xn, yn = x + dx, y + dy
            if not (0 <= xn < nx and 0 <= yn < ny):
                continue
            nrow = xn * ny + yn
            for other in range(row_begin[nrow], row_end[nrow]):
                if z0[other] > a1 + reach:
                    break
                if z1[other] >= a0 - reach:
                    union(run, other)

    roots = np.array([find(r) for r in range(nruns)], dtype=np.int64)
    first = np.full(nruns, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, roots, np.arange(nruns, dtype=np.int64))
    order = np.argsort(first[np.unique(roots)], kind="stable")
    unique_roots = np.unique(roots)[order]
    root_label = {int(r): i + 1 for i, r in enumerate(unique_roots)}

    for run in range(nruns):
        x, y = divmod(int(srow[run]), ny)
        labels[x, y, z0[run]:z1[run] + 1] = root_label[int(roots[run])]
    return labels, len(unique_roots)
