# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: simplex noise, voxelization, blur, morphology, CCL.

Each function mirrors its twin in ``resectsim._kernels.fallback`` operation
for operation (and is compiled with -ffp-contract=off), so both backends
produce identical outputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor
from libc.stdlib cimport free, malloc

from resectsim._kernels.tables import GRAD3, PERM512

cnp.import_array()

name = "compiled"

cdef double _F3 = 1.0 / 3.0
cdef double _G3 = 1.0 / 6.0
cdef double _RAY_EPS = 2.0 ** -23
cdef double _INF = 1e30

cdef cnp.int32_t[::1] _PERM = np.ascontiguousarray(PERM512, dtype=np.int32)
cdef double[:, ::1] _GRAD = np.ascontiguousarray(GRAD3, dtype=np.float64)

VOXELIZE_RAY_EPS = _RAY_EPS


# ---------------------------------------------------------------------------
# simplex noise
# ---------------------------------------------------------------------------

cdef inline double _simplex3(double x, double y, double z) nogil:
    cdef double s, t, x0, y0, z0
    cdef double x1, y1, z1, x2, y2, z2, x3, y3, z3
    cdef double fi, fj, fk, tt, tt2, dot, total, contrib
    cdef long long i, j, k, ii, jj, kk
    cdef int a, b, c, i1, j1, k1, i2, j2, k2, gi0, gi1, gi2, gi3

    s = (x + y + z) * _F3
    fi = floor(x + s)
    fj = floor(y + s)
    fk = floor(z + s)
    t = (fi + fj + fk) * _G3
    x0 = x - (fi - t)
    y0 = y - (fj - t)
    z0 = z - (fk - t)

    a = x0 >= y0
    b = y0 >= z0
    c = x0 >= z0
    i1 = a & (b | c)
    j1 = (not a) & b
    k1 = (not b) & ((not a) | (not c))
    i2 = a | (b & c)
    j2 = (not a) | b
    k2 = not (b & (a | c))

    x1 = (x0 - i1) + _G3
    y1 = (y0 - j1) + _G3
    z1 = (z0 - k1) + _G3
    x2 = (x0 - i2) + 2.0 * _G3
    y2 = (y0 - j2) + 2.0 * _G3
    z2 = (z0 - k2) + 2.0 * _G3
    x3 = (x0 - 1.0) + 3.0 * _G3
    y3 = (y0 - 1.0) + 3.0 * _G3
    z3 = (z0 - 1.0) + 3.0 * _G3

    i = <long long>fi
    j = <long long>fj
    k = <long long>fk
    ii = i & 255
    jj = j & 255
    kk = k & 255
    gi0 = _PERM[ii + _PERM[jj + _PERM[kk]]] % 12
    gi1 = _PERM[ii + i1 + _PERM[jj + j1 + _PERM[kk + k1]]] % 12
    gi2 = _PERM[ii + i2 + _PERM[jj + j2 + _PERM[kk + k2]]] % 12
    gi3 = _PERM[ii + 1 + _PERM[jj + 1 + _PERM[kk + 1]]] % 12

    total = 0.0

    tt = 0.6 - x0 * x0 - y0 * y0 - z0 * z0
    if tt > 0.0:
        dot = _GRAD[gi0, 0] * x0 + _GRAD[gi0, 1] * y0 + _GRAD[gi0, 2] * z0
        tt2 = tt * tt
        contrib = tt2 * tt2 * dot
    else:
        contrib = 0.0
    total += contrib

    tt = 0.6 - x1 * x1 - y1 * y1 - z1 * z1
    if tt > 0.0:
        dot = _GRAD[gi1, 0] * x1 + _GRAD[gi1, 1] * y1 + _GRAD[gi1, 2] * z1
        tt2 = tt * tt
        contrib = tt2 * tt2 * dot
    else:
        contrib = 0.0
    total += contrib

    tt = 0.6 - x2 * x2 - y2 * y2 - z2 * z2
    if tt > 0.0:
        dot = _GRAD[gi2, 0] * x2 + _GRAD[gi2, 1] * y2 + _GRAD[gi2, 2] * z2
        tt2 = tt * tt
        contrib = tt2 * tt2 * dot
    else:
        contrib = 0.0
    total += contrib

    tt = 0.6 - x3 * x3 - y3 * y3 - z3 * z3
    if tt > 0.0:
        dot = _GRAD[gi3, 0] * x3 + _GRAD[gi3, 1] * y3 + _GRAD[gi3, 2] * z3
        tt2 = tt * tt
        contrib = tt2 * tt2 * dot
    else:
        contrib = 0.0
    total += contrib

    total = 32.0 * total
    if total > 1.0:
        total = 1.0
    elif total < -1.0:
        total = -1.0
    return total


def simplex3_batch(points):
    """Classic 3D simplex noise at each row of ``points``, in [-1, 1]."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0], i
    out_np = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_np
    with nogil:
        for i in range(n):
            out[i] = _simplex3(pts[i, 0], pts[i, 1], pts[i, 2])
    return out_np


def fractal_noise_batch(points, mu, zeta, octaves, persistence):
    """Persistence-weighted multi-octave simplex noise, normalized to [-1, 1]."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double mx = float(mu[0]), my = float(mu[1]), mz = float(mu[2])
    cdef double zt = float(zeta), gamma = float(persistence)
    cdef int om = int(octaves)
    cdef Py_ssize_t n = pts.shape[0], i
    cdef int oc
    cdef double qx, qy, qz, value, weight, weight_sum
    out_np = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_np
    with nogil:
        for i in range(n):
            qx = (pts[i, 0] + mx) / zt
            qy = (pts[i, 1] + my) / zt
            qz = (pts[i, 2] + mz) / zt
            value = 0.0
            weight = 1.0
            weight_sum = 0.0
            for oc in range(om):
                value += weight * _simplex3(qx, qy, qz)
                weight_sum += weight
                weight *= gamma
                qx = qx * 2.0
                qy = qy * 2.0
                qz = qz * 2.0
            out[i] = value / weight_sum
    return out_np


# ---------------------------------------------------------------------------
# voxelization
# ---------------------------------------------------------------------------

cdef inline int _edge_cross(double yq, double zq, double ya, double za,
                            double yb, double zb) nogil:
    cdef double yint
    if (za <= zq) != (zb <= zq):
        yint = ya + (zq - za) * (yb - ya) / (zb - za)
        if yint > yq:
            return 1
    return 0


def voxelize_mask(verts, faces, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz):
    """Rasterize a closed triangle mesh by x-axis scanline ray parity.

    ``verts`` are continuous grid-index coordinates (voxel centers at
    integers); centers exactly on the surface count as inside.
    """
    cdef const double[:, ::1] V = np.ascontiguousarray(verts, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] F = np.ascontiguousarray(faces, dtype=np.int64)
    out_np = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_np

    cdef Py_ssize_t nf = F.shape[0], f, j, k, jlo, jhi, klo, khi, ray, m
    cdef Py_ssize_t a_idx, b_idx, xi, s, e, p
    cdef double y1, z1, y2, z2, y3, z3, x1v, x2v, x3v
    cdef double ymin, ymax, zmin, zmax, yq, zq, det, yr, zr, beta, gamma, xs
    cdef int cnt

    counts_np = np.zeros(ny * nz, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_np

    # pass 1: count crossings per ray
    with nogil:
        for f in range(nf):
            x1v = V[F[f, 0], 0]; y1 = V[F[f, 0], 1]; z1 = V[F[f, 0], 2]
            x2v = V[F[f, 1], 0]; y2 = V[F[f, 1], 1]; z2 = V[F[f, 1], 2]
            x3v = V[F[f, 2], 0]; y3 = V[F[f, 2], 1]; z3 = V[F[f, 2], 2]
            ymin = min(y1, min(y2, y3)); ymax = max(y1, max(y2, y3))
            zmin = min(z1, min(z2, z3)); zmax = max(z1, max(z2, z3))
            jlo = <Py_ssize_t>ceil(ymin - _RAY_EPS)
            jhi = <Py_ssize_t>floor(ymax - _RAY_EPS)
            klo = <Py_ssize_t>ceil(zmin - _RAY_EPS)
            khi = <Py_ssize_t>floor(zmax - _RAY_EPS)
            if jlo < 0: jlo = 0
            if klo < 0: klo = 0
            if jhi > ny - 1: jhi = ny - 1
            if khi > nz - 1: khi = nz - 1
            det = (y2 - y1) * (z3 - z1) - (y3 - y1) * (z2 - z1)
            if det == 0.0:
                continue
            for j in range(jlo, jhi + 1):
                yq = j + _RAY_EPS
                for k in range(klo, khi + 1):
                    zq = k + _RAY_EPS
                    cnt = _edge_cross(yq, zq, y1, z1, y2, z2)
                    cnt += _edge_cross(yq, zq, y2, z2, y3, z3)
                    cnt += _edge_cross(yq, zq, y3, z3, y1, z1)
                    if cnt & 1:
                        counts[j * nz + k] += 1

    total = int(counts_np.sum())
    if total == 0:
        return out_np
    offsets_np = np.zeros(ny * nz + 1, dtype=np.int64)
    np.cumsum(counts_np, out=offsets_np[1:])
    cdef cnp.int64_t[::1] offsets = offsets_np
    fill_np = offsets_np[:-1].copy()
    cdef cnp.int64_t[::1] fill = fill_np
    xs_np = np.empty(total, dtype=np.float64)
    cdef double[::1] xstore = xs_np

    # pass 2: store crossing x-coordinates per ray
    with nogil:
        for f in range(nf):
            x1v = V[F[f, 0], 0]; y1 = V[F[f, 0], 1]; z1 = V[F[f, 0], 2]
            x2v = V[F[f, 1], 0]; y2 = V[F[f, 1], 1]; z2 = V[F[f, 1], 2]
            x3v = V[F[f, 2], 0]; y3 = V[F[f, 2], 1]; z3 = V[F[f, 2], 2]
            ymin = min(y1, min(y2, y3)); ymax = max(y1, max(y2, y3))
            zmin = min(z1, min(z2, z3)); zmax = max(z1, max(z2, z3))
            jlo = <Py_ssize_t>ceil(ymin - _RAY_EPS)
            jhi = <Py_ssize_t>floor(ymax - _RAY_EPS)
            klo = <Py_ssize_t>ceil(zmin - _RAY_EPS)
            khi = <Py_ssize_t>floor(zmax - _RAY_EPS)
            if jlo < 0: jlo = 0
            if klo < 0: klo = 0
            if jhi > ny - 1: jhi = ny - 1
            if khi > nz - 1: khi = nz - 1
            det = (y2 - y1) * (z3 - z1) - (y3 - y1) * (z2 - z1)
            if det == 0.0:
                continue
            for j in range(jlo, jhi + 1):
                yq = j + _RAY_EPS
                for k in range(klo, khi + 1):
                    zq = k + _RAY_EPS
                    cnt = _edge_cross(yq, zq, y1, z1, y2, z2)
                    cnt += _edge_cross(yq, zq, y2, z2, y3, z3)
                    cnt += _edge_cross(yq, zq, y3, z3, y1, z1)
                    if cnt & 1:
                        yr = yq - y1
                        zr = zq - z1
                        beta = (yr * (z3 - z1) - zr * (y3 - y1)) / det
                        gamma = (zr * (y2 - y1) - yr * (z2 - z1)) / det
                        xs = x1v + beta * (x2v - x1v) + gamma * (x3v - x1v)
                        ray = j * nz + k
                        xstore[fill[ray]] = xs
                        fill[ray] += 1

    # per ray: sort crossings, mark voxel centers between entry/exit pairs
    cdef double tmp
    with nogil:
        for ray in range(ny * nz):
            s = offsets[ray]
            e = offsets[ray + 1]
            if s == e:
                continue
            for p in range(s + 1, e):
                tmp = xstore[p]
                m = p
                while m > s and xstore[m - 1] > tmp:
                    xstore[m] = xstore[m - 1]
                    m -= 1
                xstore[m] = tmp
            j = ray // nz
            k = ray % nz
            m = s
            while m + 1 < e:
                a_idx = <Py_ssize_t>ceil(xstore[m])
                b_idx = <Py_ssize_t>floor(xstore[m + 1])
                if a_idx < 0: a_idx = 0
                if b_idx > nx - 1: b_idx = nx - 1
                for xi in range(a_idx, b_idx + 1):
                    out[xi, j, k] = 1
                m += 2
    return out_np


# ---------------------------------------------------------------------------
# separable convolution
# ---------------------------------------------------------------------------

cdef inline double _fetch(const double[:, :, ::1] d, Py_ssize_t a, Py_ssize_t b,
                          Py_ssize_t idx, Py_ssize_t n,
                          int bc_low, int bc_high) nogil:
    if idx < 0:
        if bc_low == 0:
            return 0.0
    elif idx >= n:
        if bc_high == 0:
            return 0.0
    while idx < 0 or idx >= n:
        if idx < 0:
            idx = -idx - 1
        else:
            idx = 2 * n - 1 - idx
    return d[a, b, idx]


def convolve1d_last(data, kernel, int bc_low, int bc_high):
    """Correlate along the last axis. ``bc``: 0 = zero fill, 1 = reflect."""
    cdef const double[:, :, ::1] d = np.ascontiguousarray(data, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t na = d.shape[0], nb = d.shape[1], n = d.shape[2]
    cdef Py_ssize_t r = w.shape[0] // 2
    cdef Py_ssize_t a, b, i, k
    cdef double acc
    out_np = np.empty((na, nb, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_np
    with nogil:
        for a in range(na):
            for b in range(nb):
                for i in range(n):
                    acc = w[0] * _fetch(d, a, b, i - r, n, bc_low, bc_high)
                    for k in range(1, 2 * r + 1):
                        acc += w[k] * _fetch(d, a, b, i - r + k, n, bc_low, bc_high)
                    out[a, b, i] = acc
    return out_np


# ---------------------------------------------------------------------------
# morphology via exact squared Euclidean distance transform
# ---------------------------------------------------------------------------

cdef void _edt_1d(double* f, double* d, Py_ssize_t* v, double* z,
                  Py_ssize_t n) nogil:
    """Felzenszwalb-Huttenlocher lower envelope of parabolas."""
    cdef Py_ssize_t k = 0, q
    cdef double s
    v[0] = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


def _sqedt_to_positive(mask):
    """Squared Euclidean distance to the nearest nonzero voxel."""
    m = np.asarray(mask, dtype=bool)
    g_np = np.where(m, 0.0, _INF)
    cdef double[:, :, ::1] g = np.ascontiguousarray(g_np)
    cdef Py_ssize_t nx = g.shape[0], ny = g.shape[1], nz = g.shape[2]
    cdef Py_ssize_t nmax = max(nx, max(ny, nz))
    cdef Py_ssize_t a, b, i
    cdef double* f = <double*>malloc(nmax * sizeof(double))
    cdef double* d = <double*>malloc(nmax * sizeof(double))
    cdef Py_ssize_t* v = <Py_ssize_t*>malloc(nmax * sizeof(Py_ssize_t))
    cdef double* z = <double*>malloc((nmax + 1) * sizeof(double))
    if f == NULL or d == NULL or v == NULL or z == NULL:
        free(f); free(d); free(v); free(z)
        raise MemoryError
    try:
        with nogil:
            for a in range(nx):        # along z
                for b in range(ny):
                    for i in range(nz):
                        f[i] = g[a, b, i]
                    _edt_1d(f, d, v, z, nz)
                    for i in range(nz):
                        g[a, b, i] = d[i]
            for a in range(nx):        # along y
                for b in range(nz):
                    for i in range(ny):
                        f[i] = g[a, i, b]
                    _edt_1d(f, d, v, z, ny)
                    for i in range(ny):
                        g[a, i, b] = d[i]
            for a in range(ny):        # along x
                for b in range(nz):
                    for i in range(nx):
                        f[i] = g[i, a, b]
                    _edt_1d(f, d, v, z, nx)
                    for i in range(nx):
                        g[i, a, b] = d[i]
    finally:
        free(f); free(d); free(v); free(z)
    return np.asarray(g)


def _border_sqdist(shape):
    """Squared distance from each voxel to the nearest out-of-grid voxel."""
    nx, ny, nz = shape
    bx = np.minimum(np.arange(nx) + 1, nx - np.arange(nx)).astype(np.float64)
    by = np.minimum(np.arange(ny) + 1, ny - np.arange(ny)).astype(np.float64)
    bz = np.minimum(np.arange(nz) + 1, nz - np.arange(nz)).astype(np.float64)
    m = np.minimum(np.minimum(bx[:, None, None], by[None, :, None]),
                   bz[None, None, :])
    return m * m


def binary_dilate(mask, radius):
    """Dilation with a Euclidean ball; the grid exterior contributes nothing."""
    m = np.asarray(mask, dtype=bool)
    d2 = _sqedt_to_positive(m)
    r = int(radius)
    return (d2 <= r * r).astype(np.uint8)


def binary_erode(mask, radius):
    """Erosion with a Euclidean ball; the grid exterior counts as zero."""
    m = np.asarray(mask, dtype=bool)
    d2 = _sqedt_to_positive(~m)
    d2 = np.minimum(d2, _border_sqdist(m.shape))
    r = int(radius)
    return (m & (d2 > r * r)).astype(np.uint8)


# ---------------------------------------------------------------------------
# connected components
# ---------------------------------------------------------------------------

def label_components(mask, int connectivity):
    """Label connected components, numbered by first voxel in C-scan order."""
    m_np = np.ascontiguousarray(np.asarray(mask, dtype=bool).astype(np.uint8))
    cdef cnp.uint8_t[:, :, ::1] m = m_np
    cdef Py_ssize_t nx = m.shape[0], ny = m.shape[1], nz = m.shape[2]
    labels_np = np.zeros((nx, ny, nz), dtype=np.int32)
    cdef cnp.int32_t[:, :, ::1] labels = labels_np

    cdef int noff = 6 if connectivity == 6 else 26
    cdef Py_ssize_t[78] offs
    cdef int idx = 0
    cdef Py_ssize_t dx, dy, dz
    if connectivity == 6:
        for dx, dy, dz in ((-1, 0, 0), (1, 0, 0), (0, -1, 0),
                           (0, 1, 0), (0, 0, -1), (0, 0, 1)):
            offs[idx * 3] = dx; offs[idx * 3 + 1] = dy; offs[idx * 3 + 2] = dz
            idx += 1
    else:
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    if dx == 0 and dy == 0 and dz == 0:
                        continue
                    offs[idx * 3] = dx; offs[idx * 3 + 1] = dy
                    offs[idx * 3 + 2] = dz
                    idx += 1

    stack_np = np.empty(nx * ny * nz, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_np
    cdef Py_ssize_t sp, x, y, z, cx, cy, cz, xn, yn, zn, o
    cdef cnp.int64_t flat
    cdef int lab = 0

    with nogil:
        for x in range(nx):
            for y in range(ny):
                for z in range(nz):
                    if m[x, y, z] == 0 or labels[x, y, z] != 0:
                        continue
                    lab += 1
                    labels[x, y, z] = lab
                    stack[0] = (x * ny + y) * nz + z
                    sp = 1
                    while sp > 0:
                        sp -= 1
                        flat = stack[sp]
                        cz = flat % nz
                        cy = (flat // nz) % ny
                        cx = flat // (ny * nz)
                        for o in range(noff):
                            xn = cx + offs[o * 3]
                            yn = cy + offs[o * 3 + 1]
                            zn = cz + offs[o * 3 + 2]
                            if xn < 0 or xn >= nx or yn < 0 or yn >= ny \
                                    or zn < 0 or zn >= nz:
                                continue
                            if m[xn, yn, zn] != 0 and labels[xn, yn, zn] == 0:
                                labels[xn, yn, zn] = lab
                                stack[sp] = (xn * ny + yn) * nz + zn
                                sp += 1
    return labels_np, lab
