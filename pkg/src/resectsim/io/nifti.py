"""Minimal NIfTI-1 reader/writer (.nii and .nii.gz).

Covers the single-file format with 3D volumes: header parsing with
endianness detection, sform/qform affines, intensity scaling, and gzip.
Output bytes are deterministic (fixed description, zero gzip mtime), so
identical volumes produce identical files.
"""

import gzip
import math
import struct
from pathlib import Path

import numpy as np

from resectsim.errors import InputDataError
from resectsim.volume import BinaryMask, Grid, LabelVolume, ScalarVolume

__all__ = ["read_volume", "read_scalar", "read_labels", "write_volume"]

_HEADER_SIZE = 348
_VOX_OFFSET = 352
_DESCRIP = b"resectsim"

_DTYPES = {
    2: np.uint8, 4: np.int16, 8: np.int32, 16: np.float32, 64: np.float64,
    256: np.int8, 512: np.uint16, 768: np.uint32, 1024: np.int64,
}
_DTYPE_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}

_FIELDS = (
    ("sizeof_hdr", "i"), ("data_type", "10s"), ("db_name", "18s"),
    ("extents", "i"), ("session_error", "h"), ("regular", "c"),
    ("dim_info", "c"), ("dim", "8h"), ("intent_p1", "f"), ("intent_p2", "f"),
    ("intent_p3", "f"), ("intent_code", "h"), ("datatype", "h"),
    ("bitpix", "h"), ("slice_start", "h"), ("pixdim", "8f"),
    ("vox_offset", "f"), ("scl_slope", "f"), ("scl_inter", "f"),
    ("slice_end", "h"), ("slice_code", "c"), ("xyzt_units", "c"),
    ("cal_max", "f"), ("cal_min", "f"), ("slice_duration", "f"),
    ("toffset", "f"), ("glmax", "i"), ("glmin", "i"), ("descrip", "80s"),
    ("aux_file", "24s"), ("qform_code", "h"), ("sform_code", "h"),
    ("quatern_b", "f"), ("quatern_c", "f"), ("quatern_d", "f"),
    ("qoffset_x", "f"), ("qoffset_y", "f"), ("qoffset_z", "f"),
    ("srow_x", "4f"), ("srow_y", "4f"), ("srow_z", "4f"),
    ("intent_name", "16s"), ("magic", "4s"),
)
_STRUCT_BODY = "".join(fmt for _, fmt in _FIELDS)
assert struct.calcsize("<" + _STRUCT_BODY) == _HEADER_SIZE


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _unpack_header(raw: bytes, path) -> dict:
    if len(raw) < _HEADER_SIZE:
        raise InputDataError(f"{path}: file shorter than a NIfTI-1 header")
    for order in ("<", ">"):
        if struct.unpack_from(order + "i", raw)[0] == _HEADER_SIZE:
            break
    else:
        raise InputDataError(f"{path}: not a NIfTI-1 file (bad sizeof_hdr)")
    values = struct.unpack_from(order + _STRUCT_BODY, raw)
    header = {}
    i = 0
    for name, fmt in _FIELDS:
        # 's' formats unpack to a single bytes value regardless of width
        n = 1 if fmt.endswith("s") \
            else struct.calcsize(fmt) // struct.calcsize(fmt[-1])
        header[name] = values[i] if n == 1 else values[i:i + n]
        i += n
    header["_order"] = order
    if header["magic"] not in (b"n+1\x00", b"ni1\x00"):
        raise InputDataError(f"{path}: bad NIfTI magic {header['magic']!r}")
    return header


def _quaternion_rotation(header) -> np.ndarray:
    b, c, d = header["quatern_b"], header["quatern_c"], header["quatern_d"]
    a = math.sqrt(max(0.0, 1.0 - (b * b + c * c + d * d)))
    return np.array([
        [a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d,
         2 * b * d + 2 * a * c],
        [2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d,
         2 * c * d - 2 * a * b],
        [2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b,
         a * a + d * d - b * b - c * c],
    ])


def _grid_from_header(header, path) -> Grid:
    dims = tuple(int(v) for v in header["dim"][1:4])
    if header["sform_code"] > 0:
        rows = np.array([header["srow_x"], header["srow_y"],
                         header["srow_z"]], dtype=np.float64)
        m = rows[:, :3]
        origin = rows[:, 3]
    elif header["qform_code"] > 0:
        rot = _quaternion_rotation(header)
        qfac = -1.0 if header["pixdim"][0] < 0 else 1.0
        spacing = np.abs(np.array(header["pixdim"][1:4], dtype=np.float64))
        m = rot * spacing
        m[:, 2] *= qfac
        origin = np.array([header["qoffset_x"], header["qoffset_y"],
                           header["qoffset_z"]], dtype=np.float64)
    else:
        raise InputDataError(
            f"{path}: neither sform nor qform is set; orientation unknown")
    spacing = np.linalg.norm(m, axis=0)
    if np.any(spacing <= 0):
        raise InputDataError(f"{path}: affine has a zero-length axis")
    direction = m / spacing
    try:
        return Grid(dims, tuple(spacing), tuple(origin), direction)
    except ValueError as exc:
        raise InputDataError(f"{path}: {exc}") from None


def _load(path) -> tuple[Grid, np.ndarray, dict]:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"{path}: no such file")
    raw = _read_bytes(path)
    header = _unpack_header(raw, path)
    ndim = header["dim"][0]
    if not 1 <= ndim <= 7:
        raise InputDataError(f"{path}: invalid dim[0] = {ndim}")
    shape = [max(1, int(v)) for v in header["dim"][1:1 + ndim]]
    if len(shape) < 3:
        shape += [1] * (3 - len(shape))
    if any(s != 1 for s in shape[3:]):
        raise InputDataError(
            f"{path}: only 3D volumes are supported, got shape {shape}")
    code = header["datatype"]
    if code not in _DTYPES:
        raise InputDataError(f"{path}: unsupported NIfTI datatype {code}")
    dtype = np.dtype(_DTYPES[code]).newbyteorder(header["_order"])
    count = shape[0] * shape[1] * shape[2]
    offset = int(header["vox_offset"])
    if len(raw) < offset + count * dtype.itemsize:
        raise InputDataError(f"{path}: file truncated")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    data = np.ascontiguousarray(
        data.reshape(shape[:3], order="F").astype(dtype.newbyteorder("=")))
    grid = _grid_from_header(header, path)
    return grid, data, header


def _apply_scaling(data, header):
    slope, inter = header["scl_slope"], header["scl_inter"]
    if slope not in (0.0, 1.0) or inter != 0.0:
        slope = slope if slope != 0.0 else 1.0
        return data.astype(np.float64) * slope + inter
    return data


def read_volume(path):
    """Load a volume; float files become ScalarVolume, ints LabelVolume."""
    grid, data, header = _load(path)
    if data.dtype.kind == "f":
        return ScalarVolume(grid, _apply_scaling(data, header))
    slope, inter = header["scl_slope"], header["scl_inter"]
    if slope not in (0.0, 1.0) or inter != 0.0:
        return ScalarVolume(grid, _apply_scaling(data, header))
    return LabelVolume(grid, data)


def read_scalar(path) -> ScalarVolume:
    """Load a volume as a scalar image regardless of on-disk dtype."""
    grid, data, header = _load(path)
    return ScalarVolume(grid, _apply_scaling(data, header))


def read_labels(path) -> LabelVolume:
    """Load an integer-typed volume as a label map."""
    grid, data, header = _load(path)
    if data.dtype.kind not in "iu":
        raise InputDataError(
            f"{path}: expected an integer-typed parcellation, got "
            f"{data.dtype}")
    if header["scl_slope"] not in (0.0, 1.0) or header["scl_inter"] != 0.0:
        raise InputDataError(f"{path}: label volumes must not use intensity "
                             "scaling")
    return LabelVolume(grid, data)


def _pack_header(grid: Grid, datatype_code: int, bitpix: int) -> bytes:
    affine = grid.affine
    fields = {name: (b"\x00" * struct.calcsize(fmt)
                     if fmt.endswith("s") or fmt == "c" else
                     (0,) * (struct.calcsize(fmt) // struct.calcsize(fmt[-1]))
                     if len(fmt) > 1 else 0)
              for name, fmt in _FIELDS}
    fields["sizeof_hdr"] = _HEADER_SIZE
    fields["regular"] = b"r"
    fields["dim_info"] = b"\x00"
    fields["dim"] = (3, *grid.dims, 1, 1, 1, 1)
    fields["datatype"] = datatype_code
    fields["bitpix"] = bitpix
    fields["pixdim"] = (1.0, *grid.spacing, 0.0, 0.0, 0.0, 0.0)
    fields["vox_offset"] = float(_VOX_OFFSET)
    fields["scl_slope"] = 1.0
    fields["scl_inter"] = 0.0
    fields["slice_code"] = b"\x00"
    fields["xyzt_units"] = b"\x02"         # millimeters
    fields["descrip"] = _DESCRIP.ljust(80, b"\x00")
    fields["qform_code"] = 0
    fields["sform_code"] = 2               # aligned to some template
    fields["srow_x"] = tuple(affine[0])
    fields["srow_y"] = tuple(affine[1])
    fields["srow_z"] = tuple(affine[2])
    fields["magic"] = b"n+1\x00"

    packed = []
    for name, fmt in _FIELDS:
        value = fields[name]
        if isinstance(value, tuple):
            packed.append(struct.pack("<" + fmt, *value))
        else:
            packed.append(struct.pack("<" + fmt, value))
    header = b"".join(packed)
    assert len(header) == _HEADER_SIZE
    return header + b"\x00" * 4            # no extensions


def write_volume(vol, path) -> None:
    """Write a volume as NIfTI-1; a ``.gz`` suffix enables compression.

    Masks are stored as uint8, label maps as int32, scalars as float32.
    """
    path = Path(path)
    if isinstance(vol, BinaryMask):
        data, code, bits = vol.data, 2, 8
    elif isinstance(vol, LabelVolume):
        data, code, bits = vol.data.astype(np.int32), 8, 32
    elif isinstance(vol, ScalarVolume):
        data, code, bits = vol.data, 16, 32
    else:
        raise TypeError(f"cannot write {type(vol).__name__} as NIfTI")
    blob = _pack_header(vol.grid, code, bits) + data.tobytes(order="F")
    try:
        if path.name.endswith(".gz"):
            with open(path, "wb") as fh:
                with gzip.GzipFile(filename="", mode="wb", fileobj=fh,
                                   mtime=0) as gz:
                    gz.write(blob)
        else:
            path.write_bytes(blob)
    except OSError as exc:
        raise InputDataError(f"cannot write {path}: {exc}") from None
