"""Hyperspectral cube data model, cropping, band selection, and binary I/O.

A cube stores nonnegative float32 intensities as ``bands`` spectral planes of
``rows x cols`` pixels. Planes are kept band-slowest and row-major, so the
flat view of the buffer (band plane, then row, then column) is the single
vectorization order used everywhere: by the imaging model, by the system
matrix column indexing, and by the solver.

Cube files use the "HSC1" layout:

    bytes 0-3    magic ``HSC1``
    bytes 4-15   rows, cols, bands as unsigned 32-bit little-endian
    bytes 16-    rows*cols*bands float32 little-endian in vectorization order

There is no padding and no checksum; truncation is detected by size.

Cubes are immutable after construction and all operations here are pure
functions, so everything is safe to share across parallel workers.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, RangeError

HSC1_MAGIC = b"HSC1"
_HEADER = struct.Struct("<4sIII")

# Largest voxel count accepted from a file header (8 GiB of float32).
MAX_FILE_VOXELS = 2**31


def _as_cube_array(data) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 3:
        raise DimensionError(f"cube data must be 3-D (bands, rows, cols), got {arr.ndim}-D")
    if min(arr.shape) < 1:
        raise DimensionError(f"cube dims must all be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("cube data contains non-finite values")
    if arr.min(initial=0.0) < 0.0:
        raise DimensionError("cube data contains negative intensities")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class HyperCube:
    """Immutable hyperspectral cube of shape (bands, rows, cols)."""

    data: np.ndarray
    value_scale: float = 255.0

    def __post_init__(self):
        object.__setattr__(self, "data", _as_cube_array(self.data))

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    @property
    def n_voxels(self) -> int:
        return self.data.size

    def band(self, index: int) -> np.ndarray:
        """Read-only view of one spectral plane."""
        return self.data[index]

    def vector(self) -> np.ndarray:
        """The cube in vectorization order (band plane, row, column)."""
        return self.data.reshape(-1)

    @classmethod
    def from_vector(cls, vec, bands: int, rows: int, cols: int, value_scale: float = 255.0) -> "HyperCube":
        vec = np.asarray(vec)
        if vec.size != bands * rows * cols:
            raise DimensionError(
                f"vector length {vec.size} does not match dims {bands}x{rows}x{cols}"
            )
        return cls(vec.reshape(bands, rows, cols), value_scale=value_scale)

    @classmethod
    def zeros(cls, bands: int, rows: int, cols: int, value_scale: float = 255.0) -> "HyperCube":
        return cls(np.zeros((bands, rows, cols), dtype=np.float32), value_scale=value_scale)


@dataclass(frozen=True)
class CropWindow:
    """Square spatial window, addressed by its top-left pixel."""

    origin_row: int
    origin_col: int
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise DimensionError(f"window side must be >= 1, got {self.side}")
        if self.origin_row < 0 or self.origin_col < 0:
            raise RangeError(f"window origin must be nonnegative, got "
                             f"({self.origin_row}, {self.origin_col})")


def crop(cube: HyperCube, window: CropWindow) -> HyperCube:
    """Cut a square spatial window out of every band.

    The result owns its data (no aliasing into the source cube).
    """
    r0, c0, side = window.origin_row, window.origin_col, window.side
    if r0 + side > cube.rows or c0 + side > cube.cols:
        raise RangeError(
            f"window ({r0},{c0}) side {side} exceeds cube extent {cube.rows}x{cube.cols}"
        )
    return HyperCube(cube.data[:, r0:r0 + side, c0:c0 + side].copy(),
                     value_scale=cube.value_scale)


def enumerate_crops(src_dims, side: int, stride_rows: int = 1, stride_cols: int = 1):
    """All square windows of a given side over a (rows, cols) extent.

    Windows are returned row-major. The count is
    ``(floor((rows-side)/stride_rows)+1) * (floor((cols-side)/stride_cols)+1)``.
    """
    rows, cols = int(src_dims[0]), int(src_dims[1])
    if side > rows or side > cols:
        raise DimensionError(f"window side {side} exceeds source extent {rows}x{cols}")
    if stride_rows < 1 or stride_cols < 1:
        raise DimensionError(f"strides must be >= 1, got ({stride_rows}, {stride_cols})")
    return [
        CropWindow(r, c, side)
        for r in range(0, rows - side + 1, stride_rows)
        for c in range(0, cols - side + 1, stride_cols)
    ]


def select_bands(cube: HyperCube, band_indices) -> HyperCube:
    """Keep the listed spectral bands; indices must be unique, ascending, in range."""
    idx = list(band_indices)
    if len(idx) == 0:
        raise RangeError("band selection must not be empty")
    if any(i != int(i) for i in idx):
        raise RangeError(f"band indices must be integers, got {idx}")
    idx = [int(i) for i in idx]
    if any(i < 0 or i >= cube.bands for i in idx):
        raise RangeError(f"band index out of range [0, {cube.bands}): {idx}")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise RangeError(f"band indices must be strictly ascending and unique: {idx}")
    return HyperCube(cube.data[idx].copy(), value_scale=cube.value_scale)


def write_cube(cube: HyperCube, dest) -> None:
    """Write one HSC1 frame to a path or an open binary file."""
    if hasattr(dest, "write"):
        _write_frame(dest, cube)
    else:
        with open(dest, "wb") as fh:
            _write_frame(fh, cube)


def read_cube(src, value_scale: float = 255.0) -> HyperCube:
    """Read one HSC1 frame from a path or an open binary file."""
    if hasattr(src, "read"):
        return _read_frame(src, value_scale)
    with open(src, "rb") as fh:
        return _read_frame(fh, value_scale)


def _write_frame(fh, cube: HyperCube) -> None:
    fh.write(_HEADER.pack(HSC1_MAGIC, cube.rows, cube.cols, cube.bands))
    fh.write(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())


def _read_frame(fh, value_scale: float = 255.0) -> HyperCube:
    base = fh.tell() if fh.seekable() else 0
    header = fh.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise FormatError(
            f"truncated header: expected {_HEADER.size} bytes, got {len(header)}",
            offset=base,
        )
    magic, rows, cols, bands = _HEADER.unpack(header)
    if magic != HSC1_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {HSC1_MAGIC!r}", offset=base)
    if min(rows, cols, bands) < 1 or rows * cols * bands > MAX_FILE_VOXELS:
        raise FormatError(
            f"header dims {rows}x{cols}x{bands} out of supported range", offset=base + 4
        )
    count = rows * cols * bands
    payload = fh.read(count * 4)
    if len(payload) < count * 4:
        raise FormatError(
            f"truncated payload: expected {count * 4} bytes, got {len(payload)}",
            offset=base + _HEADER.size,
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(bands, rows, cols)
    return HyperCube(data, value_scale=value_scale)


def frame_nbytes(bands: int, rows: int, cols: int) -> int:
    """Size in bytes of one HSC1 frame with the given dims."""
    return _HEADER.size + 4 * bands * rows * cols


def write_pgm(image, dest, max_value: float | None = None) -> None:
    """Debug export of a 2-D array as a 16-bit binary PGM.

    Values are scaled so that ``max_value`` (default: the array maximum)
    maps to 65535. Intended for eyeballing bands and detector images only.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"PGM export needs a 2-D array, got {arr.ndim}-D")
    top = float(arr.max()) if max_value is None else float(max_value)
    if top <= 0:
        top = 1.0
    scaled = np.clip(arr / top, 0.0, 1.0)
    pixels = (scaled * 65535.0 + 0.5).astype(">u2")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    if hasattr(dest, "write"):
        dest.write(header)
        dest.write(pixels.tobytes())
    else:
        with open(dest, "wb") as fh:
            fh.write(header)
            fh.write(pixels.tobytes())
