"""Sparse detector response matrix.

The forward model is linear, so it has a matrix form: one column per voxel,
one row per detector pixel, and exactly five entries per column (the five
diffraction orders a voxel lands in). The matrix is held in compressed
sparse column form because construction is naturally column-at-a-time and
both products the solver needs come from the same arrays: the forward
product scatters per column, the transpose product gathers per column.

Column ``j`` addresses the voxel at (band, row, col) in cube vectorization
order: ``j = band*side*side + row*side + col``. The matrix is immutable
after construction and both products are read-only.
"""

from __future__ import annotations

import struct

import numpy as np
from scipy import sparse

from .errors import CapacityError, DimensionError
from .optics import ShiftGeometry

_MAX_INDEX = 2**62


class SparseSystemMatrix:
    """Immutable sparse map from cube voxels to detector pixels."""

    def __init__(self, matrix: sparse.csc_matrix, geometry: ShiftGeometry):
        self._m = matrix
        self.geometry = geometry
        self._column_sums: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self._m.shape

    @property
    def n_detector_pixels(self) -> int:
        return self._m.shape[0]

    @property
    def n_voxels(self) -> int:
        return self._m.shape[1]

    @property
    def nnz(self) -> int:
        return self._m.nnz

    @property
    def offsets(self) -> np.ndarray:
        """Per-column offsets into the index and value arrays."""
        return self._m.indptr

    @property
    def row_indices(self) -> np.ndarray:
        return self._m.indices

    @property
    def values(self) -> np.ndarray:
        return self._m.data

    @property
    def sparsity(self) -> float:
        rows, cols = self._m.shape
        return 1.0 - self.nnz / (rows * cols)

    @property
    def per_column_sparsity(self) -> float:
        """Fraction of zero entries in any single column: (q^2 - 5) / q^2."""
        rows = self._m.shape[0]
        return (rows - 5) / rows

    def matvec(self, voxels) -> np.ndarray:
        """Forward product: detector image vector from a cube vector."""
        f = np.asarray(voxels, dtype=np.float64).reshape(-1)
        if f.size != self.n_voxels:
            raise DimensionError(f"expected {self.n_voxels} voxels, got {f.size}")
        return self._m @ f

    def rmatvec(self, pixels) -> np.ndarray:
        """Transpose product: back-projection of a detector vector."""
        v = np.asarray(pixels, dtype=np.float64).reshape(-1)
        if v.size != self.n_detector_pixels:
            raise DimensionError(
                f"expected {self.n_detector_pixels} detector pixels, got {v.size}"
            )
        # .T of a CSC matrix is a CSR view over the same arrays: no copy.
        return self._m.T @ v

    def column_sums(self) -> np.ndarray:
        """Sum of each column's entries (5 * order weight everywhere)."""
        if self._column_sums is None:
            sums = self._m.data.reshape(self.n_voxels, 5).sum(axis=1)
            sums.flags.writeable = False
            self._column_sums = sums
        return self._column_sums


def _voxel_grids(side: int, cols: int, bands: int):
    n_spatial = side * cols
    band = np.repeat(np.arange(bands, dtype=np.int64), n_spatial)
    row = np.tile(np.repeat(np.arange(side, dtype=np.int64), cols), bands)
    col = np.tile(np.arange(cols, dtype=np.int64), side * bands)
    return band, row, col


def build_system_matrix(geom: ShiftGeometry, spatial_cols: int | None = None) -> SparseSystemMatrix:
    """Construct the detector response matrix for a square cube geometry.

    Entry values are the geometry's per-order weight, so in ``unit`` mode
    every column sums to exactly 5.
    """
    side = geom.cube_side
    cols = side if spatial_cols is None else int(spatial_cols)
    if cols != side:
        raise DimensionError(
            f"response matrix requires a square spatial extent, got {side}x{cols}"
        )
    bands = geom.bands
    q = geom.canvas_side
    r = side * cols * bands
    if q * q > _MAX_INDEX or 5 * r > _MAX_INDEX:
        raise CapacityError(f"geometry too large to index: q^2={q * q}, voxels={r}")

    band, row, col = _voxel_grids(side, cols, bands)
    shift = np.asarray(geom.shifts, dtype=np.int64)[band]
    s_max = geom.max_shift
    z0 = geom.block_side

    center_row = z0 + row
    center_col = z0 + col
    near_row = s_max - shift + row          # top lobe rows
    far_row = z0 + side + s_max + shift + row   # bottom lobe rows
    near_col = s_max - shift + col          # left lobe cols
    far_col = z0 + side + s_max + shift + col   # right lobe cols

    # row indices per column in ascending detector order: top, left, center,
    # right, bottom (the top lobe always sits above the central band, etc.)
    indices = np.stack(
        [
            near_row * q + center_col,
            center_row * q + near_col,
            center_row * q + center_col,
            center_row * q + far_col,
            far_row * q + center_col,
        ],
        axis=1,
    ).reshape(-1)
    indptr = np.arange(r + 1, dtype=np.int64) * 5
    data = np.full(5 * r, geom.order_weight, dtype=np.float64)
    matrix = sparse.csc_matrix((data, indices, indptr), shape=(q * q, r))
    return SparseSystemMatrix(matrix, geom)


def write_matrix_dump(H: SparseSystemMatrix, path) -> None:
    """Debug dump: header (q, voxels, nnz as u64 LE), then offsets (u64),
    row indices (u64), and float32 values. Not a stability-guaranteed format.
    """
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQQ", H.geometry.canvas_side, H.n_voxels, H.nnz))
        fh.write(H.offsets.astype("<u8").tobytes())
        fh.write(H.row_indices.astype("<u8").tobytes())
        fh.write(H.values.astype("<f4").tobytes())
