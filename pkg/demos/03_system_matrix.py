"""The sparse detector response matrix and its products.

    python demos/03_system_matrix.py
"""

import numpy as np

from ctisim import (
    HyperCube, ShiftGeometry, build_system_matrix, simulate, vectorize,
)

# The flagship configuration: 100x100 cube, 25 bands, shifts 1..25 pixels.
geom = ShiftGeometry(100, tuple(range(1, 26)))
H = build_system_matrix(geom)
print(f"canvas {geom.canvas_side}x{geom.canvas_side} -> "
      f"{H.n_detector_pixels} detector pixels, {H.n_voxels} voxels")
print(f"nonzeros: {H.nnz} (exactly 5 per column)")
print(f"per-column sparsity: (q^2-5)/q^2 = {H.per_column_sparsity:.5f}")
print(f"column sums: all {np.unique(H.column_sums())}")

# One voxel lights up exactly five detector pixels: its column.
e = np.zeros(H.n_voxels)
e[12345] = 1.0
g = H.matvec(e)
print(f"unit voxel -> {np.count_nonzero(g)} lit pixels at rows "
      f"{np.nonzero(g)[0].tolist()}")

# The matrix and the image-space simulator are the same linear map.
rng = np.random.default_rng(0)
small = ShiftGeometry.for_bands(32, 5)
Hs = build_system_matrix(small)
cube = HyperCube(rng.uniform(0, 255, size=(5, 32, 32)).astype(np.float32))
err = np.abs(vectorize(simulate(cube, small)) - Hs.matvec(cube.vector())).max()
print(f"simulate vs matvec, worst absolute difference: {err:.3g}")

# Forward and transpose products are adjoint.
f = rng.uniform(0, 1, size=Hs.n_voxels)
v = rng.uniform(0, 1, size=Hs.n_detector_pixels)
lhs = Hs.matvec(f) @ v
rhs = f @ Hs.rmatvec(v)
print(f"adjointness <Hf, v> = {lhs:.6f} vs <f, H'v> = {rhs:.6f}")
