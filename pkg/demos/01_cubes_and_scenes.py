"""Hyperspectral cubes: synthetic scenes, cropping, band selection, file I/O.

Run from the repository root after installing the package:

    python demos/01_cubes_and_scenes.py
"""

from pathlib import Path

import numpy as np

from ctisim import (
    CropWindow, SceneSpec, crop, enumerate_crops, generate_scene,
    read_cube, select_bands, write_cube, write_pgm,
)

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

# A color-chart-like scene: 4x6 grid of rectangles, each with its own
# constant spectrum. This is the stand-in for a line-scanned reference cube.
scene = generate_scene(SceneSpec("mosaic", rows=200, cols=400, bands=16, seed=7))
print(f"mosaic scene: {scene.rows}x{scene.cols}x{scene.bands}, "
      f"values in [{scene.data.min():.1f}, {scene.data.max():.1f}]")

# An organic scene of smooth elliptical bumps.
produce = generate_scene(SceneSpec("blobs", rows=200, cols=400, bands=16, seed=7))
print(f"blobs scene:  max {produce.data.max():.1f}, "
      f"mean {produce.data.mean():.1f}")

# Pick five spectral bands, then cut a 100x100 window.
five = select_bands(scene, [1, 4, 7, 10, 13])
window = CropWindow(origin_row=50, origin_col=120, side=100)
patch = crop(five, window)
print(f"cropped cube: {patch.rows}x{patch.cols}x{patch.bands}")

# Exhaustive windowing at stride 1 gives (200-100+1) x (400-100+1) windows;
# strided windowing thins that out.
dense = enumerate_crops((200, 400), side=100)
sparse = enumerate_crops((200, 400), side=100, stride_rows=10, stride_cols=15)
print(f"windows at stride (1,1):   {len(dense)}")
print(f"windows at stride (10,15): {len(sparse)}")

# Round-trip through the binary cube format.
path = out / "patch.hsc"
write_cube(patch, path)
back = read_cube(path)
assert np.array_equal(back.data, patch.data)
print(f"wrote and re-read {path.name}: bit-exact ({path.stat().st_size} bytes)")

# Export one band for eyeballing.
write_pgm(patch.band(2), out / "patch_band2.pgm", max_value=255.0)
print(f"band preview: {out / 'patch_band2.pgm'}")
