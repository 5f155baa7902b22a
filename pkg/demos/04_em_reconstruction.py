"""EM reconstruction of a cube from a single detector frame.

    python demos/04_em_reconstruction.py
"""

from pathlib import Path

import numpy as np

from ctisim import (
    CropWindow, EmConfig, SceneSpec, ShiftGeometry, build_system_matrix,
    crop, generate_scene, mse, reconstruct, select_bands, simulate,
)

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

scene = generate_scene(SceneSpec("mosaic", rows=200, cols=400, bands=16, seed=12))
truth = crop(select_bands(scene, [0, 3, 6, 9, 12]), CropWindow(30, 60, 100))
geom = ShiftGeometry.for_bands(100, 5)
frame = simulate(truth, geom)
H = build_system_matrix(geom)

# 20 iterations from a back-projection start is the standard setting.
result = reconstruct(H, frame, EmConfig(iterations=20, record_trajectory=True))
print(f"20 iterations: MSE vs truth {mse(truth, result.estimate):.2f} "
      f"(intensities on a 0-255 scale)")
print("  k   log-likelihood      L1 residual    ms")
for stat in result.trajectory[:5] + result.trajectory[-2:]:
    print(f"{stat.index:>3}   {stat.loglik:>14.2f}   {stat.residual_l1:>12.1f}"
          f"   {stat.ms:>5.1f}")

# More iterations keep helping, at proportional cost.
for iterations in (100, 1000):
    estimate = reconstruct(H, frame, EmConfig(iterations=iterations)).estimate
    print(f"{iterations} iterations: MSE {mse(truth, estimate):.2f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    best = reconstruct(H, frame, EmConfig(iterations=1000)).estimate
    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
    band = 2
    for ax, (img, title) in zip(axes, [
        (truth.band(band), "original band 3"),
        (best.band(band), "EM estimate (1000 iterations)"),
        (truth.band(band).astype(float) - best.band(band), "residual"),
    ]):
        im = ax.imshow(img, cmap="viridis")
        ax.set_title(title)
        ax.set_xticks([]), ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.savefig(out / "em_reconstruction.png", dpi=110, bbox_inches="tight")
    print(f"figure: {out / 'em_reconstruction.png'}")
except ImportError:
    print("matplotlib not available, skipping the figure")
