"""Error and wall time as a function of EM iteration count.

Reconstruction error falls asymptotically while cost grows linearly, so
the iteration budget is a straight accuracy/latency trade.

    python demos/06_iteration_benchmark.py
"""

import time
from pathlib import Path

import numpy as np

from ctisim import (
    EmConfig, HyperCube, ShiftGeometry, build_system_matrix, mse,
    reconstruct, simulate,
)

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

rng = np.random.default_rng(9)
geom = ShiftGeometry.for_bands(32, 5)
H = build_system_matrix(geom)

instances = []
for _ in range(10):
    cube = HyperCube(rng.uniform(0.5, 255.0, size=(5, 32, 32)).astype(np.float32))
    instances.append((cube, simulate(cube, geom)))

schedule = (1, 5, 10, 20, 50, 100, 500, 1000)
print(f"{'iterations':>10}  {'mean ms':>9}  {'std ms':>8}  {'mean MSE':>10}")
mean_ms, mean_mse = [], []
for its in schedule:
    cfg = EmConfig(iterations=its)
    times, errors = [], []
    for cube, frame in instances:
        t0 = time.perf_counter()
        estimate = reconstruct(H, frame, cfg).estimate
        times.append((time.perf_counter() - t0) * 1e3)
        errors.append(mse(cube, estimate))
    mean_ms.append(np.mean(times))
    mean_mse.append(np.mean(errors))
    print(f"{its:>10}  {mean_ms[-1]:>9.2f}  {np.std(times, ddof=1):>8.2f}"
          f"  {mean_mse[-1]:>10.1f}")

slope, intercept = np.polyfit(schedule, mean_ms, 1)
print(f"\ntime per iteration ~ {slope * 1e3:.1f} us (linear fit)")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax1.loglog(schedule, mean_mse, "o-")
    ax1.set_xlabel("EM iterations"), ax1.set_ylabel("mean MSE")
    ax2.loglog(schedule, mean_ms, "s-")
    ax2.set_xlabel("EM iterations"), ax2.set_ylabel("mean wall time [ms]")
    for ax in (ax1, ax2):
        ax.grid(True, which="both", alpha=0.3)
    fig.savefig(out / "iteration_tradeoff.png", dpi=110, bbox_inches="tight")
    print(f"figure: {out / 'iteration_tradeoff.png'}")
except ImportError:
    print("matplotlib not available, skipping the figure")
