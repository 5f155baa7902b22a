"""Seeded synthetic scene generation.

Two scene archetypes stand in for real captures: ``mosaic`` scenes are grids
of axis-aligned rectangles with piecewise-constant spectra (a color-chart
look), ``blobs`` scenes are sums of smooth elliptical intensity bumps with
smooth spectral profiles (an organic, produce-like look). ``blank`` scenes
are all zero. Generation is bit-reproducible: the same spec always yields
the same cube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .hypercube import HyperCube

SCENE_KINDS = ("mosaic", "blobs", "blank")


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    rows: int
    cols: int
    bands: int
    seed: int = 0
    value_scale: float = 255.0
    # mosaic: rectangle grid (rows of patches, columns of patches)
    grid_shape: tuple[int, int] = (4, 6)
    # blobs: inclusive range for the number of bumps
    blob_count: tuple[int, int] = (3, 8)

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ConfigError(f"unknown scene kind {self.kind!r}, expected one of {SCENE_KINDS}")


def generate_scene(spec: SceneSpec) -> HyperCube:
    """Render a scene spec into a cube with values in [0, value_scale]."""
    if spec.rows < 8 or spec.cols < 8 or spec.bands < 1:
        raise DimensionError(
            f"scene dims must be at least 8x8x1, got {spec.rows}x{spec.cols}x{spec.bands}"
        )
    if spec.kind == "blank":
        return HyperCube.zeros(spec.bands, spec.rows, spec.cols, value_scale=spec.value_scale)
    if spec.kind == "mosaic":
        data = _render_mosaic(spec)
    else:
        data = _render_blobs(spec)
    return HyperCube(data, value_scale=spec.value_scale)


def mosaic_region_map(spec: SceneSpec) -> np.ndarray:
    """Integer id of the rectangle each pixel belongs to (row-major patch order)."""
    g_rows, g_cols = spec.grid_shape
    if g_rows < 1 or g_cols < 1:
        raise ConfigError(f"mosaic grid must be at least 1x1, got {spec.grid_shape}")
    row_id = np.minimum(np.arange(spec.rows) * g_rows // spec.rows, g_rows - 1)
    col_id = np.minimum(np.arange(spec.cols) * g_cols // spec.cols, g_cols - 1)
    return (row_id[:, None] * g_cols + col_id[None, :]).astype(np.int64)


def _render_mosaic(spec: SceneSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    regions = spec.grid_shape[0] * spec.grid_shape[1]
    # one constant spectrum per rectangle
    spectra = rng.uniform(0.0, spec.value_scale, size=(regions, spec.bands)).astype(np.float32)
    region = mosaic_region_map(spec)
    data = spectra[region]                     # (rows, cols, bands)
    return np.ascontiguousarray(np.moveaxis(data, -1, 0))


def _render_blobs(spec: SceneSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.blob_count
    if lo < 1 or hi < lo:
        raise ConfigError(f"blob count range must satisfy 1 <= lo <= hi, got {spec.blob_count}")
    n_blobs = int(rng.integers(lo, hi + 1))
    rr = np.arange(spec.rows, dtype=np.float64)[:, None]
    cc = np.arange(spec.cols, dtype=np.float64)[None, :]
    band_axis = np.arange(spec.bands, dtype=np.float64)
    cube = np.zeros((spec.bands, spec.rows, spec.cols), dtype=np.float64)
    for _ in range(n_blobs):
        cr = rng.uniform(0.0, spec.rows)
        cjc = rng.uniform(0.0, spec.cols)
        sig_r = rng.uniform(0.08, 0.25) * spec.rows
        sig_c = rng.uniform(0.08, 0.25) * spec.cols
        theta = rng.uniform(0.0, np.pi)
        amp = rng.uniform(0.3, 1.0) * spec.value_scale
        band_center = rng.uniform(0.0, spec.bands - 1) if spec.bands > 1 else 0.0
        band_width = rng.uniform(spec.bands / 6.0, spec.bands / 2.0) if spec.bands > 1 else 1.0
        # rotated anisotropic Gaussian bump
        dr, dc = rr - cr, cc - cjc
        u = dr * np.cos(theta) + dc * np.sin(theta)
        v = -dr * np.sin(theta) + dc * np.cos(theta)
        bump = np.exp(-0.5 * ((u / sig_r) ** 2 + (v / sig_c) ** 2))
        profile = np.exp(-0.5 * ((band_axis - band_center) / band_width) ** 2)
        cube += amp * profile[:, None, None] * bump[None, :, :]
    return np.clip(cube, 0.0, spec.value_scale).astype(np.float32)
