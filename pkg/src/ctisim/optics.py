"""The CTIS forward model.

A snapshot spectrometer projects a cube into a single square detector frame:
an undiffracted zeroth-order image at the center, and four first-order
diffraction lobes above, below, left, and right of it. Inside each lobe the
bands are displaced outward by a per-band shift, so the lobe is a smeared
superposition of all spectral planes.

Canvas layout, for cube side ``x``, shifts ``s_1 < ... < s_b`` with maximum
``S``:

    block_side  = x + 2*S           side of one diffraction-order block
    canvas_side = x + 2*block_side  (= 3x + 4S)

The zeroth order occupies the central ``x`` x ``x`` square, which starts at
offset ``block_side`` on both axes. Band ``i`` of the top lobe is the zeroth
order image displaced upward by ``x + S + s_i`` pixels; the other lobes are
symmetric. With that placement the outermost band just touches the canvas
edge and the four corner blocks stay identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from .errors import DimensionError, DomainError, FormatError
from .hypercube import HyperCube, read_cube, write_cube

WEIGHT_MODES = ("unit", "averaged")

BLOCK_ORDER = ("top", "left", "center", "right", "bottom")


def default_shifts(bands: int) -> tuple[int, ...]:
    """Standard per-band shift table.

    Odd steps 1, 3, ..., 2b-1, except the 25-band configuration which uses
    even steps 2, 4, ..., 50.
    """
    if bands < 1:
        raise DimensionError(f"band count must be >= 1, got {bands}")
    if bands == 25:
        return tuple(range(2, 51, 2))
    return tuple(range(1, 2 * bands, 2))


@dataclass(frozen=True)
class ShiftGeometry:
    """Detector geometry implied by a cube side and a per-band shift table."""

    cube_side: int
    shifts: tuple[int, ...]
    weight_mode: str = "unit"

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(int(s) for s in self.shifts))
        if self.cube_side < 1:
            raise DimensionError(f"cube side must be >= 1, got {self.cube_side}")
        if len(self.shifts) < 1:
            raise DimensionError("shift table must not be empty")
        if self.shifts[0] < 1 or any(b <= a for a, b in zip(self.shifts, self.shifts[1:])):
            raise DimensionError(
                f"shifts must be strictly ascending and >= 1, got {self.shifts}"
            )
        if self.weight_mode not in WEIGHT_MODES:
            raise DimensionError(
                f"weight mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}"
            )

    @classmethod
    def for_bands(cls, cube_side: int, bands: int, weight_mode: str = "unit") -> "ShiftGeometry":
        return cls(cube_side, default_shifts(bands), weight_mode)

    @property
    def bands(self) -> int:
        return len(self.shifts)

    @property
    def max_shift(self) -> int:
        return self.shifts[-1]

    @property
    def block_side(self) -> int:
        return self.cube_side + 2 * self.max_shift

    @property
    def canvas_side(self) -> int:
        return self.cube_side + 2 * self.block_side

    @property
    def block_origin(self) -> int:
        """Offset of the centered block on both canvas axes."""
        return (self.canvas_side - self.block_side) // 2

    @property
    def order_weight(self) -> float:
        """Contribution of one voxel to one diffraction order."""
        return 1.0 if self.weight_mode == "unit" else 1.0 / self.bands

    def to_dict(self) -> dict:
        return {
            "cube_side": self.cube_side,
            "shifts": list(self.shifts),
            "weight_mode": self.weight_mode,
            "block_side": self.block_side,
            "canvas_side": self.canvas_side,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShiftGeometry":
        geom = cls(int(d["cube_side"]), tuple(d["shifts"]), d.get("weight_mode", "unit"))
        for key in ("block_side", "canvas_side"):
            if key in d and int(d[key]) != getattr(geom, key):
                raise FormatError(
                    f"geometry metadata inconsistent: {key}={d[key]} but derived {getattr(geom, key)}"
                )
        return geom


def _check_corners_zero(data: np.ndarray, block: int) -> None:
    q = data.shape[0]
    for rs in (slice(0, block), slice(q - block, q)):
        for cs in (slice(0, block), slice(q - block, q)):
            if np.any(data[rs, cs]):
                raise DomainError("detector image has nonzero corner blocks")


@dataclass(frozen=True, eq=False)
class CtisImage:
    """Square detector frame plus the geometry that produced it."""

    data: np.ndarray
    geometry: ShiftGeometry

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        q = self.geometry.canvas_side
        if arr.shape != (q, q):
            raise DimensionError(f"detector image must be {q}x{q}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("detector image contains non-finite values")
        if arr.min(initial=0.0) < 0.0:
            raise DomainError("detector image contains negative values")
        _check_corners_zero(arr, self.geometry.block_side)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def side(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class BlockSet:
    """The five per-order sub-images of a detector frame.

    ``blocks`` is shaped (5, block_side, block_side) in the order
    top, left, center, right, bottom.
    """

    blocks: np.ndarray
    geometry: ShiftGeometry

    def __post_init__(self):
        arr = np.ascontiguousarray(self.blocks, dtype=np.float32)
        side = self.geometry.block_side
        if arr.shape != (5, side, side):
            raise DimensionError(f"block stack must be (5, {side}, {side}), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "blocks", arr)

    def __getattr__(self, name):
        if name in BLOCK_ORDER:
            return self.blocks[BLOCK_ORDER.index(name)]
        raise AttributeError(name)


def _order_slices(geom: ShiftGeometry, band: int):
    """Canvas (rows, cols) slices of one band's five projections."""
    x = geom.cube_side
    s_max = geom.max_shift
    z0 = geom.block_side               # zeroth-order origin on both axes
    s = geom.shifts[band]
    center = slice(z0, z0 + x)
    near = slice(s_max - s, s_max - s + x)                 # toward the low edge
    far = slice(z0 + x + s_max + s, z0 + 2 * x + s_max + s)  # toward the high edge
    return {
        "center": (center, center),
        "top": (near, center),
        "bottom": (far, center),
        "left": (center, near),
        "right": (center, far),
    }


def simulate(cube: HyperCube, geom: ShiftGeometry) -> CtisImage:
    """Project a square cube into a detector frame.

    Every voxel lands once in each of the five diffraction orders; the
    per-order weight is 1 in ``unit`` mode and 1/bands in ``averaged`` mode
    (so the zeroth order reads as the mean over bands).
    """
    if cube.rows != cube.cols:
        raise DimensionError(
            f"forward model requires a square cube, got {cube.rows}x{cube.cols}"
        )
    if cube.rows != geom.cube_side or cube.bands != geom.bands:
        raise DimensionError(
            f"cube {cube.rows}x{cube.cols}x{cube.bands} does not match geometry "
            f"side {geom.cube_side} with {geom.bands} bands"
        )
    q = geom.canvas_side
    w = geom.order_weight
    canvas = np.zeros((q, q), dtype=np.float64)
    for band in range(geom.bands):
        plane = cube.data[band].astype(np.float64) * w
        for rows, cols in _order_slices(geom, band).values():
            canvas[rows, cols] += plane
    return CtisImage(canvas.astype(np.float32), geom)


def extract_blocks(img: CtisImage) -> BlockSet:
    """Cut the five diffraction-order blocks out of a detector frame.

    The center block is the central block_side square (zeroth order plus its
    margin); the four outer blocks hug the canvas edges and are centered on
    the other axis.
    """
    geom = img.geometry
    b = geom.block_side
    m = geom.block_origin
    q = geom.canvas_side
    d = img.data
    stack = np.stack([
        d[0:b, m:m + b],        # top
        d[m:m + b, 0:b],        # left
        d[m:m + b, m:m + b],    # center
        d[m:m + b, q - b:q],    # right
        d[q - b:q, m:m + b],    # bottom
    ])
    return BlockSet(stack.copy(), geom)


def assemble_blocks(blocks: BlockSet) -> CtisImage:
    """Paste a block set back onto a blank canvas.

    For block sets produced by :func:`extract_blocks` this reproduces the
    original frame exactly (block overlaps only ever cover zero pixels).
    """
    geom = blocks.geometry
    b = geom.block_side
    m = geom.block_origin
    q = geom.canvas_side
    canvas = np.zeros((q, q), dtype=np.float32)
    canvas[0:b, m:m + b] = blocks.top
    canvas[m:m + b, 0:b] = blocks.left
    canvas[m:m + b, m:m + b] = blocks.center
    canvas[m:m + b, q - b:q] = blocks.right
    canvas[q - b:q, m:m + b] = blocks.bottom
    return CtisImage(canvas, geom)


def vectorize(img: CtisImage) -> np.ndarray:
    """Detector frame as a flat row-major vector of length canvas_side**2."""
    return img.data.reshape(-1).copy()


def devectorize(flat, geom: ShiftGeometry) -> CtisImage:
    q = geom.canvas_side
    flat = np.asarray(flat)
    if flat.size != q * q:
        raise DimensionError(f"vector length {flat.size} != canvas size {q * q}")
    return CtisImage(flat.reshape(q, q), geom)


def image_sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_image(img: CtisImage, path) -> None:
    """Store a detector frame as a single-band HSC1 file plus a JSON sidecar.

    The sidecar carries the shift table and weight mode needed to rebuild
    the geometry on read.
    """
    q = img.geometry.canvas_side
    write_cube(HyperCube(img.data.reshape(1, q, q)), path)
    meta = {"format": "ctisim-image", "version": 1, "geometry": img.geometry.to_dict()}
    image_sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_image(path) -> CtisImage:
    sidecar = image_sidecar_path(path)
    if not sidecar.exists():
        raise FormatError(f"missing geometry sidecar {sidecar}")
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable geometry sidecar {sidecar}: {exc}") from exc
    if meta.get("format") != "ctisim-image":
        raise FormatError(f"sidecar {sidecar} is not detector-image metadata")
    geom = ShiftGeometry.from_dict(meta["geometry"])
    frame = read_cube(path)
    if frame.bands != 1 or frame.rows != frame.cols:
        raise FormatError(
            f"detector file must hold one square band, got {frame.bands}x{frame.rows}x{frame.cols}"
        )
    if frame.rows != geom.canvas_side:
        raise FormatError(
            f"frame side {frame.rows} does not match sidecar canvas {geom.canvas_side}"
        )
    return CtisImage(frame.data[0], geom)
