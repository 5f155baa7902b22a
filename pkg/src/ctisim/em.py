"""Iterative expectation-maximization reconstruction.

The multiplicative update

    f_next = (f / column_sums) * backproject(g / max(forward(f), eps))

keeps estimates nonnegative, leaves exact solutions fixed, and never
revives a voxel that has reached zero. Divisions are guarded by a small
epsilon because blank detector regions are common and legitimate.

One reconstruction is sequential across iterations; reconstructing many
frames is embarrassingly parallel over independent solver calls sharing
one read-only matrix.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .hypercube import HyperCube
from .optics import CtisImage
from .system_matrix import SparseSystemMatrix

INIT_MODES = ("backprojection", "ones")


@dataclass(frozen=True)
class EmConfig:
    iterations: int = 20
    init_mode: str = "backprojection"
    epsilon: float = 1e-12
    record_trajectory: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise DimensionError(f"iteration count must be >= 1, got {self.iterations}")
        if self.init_mode not in INIT_MODES:
            raise DimensionError(f"init mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class IterationStat:
    index: int
    loglik: float
    residual_l1: float
    ms: float


@dataclass(frozen=True)
class EmResult:
    estimate: HyperCube
    trajectory: list[IterationStat] | None = None
    warning: str | None = None


def _check_vector(name: str, vec, length: int) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    if arr.size != length:
        raise DimensionError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    if arr.min(initial=0.0) < 0.0:
        raise DomainError(f"{name} contains negative values")
    return arr


def em_step(H: SparseSystemMatrix, g, f_k, epsilon: float = 1e-12) -> np.ndarray:
    """One combined expectation/maximization update of the cube estimate."""
    g = _check_vector("detector vector", g, H.n_detector_pixels)
    f = _check_vector("cube estimate", f_k, H.n_voxels)
    ratio = g / np.maximum(H.matvec(f), epsilon)
    correction = H.rmatvec(ratio)
    return f / np.maximum(H.column_sums(), epsilon) * correction


def poisson_loglik(g, g_hat, epsilon: float = 1e-12) -> float:
    """Poisson log-likelihood of observing g given expected g_hat.

    Computed as ``sum(g * log(max(g_hat, eps)) - g_hat)`` with an exactly
    rounded final sum, so per-iteration differences near convergence are
    dominated by the estimates rather than by accumulation order.
    """
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    g_hat = np.asarray(g_hat, dtype=np.float64).reshape(-1)
    if g.size != g_hat.size:
        raise DimensionError(f"length mismatch: {g.size} vs {g_hat.size}")
    if g.min(initial=0.0) < 0.0 or g_hat.min(initial=0.0) < 0.0:
        raise DomainError("log-likelihood requires nonnegative inputs")
    terms = g * np.log(np.maximum(g_hat, epsilon)) - g_hat
    return math.fsum(terms.tolist())


def reconstruct(H: SparseSystemMatrix, image: CtisImage, config: EmConfig = EmConfig()) -> EmResult:
    """Run the iterative solver on one detector frame.

    The initial estimate is either the back-projection of the frame
    (default) or all ones. The returned estimate is devectorized into a
    cube; an optional per-iteration trajectory records the likelihood, the
    L1 detector residual, and the update's wall time in milliseconds.
    """
    if image.geometry != H.geometry:
        raise DimensionError("detector image geometry does not match the system matrix")
    g = image.data.reshape(-1).astype(np.float64)
    warning = None
    if config.init_mode == "backprojection":
        f = H.rmatvec(g)
        if not g.any():
            warning = "all-zero detector image with back-projection init: estimate is zero"
    else:
        f = np.ones(H.n_voxels, dtype=np.float64)

    trajectory: list[IterationStat] | None = [] if config.record_trajectory else None
    for k in range(1, config.iterations + 1):
        t0 = time.perf_counter()
        f = em_step(H, g, f, config.epsilon)
        ms = (time.perf_counter() - t0) * 1e3
        if trajectory is not None:
            g_hat = H.matvec(f)
            trajectory.append(IterationStat(
                index=k,
                loglik=poisson_loglik(g, g_hat, config.epsilon),
                residual_l1=float(np.abs(g - g_hat).sum()),
                ms=ms,
            ))

    side = H.geometry.cube_side
    estimate = HyperCube.from_vector(
        f.astype(np.float32), H.geometry.bands, side, side
    )
    return EmResult(estimate=estimate, trajectory=trajectory, warning=warning)
