"""Reconstruction scoring: mean squared and mean absolute error.

Errors pool over voxels, not over samples, so cubes of unequal size still
average correctly; for equal-size samples the two weightings coincide.
Batch scoring is streaming and keeps per-category partial sums, which are
associative and may be merged from concurrent producers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .hypercube import HyperCube


def _residuals(truth: HyperCube, pred: HyperCube) -> np.ndarray:
    if truth.data.shape != pred.data.shape:
        raise DimensionError(
            f"shape mismatch: truth {truth.data.shape} vs prediction {pred.data.shape}"
        )
    return truth.data.astype(np.float64) - pred.data.astype(np.float64)


def mse(truth: HyperCube, pred: HyperCube) -> float:
    """Mean of squared voxel residuals."""
    diff = _residuals(truth, pred)
    return float(np.mean(diff * diff))


def mae(truth: HyperCube, pred: HyperCube) -> float:
    """Mean of absolute voxel residuals."""
    return float(np.mean(np.abs(_residuals(truth, pred))))


@dataclass(frozen=True)
class CategoryScore:
    mse: float
    mae: float
    count: int


@dataclass(frozen=True)
class ScoreReport:
    mse: float
    mae: float
    count: int
    per_category: dict[str, CategoryScore]

    def to_json_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mae": self.mae,
            "count": self.count,
            "per_category": {
                name: {"mse": s.mse, "mae": s.mae, "count": s.count}
                for name, s in self.per_category.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def format_table(self, title: str = "category") -> str:
        """Aligned text table with one row per category plus the pooled total."""
        rows = [(name, s.mse, s.mae, s.count) for name, s in sorted(self.per_category.items())]
        rows.append(("total", self.mse, self.mae, self.count))
        name_w = max(len(title), max(len(r[0]) for r in rows))
        lines = [f"{title:<{name_w}}  {'MSE':>12}  {'MAE':>12}  {'samples':>8}"]
        for name, m2, m1, n in rows:
            lines.append(f"{name:<{name_w}}  {m2:>12.6g}  {m1:>12.6g}  {n:>8d}")
        return "\n".join(lines)


class ScoreAccumulator:
    """Streaming accumulator of squared/absolute residual sums per category."""

    def __init__(self):
        self._sq: dict[str, float] = {}
        self._ab: dict[str, float] = {}
        self._voxels: dict[str, int] = {}
        self._samples: dict[str, int] = {}

    def add(self, truth: HyperCube, pred: HyperCube, category: str) -> None:
        diff = _residuals(truth, pred)
        self._sq[category] = self._sq.get(category, 0.0) + float(np.sum(diff * diff))
        self._ab[category] = self._ab.get(category, 0.0) + float(np.sum(np.abs(diff)))
        self._voxels[category] = self._voxels.get(category, 0) + diff.size
        self._samples[category] = self._samples.get(category, 0) + 1

    def merge(self, other: "ScoreAccumulator") -> None:
        for cat in other._samples:
            self._sq[cat] = self._sq.get(cat, 0.0) + other._sq[cat]
            self._ab[cat] = self._ab.get(cat, 0.0) + other._ab[cat]
            self._voxels[cat] = self._voxels.get(cat, 0) + other._voxels[cat]
            self._samples[cat] = self._samples.get(cat, 0) + other._samples[cat]

    def finalize(self) -> ScoreReport:
        if not self._samples:
            raise DomainError("cannot score an empty batch")
        per_category = {
            cat: CategoryScore(
                mse=self._sq[cat] / self._voxels[cat],
                mae=self._ab[cat] / self._voxels[cat],
                count=self._samples[cat],
            )
            for cat in self._samples
        }
        total_voxels = sum(self._voxels.values())
        return ScoreReport(
            mse=sum(self._sq.values()) / total_voxels,
            mae=sum(self._ab.values()) / total_voxels,
            count=sum(self._samples.values()),
            per_category=per_category,
        )


def score_batch(pairs) -> ScoreReport:
    """Score an iterable of (truth, prediction, category) triples."""
    acc = ScoreAccumulator()
    for truth, pred, category in pairs:
        acc.add(truth, pred, category)
    return acc.finalize()
