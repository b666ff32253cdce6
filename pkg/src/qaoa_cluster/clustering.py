"""Maxcut bi-clustering of point clouds and of box-shaped distributions.

Point data become a complete graph weighted by Euclidean distance, so the
maximum cut separates far-apart points. Box data become an overlap graph
weighted by the Bhattacharyya coefficient; there the maximum cut puts
*overlapping* distributions on opposite sides, i.e. each cluster collects
distributions with as little mutual overlap as possible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graphs import WeightedGraph, brute_force_maxcut

GRID_RESOLUTION = 200
NORMALIZATION_TOL = 1e-6


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class BoxDistribution:
    """Uniform density on an axis-aligned rectangle."""

    center: tuple[float, float]
    size: tuple[float, float]

    def __post_init__(self):
        if len(self.center) != 2 or len(self.size) != 2:
            raise DatasetError("boxes live in the plane: center and size need 2 entries")
        if min(self.size) <= 0:
            raise DatasetError(f"box size must be positive, got {self.size}")

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center, float) - np.asarray(self.size, float) / 2

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center, float) + np.asarray(self.size, float) / 2

    @property
    def area(self) -> float:
        return float(self.size[0] * self.size[1])

    def pdf(self, x, y) -> np.ndarray:
        lo, hi = self.lower, self.upper
        inside = (x >= lo[0]) & (x <= hi[0]) & (y >= lo[1]) & (y <= hi[1])
        return np.where(inside, 1.0 / self.area, 0.0)

    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.lower, self.upper
        return np.array([lo[0], hi[0]]), np.array([lo[1], hi[1]])


@dataclass(frozen=True)
class Dataset:
    kind: str  # "points" or "boxes"
    points: np.ndarray | None = None
    boxes: tuple[BoxDistribution, ...] = ()

    def __post_init__(self):
        if self.kind == "points":
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or len(pts) < 2:
                raise DatasetError("need at least two points of a common dimension")
            if not np.all(np.isfinite(pts)):
                raise DatasetError("points must be finite")
            object.__setattr__(self, "points", pts)
        elif self.kind == "boxes":
            if len(self.boxes) < 2:
                raise DatasetError("need at least two distributions")
        else:
            raise DatasetError(f"unknown dataset kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.points) if self.kind == "points" else len(self.boxes)

    @classmethod
    def from_points(cls, points) -> "Dataset":
        return cls("points", points=np.asarray(points, dtype=float))

    @classmethod
    def from_boxes(cls, boxes: Sequence[BoxDistribution]) -> "Dataset":
        return cls("boxes", boxes=tuple(boxes))

    @classmethod
    def from_json(cls, data: dict) -> "Dataset":
        kind = data.get("kind") if isinstance(data, dict) else None
        if kind == "points":
            try:
                return cls.from_points(data["data"])
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"bad point data: {exc}") from None
        if kind == "boxes":
            try:
                boxes = [
                    BoxDistribution(tuple(map(float, b["center"])), tuple(map(float, b["size"])))
                    for b in data["data"]
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"bad box data: {exc}") from None
            return cls.from_boxes(boxes)
        raise DatasetError("dataset JSON needs kind 'points' or 'boxes'")

    def to_json(self) -> dict:
        if self.kind == "points":
            return {"kind": "points", "data": self.points.tolist()}
        return {
            "kind": "boxes",
            "data": [{"center": list(b.center), "size": list(b.size)} for b in self.boxes],
        }


def load_dataset(path: str | Path) -> Dataset:
    with open(path) as fh:
        return Dataset.from_json(json.load(fh))


def euclidean_distance_matrix(d: Dataset) -> WeightedGraph:
    """Complete graph with ``w_ij = |x_i - x_j|``; coincident points get no edge."""
    if d.kind != "points":
        raise DatasetError("euclidean distances need point data")
    pts = d.points
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    n = len(pts)
    return WeightedGraph(n, [(i, j, dist[i, j]) for i in range(n) for j in range(i + 1, n)])


def _grid(p: BoxDistribution, q: BoxDistribution, resolution: int):
    lo = np.minimum(p.lower, q.lower)
    hi = np.maximum(p.upper, q.upper)
    axes = []
    for ax in range(2):
        # regular grid plus every support edge, so no cell straddles a box boundary
        pts = [np.linspace(lo[ax], hi[ax], resolution + 1)]
        pts += [p.breakpoints()[ax], q.breakpoints()[ax]]
        axes.append(np.unique(np.concatenate(pts)))
    return axes


def _integrate(f, axes) -> float:
    xb, yb = axes
    xm, ym = (xb[1:] + xb[:-1]) / 2, (yb[1:] + yb[:-1]) / 2
    dx, dy = np.diff(xb), np.diff(yb)
    X, Y = np.meshgrid(xm, ym, indexing="ij")
    return float(np.sum(f(X, Y) * dx[:, None] * dy[None, :]))


def bhattacharyya_coefficient(
    p: BoxDistribution, q: BoxDistribution, resolution: int = GRID_RESOLUTION
) -> float:
    """``integral sqrt(p q)`` by the midpoint rule on the union bounding box."""
    axes = _grid(p, q, resolution)
    for dist in (p, q):
        mass = _integrate(dist.pdf, axes)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise DatasetError(f"distribution integrates to {mass}, not 1")
    if np.any(np.maximum(p.lower, q.lower) >= np.minimum(p.upper, q.upper)):
        return 0.0
    return _integrate(lambda x, y: np.sqrt(p.pdf(x, y) * q.pdf(x, y)), axes)


def overlap_graph(d: Dataset, tol: float = 1e-9) -> WeightedGraph:
    if d.kind != "boxes":
        raise DatasetError("overlap graphs need distribution data")
    n = len(d.boxes)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            b = bhattacharyya_coefficient(d.boxes[i], d.boxes[j])
            if b > tol:
                edges.append((i, j, b))
    return WeightedGraph(n, edges)


def dataset_graph(d: Dataset) -> WeightedGraph:
    return euclidean_distance_matrix(d) if d.kind == "points" else overlap_graph(d)


def boxes_19q(width: float = 0.8, height: float = 1.2) -> Dataset:
    """Nineteen boxes whose overlap graph is the 19-qubit coupling graph.

    Four staggered rows, one per block of physical qubits (0-4, 5-9, 10-14,
    15-19), with qubit 3 left out. Adjacent rows overlap vertically;
    within a row neighbours are a unit apart and do not touch.
    """
    if not 0.5 < width < 1.0 or not 1.0 < height < 2.0:
        raise DatasetError("width must lie in (0.5, 1) and height in (1, 2)")
    x_offset = (0.5, 0.0, 0.0, -0.5)
    boxes = []
    for q in range(20):
        if q == 3:
            continue
        row, col = divmod(q, 5)
        boxes.append(BoxDistribution((col + x_offset[row], 3.0 - row), (width, height)))
    return Dataset.from_boxes(boxes)


@dataclass(frozen=True)
class LabelAssignment:
    labels: tuple[int, ...]
    cut: float

    def to_json(self) -> dict:
        return {"labels": list(self.labels)}


def labels_match(a: Sequence[int], b: Sequence[int]) -> bool:
    """Equal up to swapping the two cluster names."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.array_equal(a, b) or np.array_equal(a, 1 - b))


def bicluster(d: Dataset, solver: str = "brute_force", run_config=None, seed: int = 0) -> LabelAssignment:
    """Two-way clustering by Maxcut on the dataset graph.

    ``solver="qaoa"`` runs one Bayesian-optimized QAOA solve configured by
    ``run_config`` (an :class:`~qaoa_cluster.experiment.SolveConfig`) and
    takes the best bit string sampled anywhere along the trace.
    """
    g = dataset_graph(d)
    if solver == "brute_force":
        bits, cut = brute_force_maxcut(g)
        return LabelAssignment(tuple(bits), cut)
    if solver == "qaoa":
        from .experiment import SolveConfig, solve_maxcut

        result = solve_maxcut(g, run_config or SolveConfig(), seed)
        return LabelAssignment(result.best_bitstring, result.best_cost)
    raise ValueError(f"unknown solver {solver!r}")
