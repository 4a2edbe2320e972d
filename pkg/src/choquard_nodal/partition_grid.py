"""Annular partitions of the radial half-line and the composite grids built on them.

A partition ``0 < r_1 < ... < r_k`` splits ``[0, inf)`` into a ball, ``k - 1``
shells and an exterior region.  The exterior is truncated at ``r_infty`` where
a homogeneous Dirichlet condition is imposed.  Each region is subdivided
uniformly so that every radius ``r_i`` is a grid node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import NonFiniteRadius, NonIncreasingRadii, TruncationTooSmall

__all__ = ["AnnularPartition", "RadialGrid", "make_partition", "build_grid"]


@dataclass(frozen=True)
class AnnularPartition:
    """Ordered interface radii ``r_1 < ... < r_k``; ``k = len(radii)``."""

    radii: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return len(self.radii)

    def bounds(self, r_infty: float = math.inf) -> list[tuple[float, float]]:
        """(inner, outer) radius of every region, 1-based region ``i`` at index ``i - 1``."""
        edges = (0.0, *self.radii, r_infty)
        return list(zip(edges[:-1], edges[1:]))

    def widths(self) -> np.ndarray:
        """Widths of the bounded regions ``r_i - r_{i-1}``, ``i = 1..k``."""
        return np.diff(np.concatenate(([0.0], self.radii)))

    def key(self) -> tuple[float, ...]:
        """Hashable cache key: radii rounded to 12 significant digits."""
        return tuple(float(f"{r:.12g}") for r in self.radii)


def make_partition(radii: Iterable[float]) -> AnnularPartition:
    values = tuple(float(r) for r in radii)
    for r in values:
        if not math.isfinite(r):
            raise NonFiniteRadius(f"radius {r!r} is not finite")
    prev = 0.0
    for i, r in enumerate(values, start=1):
        if r <= prev:
            raise NonIncreasingRadii(f"r_{i} = {r!r} is not greater than {prev!r}")
        prev = r
    return AnnularPartition(values)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite radial grid.

    Attributes
    ----------
    nodes : ndarray
        Strictly increasing, ``nodes[0] = 0`` and ``nodes[-1] = r_infty``.
    weights : ndarray
        Trapezoidal weights for the measure ``t**2 dt``.
    annulus_of : ndarray of int
        Region index (1-based) of each node; ``0`` at the interface nodes
        ``r_1..r_k``.  The origin belongs to region 1 and ``r_infty`` to
        region ``k + 1``.
    partition : AnnularPartition
    points_per_annulus : int
    r_infty : float
    """

    nodes: np.ndarray
    weights: np.ndarray
    annulus_of: np.ndarray
    partition: AnnularPartition
    points_per_annulus: int
    r_infty: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_regions(self) -> int:
        return self.partition.k + 1

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def line_weights(self) -> np.ndarray:
        """Trapezoidal weights for plain ``dt``."""
        h = self.spacing
        w = np.zeros_like(self.nodes)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        w.setflags(write=False)
        return w

    @cached_property
    def interface_nodes(self) -> np.ndarray:
        """Node index of each ``r_l``, ``l = 1..k``."""
        n = self.points_per_annulus
        return np.arange(1, self.partition.k + 1) * n

    def free_slice(self, i: int) -> slice:
        """Nodes carrying unknowns of component ``i`` (1-based).

        Interface nodes and ``r_infty`` are Dirichlet; the origin is free.
        """
        n = self.points_per_annulus
        lo = 0 if i == 1 else (i - 1) * n + 1
        return slice(lo, i * n)

    def region_slice(self, i: int) -> slice:
        """Closed node range ``[r_{i-1}, r_i]`` of region ``i``."""
        n = self.points_per_annulus
        return slice((i - 1) * n, i * n + 1)

    def region_spacing(self, i: int) -> float:
        lo, hi = self.partition.bounds(self.r_infty)[i - 1]
        return (hi - lo) / self.points_per_annulus


def build_grid(
    partition: AnnularPartition | Sequence[float],
    points_per_annulus: int,
    r_infty: float,
) -> RadialGrid:
    """Uniformly subdivide each region into ``points_per_annulus`` cells.

    The result has ``(k + 1) * points_per_annulus + 1`` nodes.
    """
    if not isinstance(partition, AnnularPartition):
        partition = make_partition(partition)
    n = int(points_per_annulus)
    if n < 4:
        raise ValueError(f"points_per_annulus must be >= 4, got {points_per_annulus}")
    r_infty = float(r_infty)
    r_k = partition.radii[-1] if partition.k else 0.0
    if not r_infty > r_k:
        raise TruncationTooSmall(f"r_infty = {r_infty!r} must exceed r_k = {r_k!r}")

    pieces = []
    for lo, hi in partition.bounds(r_infty):
        seg = np.linspace(lo, hi, n + 1)
        pieces.append(seg[:-1])
    nodes = np.concatenate(pieces + [np.array([r_infty])])
    # linspace endpoints are exact, so each r_i is stored bit-for-bit

    m = partition.k + 1
    annulus_of = np.repeat(np.arange(1, m + 1), n)
    annulus_of = np.concatenate((annulus_of, [m]))
    annulus_of[np.arange(1, m) * n] = 0

    h = np.diff(nodes)
    line = np.zeros_like(nodes)
    line[:-1] += 0.5 * h
    line[1:] += 0.5 * h
    weights = line * nodes**2

    for arr in (nodes, weights, annulus_of):
        arr.setflags(write=False)
    return RadialGrid(nodes, weights, annulus_of, partition, n, r_infty)
