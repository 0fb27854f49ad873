"""Uniform mesh on the unit square and interior-node index bookkeeping.

Interior unknowns are numbered row-major: linear = (k-1)*(N-1) + (j-1) for a
node at column j, row k with 1 <= j,k <= N-1.  The matrix export, audit, and
solution layout all rely on this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError

__all__ = ["Grid", "NodeIndex", "build_grid", "ball_nodes"]


@dataclass(frozen=True)
class NodeIndex:
    """Lattice coordinates of a mesh node; ``linear`` is None on the boundary."""

    j: int
    k: int
    linear: int | None


@dataclass(frozen=True)
class Grid:
    """Uniform (N+1) x (N+1) node lattice on [0,1]^2 with spacing h = 1/N."""

    n: int
    h: float

    @property
    def interior_count(self) -> int:
        return (self.n - 1) ** 2

    def x(self, j: int) -> float:
        return j / self.n

    def y(self, k: int) -> float:
        return k / self.n

    def is_interior(self, j: int, k: int) -> bool:
        return 1 <= j <= self.n - 1 and 1 <= k <= self.n - 1

    def is_node(self, j: int, k: int) -> bool:
        return 0 <= j <= self.n and 0 <= k <= self.n

    def node(self, j: int, k: int) -> NodeIndex:
        if not self.is_node(j, k):
            raise GridError(f"({j}, {k}) is not a node of an N={self.n} grid")
        linear = self.linear_index(j, k) if self.is_interior(j, k) else None
        return NodeIndex(j, k, linear)

    def linear_index(self, j: int, k: int) -> int:
        if not self.is_interior(j, k):
            raise GridError(f"({j}, {k}) is not interior; boundary nodes carry no unknown")
        return (k - 1) * (self.n - 1) + (j - 1)

    def node_from_linear(self, linear: int) -> NodeIndex:
        if not 0 <= linear < self.interior_count:
            raise GridError(f"linear index {linear} out of range for N={self.n}")
        k, j = divmod(linear, self.n - 1)
        return NodeIndex(j + 1, k + 1, linear)

    def interior_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened x and y coordinates of interior nodes in linear order."""
        side = np.arange(1, self.n) / self.n
        X, Y = np.meshgrid(side, side)  # rows vary k, columns vary j
        return X.ravel(), Y.ravel()

    def boundary_nodes(self) -> list[NodeIndex]:
        out = []
        for j in range(self.n + 1):
            for k in range(self.n + 1):
                if j in (0, self.n) or k in (0, self.n):
                    out.append(NodeIndex(j, k, None))
        return out


def build_grid(n: int) -> Grid:
    """Build the uniform grid with ``n`` intervals per side (h = 1/n)."""
    if int(n) != n or n < 2:
        raise GridError(f"grid needs at least 2 intervals per side, got {n!r}")
    return Grid(int(n), 1.0 / int(n))


def ball_nodes(grid: Grid, center, radius: float) -> list[tuple[float, float]]:
    """Grid nodes (boundary included) strictly inside the open ball.

    ``center`` is a NodeIndex or a (j, k) pair.  The strict inequality matches
    the open-ball neighborhoods used by the planner.
    """
    if radius <= 0:
        raise GridError("ball radius must be positive")
    cj, ck = (center.j, center.k) if isinstance(center, NodeIndex) else center
    x0, y0 = cj / grid.n, ck / grid.n
    side = np.arange(grid.n + 1) / grid.n
    X, Y = np.meshgrid(side, side)
    mask = (X - x0) ** 2 + (Y - y0) ** 2 < radius**2
    return [(float(x), float(y)) for x, y in zip(X[mask], Y[mask])]
