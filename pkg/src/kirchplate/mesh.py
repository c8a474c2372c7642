"""Uniform rectangular mesh, node classification and ghost-padded storage.

The plate occupies ``[0, Lx] x [0, Ly]``.  Node ``(i, j)`` sits at
``(i*dx, j*dy)``.  The column ``i = 0`` is the clamped edge; the other three
edges are free.  Clamped nodes carry ``w = 0`` and are not unknowns, so the
unknown count is ``N = (Nx - 1) * Ny``.  Unknowns are ordered row-major with
``j`` outer and ``i`` inner.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

#: Width of the ghost margin on every side of an :class:`ExtendedField`.
MARGIN = 2


class GhostFillError(RuntimeError):
    """Raised when ghost values are read before a fill pass defined them."""


class NodeClass(enum.Enum):
    CLAMPED = "clamped"
    FREE_BOUNDARY = "free_boundary"
    INTERIOR = "interior"
    GHOST = "ghost"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, Lx] x [0, Ly]`` with ``Nx x Ny`` nodes."""

    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if int(self.Nx) != self.Nx or int(self.Ny) != self.Ny:
            raise ValueError("Nx and Ny must be integers")
        if self.Nx < 5 or self.Ny < 5:
            raise ValueError(f"Nx and Ny must be >= 5, got Nx={self.Nx}, Ny={self.Ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"Lx and Ly must be positive, got Lx={self.Lx}, Ly={self.Ly}")

    @property
    def dx(self) -> float:
        return self.Lx / (self.Nx - 1)

    @property
    def dy(self) -> float:
        return self.Ly / (self.Ny - 1)

    @property
    def n_unknowns(self) -> int:
        return (self.Nx - 1) * self.Ny

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * self.dy

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as ``(Nx, Ny)`` arrays indexed ``[i, j]``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def unknown_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the unknown nodes in solver order."""
        X, Y = self.meshgrid()
        return to_unknowns(self, X), to_unknowns(self, Y)


def classify(grid: GridSpec, i: int, j: int) -> NodeClass:
    if not (0 <= i < grid.Nx and 0 <= j < grid.Ny):
        return NodeClass.GHOST
    if i == 0:
        return NodeClass.CLAMPED
    if i == grid.Nx - 1 or j == 0 or j == grid.Ny - 1:
        return NodeClass.FREE_BOUNDARY
    return NodeClass.INTERIOR


def flatten(grid: GridSpec, i: int, j: int) -> int:
    """Linear index of unknown node ``(i, j)``."""
    cls = classify(grid, i, j)
    if cls in (NodeClass.CLAMPED, NodeClass.GHOST):
        raise ValueError(f"node ({i}, {j}) is {cls.value}, not an unknown")
    return j * (grid.Nx - 1) + (i - 1)


def unflatten(grid: GridSpec, k: int) -> tuple[int, int]:
    if not 0 <= k < grid.n_unknowns:
        raise ValueError(f"linear index {k} outside [0, {grid.n_unknowns})")
    j, r = divmod(k, grid.Nx - 1)
    return r + 1, j


def to_unknowns(grid: GridSpec, nodal: np.ndarray) -> np.ndarray:
    """Extract unknowns from an ``(Nx, Ny, ...)`` nodal array.

    Trailing axes are carried along, so the result has shape ``(N, ...)``.
    """
    sub = nodal[1:, :]
    # row-major with j outer: transpose to (Ny, Nx-1, ...) then ravel
    sub = np.swapaxes(sub, 0, 1)
    return sub.reshape((grid.n_unknowns,) + sub.shape[2:])


def from_unknowns(grid: GridSpec, vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_unknowns`; clamped column is zero."""
    vec = np.asarray(vec)
    rest = vec.shape[1:]
    out = np.zeros((grid.Nx, grid.Ny) + rest, dtype=vec.dtype)
    out[1:, :] = np.swapaxes(vec.reshape((grid.Ny, grid.Nx - 1) + rest), 0, 1)
    return out


@dataclass(eq=False)
class ExtendedField:
    """Nodal values plus a 2-deep ghost margin.

    ``values[i + 2, j + 2]`` holds node ``(i, j)``; indices run over
    ``[-2, Nx + 1] x [-2, Ny + 1]``.  Extra trailing axes (``batch``) let one
    field carry several independent states, which the fills and stencils
    handle elementwise.

    The margin starts as NaN and ``filled`` is False until a ghost fill
    completes.  Writing new interior values through :meth:`set_interior`
    or :meth:`set_unknowns` marks the ghosts stale again.
    """

    grid: GridSpec
    batch: tuple[int, ...] = ()
    values: np.ndarray = field(init=False, repr=False)
    filled: bool = field(init=False, default=False)

    def __post_init__(self):
        g = self.grid
        self.batch = tuple(self.batch)
        self.values = np.full((g.Nx + 2 * MARGIN, g.Ny + 2 * MARGIN) + self.batch, np.nan)
        self.values[MARGIN:-MARGIN, MARGIN:-MARGIN] = 0.0

    @classmethod
    def from_interior(cls, grid: GridSpec, nodal: np.ndarray) -> "ExtendedField":
        nodal = np.asarray(nodal, dtype=float)
        f = cls(grid, nodal.shape[2:])
        f.set_interior(nodal)
        return f

    @classmethod
    def from_unknowns(cls, grid: GridSpec, vec: np.ndarray) -> "ExtendedField":
        return cls.from_interior(grid, from_unknowns(grid, vec))

    @property
    def interior(self) -> np.ndarray:
        """Read-only view of the ``(Nx, Ny, ...)`` nodal values."""
        view = self.values[MARGIN:-MARGIN, MARGIN:-MARGIN]
        view.flags.writeable = False
        return view

    def set_interior(self, nodal: np.ndarray) -> None:
        self.values[MARGIN:-MARGIN, MARGIN:-MARGIN] = nodal
        self.invalidate()

    def set_unknowns(self, vec: np.ndarray) -> None:
        self.set_interior(from_unknowns(self.grid, vec))

    def unknowns(self) -> np.ndarray:
        return to_unknowns(self.grid, self.values[MARGIN:-MARGIN, MARGIN:-MARGIN])

    def at(self, i: int, j: int):
        """Value at node ``(i, j)``; ghost indices are allowed."""
        return self.values[i + MARGIN, j + MARGIN]

    def invalidate(self) -> None:
        self.values[:MARGIN] = np.nan
        self.values[-MARGIN:] = np.nan
        self.values[:, :MARGIN] = np.nan
        self.values[:, -MARGIN:] = np.nan
        self.filled = False

    def require_filled(self) -> None:
        if not self.filled:
            raise GhostFillError("ghost values read before a fill pass")

    def copy(self) -> "ExtendedField":
        out = ExtendedField(self.grid, self.batch)
        out.values[...] = self.values
        out.filled = self.filled
        return out
