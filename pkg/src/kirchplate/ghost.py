"""Ghost-node elimination of the clamped and free boundary conditions.

Every free-edge formula is written once for a canonical *north* edge and
applied to the other edges through array views:

* north: the array itself;
* south: the array with the ``j`` axis reversed.  Reflection flips the sign
  of odd ``y`` derivatives, so the shear datum enters with the opposite sign;
* east: the array with the ``i`` and ``j`` axes swapped (``dx <-> dy``).

The two free-free corners are handled the same way: the north-east corner is
canonical and the south-east corner is its reflection.

Boundary conditions on a free edge (outward direction ``y`` in the
canonical frame)::

    nu*w_xx + w_yy             = g      (bending moment)
    w_yyy + (2 - nu)*w_xxy     = h      (effective shear)

discretised with second-order central differences.  The first ghost row is
solved from the moment condition, the second from the shear condition, and
the seven ghosts around each free-free corner from a coupled 7x7 system.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .mesh import MARGIN, ExtendedField, GhostFillError, GridSpec

Load = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]

EDGES = ("N", "S", "E")
CORNERS = ("NE", "SE")

#: Corner ghost offsets relative to the corner node, canonical (NE) frame.
CORNER_UNKNOWNS = (
    ("E", (1, 0)),
    ("N", (0, 1)),
    ("NE", (1, 1)),
    ("EE", (2, 0)),
    ("NN", (0, 2)),
    ("NNW", (-1, 2)),
    ("SEE", (2, -1)),
)

MAX_CORNER_CONDITION = 1e12


@dataclass(frozen=True)
class BoundaryLoads:
    """Moment (``g_*``) and shear (``h_*``) data on the free edges.

    Each entry is a constant or a vectorised callable ``f(x, y)`` evaluated
    at the boundary nodes of its edge.
    """

    g_N: Load = 0.0
    g_S: Load = 0.0
    g_E: Load = 0.0
    h_N: Load = 0.0
    h_S: Load = 0.0
    h_E: Load = 0.0

    @property
    def is_zero(self) -> bool:
        return all(
            not callable(v) and float(v) == 0.0
            for v in (self.g_N, self.g_S, self.g_E, self.h_N, self.h_S, self.h_E)
        )

    def evaluate(self, kind: str, edge: str, x, y) -> np.ndarray:
        """Evaluate ``kind`` ('g' or 'h') on ``edge`` at points ``(x, y)``."""
        value = getattr(self, f"{kind}_{edge}")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if callable(value):
            out = np.asarray(value(x, y), dtype=float)
            return np.broadcast_to(out, shape).copy()
        return np.full(shape, float(value))


ZERO_LOADS = BoundaryLoads()


# -- canonical frames --------------------------------------------------------

@dataclass
class _Frame:
    a: np.ndarray  # view into ExtendedField.values
    dx: float  # spacing along the edge
    dy: float  # spacing normal to the edge
    J: int  # array index of the boundary row
    length: int  # nodes along the edge
    h_sign: float


def _frame(field: ExtendedField, edge: str) -> _Frame:
    g = field.grid
    v = field.values
    if edge == "N":
        return _Frame(v, g.dx, g.dy, g.Ny - 1 + MARGIN, g.Nx, 1.0)
    if edge == "S":
        return _Frame(v[:, ::-1], g.dx, g.dy, g.Ny - 1 + MARGIN, g.Nx, -1.0)
    if edge == "E":
        return _Frame(np.swapaxes(v, 0, 1), g.dy, g.dx, g.Nx - 1 + MARGIN, g.Ny, 1.0)
    raise ValueError(f"unknown edge {edge!r}; expected one of {EDGES}")


def _edge_points(grid: GridSpec, edge: str, p) -> tuple[np.ndarray, np.ndarray]:
    """Physical coordinates of boundary nodes with along-edge index ``p``."""
    p = np.asarray(p)
    if edge == "N":
        return p * grid.dx, np.full(p.shape, grid.Ly)
    if edge == "S":
        return p * grid.dx, np.zeros(p.shape)
    return np.full(p.shape, grid.Lx), p * grid.dy


def first_row_nodes(grid: GridSpec, edge: str) -> np.ndarray:
    """Along-edge indices where the depth-1 ghost comes from the edge formula.

    North and south include ``p = 0`` (the clamped end); all edges exclude
    their free-free corners.
    """
    if edge == "E":
        return np.arange(1, grid.Ny - 1)
    return np.arange(0, grid.Nx - 1)


def second_row_nodes(grid: GridSpec, edge: str) -> np.ndarray:
    if edge == "E":
        return np.arange(2, grid.Ny - 2)
    return np.arange(0, grid.Nx - 2)


def _column(vals: np.ndarray, nbatch: int) -> np.ndarray:
    return vals.reshape(vals.shape + (1,) * nbatch)


def _check_nodes(nodes, allowed: np.ndarray, what: str) -> np.ndarray:
    if nodes is None:
        return allowed
    nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
    bad = np.setdiff1d(nodes, allowed)
    if bad.size:
        raise ValueError(f"{what}: nodes {bad.tolist()} are not eligible (corner-adjacent or out of range)")
    return nodes


# -- edge fills ---------------------------------------------------------------

def fill_clamped(field: ExtendedField) -> None:
    """Enforce ``w = 0`` on the clamped column and mirror ``w(-1, j) = w(1, j)``."""
    v = field.values
    inner = slice(MARGIN, -MARGIN)
    v[MARGIN, inner] = 0.0
    v[MARGIN - 1, inner] = v[MARGIN + 1, inner]
    v[0] = 0.0


def fill_free_first_row(field: ExtendedField, loads: BoundaryLoads, edge: str, nu: float,
                        nodes=None) -> None:
    """Depth-1 ghosts on ``edge`` from the discrete moment condition."""
    fr = _frame(field, edge)
    p = _check_nodes(nodes, first_row_nodes(field.grid, edge), "first row")
    a, J = fr.a, fr.J
    P = p + MARGIN
    g = _column(loads.evaluate("g", edge, *_edge_points(field.grid, edge, p)), len(field.batch))
    r = fr.dy**2 / fr.dx**2
    a[P, J + 1] = (2 * a[P, J] - a[P, J - 1]
                   - nu * r * (a[P - 1, J] - 2 * a[P, J] + a[P + 1, J])
                   + g * fr.dy**2)
    if edge != "E":
        # ghost beyond the edge behind the clamped column mirrors i = +1
        a[MARGIN - 1, J + 1] = a[MARGIN + 1, J + 1]


def fill_free_second_row(field: ExtendedField, loads: BoundaryLoads, edge: str, nu: float,
                         nodes=None) -> None:
    """Depth-2 ghosts on ``edge`` from the discrete shear condition."""
    fr = _frame(field, edge)
    p = _check_nodes(nodes, second_row_nodes(field.grid, edge), "second row")
    a, J = fr.a, fr.J
    P = p + MARGIN
    h = fr.h_sign * loads.evaluate("h", edge, *_edge_points(field.grid, edge, p))
    h = _column(h, len(field.batch))
    r = fr.dy**2 / fr.dx**2
    cross = (a[P + 1, J + 1] - 2 * a[P, J + 1] + a[P - 1, J + 1]
             - a[P + 1, J - 1] + 2 * a[P, J - 1] - a[P - 1, J - 1])
    a[P, J + 2] = (2 * a[P, J + 1] - 2 * a[P, J - 1] + a[P, J - 2]
                   - (2 - nu) * r * cross + 2 * fr.dy**3 * h)
    if edge != "E":
        a[MARGIN - 1, J + 2] = a[MARGIN + 1, J + 2]


# -- corners -------------------------------------------------------------------

# Patch around the corner node covering offsets -3..+2 in both directions.
_PATCH_LO, _PATCH_HI = 3, 3
_O = _PATCH_LO


def _d2x(P, i, j, dx):
    return (P[i - 1, j] - 2 * P[i, j] + P[i + 1, j]) / dx**2


def _d2y(P, i, j, dy):
    return (P[i, j - 1] - 2 * P[i, j] + P[i, j + 1]) / dy**2


def _shear_y(P, i, j, nu, dx, dy):
    wyyy = (P[i, j + 2] - 2 * P[i, j + 1] + 2 * P[i, j - 1] - P[i, j - 2]) / (2 * dy**3)
    wxxy = (_d2x(P, i, j + 1, dx) - _d2x(P, i, j - 1, dx)) / (2 * dy)
    return wyyy + (2 - nu) * wxxy


def _shear_x(P, i, j, nu, dx, dy):
    wxxx = (P[i + 2, j] - 2 * P[i + 1, j] + 2 * P[i - 1, j] - P[i - 2, j]) / (2 * dx**3)
    wyyx = (_d2y(P, i + 1, j, dy) - _d2y(P, i - 1, j, dy)) / (2 * dx)
    return wxxx + (2 - nu) * wyyx


def _corner_operators(P, nu, dx, dy) -> list:
    """Left-hand sides of the seven corner conditions (load terms excluded)."""
    o = _O
    wxx = _d2x(P, o, o, dx)
    wyy = _d2y(P, o, o, dy)
    return [
        nu * wxx + wyy,                            # moment, north edge, at O
        wxx + nu * wyy,                            # moment, east edge, at O
        _shear_y(P, o, o, nu, dx, dy),             # shear, north edge, at O
        _shear_y(P, o - 1, o, nu, dx, dy),         # shear, north edge, at W
        _shear_x(P, o, o, nu, dx, dy),             # shear, east edge, at O
        _shear_x(P, o, o - 1, nu, dx, dy),         # shear, east edge, at S
        P[o + 1, o + 1] - P[o - 1, o + 1] - P[o + 1, o - 1] + P[o - 1, o - 1],  # twist
    ]


@functools.lru_cache(maxsize=64)
def _corner_matrix(nu: float, dx: float, dy: float) -> tuple[np.ndarray, float]:
    size = _PATCH_LO + _PATCH_HI
    M = np.zeros((7, 7))
    for k, (_, (di, dj)) in enumerate(CORNER_UNKNOWNS):
        P = np.zeros((size, size))
        P[_O + di, _O + dj] = 1.0
        M[:, k] = _corner_operators(P, nu, dx, dy)
    M.flags.writeable = False
    return M, float(np.linalg.cond(M))


@dataclass
class CornerSystem:
    """The 7x7 system ``matrix @ ghosts = rhs`` around one free-free corner.

    ``rhs`` has shape ``(7, *batch)``.  ``frame`` and ``origin`` locate the
    corner inside the owning field so :func:`solve_corner` can write back.
    """

    corner: str
    matrix: np.ndarray
    rhs: np.ndarray
    condition: float
    frame: np.ndarray
    origin: tuple[int, int]

    def residual(self, ghosts: np.ndarray) -> np.ndarray:
        return np.tensordot(self.matrix, ghosts, axes=1) - self.rhs


def _corner_frame(field: ExtendedField, corner: str) -> np.ndarray:
    if corner == "NE":
        return field.values
    if corner == "SE":
        return field.values[:, ::-1]
    raise ValueError(f"unknown corner {corner!r}; expected one of {CORNERS}")


def build_corner_system(field: ExtendedField, loads: BoundaryLoads, corner: str,
                        nu: float) -> CornerSystem:
    grid = field.grid
    a = _corner_frame(field, corner)
    I, J = grid.Nx - 1 + MARGIN, grid.Ny - 1 + MARGIN
    patch = a[I - _PATCH_LO:I + _PATCH_HI, J - _PATCH_LO:J + _PATCH_HI].copy()
    for _, (di, dj) in CORNER_UNKNOWNS:
        patch[_O + di, _O + dj] = 0.0
    known = np.array(_corner_operators(patch, nu, grid.dx, grid.dy))

    # loads at the corner node and at its two neighbours along the edges
    edge_y, h_sign = ("N", 1.0) if corner == "NE" else ("S", -1.0)
    x_c, y_c = grid.Lx, (grid.Ly if corner == "NE" else 0.0)
    y_s = grid.Ly - grid.dy if corner == "NE" else grid.dy
    load_vec = np.array([
        loads.evaluate("g", edge_y, x_c, y_c),
        loads.evaluate("g", "E", x_c, y_c),
        h_sign * loads.evaluate("h", edge_y, x_c, y_c),
        h_sign * loads.evaluate("h", edge_y, x_c - grid.dx, y_c),
        loads.evaluate("h", "E", x_c, y_c),
        loads.evaluate("h", "E", x_c, y_s),
        0.0,
    ])
    rhs = _column(load_vec, len(field.batch)) - known
    if not np.all(np.isfinite(rhs)):
        raise GhostFillError(f"corner {corner}: prerequisite ghost values are undefined")
    M, cond = _corner_matrix(float(nu), float(grid.dx), float(grid.dy))
    return CornerSystem(corner, M, rhs, cond, a, (I, J))


def solve_corner(system: CornerSystem) -> np.ndarray:
    """Solve the corner system and write the seven ghosts into the field."""
    if system.condition > MAX_CORNER_CONDITION:
        raise np.linalg.LinAlgError(
            f"corner {system.corner} system is ill-conditioned (cond={system.condition:.3e})")
    rhs = system.rhs
    ghosts = np.linalg.solve(system.matrix, rhs.reshape(7, -1)).reshape(rhs.shape)
    I, J = system.origin
    for k, (_, (di, dj)) in enumerate(CORNER_UNKNOWNS):
        system.frame[I + di, J + dj] = ghosts[k]
    return ghosts


# -- full pass -----------------------------------------------------------------

def fill_ghosts(field: ExtendedField, loads: BoundaryLoads, nu: float) -> None:
    """Run the fill sequence without resetting or finalising the margin."""
    fill_clamped(field)
    for edge in EDGES:
        fill_free_first_row(field, loads, edge, nu)
    for edge in EDGES:
        fill_free_second_row(field, loads, edge, nu)
    for corner in CORNERS:
        solve_corner(build_corner_system(field, loads, corner, nu))


def fill_all(field: ExtendedField, loads: BoundaryLoads | None, nu: float) -> None:
    """Fill every ghost value needed by the 13-point stencil.

    Order: clamped mirror, first rows, second rows, then the two corner
    solves.  Margin cells no stencil ever reads are set to zero.
    """
    loads = ZERO_LOADS if loads is None else loads
    field.invalidate()
    fill_ghosts(field, loads, nu)
    v = field.values
    for strip in (v[:MARGIN], v[-MARGIN:], v[:, :MARGIN], v[:, -MARGIN:]):
        strip[np.isnan(strip)] = 0.0
    field.filled = True
