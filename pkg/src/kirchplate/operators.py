"""Spatial operators and the semi-discrete first-order system.

With ``y = [w; v]`` and ``v = w_t`` the plate equation becomes::

    w' = v
    v' = f - D*bih(w) - a1*w_x - a2*w_y - k0*v + k1*lap(v)

where ``bih`` is the 13-point biharmonic stencil and all derivatives are
evaluated on ghost-filled fields.  Since every ghost is affine in the nodal
values and boundary data, the right-hand side is affine in ``y``:
``y' = A y + b(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .ghost import ZERO_LOADS, BoundaryLoads, fill_all
from .mesh import MARGIN, ExtendedField, GridSpec, to_unknowns


@dataclass(frozen=True)
class PlateParams:
    """Stiffness, Poisson ratio, damping and flow coefficients."""

    D: float = 1.0
    nu: float = 0.3
    k0: float = 0.0
    k1: float = 0.0
    a1: float = 0.0
    a2: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not 0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (0, 1/2), got {self.nu}")
        if self.k0 < 0 or self.k1 < 0:
            raise ValueError(f"damping coefficients must be >= 0, got k0={self.k0}, k1={self.k1}")
        for name in ("a1", "a2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class ForcingSpec:
    """Distributed load ``f(x, y, t)``; ``func=None`` means ``f == 0``."""

    func: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None

    @property
    def is_zero(self) -> bool:
        return self.func is None

    def sample(self, grid: GridSpec, t: float) -> np.ndarray:
        """Forcing at the unknown nodes, in solver order."""
        if self.func is None:
            return np.zeros(grid.n_unknowns)
        X, Y = grid.meshgrid()
        vals = np.broadcast_to(np.asarray(self.func(X, Y, t), dtype=float), X.shape)
        return to_unknowns(grid, vals).copy()


NO_FORCING = ForcingSpec()


# -- stencils -------------------------------------------------------------------

def _shifted(field: ExtendedField, di: int, dj: int, i0: int = 1) -> np.ndarray:
    """Values at offset ``(di, dj)`` from every node with ``i >= i0``."""
    g = field.grid
    return field.values[MARGIN + i0 + di:MARGIN + g.Nx + di, MARGIN + dj:MARGIN + g.Ny + dj]


def apply_biharmonic(field: ExtendedField) -> np.ndarray:
    """13-point biharmonic at the unknown nodes, shape ``(Nx-1, Ny, ...)``."""
    field.require_filled()
    g = field.grid
    s = lambda di, dj: _shifted(field, di, dj)  # noqa: E731
    O = s(0, 0)
    d4x = (s(-2, 0) - 4 * s(-1, 0) + 6 * O - 4 * s(1, 0) + s(2, 0)) / g.dx**4
    d4y = (s(0, -2) - 4 * s(0, -1) + 6 * O - 4 * s(0, 1) + s(0, 2)) / g.dy**4
    cross = (s(1, 1) + s(-1, 1) + s(1, -1) + s(-1, -1)
             - 2 * (s(1, 0) + s(-1, 0) + s(0, 1) + s(0, -1)) + 4 * O)
    return d4x + d4y + 2 * cross / (g.dx**2 * g.dy**2)


def apply_laplacian(field: ExtendedField) -> np.ndarray:
    field.require_filled()
    g = field.grid
    s = lambda di, dj: _shifted(field, di, dj)  # noqa: E731
    O = s(0, 0)
    return ((s(-1, 0) - 2 * O + s(1, 0)) / g.dx**2
            + (s(0, -1) - 2 * O + s(0, 1)) / g.dy**2)


def apply_flow(field: ExtendedField, a1: float, a2: float) -> np.ndarray:
    """``a1*w_x + a2*w_y`` by central differences at the unknown nodes."""
    field.require_filled()
    g = field.grid
    s = lambda di, dj: _shifted(field, di, dj)  # noqa: E731
    out = np.zeros_like(s(0, 0))
    if a1:
        out += a1 * (s(1, 0) - s(-1, 0)) / (2 * g.dx)
    if a2:
        out += a2 * (s(0, 1) - s(0, -1)) / (2 * g.dy)
    return out


def second_derivatives(field: ExtendedField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Central ``w_xx, w_yy, w_xy`` at every node of the closed plate."""
    field.require_filled()
    g = field.grid
    s = lambda di, dj: _shifted(field, di, dj, i0=0)  # noqa: E731
    O = s(0, 0)
    wxx = (s(-1, 0) - 2 * O + s(1, 0)) / g.dx**2
    wyy = (s(0, -1) - 2 * O + s(0, 1)) / g.dy**2
    wxy = (s(1, 1) - s(-1, 1) - s(1, -1) + s(-1, -1)) / (4 * g.dx * g.dy)
    return wxx, wyy, wxy


def _block_to_unknowns(grid: GridSpec, block: np.ndarray) -> np.ndarray:
    """``(Nx-1, Ny, ...)`` block over the unknown nodes -> solver order."""
    return np.swapaxes(block, 0, 1).reshape((grid.n_unknowns,) + block.shape[2:])


# -- right-hand side ---------------------------------------------------------------

def rhs(y: np.ndarray, t: float, params: PlateParams, grid: GridSpec,
        loads: BoundaryLoads | None = None, forcing: ForcingSpec | None = None) -> np.ndarray:
    """Matrix-free ``y'`` for one state (``(2N,)``) or a batch (``(2N, B)``)."""
    loads = ZERO_LOADS if loads is None else loads
    forcing = NO_FORCING if forcing is None else forcing
    y = np.asarray(y, dtype=float)
    n = grid.n_unknowns
    if y.shape[0] != 2 * n:
        raise ValueError(f"state has length {y.shape[0]}, expected {2 * n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("state contains non-finite entries")
    w, v = y[:n], y[n:]

    fw = ExtendedField.from_unknowns(grid, w)
    fill_all(fw, loads, params.nu)
    acc = -params.D * apply_biharmonic(fw)
    if params.a1 or params.a2:
        acc -= apply_flow(fw, params.a1, params.a2)
    if params.k1:
        # velocity ghosts carry no boundary data
        fv = ExtendedField.from_unknowns(grid, v)
        fill_all(fv, ZERO_LOADS, params.nu)
        acc += params.k1 * apply_laplacian(fv)

    vdot = _block_to_unknowns(grid, acc)
    if params.k0:
        vdot = vdot - params.k0 * v
    if not forcing.is_zero:
        f = forcing.sample(grid, t)
        vdot = vdot + f.reshape(f.shape + (1,) * (vdot.ndim - 1))
    return np.concatenate([v, vdot], axis=0)


@dataclass
class SemiDiscreteSystem:
    """``y' = A y + b(t)`` for the cantilever plate."""

    grid: GridSpec
    params: PlateParams
    loads: BoundaryLoads = ZERO_LOADS
    forcing: ForcingSpec = NO_FORCING
    A: Optional[sp.csr_matrix] = None
    _b_const: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    @property
    def N(self) -> int:
        return self.grid.n_unknowns

    @property
    def size(self) -> int:
        return 2 * self.grid.n_unknowns

    def rhs(self, y: np.ndarray, t: float = 0.0) -> np.ndarray:
        return rhs(y, t, self.params, self.grid, self.loads, self.forcing)

    def matvec(self, y: np.ndarray) -> np.ndarray:
        """Linear part ``A y`` evaluated matrix-free."""
        return rhs(y, 0.0, self.params, self.grid)

    def b(self, t: float) -> np.ndarray:
        if self.forcing.is_zero:
            if self._b_const is None:
                if self.loads.is_zero:
                    self._b_const = np.zeros(self.size)
                else:
                    self._b_const = self.rhs(np.zeros(self.size), 0.0)
            return self._b_const
        return self.rhs(np.zeros(self.size), t)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        """``A y + b(t)`` using the assembled matrix."""
        if self.A is None:
            return self.rhs(y, t)
        return self.A @ y + self.b(t)


def assemble(params: PlateParams, grid: GridSpec, loads: BoundaryLoads | None = None,
             forcing: ForcingSpec | None = None, chunk: int = 256) -> SemiDiscreteSystem:
    """Build ``A`` column by column from the matrix-free right-hand side."""
    system = SemiDiscreteSystem(grid, params,
                                ZERO_LOADS if loads is None else loads,
                                NO_FORCING if forcing is None else forcing)
    m = system.size
    rows, cols, vals = [], [], []
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        E = np.zeros((m, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        block = rhs(E, 0.0, params, grid)
        r, c = np.nonzero(block)
        rows.append(r)
        cols.append(c + start)
        vals.append(block[r, c])
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(m, m))
    A.sort_indices()
    system.A = A
    return system


def write_triplets(A: sp.spmatrix, path) -> None:
    """Dump ``A`` as ``row col value`` lines (debugging aid)."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="\n") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
