"""Ghost values around a free-free corner.

The 13-point biharmonic stencil reaches two nodes beyond the plate, so a
ring of ghost values has to be inferred from the boundary conditions.  Along
an edge that is a scalar solve per node.  At a corner where two free edges
meet, seven ghosts are coupled and solved together.  Here we fill a random
field, print the corner system and check that each condition holds.
"""

import numpy as np

from kirchplate import BoundaryLoads, ExtendedField, GridSpec, build_corner_system, fill_all
from kirchplate.ghost import CORNER_UNKNOWNS, fill_clamped, fill_free_first_row, fill_free_second_row

rng = np.random.default_rng(7)
grid = GridSpec(1.0, 0.8, 8, 7)
nu = 0.3
loads = BoundaryLoads(g_N=0.2, g_E=-0.1, h_N=0.05, h_E=0.3)

vals = rng.normal(size=(grid.Nx, grid.Ny))
vals[0] = 0.0
field = ExtendedField.from_interior(grid, vals)

# Run the fill by hand up to the corner so the system can be inspected.
fill_clamped(field)
for edge in ("N", "S", "E"):
    fill_free_first_row(field, loads, edge, nu)
for edge in ("N", "S", "E"):
    fill_free_second_row(field, loads, edge, nu)
system = build_corner_system(field, loads, "NE", nu)

np.set_printoptions(precision=3, suppress=True, linewidth=120)
print("corner matrix (columns:", ", ".join(name for name, _ in CORNER_UNKNOWNS) + ")")
print(system.matrix)
print(f"condition number {system.condition:.1f}")

ghosts = np.linalg.solve(system.matrix, system.rhs)
print("\nresidual of the seven conditions:", np.abs(system.residual(ghosts)).max())

# The full pass gives the same ghosts.
fill_all(field, loads, nu)
I, J = grid.Nx - 1, grid.Ny - 1
for k, (name, (di, dj)) in enumerate(CORNER_UNKNOWNS):
    print(f"{name:>4}: solved {ghosts[k]: .6f}  in field {field.at(I + di, J + dj): .6f}")
