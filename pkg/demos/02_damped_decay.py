"""Frictional damping drains energy monotonically.

Same plate and initial velocity as the conservation demo, now with k0 = 0.1.
The energy balance dE/dt = -k0 * ||v||^2 makes E non-increasing.  The
decay is fastest while the plate moves quickly and stalls at the turning
points, where v vanishes.
"""

import numpy as np

from kirchplate import (GridSpec, PlateParams, TimeGrid, assemble, energy_series, initial_state,
                        integrate)

grid = GridSpec(1.0, 1.0, 10, 10)

runs = {}
for k0 in (0.0, 0.1, 0.5):
    params = PlateParams(k0=k0)
    traj = integrate(assemble(params, grid), initial_state(grid, vinit=lambda x, y: x),
                     TimeGrid(0.0, 1.0, 101))
    runs[k0] = np.array([s.E for s in energy_series(traj, grid, params)])

t = np.linspace(0, 1, 101)
print(f"{'t':>5}" + "".join(f"{'E (k0=' + str(k) + ')':>16}" for k in runs))
for i in range(0, 101, 10):
    print(f"{t[i]:5.2f}" + "".join(f"{E[i]:16.8f}" for E in runs.values()))

for k0, E in runs.items():
    rises = np.diff(E).max()
    print(f"k0 = {k0}: E(1)/E(0) = {E[-1] / E[0]:.4f}, largest step increase {rises:.2e}")
