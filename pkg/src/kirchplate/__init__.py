"""Finite-difference simulation of a cantilevered Kirchhoff plate.

The plate is clamped along ``x = 0`` and free on the other three edges.
Free-edge moment and shear conditions are enforced by eliminating ghost
nodes, the spatial operator is assembled into a sparse matrix, and the
resulting first-order system is integrated in time.
"""

from .config import ConfigError, RunConfig, format_config, parse_config
from .diagnostics import (EnergySample, NoSignChangeError, StabilityReport, energy_series,
                          find_critical_flow, kinetic_energy, potential_energy, spectral_abscissa)
from .ghost import BoundaryLoads, ZERO_LOADS, build_corner_system, fill_all, solve_corner
from .integrator import (IntegrationError, IntegratorConfig, TimeGrid, Trajectory, initial_state,
                         integrate)
from .mesh import ExtendedField, GhostFillError, GridSpec, NodeClass
from .operators import ForcingSpec, PlateParams, SemiDiscreteSystem, assemble, rhs

__version__ = "0.1.0"
