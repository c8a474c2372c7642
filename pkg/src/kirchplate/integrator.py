"""Time integration of ``y' = A y + b(t)``.

The default method is the implicit trapezoidal rule with step-doubling error
control.  Step sizes live on a ladder ``max_step * 2**-k`` so that sparse
LU factorisations of ``I - dt/2 A`` can be cached and reused.  Classical RK4
on the same adaptive loop is available as an explicit cross-check.
Output at the requested sample times comes from cubic Hermite interpolation
between accepted steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import GridSpec, to_unknowns

log = logging.getLogger(__name__)

METHODS = ("trapezoidal", "rk4")


class IntegrationError(RuntimeError):
    """Integration could not continue; ``t`` is the last time reached.

    ``partial`` holds the output samples produced before the failure.
    """

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.17g})")
        self.t = t
        self.partial: Trajectory | None = None


class SingularStepError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    tf: float
    ns: int

    def __post_init__(self):
        if not self.tf > self.t0:
            raise ValueError(f"tf must exceed t0, got t0={self.t0}, tf={self.tf}")
        if int(self.ns) != self.ns or self.ns < 2:
            raise ValueError(f"ns must be an integer >= 2, got {self.ns}")

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.tf, int(self.ns))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "trapezoidal"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_step: Optional[float] = None  # default: output spacing
    initial_step: Optional[float] = None  # default: heuristic
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (ns, 2N)
    stats: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.states.shape[1] // 2

    def w(self, k: int) -> np.ndarray:
        return self.states[k, :self.N]

    def v(self, k: int) -> np.ndarray:
        return self.states[k, self.N:]


@dataclass
class LinearSystem:
    """Minimal ``y' = A y + b(t)`` container for tests and small problems."""

    A: sp.spmatrix
    b_func: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        self.A = sp.csr_matrix(self.A)

    @property
    def size(self) -> int:
        return self.A.shape[0]

    def b(self, t: float) -> np.ndarray:
        if self.b_func is None:
            return np.zeros(self.size)
        return np.asarray(self.b_func(t), dtype=float)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.A @ y + self.b(t)


def _evaluate(system, t, y):
    return system.A @ y + system.b(t)


class _FactorCache:
    def __init__(self, A):
        self.A = sp.csc_matrix(A)
        self.I = sp.identity(self.A.shape[0], format="csc")
        self._lu: dict[float, object] = {}
        self.factorizations = 0
        self.solves = 0

    def solve(self, dt: float, rhs: np.ndarray) -> np.ndarray:
        lu = self._lu.get(dt)
        if lu is None:
            try:
                lu = spla.splu(self.I - (0.5 * dt) * self.A)
            except RuntimeError as exc:
                raise SingularStepError(f"I - dt/2 A is singular for dt={dt:.17g}") from exc
            self._lu[dt] = lu
            self.factorizations += 1
        self.solves += 1
        return lu.solve(rhs)


def step_implicit(system, y: np.ndarray, t: float, dt: float,
                  cache: _FactorCache | None = None) -> np.ndarray:
    """One trapezoidal step.

    Solves ``(I - dt/2 A) y+ = (I + dt/2 A) y + dt/2 (b(t) + b(t + dt))`` in
    increment form.  Pass a cache to reuse factorisations across calls.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cache is None:
        cache = _FactorCache(system.A)
    incr = dt * (cache.A @ y + 0.5 * (system.b(t) + system.b(t + dt)))
    return y + cache.solve(dt, incr)


def step_rk4(system, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = _evaluate(system, t, y)
    k2 = _evaluate(system, t + dt / 2, y + dt / 2 * k1)
    k3 = _evaluate(system, t + dt / 2, y + dt / 2 * k2)
    k4 = _evaluate(system, t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def _initial_step(system, t0, y0, f0, order, rtol, atol, max_step) -> float:
    scale = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    f1 = _evaluate(system, t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, max_step)


def _hermite(t, ta, ya, fa, tb, yb, fb):
    h = tb - ta
    s = (t - ta) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * ya + h10 * h * fa + h01 * yb + h11 * h * fb


def integrate(system, y0: np.ndarray, grid: TimeGrid,
              cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``grid.t0`` to ``grid.tf``, sampling at ``grid.times()``."""
    cfg = IntegratorConfig() if cfg is None else cfg
    y = np.array(y0, dtype=float)
    if y.shape != (system.size,):
        raise ValueError(f"initial state has shape {y.shape}, expected ({system.size},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state contains non-finite entries")

    times = grid.times()
    out = np.empty((len(times), y.size))
    out[0] = y
    order = 2 if cfg.method == "trapezoidal" else 4
    max_step = cfg.max_step or (grid.tf - grid.t0) / (grid.ns - 1)

    cache = _FactorCache(system.A) if cfg.method == "trapezoidal" else None

    def step(yy, tt, dt):
        if cache is not None:
            return step_implicit(system, yy, tt, dt, cache)
        return step_rk4(system, yy, tt, dt)

    t = grid.t0
    f = _evaluate(system, t, y)
    h = cfg.initial_step or _initial_step(system, t, y, f, order, cfg.rel_tol, cfg.abs_tol, max_step)
    level = max(0, math.ceil(math.log2(max_step / min(h, max_step))))
    steps = rejections = 0
    k_out = 1
    try:
        while k_out < len(times):
            dt = max_step * 2.0 ** -level
            if dt <= 1e-14 * max(1.0, abs(t)) or level > 60:
                raise IntegrationError("step size underflow", t)
            if steps + rejections >= cfg.max_steps:
                raise IntegrationError("maximum number of steps exceeded", t)
            try:
                y_full = step(y, t, dt)
                y_half = step(step(y, t, dt / 2), t + dt / 2, dt / 2)
            except SingularStepError:
                log.debug("singular factor at dt=%g; dropping one level", dt)
                level += 1
                rejections += 1
                continue
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_half))
            err = _rms((y_half - y_full) / (2**order - 1) / scale)
            if not np.isfinite(err):
                err = np.inf
            if err > 1.0:
                rejections += 1
                level += max(1, math.ceil(math.log2(err) / (order + 1))) if np.isfinite(err) else 2
                continue

            t_new = t + dt
            if not np.all(np.isfinite(y_half)):
                raise IntegrationError("non-finite state", t)
            f_new = _evaluate(system, t_new, y_half)
            while k_out < len(times) and times[k_out] <= t_new:
                if times[k_out] == t_new:
                    out[k_out] = y_half
                else:
                    out[k_out] = _hermite(times[k_out], t, y, f, t_new, y_half, f_new)
                k_out += 1
            t, y, f = t_new, y_half, f_new
            steps += 1
            # local error scales like dt**(order+1); move up a rung when it fits
            if level > 0 and err * 2 ** (order + 1) <= 0.5:
                level -= 1
    except IntegrationError as exc:
        exc.partial = Trajectory(times[:k_out].copy(), out[:k_out].copy(),
                                 {"method": cfg.method, "steps": steps, "rejections": rejections})
        raise

    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state in output", t)
    stats = {
        "method": cfg.method,
        "steps": steps,
        "rejections": rejections,
        "linear_solves": cache.solves if cache else 0,
        "factorizations": cache.factorizations if cache else 0,
        "final_step": max_step * 2.0 ** -level,
    }
    return Trajectory(times, out, stats)


def initial_state(grid: GridSpec, winit: Callable | None = None,
                  vinit: Callable | None = None) -> np.ndarray:
    """Sample ``winit(X, Y)`` and ``vinit(X, Y)`` at the unknown nodes."""
    X, Y = grid.meshgrid()
    parts = []
    for fn in (winit, vinit):
        if fn is None:
            vals = np.zeros(X.shape)
        else:
            vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), X.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("initial condition produced non-finite samples")
        parts.append(to_unknowns(grid, vals))
    return np.concatenate(parts)
