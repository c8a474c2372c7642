"""Command-line driver.

Subcommands::

    kirchplate simulate  CONFIG [--output DIR] [--quiet]
    kirchplate stability CONFIG --axis a1 --bracket LO,HI [--rel-width R]
    kirchplate sweep     CONFIG --param a1 --values V1,V2,... [--workers N]

The output directory is taken from ``--output``, else from the
``KIRCHPLATE_OUTPUT_DIR`` environment variable, else from the config.
All files are ASCII with LF line endings; floats are written with 17
significant digits so identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .diagnostics import NoSignChangeError, energy_series, find_critical_flow
from .integrator import IntegrationError, Trajectory, initial_state, integrate
from .mesh import from_unknowns
from .operators import assemble

log = logging.getLogger("kirchplate")

OUTPUT_ENV = "KIRCHPLATE_OUTPUT_DIR"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        for line in lines:
            fh.write(line + "\n")


def resolve_output(cfg: RunConfig, override: str | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV) or cfg.output)


def write_energy_csv(path: Path, samples) -> None:
    _write_lines(path, ["t,U,K,E"] + [",".join(_fmt(v) for v in (s.t, s.U, s.K, s.E)) for s in samples])


def write_frame(path: Path, nodal: np.ndarray) -> None:
    """One ``(Nx, Ny)`` snapshot: a row per ``j`` (increasing), a column per ``i``."""
    _write_lines(path, [",".join(_fmt(v) for v in row) for row in nodal.T])


def read_frame(path) -> np.ndarray:
    """Inverse of :func:`write_frame`, returning an ``(Nx, Ny)`` array."""
    return np.loadtxt(path, delimiter=",", ndmin=2).T


def _write_outputs(cfg: RunConfig, traj: Trajectory, outdir: Path) -> list[str]:
    grid = cfg.grid()
    files = []
    if cfg.energies:
        samples = energy_series(traj, grid, cfg.params(), cfg.boundary_loads())
        write_energy_csv(outdir / "energy.csv", samples)
        files.append("energy.csv")
    if cfg.snapshots:
        n = grid.n_unknowns
        for k, y in enumerate(traj.states):
            name = f"frame_{k:06d}.csv"
            write_frame(outdir / name, from_unknowns(grid, y[:n]))
            files.append(name)
    return files


def _write_metadata(outdir: Path, record: dict) -> None:
    with open(outdir / "run.json", "w", newline="\n", encoding="ascii") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_simulation(cfg: RunConfig, output: str | None = None) -> int:
    """Integrate the configured run and write its files. Returns an exit status."""
    outdir = resolve_output(cfg, output)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    log.info("assembling %dx%d plate (%d unknowns)", grid.Nx, grid.Ny, grid.n_unknowns)
    system = assemble(cfg.params(), grid, cfg.boundary_loads(), cfg.forcing())
    winit, vinit = cfg.initial_functions()
    y0 = initial_state(grid, winit, vinit)
    record = {"config": cfg.to_dict(), "unknowns": grid.n_unknowns}
    try:
        traj = integrate(system, y0, cfg.time_grid(), cfg.integrator())
    except IntegrationError as exc:
        log.error("integration failed: %s", exc)
        files = _write_outputs(cfg, exc.partial, outdir) if exc.partial is not None else []
        record.update(status="failed", error=str(exc), partial=True, outputs=files,
                      samples_written=0 if exc.partial is None else len(exc.partial.times))
        _write_metadata(outdir, record)
        return 1
    files = _write_outputs(cfg, traj, outdir)
    log.info("integration done: %s", traj.stats)
    record.update(status="ok", partial=False, outputs=files, stats=traj.stats,
                  samples_written=len(traj.times))
    _write_metadata(outdir, record)
    return 0


def run_stability(cfg: RunConfig, axis: str, bracket: tuple[float, float],
                  output: str | None = None, rel_width: float = 1e-3) -> int:
    """Bisect for the critical flow parameter; writes ``stability.csv``."""
    outdir = resolve_output(cfg, output)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        report = find_critical_flow(cfg.params(), cfg.grid(), axis, bracket, rel_width)
    except NoSignChangeError as exc:
        _write_lines(outdir / "stability.csv",
                     [f"{axis},abscissa"] + [f"{_fmt(v)},{_fmt(a)}" for v, a in exc.history])
        for v, a in exc.history:
            print(f"abscissa({axis}={v:.17g}) = {a:.17g}")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_lines(outdir / "stability.csv",
                 [f"{axis},abscissa"] + [f"{_fmt(v)},{_fmt(a)}" for v, a in report.history])
    for note in report.warnings:
        log.warning(note)
    print(f"critical {axis} = {report.critical:.17g} (abscissa {report.abscissa:.6g}, "
          f"{report.iterations} bisection steps)")
    return 0


def _sweep_one(args) -> tuple[float, int, str]:
    cfg, value, outdir = args
    status = run_simulation(cfg, str(outdir))
    return value, status, str(outdir)


def run_sweep(cfg: RunConfig, param: str, values, output: str | None = None,
              workers: int = 1) -> int:
    """Independent simulations over ``values`` of ``param``; writes ``sweep.csv``."""
    if param not in RunConfig.__dataclass_fields__ or param in ("loads", "output", "method"):
        raise ConfigError(f"cannot sweep over {param!r}")
    base = resolve_output(cfg, output)
    base.mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        run_cfg = cfg.replace(**{param: type(getattr(cfg, param))(v)})
        jobs.append((run_cfg, v, base / f"{param}_{float(v)!r}"))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    lines = [f"{param},status,E0,Ef,max_rel_drift"]
    worst = 0
    for value, status, outdir in results:
        worst = max(worst, status)
        energy = Path(outdir) / "energy.csv"
        if status == 0 and energy.exists():
            E = np.loadtxt(energy, delimiter=",", skiprows=1, ndmin=2)[:, 3]
            drift = np.max(np.abs(E - E[0])) / E[0] if E[0] else 0.0
            lines.append(f"{_fmt(value)},ok,{_fmt(E[0])},{_fmt(E[-1])},{_fmt(drift)}")
        else:
            lines.append(f"{_fmt(value)},{'ok' if status == 0 else 'failed'},,,")
    _write_lines(base / "sweep.csv", lines)
    return worst


def _bracket(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def _values(items) -> list[float]:
    out = []
    for item in items:
        out += [float(s) for s in item.split(",") if s.strip()]
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchplate",
                                     description="Cantilevered Kirchhoff plate simulations.")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one configuration")
    p.add_argument("config")
    p.add_argument("--output", help="output directory")

    p = sub.add_parser("stability", help="bisect for the flutter onset")
    p.add_argument("config")
    p.add_argument("--axis", choices=("a1", "a2"), default="a1")
    p.add_argument("--bracket", type=_bracket, required=True, help="LO,HI")
    p.add_argument("--rel-width", type=float, default=1e-3)
    p.add_argument("--output", help="output directory")

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", nargs="+", required=True, help="comma or space separated")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="output directory")

    for sp in sub.choices.values():
        sp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(args.config)
        if args.command == "simulate":
            return run_simulation(cfg, args.output)
        if args.command == "stability":
            return run_stability(cfg, args.axis, args.bracket, args.output, args.rel_width)
        return run_sweep(cfg, args.param, _values(args.values), args.output, args.workers)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
