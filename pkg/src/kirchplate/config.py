"""Run configuration: parsing, validation and conversion to model objects.

The format is line oriented::

    # plate and mesh (top level, before any section)
    D  = 1
    nu = 0.3
    Lx = 1
    ...
    [initial]
    vinit = x
    [loads]
    g_N = 0.1
    h_E = sin(pi*y)
    [forcing]
    f = 0

Blank lines, ``;`` comment lines and anything after ``#`` are ignored.  Unknown keys and sections
are errors.  A ``run.json`` metadata record written by :mod:`kirchplate.cli`
is also accepted and reproduces the run it describes.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import Expression, ExpressionError, spatial, spatiotemporal
from .ghost import BoundaryLoads
from .integrator import METHODS, IntegratorConfig, TimeGrid
from .mesh import GridSpec
from .operators import ForcingSpec, PlateParams


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_LOAD_KEYS = ("g_N", "g_S", "g_E", "h_N", "h_S", "h_E")

_FLOAT_KEYS = ("D", "Lx", "Ly", "nu", "k0", "k1", "a1", "a2", "t0", "tf", "rel_tol", "abs_tol")
_INT_KEYS = ("Nx", "Ny", "ns")
_BOOL_KEYS = ("energies", "snapshots")
_STR_KEYS = ("method", "output")
_REQUIRED = ("D", "Lx", "Ly", "Nx", "Ny", "nu", "t0", "tf", "ns")

_SECTIONS = {
    None: set(_FLOAT_KEYS + _INT_KEYS + _BOOL_KEYS + _STR_KEYS),
    "initial": {"winit", "vinit"},
    "loads": set(_LOAD_KEYS),
    "forcing": {"f"},
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    D: float
    Lx: float
    Ly: float
    Nx: int
    Ny: int
    nu: float
    t0: float
    tf: float
    ns: int
    k0: float = 0.0
    k1: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    energies: bool = True
    snapshots: bool = False
    winit: str = "0"
    vinit: str = "0"
    loads: dict = field(default_factory=lambda: {k: "0" for k in _LOAD_KEYS})
    f: str = "0"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    method: str = "trapezoidal"
    output: str = "output"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            ("Nx", self.Nx >= 5, "Nx must be >= 5"),
            ("Ny", self.Ny >= 5, "Ny must be >= 5"),
            ("Lx", self.Lx > 0, "Lx must be > 0"),
            ("Ly", self.Ly > 0, "Ly must be > 0"),
            ("D", self.D > 0, "D must be > 0"),
            ("nu", 0 < self.nu < 0.5, f"nu = {self.nu} outside the Poisson-ratio range (0, 1/2)"),
            ("k0", self.k0 >= 0, "k0 must be >= 0"),
            ("k1", self.k1 >= 0, "k1 must be >= 0"),
            ("tf", self.tf > self.t0, "tf must be greater than t0"),
            ("ns", self.ns >= 2, "ns must be >= 2"),
            ("rel_tol", self.rel_tol > 0, "rel_tol must be > 0"),
            ("abs_tol", self.abs_tol > 0, "abs_tol must be > 0"),
            ("method", self.method in METHODS, f"method must be one of {METHODS}"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{name}: {msg}")
        unknown = set(self.loads) - set(_LOAD_KEYS)
        if unknown:
            raise ConfigError(f"unknown load keys {sorted(unknown)}")
        for key, text in [("winit", self.winit), ("vinit", self.vinit)] + list(self.loads.items()):
            _compile(key, text, ("x", "y"))
        _compile("f", self.f, ("x", "y", "t"))

    # -- model objects -------------------------------------------------------

    def grid(self) -> GridSpec:
        return GridSpec(self.Lx, self.Ly, self.Nx, self.Ny)

    def params(self) -> PlateParams:
        return PlateParams(self.D, self.nu, self.k0, self.k1, self.a1, self.a2)

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.tf, self.ns)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(method=self.method, rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    def boundary_loads(self) -> BoundaryLoads:
        vals = {}
        for key in _LOAD_KEYS:
            text = self.loads.get(key, "0")
            const = Expression(text, ("x", "y")).constant
            vals[key] = const if const is not None else spatial(text)
        return BoundaryLoads(**vals)

    def forcing(self) -> ForcingSpec:
        e = Expression(self.f, ("x", "y", "t"))
        if e.constant == 0.0:
            return ForcingSpec()
        return ForcingSpec(spatiotemporal(self.f))

    def initial_functions(self):
        return spatial(self.winit), spatial(self.vinit)

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["loads"] = {k: self.loads.get(k, "0") for k in _LOAD_KEYS}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        missing = [k for k in _REQUIRED if k not in d]
        if missing:
            raise ConfigError(f"missing required keys {missing}")
        kw = dict(d)
        loads = {k: "0" for k in _LOAD_KEYS}
        loads.update({k: str(v) for k, v in dict(kw.get("loads", {})).items()})
        kw["loads"] = loads
        return cls(**kw)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _compile(key: str, text: str, variables) -> Expression:
    try:
        return Expression(text, variables)
    except ExpressionError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _convert(key: str, raw: str, line: int):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}", line) from None
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}", line)
    return raw


_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")


def parse_text(text: str) -> RunConfig:
    section = None
    top: dict = {}
    loads: dict = {}
    seen: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line[0] == ";":
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SECTIONS[section]:
            where = f"section [{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} at {where}", lineno)
        if not value:
            raise ConfigError(f"{key}: missing value", lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[section, key]})", lineno)
        seen[section, key] = lineno
        if section == "loads":
            _compile(key, value, ("x", "y"))
            loads[key] = value
        elif section == "initial":
            _compile(key, value, ("x", "y"))
            top[key] = value
        elif section == "forcing":
            _compile(key, value, ("x", "y", "t"))
            top[key] = value
        else:
            top[key] = _convert(key, value, lineno)
    top["loads"] = loads
    return RunConfig.from_dict(top)


def _is_file(path: str) -> bool:
    try:
        return Path(path).is_file()
    except OSError:
        return False


def parse_config(source) -> RunConfig:
    """Parse a config from a path, config text, or a ``run.json`` record."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and _is_file(source)):
        text = Path(source).read_text()
    else:
        text = str(source)
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        return RunConfig.from_dict(data.get("config", data))
    return parse_text(text)


def format_config(cfg: RunConfig) -> str:
    """Render ``cfg`` in the line-oriented format accepted by :func:`parse_text`."""
    lines = []
    d = cfg.to_dict()
    for key in _FLOAT_KEYS + _INT_KEYS:
        lines.append(f"{key} = {d[key]!r}")
    for key in _BOOL_KEYS:
        lines.append(f"{key} = {'true' if d[key] else 'false'}")
    for key in _STR_KEYS:
        lines.append(f"{key} = {d[key]}")
    lines += ["", "[initial]", f"winit = {cfg.winit}", f"vinit = {cfg.vinit}", "", "[loads]"]
    lines += [f"{k} = {d['loads'][k]}" for k in _LOAD_KEYS]
    lines += ["", "[forcing]", f"f = {cfg.f}", ""]
    return "\n".join(lines)
