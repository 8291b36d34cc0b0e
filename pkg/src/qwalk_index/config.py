"""Sweep and run configuration read from an INI file.

Sections and keys (all optional, defaults below)::

    [model]       name, garnish, theta1, theta2 | theta_a, theta_b, theta_c
    [crossover]   enabled, width, and right-hand angles under the same names
    [grid]        <angle> = min, max, count ; open
    [window]      half_width, max_doublings
    [decoupler]   kind (gentle | reflection), cut
    [tolerances]  gap_threshold, tol_eig, residual
    [schur]       h0_cells, trunc_n, tol_series, samples, radius
    [verify]      crossovers, cut_pairs, cut_distance, renewal_samples
    [output]      phase_diagram, edge_report, eigenfunctions, verify, schur

Angles accept plain floats or multiples of pi (``pi``, ``-pi``, ``0.5*pi``).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

ANGLE_NAMES = {
    "split_step": ("theta1", "theta2"),
    "four_step": ("theta_a", "theta_b", "theta_c"),
}
DEFAULT_ANGLES = {
    "split_step": {"theta1": 1.9, "theta2": 0.7},
    "four_step": {"theta_a": 2.0, "theta_b": -0.8, "theta_c": -1.6},
}
_PI = re.compile(r"^\s*([+-]?)\s*(?:(\d*\.?\d+(?:[eE][+-]?\d+)?)\s*\*?\s*)?pi\s*$")


class ConfigError(ValueError):
    pass


def parse_angle(text: str) -> float:
    m = _PI.match(text)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        factor = float(m.group(2)) if m.group(2) else 1.0
        return sign * factor * math.pi
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot read angle {text!r}") from None


@dataclass(frozen=True)
class GridAxis:
    name: str
    lo: float
    hi: float
    count: int
    open: bool = True

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"grid axis {self.name}: count must be >= 2")
        if not self.lo < self.hi:
            raise ConfigError(f"grid axis {self.name}: need min < max")
        if self.lo < -math.pi - 1e-12 or self.hi > math.pi + 1e-12:
            raise ConfigError(f"grid axis {self.name}: angles must lie in [-pi, pi]")

    def values(self) -> np.ndarray:
        if self.open:
            return np.linspace(self.lo, self.hi, self.count + 2)[1:-1]
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class Tolerances:
    gap_threshold: float = 1e-2
    tol_eig: float = 1e-8
    residual: float = 1e-8


@dataclass(frozen=True)
class SchurSettings:
    h0_cells: tuple[int, ...] = (-1, 0)
    trunc_n: int = 0  # 0: four times the window length
    tol_series: float = 1e-10
    samples: int = 10
    radius: float = 0.9


@dataclass(frozen=True)
class VerifySettings:
    crossovers: int = 5
    cut_pairs: int = 3
    cut_distance: int = 20
    renewal_samples: int = 10


@dataclass(frozen=True)
class OutputPaths:
    phase_diagram: str = "phase_diagram.csv"
    edge_report: str = "edge_states.json"
    eigenfunctions: str = "eigenfunctions.csv"
    verify: str = "verify.json"
    schur: str = "schur_probe.json"


@dataclass(frozen=True)
class SweepConfig:
    model: str = "split_step"
    garnish: bool = False
    angles: dict = field(default_factory=lambda: dict(DEFAULT_ANGLES["split_step"]))
    crossover: dict | None = None  # right-hand angles
    crossover_width: float = 2.0
    grid: tuple[GridAxis, ...] = ()
    half_width: int = 60
    max_doublings: int = 3
    decoupler: str = "gentle"
    cut: int = 0
    tolerances: Tolerances = Tolerances()
    schur: SchurSettings = SchurSettings()
    verify: VerifySettings = VerifySettings()
    outputs: OutputPaths = OutputPaths()

    def __post_init__(self):
        if self.model not in ANGLE_NAMES:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.garnish and self.model != "four_step":
            raise ConfigError("only the four-step walk can be garnished")
        names = set(ANGLE_NAMES[self.model])
        if set(self.angles) != names:
            raise ConfigError(f"model {self.model} needs angles {sorted(names)}")
        if self.crossover is not None and set(self.crossover) != names:
            raise ConfigError("crossover angles must match the model angles")
        for a in self.grid:
            if a.name not in names:
                raise ConfigError(f"grid axis {a.name!r} is not an angle of {self.model}")
        if self.half_width < 3:
            raise ConfigError("window half width must be at least 3 cells")
        if self.max_doublings < 0:
            raise ConfigError("max_doublings must be >= 0")
        if self.decoupler not in ("gentle", "reflection"):
            raise ConfigError(f"unknown decoupler {self.decoupler!r}")
        for v in list(self.angles.values()) + list((self.crossover or {}).values()):
            if not -math.pi - 1e-12 < v <= math.pi + 1e-12:
                raise ConfigError(f"angle {v} outside (-pi, pi]")

    def grid_points(self) -> list[dict]:
        """Angle sets of the sweep, last axis running fastest.

        Without a grid the sweep is the single point given by ``angles``.
        """
        axes = [a.values() for a in self.grid]
        mesh = np.meshgrid(*axes, indexing="ij") if axes else []
        flat = [m.ravel() for m in mesh]
        n = flat[0].size if flat else 1
        out = []
        for i in range(n):
            p = dict(self.angles)
            for a, col in zip(self.grid, flat):
                p[a.name] = float(col[i])
            out.append(p)
        return out


def _section(cp: configparser.ConfigParser, name: str) -> configparser.SectionProxy | dict:
    return cp[name] if cp.has_section(name) else {}


def _typed(cls, sec, name: str):
    kwargs = {}
    for f in fields(cls):
        if f.name not in sec:
            continue
        raw = sec[f.name]
        default = f.default
        try:
            if isinstance(default, tuple):
                kwargs[f.name] = tuple(int(v) for v in raw.replace(",", " ").split())
            elif isinstance(default, bool):
                kwargs[f.name] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                kwargs[f.name] = int(raw)
            elif isinstance(default, float):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw.strip()
        except ValueError:
            raise ConfigError(f"[{name}] {f.name}: cannot read {raw!r}") from None
    return cls(**kwargs)


def _bool(sec, key: str, default: bool) -> bool:
    if key not in sec:
        return default
    v = sec[key].strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: not a boolean: {sec[key]!r}")


def _int(sec, key: str, default: int, section: str) -> int:
    try:
        return int(sec[key]) if key in sec else default
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer") from None


def load_config(path: str | Path | None) -> SweepConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return SweepConfig()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    m = _section(cp, "model")
    name = m.get("name", "split_step").strip()
    if name not in ANGLE_NAMES:
        raise ConfigError(f"unknown model {name!r}")
    angles = dict(DEFAULT_ANGLES[name])
    for k in ANGLE_NAMES[name]:
        if k in m:
            angles[k] = parse_angle(m[k])
    c = _section(cp, "crossover")
    crossover = None
    width = 2.0
    if _bool(c, "enabled", False):
        crossover = {k: parse_angle(c[k]) if k in c else angles[k] for k in ANGLE_NAMES[name]}
        try:
            width = float(c.get("width", 2.0))
        except ValueError:
            raise ConfigError("[crossover] width: not a number") from None
    g = _section(cp, "grid")
    is_open = _bool(g, "open", True)
    axes = []
    for key in g:
        if key == "open":
            continue
        parts = [p.strip() for p in g[key].split(",")]
        if len(parts) != 3:
            raise ConfigError(f"[grid] {key}: expected 'min, max, count'")
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"[grid] {key}: count is not an integer") from None
        axes.append(GridAxis(key, parse_angle(parts[0]), parse_angle(parts[1]), count, is_open))
    w = _section(cp, "window")
    d = _section(cp, "decoupler")
    return SweepConfig(
        model=name,
        garnish=_bool(m, "garnish", False),
        angles=angles,
        crossover=crossover,
        crossover_width=width,
        grid=tuple(axes),
        half_width=_int(w, "half_width", 60, "window"),
        max_doublings=_int(w, "max_doublings", 3, "window"),
        decoupler=d.get("kind", "gentle").strip(),
        cut=_int(d, "cut", 0, "decoupler"),
        tolerances=_typed(Tolerances, _section(cp, "tolerances"), "tolerances"),
        schur=_typed(SchurSettings, _section(cp, "schur"), "schur"),
        verify=_typed(VerifySettings, _section(cp, "verify"), "verify"),
        outputs=_typed(OutputPaths, _section(cp, "output"), "output"),
    )
