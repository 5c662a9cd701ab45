"""Scenario files, benchmark builders and the run driver.

Scenario files are INI documents (``configparser``).  Every key has a
scenario-kind specific default, except ``[time] dt`` which must always be
given.  See ``docs/scenario_format.md`` for the full schema.
"""

from __future__ import annotations

import configparser
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from . import flow_fem, io, pd_core
from .discretization import Domain2D, PrecrackSegment, apply_precrack, build_families, build_grid
from .errors import ConfigurationError, StabilityError, ValidationError
from .metrics import CrackTracker
from .solver import Loading, Simulation, stable_dt

logger = logging.getLogger(__name__)

KINDS = ("consolidation", "forerunning")
REQUIRED = object()

# (section, key, type, consolidation default, forerunning default)
SCHEMA = [
    ("scenario", "kind", str, REQUIRED, REQUIRED),
    ("scenario", "case", int, 0, 1),
    ("scenario", "saturated", bool, True, None),          # None: derived from the case
    ("domain", "width", float, None, 0.5),                # None: width_cells * spacing
    ("domain", "width_cells", int, 6, 0),
    ("domain", "height", float, 3.0, 0.3025),
    ("domain", "thickness", float, 1.0, 1.0),
    ("domain", "snap_to_grid", bool, True, False),
    ("discretization", "horizon", float, 0.015, 0.005),
    ("discretization", "m_ratio", int, 2, 2),
    ("discretization", "partial_volume", bool, False, False),
    ("time", "dt", float, REQUIRED, REQUIRED),
    ("time", "theta", float, 0.5, 0.5),
    ("time", "duration", float, 0.4, 1e-3),
    ("time", "steps", int, -1, -1),                       # -1: round(duration / dt)
    ("solid", "E", float, 0.254e9, 10e9),
    ("solid", "nu", float, 0.3, 0.25),
    ("solid", "Gc", float, 1.0, 1.0),
    ("solid", "rho_solid", float, 2700.0, 1000.0),
    ("solid", "density", float, None, None),              # None: mixture density
    ("fluid", "alpha", float, 0.7883, 1.0),
    ("fluid", "porosity", float, 0.48, 0.002),
    ("fluid", "K_solid", float, 11e9, math.inf),
    ("fluid", "K_fluid", float, 3.3e9, 2.2e9),
    ("fluid", "viscosity", float, 1e-3, 1e-3),
    ("fluid", "permeability", float, 3.55e-12, 1e-12),
    ("fluid", "rho_fluid", float, 1000.0, 1000.0),
    ("loading", "surface_pressure", float, 1.0, 0.0),
    ("loading", "crack_pressure", float, 0.0, 15e6),
    ("loading", "load_halfwidth", float, 0.0, 0.01),
    ("loading", "injection_rate", float, 0.0, 1.0),
    ("loading", "injection_share", float, 1.0, 0.5),
    ("crack", "precrack_length", float, 0.0, 0.1),
    ("crack", "failure", bool, False, True),
    ("crack", "centerline_only", bool, False, True),
    ("crack", "c1", float, 0.4, 0.22),
    ("crack", "c2", float, 0.8, 0.32),
    ("crack", "crack_threshold", float, 0.5, 0.25),
    ("crack", "forerunning_gap", float, 2.0, 2.0),
    ("boundary", "outer_solid", str, "normal", "normal"),
    ("boundary", "outer_fluid", str, "impermeable", "drained"),
    ("coupling", "mode", str, "nonlocal", "nonlocal"),
    ("coupling", "refresh_direction", bool, True, True),
    ("output", "fields", bool, True, True),
    ("output", "field_interval", int, 1000, 100),
    ("output", "series", bool, True, True),
    ("output", "series_interval", int, 1, 1),
]

_KEYS = {key: (section, typ) for section, key, typ, *_ in SCHEMA}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario; all quantities SI."""

    kind: str
    case: int
    saturated: bool
    width: float
    width_cells: int
    height: float
    thickness: float
    snap_to_grid: bool
    horizon: float
    m_ratio: int
    partial_volume: bool
    dt: float
    theta: float
    duration: float
    steps: int
    E: float
    nu: float
    Gc: float
    rho_solid: float
    density: float
    alpha: float
    porosity: float
    K_solid: float
    K_fluid: float
    viscosity: float
    permeability: float
    rho_fluid: float
    surface_pressure: float
    crack_pressure: float
    load_halfwidth: float
    injection_rate: float
    injection_share: float
    precrack_length: float
    failure: bool
    centerline_only: bool
    c1: float
    c2: float
    crack_threshold: float
    forerunning_gap: float
    outer_solid: str
    outer_fluid: str
    mode: str
    refresh_direction: bool
    fields: bool
    field_interval: int
    series: bool
    series_interval: int
    source: Optional[str] = None

    @property
    def spacing(self) -> float:
        return self.horizon / self.m_ratio

    @property
    def n_steps(self) -> int:
        return self.steps if self.steps >= 0 else int(round(self.duration / self.dt))

    def solid_constants(self) -> pd_core.ElasticConstants:
        return pd_core.ElasticConstants(self.E, self.nu, self.Gc, self.density)

    def flow_properties(self) -> flow_fem.FlowProperties:
        return flow_fem.FlowProperties(self.alpha, self.porosity, self.permeability, self.K_solid,
                                       self.K_fluid, self.viscosity, self.rho_solid, self.rho_fluid)

    def derived(self) -> Dict[str, float]:
        """Critical stretch, stable time step, wave speed and storage coefficient."""
        solid = self.solid_constants()
        dt_max = stable_dt(solid, self.horizon)
        return {
            "s_c": pd_core.critical_stretch(solid, self.horizon).s_c,
            "dt_max": dt_max,
            "wave_speed": self.horizon / dt_max,
            "s_r": flow_fem.storage_coefficient(self.alpha, self.porosity, self.K_solid, self.K_fluid),
            "spacing": self.spacing,
            "density": self.density,
            "steps": float(self.n_steps),
        }

    def with_values(self, **changes) -> "ScenarioConfig":
        """Copy with updated keys, re-validated."""
        raw = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "source"}
        raw.update(changes)
        if "density" not in changes and ("rho_solid" in changes or "rho_fluid" in changes
                                         or "porosity" in changes):
            raw["density"] = None
        return _validate(raw, self.source)


def _parse_value(typ, text: str):
    text = text.strip()
    if typ is bool:
        low = text.lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if typ is int:
        f = float(text)
        if f != int(f):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(f)
    if typ is float:
        return float(text)
    return text


def parse_scenario(text: str, source: Optional[str] = None) -> ScenarioConfig:
    """Parse and validate scenario text."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (E vs e)
    try:
        parser.read_string(text, source=source or "<string>")
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse scenario {source or ''}: {exc}") from exc

    problems: List[str] = []
    raw: Dict[str, object] = {}
    sections = {s for s, *_ in SCHEMA}
    for section in parser.sections():
        if section not in sections:
            problems.append(f"[{section}]: unknown section")
            continue
        for key, value in parser.items(section):
            if key not in _KEYS or _KEYS[key][0] != section:
                problems.append(f"[{section}] {key}: unknown key")
                continue
            try:
                raw[key] = _parse_value(_KEYS[key][1], value)
            except ValueError as exc:
                problems.append(f"[{section}] {key}: {exc}")
    if problems:
        raise ValidationError(problems)
    return _validate(raw, source)


def load_scenario(path) -> ScenarioConfig:
    """Read, parse and validate a scenario file."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ConfigurationError(f"scenario file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source=path)


def _validate(raw: Dict[str, object], source: Optional[str]) -> ScenarioConfig:
    problems: List[str] = []
    kind = raw.get("kind")
    if kind not in KINDS:
        problems.append(f"[scenario] kind: must be one of {', '.join(KINDS)}, got {kind!r}")
        column = 3
    else:
        column = 3 if kind == "consolidation" else 4
    values: Dict[str, object] = {}
    for section, key, typ, d_cons, d_fore in SCHEMA:
        default = (d_cons, d_fore)[column - 3]
        if key in raw and raw[key] is not None:
            values[key] = raw[key]
        elif default is REQUIRED:
            if key != "kind":
                problems.append(f"[{section}] {key}: required field is missing")
            values[key] = None
        else:
            values[key] = default
    if problems:
        raise ValidationError(problems)

    v = values
    if kind == "forerunning":
        if v["case"] not in (1, 2, 3):
            problems.append(f"[scenario] case: forerunning case must be 1, 2 or 3, got {v['case']}")
        if v["saturated"] is None:
            v["saturated"] = v["case"] != 1
    positive = ["height", "thickness", "horizon", "dt", "E", "Gc", "rho_solid", "K_solid", "K_fluid",
                "viscosity", "permeability", "rho_fluid"]
    for key in positive:
        val = v[key]
        if not (isinstance(val, (int, float)) and val > 0):
            problems.append(f"[{_KEYS[key][0]}] {key}: must be positive, got {val!r}")
    if v["m_ratio"] < 1:
        problems.append(f"[discretization] m_ratio: must be >= 1, got {v['m_ratio']}")
    if not 0.0 <= v["theta"] <= 1.0:
        problems.append(f"[time] theta: must lie in [0, 1], got {v['theta']}")
    if v["duration"] < 0:
        problems.append(f"[time] duration: must be non-negative, got {v['duration']}")
    if v["steps"] < -1:
        problems.append(f"[time] steps: must be >= 0 (or -1 for duration / dt), got {v['steps']}")
    if not -1.0 < v["nu"] < 0.5:
        problems.append(f"[solid] nu: must lie in (-1, 0.5), got {v['nu']}")
    if not 0.0 <= v["porosity"] <= v["alpha"] <= 1.0:
        problems.append(f"[fluid] alpha, porosity: need 0 <= porosity <= alpha <= 1, "
                        f"got porosity={v['porosity']}, alpha={v['alpha']}")
    if not 0.0 < v["c1"] < v["c2"] <= 1.0:
        problems.append(f"[crack] c1, c2: need 0 < c1 < c2 <= 1, got c1={v['c1']}, c2={v['c2']}")
    if not 0.0 < v["crack_threshold"] <= 1.0:
        problems.append(f"[crack] crack_threshold: must lie in (0, 1], got {v['crack_threshold']}")
    if v["forerunning_gap"] <= 0:
        problems.append(f"[crack] forerunning_gap: must be positive, got {v['forerunning_gap']}")
    for key in ("surface_pressure", "crack_pressure", "load_halfwidth", "injection_rate", "precrack_length"):
        if v[key] < 0:
            problems.append(f"[{_KEYS[key][0]}] {key}: must be non-negative, got {v[key]}")
    if not 0.0 < v["injection_share"] <= 1.0:
        problems.append(f"[loading] injection_share: must lie in (0, 1], got {v['injection_share']}")
    if v["outer_solid"] not in ("free", "normal", "clamped"):
        problems.append(f"[boundary] outer_solid: must be free, normal or clamped, got {v['outer_solid']!r}")
    if v["outer_fluid"] not in ("drained", "impermeable"):
        problems.append(f"[boundary] outer_fluid: must be drained or impermeable, got {v['outer_fluid']!r}")
    if v["mode"] not in ("nonlocal", "local"):
        problems.append(f"[coupling] mode: must be 'nonlocal' or 'local', got {v['mode']!r}")
    for key in ("field_interval", "series_interval"):
        if v[key] < 1:
            problems.append(f"[output] {key}: must be >= 1, got {v[key]}")
    if problems:
        raise ValidationError(problems)

    spacing = v["horizon"] / v["m_ratio"]
    if v["width"] is None:
        if v["width_cells"] < 1:
            problems.append("[domain] width: give width or a positive width_cells")
        else:
            v["width"] = v["width_cells"] * spacing
    elif v["width_cells"] > 0:
        v["width"] = v["width_cells"] * spacing
    if v["snap_to_grid"] and not problems:
        for key in ("width", "height"):
            cells = max(1, int(round(v[key] / spacing)))
            v[key] = cells * spacing
    if not problems and v["width"] <= 0:
        problems.append(f"[domain] width: must be positive, got {v['width']!r}")
    if not problems and v["precrack_length"] >= v["width"]:
        problems.append(f"[crack] precrack_length: must be shorter than the domain width {v['width']}")
    if v["density"] is None:
        v["density"] = (1.0 - v["porosity"]) * v["rho_solid"] + v["porosity"] * v["rho_fluid"]
    elif v["density"] <= 0:
        problems.append(f"[solid] density: must be positive, got {v['density']}")
    if problems:
        raise ValidationError(problems)

    try:
        solid = pd_core.ElasticConstants(v["E"], v["nu"], v["Gc"], v["density"])
    except ValueError as exc:
        raise ValidationError([f"[solid]: {exc}"]) from exc
    dt_max = stable_dt(solid, v["horizon"])
    if not v["dt"] < dt_max:
        raise StabilityError(v["dt"], dt_max)
    return ScenarioConfig(source=source, **v)


# ---------------------------------------------------------------------------
# runnable scenarios


@dataclass
class RunResult:
    series: Dict[str, np.ndarray] = field(default_factory=dict)
    events: List[dict] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    steps: int = 0


class Scenario:
    """A configured simulation plus its probes and output schedule.

    ``probes`` maps a CSV stem to a function of the simulation returning one
    float; they are sampled every ``series_interval`` steps and at step 0.
    """

    def __init__(self, config: ScenarioConfig, simulation: Simulation, probes: Dict[str, Callable],
                 tracker: Optional[CrackTracker] = None, crack_line: Optional[Callable] = None):
        self.config = config
        self.simulation = simulation
        self.probes = probes
        self.tracker = tracker
        self._crack_line = crack_line
        self._times: List[float] = []
        self._samples: Dict[str, List[float]] = {name: [] for name in probes}

    @property
    def grid(self):
        return self.simulation.grid

    def crack_line_damage(self) -> np.ndarray:
        return self._crack_line(self.simulation)

    def _sample(self):
        sim = self.simulation
        self._times.append(sim.state.time)
        for name, fn in self.probes.items():
            self._samples[name].append(float(fn(sim)))
        if self.tracker is not None:
            self.tracker.update(self.crack_line_damage(), sim.state.time)

    def run(self, output_dir=None, n_steps: Optional[int] = None,
            progress: Optional[Callable[[int, int], None]] = None) -> RunResult:
        """Advance the simulation and write the configured outputs.

        With ``output_dir`` None nothing is written.
        """
        cfg = self.config
        n_steps = cfg.n_steps if n_steps is None else n_steps
        sim = self.simulation
        writer = io.OutputWriter(output_dir, cfg.fields, cfg.series) if output_dir is not None else None
        self._sample()
        if writer is not None and cfg.fields:
            writer.field_snapshot(sim)
        for k in range(1, n_steps + 1):
            sim.advance()
            if k % cfg.series_interval == 0 or k == n_steps:
                self._sample()
            if writer is not None and cfg.fields and k % cfg.field_interval == 0:
                writer.field_snapshot(sim)
            if progress is not None:
                progress(k, n_steps)
        result = RunResult(steps=n_steps)
        t = np.asarray(self._times)
        for name, vals in self._samples.items():
            result.series[name] = np.column_stack([t, np.asarray(vals)])
        if self.tracker is not None:
            tt, tip, length = self.tracker.arrays()
            result.series["crack_length"] = np.column_stack([tt, length, tip])
            result.events = list(self.tracker.events)
        if writer is not None:
            writer.series(result)
            result.files = writer.files
        return result


def _layer(coords_1d, edge: float, depth: float) -> np.ndarray:
    return np.abs(coords_1d - edge) < depth - 1e-9 * depth


def build_consolidation(config: ScenarioConfig) -> Scenario:
    """Saturated column under a sudden surface pressure.

    Top edge drained (p = 0) and loaded; other edges impermeable with the
    normal displacement fixed over a layer one horizon deep.
    """
    if config.kind != "consolidation":
        raise ConfigurationError(f"scenario kind {config.kind!r} is not 'consolidation'")
    dx = config.spacing
    domain = Domain2D(config.width, config.height, dx, thickness=config.thickness)
    grid, mesh = build_grid(domain)
    build_families(grid, config.m_ratio, config.partial_volume)
    n = grid.n_nodes
    x, y = grid.coords[:, 0], grid.coords[:, 1]
    x0, y0 = grid.origin
    W, H = grid.nx * dx, grid.ny * dx
    delta = grid.horizon

    fixed = np.zeros((n, 2), dtype=bool)
    fixed[_layer(y, y0, delta), 1] = True
    fixed[_layer(x, x0, delta) | _layer(x, x0 + W, delta), 0] = True

    top = grid.node_index(np.arange(grid.nx + 1), grid.ny)
    bottom = grid.node_index(np.arange(grid.nx + 1), 0)
    body = np.zeros((n, 2))
    body[top, 1] = -config.surface_pressure / dx
    loading = Loading(body, pressure_nodes=top, pressure_values=0.0)

    flow = config.flow_properties() if config.saturated else None
    sim = Simulation(grid, mesh, config.solid_constants(), flow, config.dt, config.theta, loading, fixed,
                     c1=config.c1, c2=config.c2, coupling_mode=config.mode,
                     refresh_direction=config.refresh_direction)
    probes = {
        "top_uy": lambda s: s.state.u[top, 1].mean(),
        "bottom_p": lambda s: s.state.p[bottom].mean(),
    }
    logger.info("consolidation column %.4g x %.4g m, %d nodes, %d bonds", W, H, n, grid.n_bonds)
    return Scenario(config, sim, probes)


def build_forerunning(config: ScenarioConfig, case: Optional[int] = None) -> Scenario:
    """Right half of a rectangular specimen with a centred pre-crack.

    Case 1 is dry with crack-face pressure, case 2 saturated with the same
    load, case 3 saturated with fluid injection at the crack centre.  The
    left edge is the symmetry line (u_x = 0 over one horizon, impermeable).
    Top and bottom edges are free, normal-fixed or clamped over one horizon
    (``outer_solid``); top, bottom and right edges are drained or
    impermeable (``outer_fluid``).
    """
    if config.kind != "forerunning":
        raise ConfigurationError(f"scenario kind {config.kind!r} is not 'forerunning'")
    if case is not None and case != config.case:
        if case not in (1, 2, 3):
            raise ConfigurationError(f"forerunning case must be 1, 2 or 3, got {case}")
        config = config.with_values(case=case, saturated=case != 1)
    dx = config.spacing
    domain = Domain2D(config.width, config.height, dx, thickness=config.thickness)
    grid, mesh = build_grid(domain)
    build_families(grid, config.m_ratio, config.partial_volume)
    n = grid.n_nodes
    x, y = grid.coords[:, 0], grid.coords[:, 1]
    x0, y0 = grid.origin
    W, H = grid.nx * dx, grid.ny * dx
    yc = y0 + 0.5 * H
    path = flow_fem.CrackPath(grid, yc, x0, x0 + W)

    if config.precrack_length > 0:
        apply_precrack(grid, PrecrackSegment((x0 - 0.5 * dx, yc), (x0 + config.precrack_length, yc)))
    allowed = pd_core.centerline_predicate(grid, yc) if config.centerline_only else None

    fixed = np.zeros((n, 2), dtype=bool)
    fixed[_layer(x, x0, grid.horizon), 0] = True
    edges = _layer(y, y0, grid.horizon) | _layer(y, y0 + H, grid.horizon)
    if config.outer_solid in ("normal", "clamped"):
        fixed[edges, 1] = True
    if config.outer_solid == "clamped":
        fixed[edges, 0] = True

    body = np.zeros((n, 2))
    injection = None
    if config.case in (1, 2) and config.crack_pressure > 0:
        cols = np.nonzero(path.x <= x0 + config.load_halfwidth + 1e-9 * dx)[0]
        body[path.above[cols], 1] += config.crack_pressure / dx
        body[path.below[cols], 1] -= config.crack_pressure / dx
    if config.case == 3:
        injection = np.zeros(n)
        # the two nodes straddling the crack centre are equidistant from it
        injection[[path.below[0], path.above[0]]] = 0.5 * config.injection_share * config.injection_rate
    drained = None
    if config.outer_fluid == "drained":
        drained = np.nonzero(_layer(x, x0 + W, dx) | _layer(y, y0, dx) | _layer(y, y0 + H, dx))[0]
    loading = Loading(body, injection, drained, 0.0)

    flow = config.flow_properties() if config.saturated else None
    s_c = pd_core.critical_stretch(config.solid_constants(), grid.horizon).s_c if config.failure else None
    sim = Simulation(grid, mesh, config.solid_constants(), flow, config.dt, config.theta, loading, fixed,
                     critical_stretch=s_c, allowed_bonds=allowed, crack_path=path, c1=config.c1,
                     c2=config.c2, coupling_mode=config.mode, refresh_direction=config.refresh_direction)

    def crack_line(s):
        return np.maximum(s.state.phi[path.below], s.state.phi[path.above])

    tracker = CrackTracker(path.x, dx, config.crack_threshold, config.forerunning_gap)
    probes = {"crack_opening_center": lambda s: float(path.opening(s.state.u)[0])}
    logger.info("forerunning case %d: %d nodes, %d bonds", config.case, n, grid.n_bonds)
    return Scenario(config, sim, probes, tracker, crack_line)


def build_scenario(config: ScenarioConfig) -> Scenario:
    if config.kind == "consolidation":
        return build_consolidation(config)
    return build_forerunning(config)


def shipped_config(name: str) -> str:
    """Path of a scenario file bundled with the package."""
    here = os.path.join(os.path.dirname(__file__), "configs", name)
    if not os.path.isfile(here):
        raise ConfigurationError(f"no bundled scenario named {name!r}")
    return here
