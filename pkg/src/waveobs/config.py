"""Experiment configuration: one YAML file per experiment.

Every section maps onto a dataclass.  Unknown keys, wrong types and invalid
values raise :class:`ConfigError` carrying the dotted field path and, when the
text is available, the line it came from.  ``dump_config`` emits a canonical
form, so ``dump(parse(dump(cfg))) == dump(cfg)`` byte for byte.
"""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from typing import Union

import yaml

from .core_model import Grid, MeasurementSelection, PhysicalParams
from .exceptions import ConfigError, DimensionError
from .simulate import SOURCE_PROFILES


@dataclass
class PhysicsConfig:
    c_squared: float = 0.9
    length: float = 2.0
    T_final: float = 100.0


@dataclass
class GridConfig:
    """Either ``n_x`` with ``cfl`` (or ``dt``), or explicit ``dx`` and ``dt``."""

    n_x: Union[int, None] = None
    cfl: Union[float, None] = None
    dx: Union[float, None] = None
    dt: Union[float, None] = None


@dataclass
class MeasurementConfig:
    """``full``, ``window`` (start, count), or ``end`` / ``middle`` (fraction of nodes)."""

    kind: str = "full"
    start: Union[int, None] = None
    count: Union[int, None] = None
    fraction: Union[float, None] = None


@dataclass
class NoiseConfig:
    sigma_state: float = 0.0
    sigma_meas: float = 0.0
    seed: int = 0


@dataclass
class GainConfig:
    source: str = "template"
    template: str = "auto"
    target_radius: float = 0.99
    path: Union[str, None] = None


@dataclass
class ObserverSettings:
    sigma: Union[float, str] = "auto"
    sigma_margin: float = 0.9
    init: str = "zero"
    kappa: int = 100


@dataclass
class InitialConditionsConfig:
    r1: dict = field(default_factory=lambda: {"kind": "zero"})
    r2: dict = field(default_factory=lambda: {"kind": "zero"})


@dataclass
class SweepConfig:
    """``placements`` is ``end_anchored`` (m = 1..n_x) or a list of measurement entries."""

    placements: Union[str, list] = "end_anchored"


@dataclass
class ExperimentConfig:
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    grid: GridConfig = field(default_factory=lambda: GridConfig(n_x=51, cfl=0.95))
    source: dict = field(default_factory=lambda: {"kind": "sine", "amplitude": 3.0, "frequency": 5.0})
    initial_conditions: InitialConditionsConfig = field(default_factory=InitialConditionsConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    noise: Union[NoiseConfig, None] = None
    gain: GainConfig = field(default_factory=GainConfig)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    sweep: Union[SweepConfig, None] = None
    output_dir: str = "out"

    # -- derived objects -------------------------------------------------
    def physical_params(self) -> PhysicalParams:
        p = self.physics
        try:
            return PhysicalParams(p.c_squared, p.length, p.T_final)
        except ValueError as exc:
            raise ConfigError(str(exc), field="physics") from exc

    def make_grid(self) -> Grid:
        params = self.physical_params()
        g = self.grid
        try:
            if g.n_x is not None:
                if g.dx is not None:
                    raise ConfigError("give n_x or dx, not both", field="grid")
                return Grid.from_nodes(params, g.n_x, cfl=g.cfl, dt=g.dt)
            if g.dx is None or g.dt is None or g.cfl is not None:
                raise ConfigError("without n_x, both dx and dt (and no cfl) are required", field="grid")
            return Grid.from_spacing(params, g.dx, g.dt)
        except (ValueError, DimensionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), field="grid") from exc

    def selection(self, n_x: int) -> MeasurementSelection:
        return selection_from(self.measurement, n_x, "measurement")

    def with_scale(self, n_x: int) -> ExperimentConfig:
        """Same experiment at another resolution, keeping the CFL number."""
        params = self.physical_params()
        grid = self.make_grid()
        return dataclasses.replace(self, grid=GridConfig(n_x=n_x, cfl=grid.cfl(params)))

    def with_seed(self, seed: int) -> ExperimentConfig:
        if self.noise is None:
            return self
        return dataclasses.replace(self, noise=dataclasses.replace(self.noise, seed=seed))


def selection_from(mc: MeasurementConfig, n_x: int, where: str) -> MeasurementSelection:
    if mc.kind == "full":
        return MeasurementSelection.full()
    if mc.kind == "window":
        if mc.start is None or mc.count is None:
            raise ConfigError("window measurement needs start and count", field=where)
        return MeasurementSelection.window(mc.start, mc.count)
    if mc.kind in ("end", "middle"):
        frac = 0.5 if mc.fraction is None else mc.fraction
        if not 0 < frac <= 1:
            raise ConfigError(f"fraction must lie in (0, 1], got {frac}", field=where)
        return getattr(MeasurementSelection, mc.kind)(n_x, frac)
    raise ConfigError(f"unknown measurement kind {mc.kind!r}", field=where + ".kind")


# -- generic dict <-> dataclass ------------------------------------------

def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _convert(value, tp, path, lines):
    origin = typing.get_origin(tp)
    if origin in (Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None:
            if type(None) in args:
                return None
            raise _err("must not be null", path, lines)
        options = [a for a in args if a is not type(None)]
        if len(options) == 1:
            return _convert(value, options[0], path, lines)
        for arg in options:
            try:
                return _convert(value, arg, path, lines)
            except ConfigError:
                pass
        raise _err(f"expected {' or '.join(_type_name(a) for a in options)}, "
                   f"got {value!r}", path, lines)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise _err(f"expected a mapping, got {type(value).__name__}", path, lines)
        return _build(tp, value, path, lines)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _err(f"expected a number, got {value!r}", path, lines)
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise _err(f"expected an integer, got {value!r}", path, lines)
        return value
    if tp is str:
        if not isinstance(value, str):
            raise _err(f"expected a string, got {value!r}", path, lines)
        return value
    if tp is dict:
        if not isinstance(value, dict):
            raise _err(f"expected a mapping, got {value!r}", path, lines)
        return value
    if tp is list:
        if not isinstance(value, list):
            raise _err(f"expected a list, got {value!r}", path, lines)
        return value
    raise TypeError(f"unsupported config type {tp}")


def _err(msg, path, lines):
    return ConfigError(msg, field=path, line=lines.get(path))


def _build(cls, data: dict, prefix: str, lines: dict):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            path = f"{prefix}.{key}" if prefix else str(key)
            raise _err(f"unknown key (allowed: {', '.join(sorted(names))})", path, lines)
    kwargs = {}
    for name in names:
        if name in data:
            path = f"{prefix}.{name}" if prefix else name
            kwargs[name] = _convert(data[name], hints[name], path, lines)
    return cls(**kwargs)


def _line_map(node, prefix="", out=None) -> dict:
    """Dotted key path -> 1-based line of the key in the YAML text."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for knode, vnode in node.value:
            path = f"{prefix}.{knode.value}" if prefix else str(knode.value)
            out[path] = knode.start_mark.line + 1
            _line_map(vnode, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = item.start_mark.line + 1
            _line_map(item, path, out)
    return out


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1)
    lines = _line_map(node) if node is not None else {}
    cfg = _build(ExperimentConfig, data, "", lines)
    validate_config(cfg, lines)
    return cfg


def validate_config(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    lines = lines or {}
    kind = cfg.source.get("kind")
    if kind not in SOURCE_PROFILES:
        raise _err(f"unknown source profile {kind!r}; expected one of {SOURCE_PROFILES}",
                   "source.kind", lines)
    for name in ("r1", "r2"):
        prof = getattr(cfg.initial_conditions, name).get("kind")
        if prof not in SOURCE_PROFILES:
            raise _err(f"unknown profile {prof!r}", f"initial_conditions.{name}.kind", lines)
    if cfg.gain.source not in ("template", "file"):
        raise _err("must be 'template' or 'file'", "gain.source", lines)
    if cfg.gain.source == "file" and not cfg.gain.path:
        raise _err("gain.source 'file' needs a path", "gain.path", lines)
    if cfg.gain.template not in ("auto", "diagonal", "two_block"):
        raise _err("must be one of auto, diagonal, two_block", "gain.template", lines)
    if not 0 < cfg.gain.target_radius < 1:
        raise _err("must lie in (0, 1)", "gain.target_radius", lines)
    sigma = cfg.observer.sigma
    if isinstance(sigma, str) and sigma != "auto":
        raise _err("must be 'auto' or a positive number", "observer.sigma", lines)
    if not isinstance(sigma, str) and not sigma > 0:
        raise _err("must be positive", "observer.sigma", lines)
    if not 0 < cfg.observer.sigma_margin <= 1:
        raise _err("must lie in (0, 1]", "observer.sigma_margin", lines)
    if cfg.observer.init not in ("zero", "truth"):
        raise _err("must be 'zero' or 'truth'", "observer.init", lines)
    if cfg.observer.kappa < 1:
        raise _err("must be >= 1", "observer.kappa", lines)
    if cfg.noise is not None and (cfg.noise.sigma_state < 0 or cfg.noise.sigma_meas < 0):
        raise _err("noise standard deviations must be non-negative", "noise", lines)
    if cfg.sweep is not None and isinstance(cfg.sweep.placements, str) \
            and cfg.sweep.placements != "end_anchored":
        raise _err("must be 'end_anchored' or a list of measurements", "sweep.placements", lines)
    cfg.make_grid()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=False)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text)


def config_from_dict(data: dict) -> ExperimentConfig:
    return parse_config(yaml.safe_dump(data, sort_keys=False))


def sweep_placements(cfg: ExperimentConfig, n_x: int) -> list[MeasurementSelection]:
    from .analysis import end_anchored_windows

    if cfg.sweep is None or cfg.sweep.placements == "end_anchored":
        return end_anchored_windows(n_x)
    out = []
    for i, entry in enumerate(cfg.sweep.placements):
        where = f"sweep.placements[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError("expected a measurement mapping", field=where)
        mc = _build(MeasurementConfig, entry, where, {})
        out.append(selection_from(mc, n_x, where))
    return out

