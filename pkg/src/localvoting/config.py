"""Scenario and sweep configuration.

Files are flat ``key = value`` text grouped in sections::

    [topology]   nodes, width, height, range, max_attempts, positions
    [scheduler]  name, frame_length, gamma, order, transfer, lobats_threshold
    [traffic]    mode, connections, packets, inter_arrival, arrival_rate,
                 mean_duration, initial_queues, initial_slots
    [simulation] loss, duration, warmup, seed, replications, stall_window, trace
    [sweep]      axis, values, schedulers, replications, paired

``positions`` is ``x y; x y; ...``; list values are comma separated. Only
``[scheduler] name`` is mandatory.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field, fields

SCHEDULERS = ("local_voting", "drand", "lyui", "lobats", "lqf", "lqf_link")
SWEEP_AXES = ("connections", "area_side", "arrival_rate", "loss", "gamma")
DEFAULT_STEADY_DURATION = 3_000_000


class ConfigError(ValueError):
    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ScenarioConfig:
    scheduler: str
    nodes: int = 25
    width: float = 50.0
    height: float = 50.0
    range: float = 10.0
    max_attempts: int = 10_000
    positions: tuple | None = None
    frame_length: int = 10
    gamma: float = 1.0
    order: str = "load"
    transfer: str = "literal"
    lobats_threshold: int | None = None
    traffic: str = "burst"
    connections: int = 10
    packets: int = 100
    inter_arrival: int = 5
    arrival_rate: float = 1e-3
    mean_duration: float = 1000.0
    initial_queues: tuple | None = None
    initial_slots: tuple | None = None
    loss: float = 0.0
    duration: int | None = None       # steady mode; None means 3e6 slots
    warmup: int = 36_666              # steady mode metric cutoff
    seed: int = 1
    replications: int = 1
    stall_window: int = 100_000
    trace: bool = False

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def validate(cfg: ScenarioConfig):
    if cfg.scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {cfg.scheduler!r}; expected one of {', '.join(SCHEDULERS)}")
    if cfg.frame_length < 1:
        raise ValueError("frame_length must be >= 1")
    if not 0 <= cfg.loss < 1:
        raise ValueError("loss must be in [0, 1)")
    if cfg.gamma <= 0:
        raise ValueError("gamma must be positive")
    if cfg.transfer not in ("literal", "capped"):
        raise ValueError("transfer must be literal or capped")
    if cfg.order not in ("id", "random", "load"):
        raise ValueError("order must be id, random or load")
    if cfg.traffic not in ("burst", "steady", "preload"):
        raise ValueError("traffic mode must be burst, steady or preload")
    if cfg.traffic == "steady":
        if cfg.arrival_rate <= 0 or cfg.mean_duration <= 0:
            raise ValueError("steady traffic needs positive arrival_rate and mean_duration")
        if cfg.duration is not None and cfg.duration <= 0:
            raise ValueError("duration must be positive")
    if cfg.traffic == "preload" and cfg.initial_queues is None:
        raise ValueError("preload traffic needs initial_queues")
    n = len(cfg.positions) if cfg.positions is not None else cfg.nodes
    for name in ("initial_queues", "initial_slots"):
        v = getattr(cfg, name)
        if v is not None and len(v) != n:
            raise ValueError(f"{name} must list one value per node")
    if cfg.connections < 0 or cfg.packets < 1 or cfg.inter_arrival < 1:
        raise ValueError("connections >= 0, packets >= 1 and inter_arrival >= 1 required")
    if cfg.replications < 1:
        raise ValueError("replications must be >= 1")
    if cfg.warmup < 0 or cfg.stall_window < 1:
        raise ValueError("warmup >= 0 and stall_window >= 1 required")


# key -> (section, parser, formatter)
def _fmt_float(v):
    return repr(float(v))


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _fmt_ints(v):
    return ", ".join(str(x) for x in v)


def _parse_positions(s):
    out = []
    for pair in s.split(";"):
        if pair.strip():
            x, y = pair.split()
            out.append((float(x), float(y)))
    return tuple(out)


def _fmt_positions(v):
    return "; ".join(f"{float(x)!r} {float(y)!r}" for x, y in v)


_KEYS = {
    "nodes": ("topology", "nodes", int, str),
    "width": ("topology", "width", float, _fmt_float),
    "height": ("topology", "height", float, _fmt_float),
    "range": ("topology", "range", float, _fmt_float),
    "max_attempts": ("topology", "max_attempts", int, str),
    "positions": ("topology", "positions", _parse_positions, _fmt_positions),
    "scheduler": ("scheduler", "name", str, str),
    "frame_length": ("scheduler", "frame_length", int, str),
    "gamma": ("scheduler", "gamma", float, _fmt_float),
    "order": ("scheduler", "order", str, str),
    "transfer": ("scheduler", "transfer", str, str),
    "lobats_threshold": ("scheduler", "lobats_threshold", int, str),
    "traffic": ("traffic", "mode", str, str),
    "connections": ("traffic", "connections", int, str),
    "packets": ("traffic", "packets", int, str),
    "inter_arrival": ("traffic", "inter_arrival", int, str),
    "arrival_rate": ("traffic", "arrival_rate", float, _fmt_float),
    "mean_duration": ("traffic", "mean_duration", float, _fmt_float),
    "initial_queues": ("traffic", "initial_queues", _parse_ints, _fmt_ints),
    "initial_slots": ("traffic", "initial_slots", _parse_ints, _fmt_ints),
    "loss": ("simulation", "loss", float, _fmt_float),
    "duration": ("simulation", "duration", int, str),
    "warmup": ("simulation", "warmup", int, str),
    "seed": ("simulation", "seed", int, str),
    "replications": ("simulation", "replications", int, str),
    "stall_window": ("simulation", "stall_window", int, str),
    "trace": ("simulation", "trace", _parse_bool, lambda v: "true" if v else "false"),
}
_SECTION_ORDER = ("topology", "scheduler", "traffic", "simulation")
_BY_LOCATION = {(sec, key): attr for attr, (sec, key, _, _) in _KEYS.items()}


def _line_index(text):
    """Map (section, key) and section headers to 1-based line numbers."""
    where = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            where.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section:
            where[(section, m.group(1).strip().lower())] = no
    return where


def _read(text, source):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("syntax error", line, source) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(exc.message if hasattr(exc, "message") else str(exc), line, source) from None
    return cp


def _scenario_from(cp, where, source, allowed_extra=()):
    values = {}
    for section in cp.sections():
        sec = section.lower()
        if sec in allowed_extra:
            continue
        if sec not in _SECTION_ORDER:
            raise ConfigError(f"unknown section [{section}]", where.get((sec, None)), source)
        for key, raw in cp.items(section):
            attr = _BY_LOCATION.get((sec, key))
            line = where.get((sec, key))
            if attr is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, source)
            parse = _KEYS[attr][2]
            try:
                values[attr] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line, source) from None
    if "scheduler" not in values:
        line = where.get(("scheduler", None))
        raise ConfigError("missing key 'name' in [scheduler]", line, source)
    try:
        return ScenarioConfig(**values)
    except ValueError as exc:
        line = _guess_line(str(exc), where)
        raise ConfigError(str(exc), line, source) from None


def _guess_line(message, where):
    for attr, (sec, key, _, _) in _KEYS.items():
        if key in message or attr in message:
            if (sec, key) in where:
                return where[(sec, key)]
    return None


def parse_scenario(text: str, source: str = "<config>") -> ScenarioConfig:
    cp = _read(text, source)
    return _scenario_from(cp, _line_index(text), source)


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), str(path))


def dump_scenario(cfg: ScenarioConfig) -> str:
    lines = []
    for sec in _SECTION_ORDER:
        lines.append(f"[{sec}]")
        for f in fields(cfg):
            s, key, _, fmt = _KEYS[f.name]
            if s != sec:
                continue
            v = getattr(cfg, f.name)
            if v is None:
                continue
            lines.append(f"{key} = {fmt(v)}")
        lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axis: str
    values: tuple
    replications: int = 1
    schedulers: tuple = field(default_factory=tuple)
    paired: bool = False

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for s in self.schedulers:
            if s not in SCHEDULERS:
                raise ValueError(f"unknown scheduler {s!r}")

    def scenario(self, scheduler, value) -> ScenarioConfig:
        cfg = self.base.replace(scheduler=scheduler)
        if self.axis == "connections":
            return cfg.replace(connections=int(value))
        if self.axis == "area_side":
            return cfg.replace(width=float(value), height=float(value))
        if self.axis == "arrival_rate":
            return cfg.replace(arrival_rate=float(value))
        if self.axis == "loss":
            return cfg.replace(loss=float(value))
        return cfg.replace(gamma=float(value))


def parse_sweep(text: str, source: str = "<config>") -> SweepSpec:
    cp = _read(text, source)
    where = _line_index(text)
    if not cp.has_section("sweep"):
        raise ConfigError("missing section [sweep]", None, source)
    sw = cp["sweep"]
    for key in ("axis", "values"):
        if key not in sw:
            raise ConfigError(f"missing key {key!r} in [sweep]", where.get(("sweep", None)), source)
    base = _scenario_from(cp, where, source, allowed_extra=("sweep",))
    try:
        values = tuple(float(v) for v in sw["values"].split(",") if v.strip())
        schedulers = tuple(s.strip() for s in sw.get("schedulers", base.scheduler).split(",") if s.strip())
        reps = int(sw.get("replications", str(base.replications)))
        paired = _parse_bool(sw.get("paired", "false"))
        return SweepSpec(base, sw["axis"].strip(), values, reps, schedulers, paired)
    except ValueError as exc:
        raise ConfigError(str(exc), where.get(("sweep", None)), source) from None


def load_sweep(path) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_sweep(fh.read(), str(path))
