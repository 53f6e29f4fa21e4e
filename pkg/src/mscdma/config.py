"""Experiment configuration files.

Configs are TOML.  Every subcommand reads the blocks it needs; unknown
keys are rejected so typos surface as errors naming the offending field.
See ``configs/`` for one file per shipped experiment and the README for the
schema.
"""

from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .moments import ENGINES, SystemEnsemble
from .pulse import ChipPulse, RootRaisedCosine, Sinc, TypeA, TypeB, load_tabulated


class ConfigError(ValueError):
    pass


AXES = ("bandwidth", "load", "rolloff", "snr")
SCENARIOS = ("sync", "async-A", "async-B")
PULSES = ("sinc", "rrc")


def _take(block, path, allowed):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected a table")
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(extra)}")
    return block


def _num(block, path, key, default=None, positive=False, integer=False):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: required field missing")
        return default
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {val!r}")
    return int(val) if integer else float(val)


def _grid(block, path, key, default=None, increasing=True):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: required field missing")
        return tuple(default)
    vals = block[key]
    if not isinstance(vals, list):
        vals = [vals]
    if not vals:
        raise ConfigError(f"{path}.{key}: grid is empty")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        raise ConfigError(f"{path}.{key}: expected a list of numbers")
    if increasing and any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{path}.{key}: grid must be strictly increasing")
    return tuple(float(v) for v in vals)


@dataclass(frozen=True)
class PulseSpec:
    kind: str = "sinc"
    gamma: float = 1.0
    rolloff: float = 0.0
    chip_interval: float = 1.0
    front_end: str = "A"
    r: int = 1
    file: str = None

    def build(self):
        fe = TypeB() if self.front_end == "B" else TypeA(self.r)
        try:
            if self.kind == "tabulated":
                return load_tabulated(self.file, self.chip_interval, fe)
            kind = Sinc(self.gamma) if self.kind == "sinc" else RootRaisedCosine(self.rolloff)
            return ChipPulse(kind, self.chip_interval, fe)
        except ValueError as exc:
            raise ConfigError(f"pulse: {exc}") from exc


def parse_pulse(block, path="pulse"):
    _take(block, path, ("kind", "gamma", "rolloff", "chip_interval", "front_end", "r", "file"))
    kind = block.get("kind", "sinc")
    if kind not in ("sinc", "rrc", "tabulated"):
        raise ConfigError(f"{path}.kind: expected sinc, rrc or tabulated, got {kind!r}")
    fe = block.get("front_end", "A")
    if fe not in ("A", "B"):
        raise ConfigError(f"{path}.front_end: expected A or B, got {fe!r}")
    if kind == "tabulated" and "file" not in block:
        raise ConfigError(f"{path}.file: required for tabulated pulses")
    spec = PulseSpec(
        kind,
        _num(block, path, "gamma", 1.0, positive=True),
        _num(block, path, "rolloff", 0.0),
        _num(block, path, "chip_interval", 1.0, positive=True),
        fe,
        _num(block, path, "r", 1, positive=True, integer=True),
        block.get("file"),
    )
    spec.build()
    return spec


@dataclass(frozen=True)
class SystemSpec:
    load: float = 0.5
    powers: tuple = (1.0,)
    probs: tuple = (1.0,)
    delays: tuple = (0.0,)
    uniform_delay: bool = False
    n0: float = 0.0
    snr_db: tuple = ()

    def ensemble(self, n0=None, load=None):
        return SystemEnsemble(
            self.load if load is None else load, self.powers, self.delays, self.probs,
            self.uniform_delay, self.n0 if n0 is None else n0,
        )


def parse_system(block, path="system"):
    _take(block, path, ("load", "powers", "probs", "delays", "uniform_delay", "n0", "snr_db"))
    powers = _grid(block, path, "powers", (1.0,), increasing=False)
    probs = _grid(block, path, "probs", tuple([1.0 / len(powers)] * len(powers)), increasing=False)
    delays = _grid(block, path, "delays", tuple([0.0] * len(powers)), increasing=False)
    if not len(powers) == len(probs) == len(delays):
        raise ConfigError(f"{path}: powers, probs and delays need equal lengths")
    uniform = block.get("uniform_delay", False)
    if not isinstance(uniform, bool):
        raise ConfigError(f"{path}.uniform_delay: expected true or false")
    snr = _grid(block, path, "snr_db", (), increasing=True) if "snr_db" in block else ()
    n0 = _num(block, path, "n0", 0.0)
    if "n0" in block and snr:
        raise ConfigError(f"{path}: give either n0 or snr_db, not both")
    spec = SystemSpec(_num(block, path, "load", positive=True), powers, probs, delays, uniform, n0, snr)
    try:
        spec.ensemble()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return spec


@dataclass(frozen=True)
class MomentsSpec:
    depth: int = 8
    engines: tuple = ("theorem1",)
    grid_size: int = 1024


def parse_moments(block, path="moments"):
    _take(block, path, ("depth", "engines", "grid_size"))
    engines = block.get("engines", ["theorem1"])
    if isinstance(engines, str):
        engines = [engines]
    engines = parse_engines(engines, f"{path}.engines")
    return MomentsSpec(
        _num(block, path, "depth", 8, integer=True),
        engines,
        _num(block, path, "grid_size", 1024, positive=True, integer=True),
    )


def parse_engines(names, path="--engines"):
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    if list(names) == ["all"]:
        return ("theorem1", "corollary1", "theorem2", "algorithm1")
    if not names:
        raise ConfigError(f"{path}: no engine given")
    for n in names:
        if n not in ENGINES:
            raise ConfigError(f"{path}: unknown engine {n!r} (choose from {', '.join(ENGINES)}, all)")
    return tuple(names)


@dataclass(frozen=True)
class SeriesSpec:
    scenario: str
    pulse: str
    gamma: float = None
    rolloff: float = None


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    ranks: tuple
    series: tuple
    ridge: bool = False
    chip_interval: float = 1.0


def parse_sweep(block, series_blocks, detector, path="sweep"):
    _take(block, path, ("axis", "values", "chip_interval"))
    axis = block.get("axis")
    if axis not in AXES:
        raise ConfigError(f"{path}.axis: expected one of {', '.join(AXES)}, got {axis!r}")
    values = _grid(block, path, "values")
    _take(detector, "detector", ("ranks", "ridge"))
    ranks = tuple(int(v) for v in _grid(detector, "detector", "ranks"))
    ridge = detector.get("ridge", False)
    if not series_blocks:
        raise ConfigError("series: at least one [[series]] block is required")
    series = []
    for i, sb in enumerate(series_blocks):
        p = f"series[{i}]"
        _take(sb, p, ("scenario", "pulse", "gamma", "rolloff"))
        sc, pu = sb.get("scenario"), sb.get("pulse")
        if sc not in SCENARIOS:
            raise ConfigError(f"{p}.scenario: expected one of {', '.join(SCENARIOS)}, got {sc!r}")
        if pu not in PULSES:
            raise ConfigError(f"{p}.pulse: expected sinc or rrc, got {pu!r}")
        gamma = _num(sb, p, "gamma", -1.0)
        rolloff = _num(sb, p, "rolloff", -1.0)
        series.append(SeriesSpec(sc, pu, None if gamma < 0 else gamma, None if rolloff < 0 else rolloff))
    return SweepSpec(axis, values, ranks, tuple(series), ridge, _num(block, path, "chip_interval", 1.0, positive=True))


@dataclass(frozen=True)
class MonteCarloSpec:
    N: int = 512
    K: int = 256
    seeds: tuple = tuple(range(20))
    window: int = 9
    max_order: int = 4
    delays: str = "uniform"
    users: int = 0
    gate_pct: float = 3.0
    sinr_rank: int = 0
    trials: int = 2000
    realizations: int = 1


def parse_montecarlo(block, path="montecarlo"):
    _take(block, path, ("N", "K", "seeds", "first_seed", "window", "max_order", "delays", "users",
                        "gate_pct", "sinr_rank", "trials", "realizations"))
    nseeds = _num(block, path, "seeds", 20, positive=True, integer=True)
    first = _num(block, path, "first_seed", 0, integer=True)
    delays = block.get("delays", "uniform")
    if delays not in ("uniform", "sync"):
        raise ConfigError(f"{path}.delays: expected uniform or sync, got {delays!r}")
    spec = MonteCarloSpec(
        _num(block, path, "N", positive=True, integer=True),
        _num(block, path, "K", positive=True, integer=True),
        tuple(range(first, first + nseeds)),
        _num(block, path, "window", 9, positive=True, integer=True),
        _num(block, path, "max_order", 4, positive=True, integer=True),
        delays,
        _num(block, path, "users", 0, integer=True),
        _num(block, path, "gate_pct", 3.0, positive=True),
        _num(block, path, "sinr_rank", 0, integer=True),
        _num(block, path, "trials", 2000, positive=True, integer=True),
        _num(block, path, "realizations", 1, positive=True, integer=True),
    )
    return spec


@dataclass(frozen=True)
class ExperimentConfig:
    source: str
    pulse: PulseSpec = None
    system: SystemSpec = None
    moments: MomentsSpec = None
    sweep: SweepSpec = None
    montecarlo: MonteCarloSpec = None
    raw: dict = field(default_factory=dict, repr=False)


def load_config(path):
    """Read and validate a TOML config; syntax errors carry line and column."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, str(path))


def parse_config(raw, source="<config>"):
    _take(raw, "<top>", ("pulse", "system", "moments", "sweep", "series", "detector", "montecarlo"))
    cfg = dict(source=source, raw=raw)
    if "pulse" in raw:
        cfg["pulse"] = parse_pulse(raw["pulse"])
    if "system" in raw:
        cfg["system"] = parse_system(raw["system"])
    if "moments" in raw:
        cfg["moments"] = parse_moments(raw["moments"])
    if "sweep" in raw:
        cfg["sweep"] = parse_sweep(raw["sweep"], raw.get("series", []), raw.get("detector", {}))
    if "montecarlo" in raw:
        cfg["montecarlo"] = parse_montecarlo(raw["montecarlo"])
    return ExperimentConfig(**cfg)


def require(cfg, *blocks):
    for b in blocks:
        if getattr(cfg, b) is None:
            raise ConfigError(f"{cfg.source}: [{b}] block is required for this command")


def n0_values(system):
    """Noise levels to evaluate: from ``snr_db`` (SNR = 1/N0) or the single ``n0``."""
    if system.snr_db:
        return [(s, float(10.0 ** (-s / 10.0))) for s in system.snr_db]
    snr = float("inf") if system.n0 == 0 else float(-10 * np.log10(system.n0))
    return [(snr, system.n0)]
