"""Run configuration: strict TOML with ``[scenario]``, ``[solver]``, ``[sweep]``,
``[market_b]`` and ``[output]`` sections.

Unknown sections or keys are rejected. When a ``[scenario]`` section is
present every model parameter must be given explicitly; without it the
defaults of the reference market apply.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import AgrifinError, DomainError
from .model import ScenarioParams

REQUIRED_SCENARIO = ("beta", "w", "sigma_bar", "sigma", "theta0", "c_f", "c_s")


class ConfigError(AgrifinError):
    """Malformed, incomplete or inconsistent configuration."""


@dataclass(frozen=True)
class SolverConfig:
    n_points: int = 133
    truncation: float = 4.0
    tol: float = 1e-7
    inner_tol: float = 1e-7
    max_iter: int = 10_000
    inner_maxiter: int = 200
    guess: float = 1.0
    n_starts: int = 20
    guess_high: float = 10_000.0
    seed: int = 0


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "alpha"
    values: tuple = ()
    start: float = 0.0
    stop: float = 0.0
    auto_range: bool = True  # alpha sweeps: derive [start, stop] from the model
    num: int = 51
    mode: str = "rational"
    alpha_cap: str = "integration"
    threads: str = "1"


@dataclass(frozen=True)
class MarketBConfig:
    target_default: float = 0.02
    sigma_multiplier: float = 2.0
    anchor_fixed_cost: bool = True
    w_max_factor: float = 1e4
    tolerance: float = 0.005


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv", "json")
    plot_script: bool = True


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    market_b: MarketBConfig = field(default_factory=MarketBConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            d = asdict(getattr(self, f.name))
            for k, v in list(d.items()):
                if isinstance(v, tuple):
                    d[k] = list(v)
            out[f.name] = d
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


_SECTIONS = {
    "scenario": ScenarioParams,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "market_b": MarketBConfig,
    "output": OutputConfig,
}


def _coerce(section: str, key: str, value, default):
    where = f"[{section}] {key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected an array, got {value!r}")
        return tuple(value)
    if isinstance(default, str):
        if key == "threads" and isinstance(value, int) and not isinstance(value, bool):
            return str(value)
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def _build(section: str, cls, table: dict):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    proto = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")
    if section == "scenario":
        missing = [k for k in REQUIRED_SCENARIO if k not in table]
        if missing:
            raise ConfigError(f"[scenario] missing required key(s): {', '.join(missing)}")
    kwargs = {k: _coerce(section, k, v, getattr(proto, k)) for k, v in table.items()}
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    parts = {name: _build(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    cfg = RunConfig(**parts)
    validate_config(cfg)
    return cfg


def loads_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    return config_from_dict(data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        return loads_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(cfg.to_toml(), encoding="utf-8", newline="\n")


def validate_config(cfg: RunConfig) -> None:
    s = cfg.solver
    if s.n_points < 3:
        raise ConfigError("[solver] n_points must be >= 3")
    for name in ("truncation", "tol", "inner_tol", "guess", "guess_high"):
        if not getattr(s, name) > 0:
            raise ConfigError(f"[solver] {name} must be > 0")
    for name in ("max_iter", "inner_maxiter", "n_starts"):
        if getattr(s, name) < 1:
            raise ConfigError(f"[solver] {name} must be >= 1")
    w = cfg.sweep
    if w.parameter not in ("alpha", "beta", "sigma_bar", "w"):
        raise ConfigError(f"[sweep] parameter must be alpha, beta, sigma_bar or w, got {w.parameter!r}")
    if w.mode not in ("rational", "naive", "both"):
        raise ConfigError(f"[sweep] mode must be rational, naive or both, got {w.mode!r}")
    if w.alpha_cap not in ("integration", "feasibility"):
        raise ConfigError(f"[sweep] alpha_cap must be integration or feasibility, got {w.alpha_cap!r}")
    if w.num < 1:
        raise ConfigError("[sweep] num must be >= 1")
    if w.threads != "auto":
        try:
            if int(w.threads) < 1:
                raise ValueError
        except ValueError:
            raise ConfigError(f"[sweep] threads must be a positive integer or 'auto', got {w.threads!r}") from None
    for v in w.values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"[sweep] values must be numbers, got {v!r}")
    m = cfg.market_b
    if not 0 < m.target_default < 1:
        raise ConfigError("[market_b] target_default must be in (0, 1)")
    if not (m.sigma_multiplier > 0 and m.w_max_factor > 1 and m.tolerance > 0):
        raise ConfigError("[market_b] sigma_multiplier, tolerance must be > 0 and w_max_factor > 1")
    bad = sorted(set(cfg.output.formats) - {"csv", "json"})
    if bad:
        raise ConfigError(f"[output] unsupported format(s): {', '.join(map(str, bad))}")
