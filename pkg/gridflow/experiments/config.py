"""
Experiment configuration: flat JSON files whose keys mirror the CLI flags.

Values are resolved in three layers: per-kind defaults, then the JSON file,
then explicit command-line overrides.
"""
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

from ..errors import ConfigError
from ..psd import PsdConfig

logger = logging.getLogger(__name__)

KINDS = ("converge", "complexity", "evolve-thin-film", "evolve-spfc")

# converge/complexity protocols fix their domains; evolutions default to the coarsening runs
KIND_DEFAULTS = {
    "converge": {"L": 3.2, "eps": 0.1, "T": 0.32, "p": 4.0},
    "complexity": {"L": 1.0, "n": 128, "eps": 0.03, "s": 0.01, "p": 4.0},
    "evolve-thin-film": {"L": 12.8, "n": 128, "eps": 0.03, "s": 0.01, "p": 4.0},
    "evolve-spfc": {"L": 100.0, "n": 128, "eps": 1.0, "s": 0.01, "p": 4.0},
}

_TUPLE_KEYS = ("levels", "snapshot_times", "slope_window", "h_list", "eps_list", "s_list", "p_list")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "evolve-thin-film"
    n: int = 128
    L: float = 12.8
    p: float = 4.0
    eps: float = 0.03
    s: float = 0.01
    seed: int = 0
    tmax: float = 100.0
    out: str = "runs"
    tol: float = 1e-9
    levels: Tuple[int, ...] = (16, 32, 64, 128)
    gamma0: float = 0.5
    gamma1: float = 2.0
    amplitude: float = 0.05
    nucleation_centers: Tuple[Tuple[float, float], ...] = ()
    nucleation_amplitude: float = 0.3
    nucleation_sigma: float = 2.0
    snapshot_times: Tuple[float, ...] = ()
    slope_window: Optional[Tuple[float, float]] = None
    h_list: Tuple[float, ...] = ()
    eps_list: Tuple[float, ...] = ()
    s_list: Tuple[float, ...] = ()
    p_list: Tuple[float, ...] = ()
    tau: float = 1e-8
    max_iter: int = 200
    workers: int = 1
    render_png: bool = False
    log_every: int = 100
    T: float = 0.32

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {', '.join(KINDS)}, got {self.kind!r}")
        for name in ("n", "seed", "max_iter", "workers", "log_every"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.workers < 1 or self.log_every < 1 or self.max_iter < 1:
            raise ConfigError("workers, log_every and max_iter must be >= 1")
        for name in ("L", "s", "tmax", "tol", "tau", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive number, got {value!r}")
        if self.kind == "converge":
            if len(self.levels) < 2:
                raise ConfigError("converge needs at least two levels")
            for lo, hi in zip(self.levels, self.levels[1:]):
                if hi != 2 * lo:
                    raise ConfigError(f"levels must double strictly, got {list(self.levels)}")
        if self.slope_window is not None:
            if len(self.slope_window) != 2 or not (0 < self.slope_window[0] < self.slope_window[1]):
                raise ConfigError(f"slope_window must be [t0, t1] with 0 < t0 < t1, got {self.slope_window}")
        if any(t < 0 for t in self.snapshot_times):
            raise ConfigError("snapshot_times must be >= 0")
        for center in self.nucleation_centers:
            if len(center) != 2:
                raise ConfigError(f"nucleation centers are [x, y] pairs, got {center!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = dict(data)
        for key in _TUPLE_KEYS:
            if values.get(key) is not None:
                values[key] = tuple(values[key])
        if values.get("nucleation_centers") is not None:
            values["nucleation_centers"] = tuple(tuple(c) for c in values["nucleation_centers"])
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def psd_config(self) -> PsdConfig:
        return PsdConfig(tol_rel=self.tol, max_iter=self.max_iter)


def read_config_file(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def load_config(path=None, overrides: Optional[dict] = None, kind: Optional[str] = None) -> ExperimentConfig:
    """Merge per-kind defaults, the JSON file at path and the non-None overrides."""
    file_data = read_config_file(path) if path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    kind = overrides.get("kind", file_data.get("kind", kind or ExperimentConfig.kind))
    data = dict(KIND_DEFAULTS.get(kind, {}))
    data.update(file_data)
    data.update(overrides)
    data["kind"] = kind
    cfg = ExperimentConfig.from_dict(data)
    logger.debug("config: %s", cfg)
    return cfg


def save_config(path, cfg: ExperimentConfig):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(cfg.to_dict(), f, indent=2)
        f.write("\n")
