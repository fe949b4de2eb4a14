"""JSON run configuration with strict key checking."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .continuation import ContinuationConfig
from .dispersion import BOTTOMS
from .errors import ConfigurationError
from .grid import DEFAULT_P_MAX, build_grid
from .vorticity import VorticitySpec

OUTPUT_ENV = "DEEPSTOKES_OUTPUT_DIR"


def _strict(cls, d, what):
    if not isinstance(d, dict):
        raise ConfigurationError(f"{what} must be an object")
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ConfigurationError(f"unknown keys in {what}: {sorted(extra)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigurationError(f"bad {what}: {exc}") from None


@dataclass(frozen=True)
class GridConfig:
    nq: int = 64
    np_upper: int = 32
    np_lower: int = 128
    P_max: float = DEFAULT_P_MAX
    split: float = -1.0

    def __post_init__(self):
        for name in ("nq", "np_upper", "np_lower"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 8:
                raise ConfigurationError(f"grid.{name} must be an integer >= 8")
        if not (isinstance(self.P_max, (int, float)) and self.P_max > 0 and math.isfinite(self.P_max)):
            raise ConfigurationError("grid.P_max must be a positive number")

    def build(self, spec: VorticitySpec):
        return build_grid(self.nq, self.np_upper, self.np_lower, float(self.P_max), spec, self.split)


@dataclass(frozen=True)
class DispersionConfig:
    eps: float = 0.0
    mode_k: int = 1
    bottom: str = "tail"
    dp: float = 1e-2
    xtol: float = 1e-14
    bracket: tuple | None = None

    def __post_init__(self):
        if self.bottom not in BOTTOMS:
            raise ConfigurationError(f"dispersion.bottom must be one of {BOTTOMS}")
        if not self.eps >= 0:
            raise ConfigurationError("dispersion.eps must be non-negative")
        if not (isinstance(self.mode_k, int) and self.mode_k >= 1):
            raise ConfigurationError("dispersion.mode_k must be a positive integer")
        if not (self.dp > 0 and self.xtol > 0):
            raise ConfigurationError("dispersion.dp and dispersion.xtol must be positive")
        if self.bracket is not None:
            b = tuple(float(x) for x in self.bracket)
            if len(b) != 2 or not b[0] < b[1]:
                raise ConfigurationError("dispersion.bracket must be [lo, hi] with lo < hi")
            object.__setattr__(self, "bracket", b)


@dataclass(frozen=True)
class RunConfig:
    vorticity: VorticitySpec
    g: float = 9.81
    P_atm: float = 0.0
    grid: GridConfig = field(default_factory=GridConfig)
    dispersion: DispersionConfig = field(default_factory=DispersionConfig)
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    output_dir: str = "out"

    def __post_init__(self):
        if not (isinstance(self.g, (int, float)) and self.g > 0):
            raise ConfigurationError("g must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown top-level keys: {sorted(extra)}")
        if "vorticity" not in d:
            raise ConfigurationError("configuration needs a 'vorticity' entry")
        cont = d.get("continuation", {})
        if not isinstance(cont, dict):
            raise ConfigurationError("continuation must be an object")
        try:
            cont_cfg = ContinuationConfig.from_dict(cont)
        except TypeError as exc:
            raise ConfigurationError(f"bad continuation: {exc}") from None
        return cls(
            vorticity=VorticitySpec.from_dict(d["vorticity"]),
            g=float(d.get("g", 9.81)),
            P_atm=float(d.get("P_atm", 0.0)),
            grid=_strict(GridConfig, d.get("grid", {}), "grid"),
            dispersion=_strict(DispersionConfig, d.get("dispersion", {}), "dispersion"),
            continuation=cont_cfg,
            output_dir=str(d.get("output_dir", "out")),
        )

    def to_dict(self) -> dict:
        disp = asdict(self.dispersion)
        if disp["bracket"] is not None:
            disp["bracket"] = list(disp["bracket"])
        return {"vorticity": self.vorticity.to_dict(), "g": self.g, "P_atm": self.P_atm,
                "grid": asdict(self.grid), "dispersion": disp,
                "continuation": self.continuation.to_dict(), "output_dir": self.output_dir}

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply dotted-key overrides such as {"grid.nq": 32}; re-validates."""
        d = self.to_dict()
        for key, value in overrides.items():
            node = d
            parts = key.split(".")
            for part in parts[:-1]:
                if part not in node or not isinstance(node[part], dict):
                    raise ConfigurationError(f"override {key!r} names no configuration entry")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigurationError(f"override {key!r} names no configuration entry")
            node[parts[-1]] = value
        return RunConfig.from_dict(d)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    return RunConfig.from_dict(data)


__all__ = ["RunConfig", "GridConfig", "DispersionConfig", "load_config", "OUTPUT_ENV"]
