"""Run configuration shared by the solver and the CLI."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace

from rabi2.numeric import DEFAULT_PRECISION, MIN_PRECISION

ENV_PREFIX = "RABI2_"


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = DEFAULT_PRECISION
    z_points: tuple[float, ...] = (100.0, 1000.0)
    tol_root: float = 1e-10
    tol_series: float = 1e-20
    l_max: int = 200
    l_start: int = 24
    delta_l: int = 8
    stable_rungs: int = 3
    scan_density: int = 200
    collapse_guard: float = 0.05
    # |G|/scale below this at a local minimum without a sign change is reported as a tangential root
    residual_floor: float = 1e-8
    # accepted shift of a root when the order is halved
    tol_order: float = 1e-8
    extrapolate: bool = False
    output_format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "z_points", tuple(float(z) for z in self.z_points))
        if self.precision_bits < MIN_PRECISION:
            raise ValueError(f"precision_bits must be >= {MIN_PRECISION}")
        if not self.z_points or any(z <= 0 for z in self.z_points):
            raise ValueError("z_points must be a nonempty set of positive numbers")
        if len(set(self.z_points)) != len(self.z_points):
            raise ValueError("z_points must be distinct")
        for name in ("tol_root", "tol_series", "tol_order", "residual_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.collapse_guard < 1:
            raise ValueError("collapse_guard must lie in [0, 1)")
        if self.l_start < 4 or self.l_max < self.l_start or self.delta_l < 2 or self.delta_l % 2:
            raise ValueError("need 4 <= l_start <= l_max and an even delta_l >= 2")
        if self.scan_density < 4 or self.stable_rungs < 1 or self.jobs < 1:
            raise ValueError("scan_density >= 4, stable_rungs >= 1 and jobs >= 1 required")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"output_format must be csv or json, got {self.output_format!r}")

    @property
    def z_primary(self) -> float:
        return max(self.z_points)

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["z_points"] = list(self.z_points)
        return d

    @classmethod
    def from_sources(cls, overrides: dict | None = None, environ=None) -> "RunConfig":
        """Built-in defaults < RABI2_* environment variables < explicit overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                values[f.name] = _parse(f.name, raw)
        for key, val in (overrides or {}).items():
            if val is not None:
                values[key] = val
        return cls(**values)


def _parse(name: str, raw: str):
    if name == "z_points":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if name == "output_format":
        return raw.strip().lower()
    if name == "extrapolate":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    default = RunConfig.__dataclass_fields__[name].default
    return int(raw) if isinstance(default, int) else float(raw)
