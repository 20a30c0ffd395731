"""Machine configuration: cores, latency table, micro-architectural toggles, noise.

Configurations round-trip through JSON; the field names are documented in
``docs/machine_config.schema.json``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .geometry import CacheGeometry, GeometryError


class ConfigError(ValueError):
    """Invalid machine or run configuration (CLI exit code 2)."""


POLICIES = ("lru", "random")
CLUSTERS = ("little", "big")
SECURE_KINDS = ("none", "pl", "rf")
RF_L2_MODES = ("demand", "random")


@dataclass(frozen=True)
class LatencyTable:
    t_L1: int = 4
    t_L2: int = 14
    t_dram: int = 200
    t_wb_hit: int = 2
    flush_L1: int = 40
    flush_L2: int = 60
    flush_miss: int = 30
    inv_remote_clean_L1: int = 50
    inv_remote_dirty_L1: int = 80
    inv_remote_L2: int = 65
    cross_cluster_penalty: int = 30
    store_buffer_delta: int = 6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ConfigError(f"latency {name} must be >= 0")
        if not (0 < self.t_L1 < self.t_L2 < self.t_dram):
            raise ConfigError("latency table must satisfy 0 < t_L1 < t_L2 < t_dram")
        for name in ("t_wb_hit", "flush_L1", "flush_L2", "flush_miss",
                     "inv_remote_clean_L1", "inv_remote_dirty_L1", "inv_remote_L2"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"latency {name} must be positive")

    def scaled(self, factor: float) -> "LatencyTable":
        """Uniform frequency-style scaling; rounds to whole cycles."""
        if factor <= 0:
            raise ConfigError("scale factor must be positive")
        return LatencyTable(**{k: max(1, round(v * factor)) if v else 0
                               for k, v in asdict(self).items()})


@dataclass(frozen=True)
class MicroArchToggles:
    store_buffer: bool = True
    scu: bool = False
    transient_region: bool = False
    write_buffer_size: int = 8
    mshr_size: int = 8

    def __post_init__(self):
        if self.write_buffer_size < 0:
            raise ConfigError("write_buffer_size must be >= 0")
        if self.mshr_size < 1:
            raise ConfigError("mshr_size must be >= 1")


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("noise sigma must be >= 0")


@dataclass(frozen=True)
class CoreDescriptor:
    core_id: int
    cluster: str
    l1_geometry: CacheGeometry
    l1_policy: str = "random"

    def __post_init__(self):
        if self.cluster not in CLUSTERS:
            raise ConfigError(f"core {self.core_id}: cluster must be one of {CLUSTERS}")
        if self.l1_policy not in POLICIES:
            raise ConfigError(f"core {self.core_id}: policy must be one of {POLICIES}")


@dataclass(frozen=True)
class SecureConfig:
    kind: str = "none"
    rf_start: int | None = None
    rf_size: int = 1
    rf_l2_fill: str = "demand"

    def __post_init__(self):
        if self.kind not in SECURE_KINDS:
            raise ConfigError(f"secure kind must be one of {SECURE_KINDS}")
        if self.rf_size < 1:
            raise ConfigError("rf_size must be >= 1")
        if self.rf_start is not None and self.rf_start < 0:
            raise ConfigError("rf_start must be >= 0")
        if self.rf_l2_fill not in RF_L2_MODES:
            raise ConfigError(f"rf_l2_fill must be one of {RF_L2_MODES}")

    @property
    def window_start(self) -> int:
        return self.rf_size // 2 if self.rf_start is None else self.rf_start


LITTLE_L1 = CacheGeometry(32 * 1024, 4, 64)
BIG_L1 = CacheGeometry(64 * 1024, 16, 64)
DEFAULT_L2 = CacheGeometry(1024 * 1024, 16, 64)


def default_cores(n_little: int = 4, n_big: int = 4, policy: str = "random") -> tuple:
    cores = [CoreDescriptor(i, "little", LITTLE_L1, policy) for i in range(n_little)]
    cores += [CoreDescriptor(n_little + i, "big", BIG_L1, policy) for i in range(n_big)]
    return tuple(cores)


@dataclass(frozen=True)
class MachineConfig:
    cores: tuple = field(default_factory=default_cores)
    l2_geometry: CacheGeometry = DEFAULT_L2
    latency: LatencyTable = field(default_factory=LatencyTable)
    toggles: MicroArchToggles = field(default_factory=MicroArchToggles)
    noise: NoiseModel = field(default_factory=NoiseModel)
    secure: SecureConfig = field(default_factory=SecureConfig)
    warm_reset: bool = True
    name: str = "default"

    def __post_init__(self):
        if not self.cores:
            raise ConfigError("at least one core is required")
        ids = [c.core_id for c in self.cores]
        if ids != list(range(len(ids))):
            raise ConfigError("core ids must be 0..n-1 in order")
        line = self.l2_geometry.line_size
        if any(c.l1_geometry.line_size != line for c in self.cores):
            raise ConfigError("all caches must share one line size")

    @property
    def line_size(self) -> int:
        return self.l2_geometry.line_size

    def cluster_cores(self, cluster: str) -> list:
        return [c.core_id for c in self.cores if c.cluster == cluster]

    def with_toggles(self, **changes) -> "MachineConfig":
        return replace(self, toggles=replace(self.toggles, **changes))

    def with_noise(self, **changes) -> "MachineConfig":
        return replace(self, noise=replace(self.noise, **changes))

    def with_secure(self, **changes) -> "MachineConfig":
        return replace(self, secure=replace(self.secure, **changes))

    def with_policy(self, policy: str) -> "MachineConfig":
        return replace(self, cores=tuple(replace(c, l1_policy=policy) for c in self.cores))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cores": [
                {
                    "core_id": c.core_id,
                    "cluster": c.cluster,
                    "l1": c.l1_geometry.to_dict(),
                    "policy": c.l1_policy,
                }
                for c in self.cores
            ],
            "l2": self.l2_geometry.to_dict(),
            "latency": asdict(self.latency),
            "toggles": asdict(self.toggles),
            "noise": asdict(self.noise),
            "secure": asdict(self.secure),
            "warm_reset": self.warm_reset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MachineConfig":
        try:
            known = {"name", "cores", "l2", "latency", "toggles", "noise", "secure", "warm_reset"}
            unknown = set(d) - known
            if unknown:
                raise ConfigError(f"unknown machine config fields: {sorted(unknown)}")
            kwargs = {}
            if "cores" in d:
                kwargs["cores"] = tuple(
                    CoreDescriptor(
                        int(c["core_id"]),
                        c.get("cluster", "little"),
                        CacheGeometry.from_dict(c["l1"]),
                        c.get("policy", "random"),
                    )
                    for c in d["cores"]
                )
            if "l2" in d:
                kwargs["l2_geometry"] = CacheGeometry.from_dict(d["l2"])
            if "latency" in d:
                kwargs["latency"] = LatencyTable(**d["latency"])
            if "toggles" in d:
                kwargs["toggles"] = MicroArchToggles(**d["toggles"])
            if "noise" in d:
                kwargs["noise"] = NoiseModel(**d["noise"])
            if "secure" in d:
                kwargs["secure"] = SecureConfig(**d["secure"])
            if "warm_reset" in d:
                kwargs["warm_reset"] = bool(d["warm_reset"])
            if "name" in d:
                kwargs["name"] = str(d["name"])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (GeometryError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad machine config: {exc}") from exc


def load_machine(path) -> MachineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"machine config not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return MachineConfig.from_dict(data)


def save_machine(cfg: MachineConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


def default_machine() -> MachineConfig:
    """Reference machine: quad little + quad big, random replacement, leak-enabling toggles on."""
    return MachineConfig()


def single_core_machine(policy: str = "random") -> MachineConfig:
    """Little cluster only; what the single-core case expansion binds to."""
    return MachineConfig(cores=default_cores(4, 0, policy), name="little-only")
