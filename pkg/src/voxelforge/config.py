"""Configuration objects and the flat-JSON config file format.

All runtime knobs live in two frozen dataclasses: ``LatticeConfig`` for
the physics and ``EvolutionConfig`` for the optimizer. A run config file
is a single flat JSON object; unknown keys are rejected so stale configs
fail loudly instead of silently drifting.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .development import DevelopmentRule


class ConfigError(ValueError):
    """Raised when a config value or file is invalid. Names the bad keys."""


@dataclass(frozen=True)
class LatticeConfig:
    """Physical parameters of the voxel lattice and its simulation."""

    voxel_edge_length: float = 0.01      # m, rest length of one voxel
    density: float = 1.0e4               # kg/m^3 ("heavy" materials)
    gravity: float = 9.81                # m/s^2, downward
    ground_stiffness: float = 1.0e6      # N/m penalty spring
    friction_coefficient: float = 1.0    # Coulomb, kinetic
    damping_ratio: float = 0.3           # per-spring viscous damping ratio
    dt_safety_factor: float = 0.1        # fraction of 2/omega_max
    settle_duration: float = 0.5         # s under gravity before actuation
    sim_cycles: int = 25                 # actuation periods simulated
    actuation_amplitude: float = 0.145   # A, peak rest-length change
    actuation_frequency: float = 5.0     # f, Hz
    k_min: float = 1.0e4                 # Pa, softest modulus
    k_max: float = 1.0e10                # Pa, stiffest modulus
    signal_filter_time_constant: float = 0.2  # s; 0 disables smoothing

    def validate(self) -> None:
        bad = []
        if not self.voxel_edge_length > 0:
            bad.append("voxel_edge_length must be > 0")
        if not self.density > 0:
            bad.append("density must be > 0")
        if not self.k_min < self.k_max:
            bad.append("k_min must be < k_max")
        if not 0 < self.dt_safety_factor < 1:
            bad.append("dt_safety_factor must be in (0, 1)")
        if not 0 <= self.actuation_amplitude <= 0.2:
            bad.append("actuation_amplitude must be in [0, 0.2]")
        if self.actuation_frequency <= 0:
            bad.append("actuation_frequency must be > 0")
        if self.sim_cycles < 1:
            bad.append("sim_cycles must be >= 1")
        if self.settle_duration < 0:
            bad.append("settle_duration must be >= 0")
        if self.ground_stiffness <= 0:
            bad.append("ground_stiffness must be > 0")
        if self.friction_coefficient < 0:
            bad.append("friction_coefficient must be >= 0")
        if self.damping_ratio < 0:
            bad.append("damping_ratio must be >= 0")
        if self.signal_filter_time_constant < 0:
            bad.append("signal_filter_time_constant must be >= 0")
        for f_ in dataclasses.fields(self):
            v = getattr(self, f_.name)
            if not math.isfinite(v):
                bad.append(f"{f_.name} must be finite")
        if bad:
            raise ConfigError("; ".join(bad))


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one seeded evolutionary trial."""

    generations: int = 50
    population_size: int = 24
    seed: int = 1
    development_rule: DevelopmentRule = DevelopmentRule.NONE
    lattice_dims: tuple[int, int, int] = (10, 10, 10)
    checkpoint_interval: int = 10
    lattice: LatticeConfig = field(default_factory=LatticeConfig)

    def validate(self) -> None:
        bad = []
        if self.population_size < 2:
            bad.append("population_size must be >= 2")
        if self.generations < 0:
            bad.append("generations must be >= 0")
        if self.checkpoint_interval < 1:
            bad.append("checkpoint_interval must be >= 1")
        if len(self.lattice_dims) != 3 or any(d < 1 for d in self.lattice_dims):
            bad.append("lattice_dims must be three positive integers")
        if bad:
            raise ConfigError("; ".join(bad))
        self.lattice.validate()


_LATTICE_KEYS = {f.name for f in dataclasses.fields(LatticeConfig)}
_EVO_KEYS = {"generations", "population_size", "seed", "development_rule",
             "lattice_dims", "checkpoint_interval"}


def config_from_dict(raw: dict) -> EvolutionConfig:
    """Build an EvolutionConfig from a flat dict, rejecting unknown keys."""
    unknown = sorted(set(raw) - _LATTICE_KEYS - _EVO_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    lat_kwargs = {k: v for k, v in raw.items() if k in _LATTICE_KEYS}
    if "sim_cycles" in lat_kwargs:
        lat_kwargs["sim_cycles"] = int(lat_kwargs["sim_cycles"])
    evo_kwargs = {k: v for k, v in raw.items() if k in _EVO_KEYS}
    if "development_rule" in evo_kwargs:
        evo_kwargs["development_rule"] = DevelopmentRule.from_name(
            evo_kwargs["development_rule"])
    if "lattice_dims" in evo_kwargs:
        dims = evo_kwargs["lattice_dims"]
        evo_kwargs["lattice_dims"] = tuple(int(d) for d in dims)
    cfg = EvolutionConfig(lattice=LatticeConfig(**lat_kwargs), **evo_kwargs)
    cfg.validate()
    return cfg


def config_to_dict(cfg: EvolutionConfig) -> dict:
    """Inverse of config_from_dict; flat, JSON-ready."""
    out = dataclasses.asdict(cfg.lattice)
    out.update(
        generations=cfg.generations,
        population_size=cfg.population_size,
        seed=cfg.seed,
        development_rule=cfg.development_rule.label,
        lattice_dims=list(cfg.lattice_dims),
        checkpoint_interval=cfg.checkpoint_interval,
    )
    return out


def load_config(path) -> EvolutionConfig:
    """Load and validate a flat JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}")
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}")


def desk_config(seed: int = 1,
                rule: DevelopmentRule = DevelopmentRule.STRESS) -> EvolutionConfig:
    """Small, fast configuration for smoke runs on a 5x5x5 lattice.

    Narrows the stiffness range and shortens the evaluation so a full
    multi-seed trial finishes in minutes on a laptop; full-scale values
    stay reachable through a custom config file.
    """
    lat = LatticeConfig(
        k_max=1.0e7,
        ground_stiffness=1.0e4,
        sim_cycles=6,
        settle_duration=0.3,
    )
    return EvolutionConfig(
        generations=50,
        population_size=8,
        seed=seed,
        development_rule=rule,
        lattice_dims=(5, 5, 5),
        checkpoint_interval=10,
        lattice=lat,
    )
