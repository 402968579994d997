"""Developmental stiffness-change rules and the actuation damping law.

Three lifetime rules act on each voxel's Young's modulus k: no change,
change proportional to the local stress delta, or change proportional to
the local pressure delta. Actuation amplitude is linearly damped in k so
the stiffest material does not actuate at all.
"""

from __future__ import annotations

import enum
import math


class DevelopmentRule(enum.Enum):
    NONE = 0
    STRESS = 1
    PRESSURE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "DevelopmentRule":
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValueError(
                f"unknown development rule {name!r}; "
                f"expected one of none, stress, pressure")


def xi(k: float, k_min: float, k_max: float) -> float:
    """Actuation damping factor: 1 at the softest modulus, 0 at the stiffest."""
    if not (k_min <= k <= k_max):
        raise ValueError(f"stiffness {k} outside [{k_min}, {k_max}]")
    return (k_max - k) / (k_max - k_min)


def voxel_length(t: float, phi: float, k: float, config) -> float:
    """Instantaneous rest-length multiplier of a voxel at time t.

    1 + A*sin(2*pi*f*t + phi)*xi(k); dimensionless, applied to the voxel
    edge length.
    """
    a = config.actuation_amplitude
    f = config.actuation_frequency
    return 1.0 + a * math.sin(2.0 * math.pi * f * t + phi) * xi(
        k, config.k_min, config.k_max)


def develop(k: float, alpha: float, signal_delta: float,
            rule: DevelopmentRule, k_min: float, k_max: float) -> float:
    """One development update of a voxel's stiffness, clamped to range."""
    if rule is DevelopmentRule.NONE:
        return k
    return min(k_max, max(k_min, k + alpha * signal_delta))
