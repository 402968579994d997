"""Voxel-lattice soft robot simulator with developmental stiffness change.

Bodies are lattices of point-mass voxels joined by Hookean springs whose
rest lengths oscillate (volumetric actuation) and whose stiffness can
change during a robot's lifetime in response to internal stress or
pressure. On top of the physics sit a quad-CPPN generative encoding, an
Age-Fitness-Pareto optimizer, and post-hoc analysis metrics (geometric
diversity, stiffness robustness, canalization).
"""

__version__ = "0.1.0"

from .config import LatticeConfig, EvolutionConfig, ConfigError
from .development import DevelopmentRule

__all__ = [
    "LatticeConfig",
    "EvolutionConfig",
    "ConfigError",
    "DevelopmentRule",
    "__version__",
]
