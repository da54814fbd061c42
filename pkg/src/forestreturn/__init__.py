"""Size-structured stand simulation with size-based vigor and quality
thinning, and capital-weighted return-rate optimization of thinning
schedules and rotation age."""
from . import growth  # noqa: F401  (must precede vigor)
from . import vigor, quality, valuation, finance, early_stand, policy  # noqa: F401
from .defaults import default_coefficients, default_tables
from .early_stand import BootstrapSpec, bootstrap
from .errors import ConfigurationError, DegenerateStandError, TableError, ThinningSpecError
from .finance import Trajectory, expected_rate, instantaneous_rate
from .growth import SPECIES, DiameterGrid, GrowthCoefficients, StandState, basal_area, ba_weighted_mean_diameter, step
from .policy import PolicySpec, SearchSpace, optimize, simulate_rotation
from .scenario import ScenarioConfig

__version__ = "0.1.0"

__all__ = [
    "SPECIES",
    "BootstrapSpec",
    "ConfigurationError",
    "DegenerateStandError",
    "DiameterGrid",
    "GrowthCoefficients",
    "PolicySpec",
    "ScenarioConfig",
    "SearchSpace",
    "StandState",
    "TableError",
    "ThinningSpecError",
    "Trajectory",
    "ba_weighted_mean_diameter",
    "basal_area",
    "bootstrap",
    "default_coefficients",
    "default_tables",
    "expected_rate",
    "instantaneous_rate",
    "optimize",
    "simulate_rotation",
    "step",
]
