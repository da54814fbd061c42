"""
Pre-model phase: planting until the saplings reach the two lowest diameter
classes.  The growth model does not cover it, so stand value is assumed to
grow exponentially from the regeneration investment to the value of the
handoff stand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, DegenerateStandError
from .finance import MONTHS_PER_YEAR, Event, Trajectory
from .growth import DiameterGrid, StandState, species_index
from .valuation import stand_value

DEFAULT_HANDOFF_MONTHS = {"spruce": 240, "pine": 210, "birch": 180}
DEFAULT_SITE = {"site_index": 20.0}


def default_regeneration_cost(planting_density: float) -> float:
    """Placeholder planting cost: fixed site preparation plus a per-seedling charge."""
    return 200.0 + 0.2 * planting_density


@dataclass(frozen=True)
class BootstrapSpec:
    species: str
    planting_density: float
    handoff_age_months: Optional[int] = None
    handoff_split: Tuple[float, float] = (0.5, 0.5)
    regeneration_cost: Optional[float] = None
    site: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SITE))

    def __post_init__(self):
        species_index(self.species)
        if self.planting_density <= 0:
            raise ConfigurationError("planting density must be positive")
        if len(self.handoff_split) != 2 or min(self.handoff_split) < 0 or not math.isclose(sum(self.handoff_split), 1.0):
            raise ConfigurationError("handoff_split must be two non-negative fractions summing to 1")
        if self.handoff_age <= 0:
            raise ConfigurationError("handoff age must be positive")

    @property
    def handoff_age(self) -> int:
        if self.handoff_age_months is not None:
            return int(self.handoff_age_months)
        return DEFAULT_HANDOFF_MONTHS[self.species]

    @property
    def investment(self) -> float:
        if self.regeneration_cost is not None:
            return float(self.regeneration_cost)
        return default_regeneration_cost(self.planting_density)


def handoff_state(spec: BootstrapSpec, grid: DiameterGrid) -> StandState:
    state = StandState.empty(grid, age=spec.handoff_age, site=spec.site)
    k = species_index(spec.species)
    state.stems[k, 0] = spec.planting_density * spec.handoff_split[0]
    state.stems[k, 1] = spec.planting_density * spec.handoff_split[1]
    return state


def exponential_rate(k0: float, k_end: float, years: float) -> float:
    """Continuous growth rate taking ``k0`` to ``k_end`` in ``years``."""
    if k0 <= 0 or k_end <= 0:
        raise DegenerateStandError(
            f"cannot fit exponential value growth from {k0:g} to {k_end:g}; both must be positive"
        )
    return math.log(k_end / k0) / years


def bootstrap(spec: BootstrapSpec, tables, grid: DiameterGrid, step_months: int = 30):
    """Return the value trajectory up to handoff and the handoff stand."""
    state = handoff_state(spec, grid)
    h = spec.handoff_age
    if h % step_months:
        raise ConfigurationError(f"handoff age {h} is not a multiple of the {step_months}-month step")
    k_handoff = stand_value(state, tables)
    standing = k_handoff - tables.land_value
    k0 = spec.investment
    g = exponential_rate(k0, standing, h / MONTHS_PER_YEAR)

    ages = np.arange(0, h + step_months, step_months, dtype=float)
    value = k0 * np.exp(g * ages / MONTHS_PER_YEAR)
    value[-1] = standing
    K = tables.land_value + value
    dk = g * value - (tables.annual_expense + tables.amortization)
    prefix = Trajectory(ages, K, dk, events=(Event(0.0, "regeneration", k0),))
    return prefix, state
