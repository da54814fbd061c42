"""Scenario switches shared by the growth, vigor and quality code."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError

MODES = ("reference", "vigor_quality", "coupled")
GROWTH_MODES = ("markov", "non_markov")


@dataclass(frozen=True)
class ScenarioConfig:
    """Which couplings are active, plus grid and step settings.

    ``reference``      no vigor spreading, no quality bookkeeping.
    ``vigor_quality``  size-based vigor scales growth; thinning selects on
                       quality, quality only affects sawlog price.
    ``coupled``        as above, but vigor also scales quality at the
                       normalization instant and quality scales growth.
    """

    mode: str = "vigor_quality"
    alpha: float = 0.5
    half_width_b: float = 0.5
    growth_mode: str = "markov"
    class_width_mm: float = 50.0
    lowest_class_mm: float = 50.0
    n_classes: int = 12
    step_months: int = 30
    application_age_offset_months: int = 90

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown scenario mode {self.mode!r}; expected one of {MODES}")
        if self.growth_mode not in GROWTH_MODES:
            raise ConfigurationError(
                f"unknown growth_mode {self.growth_mode!r}; expected one of {GROWTH_MODES}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.half_width_b <= 1.0:
            raise ConfigurationError(f"half_width_b must lie in [0, 1], got {self.half_width_b}")
        if self.class_width_mm <= 0 or self.n_classes < 2 or self.step_months <= 0:
            raise ConfigurationError("class width, class count and step length must be positive")
        if self.application_age_offset_months % self.step_months:
            raise ConfigurationError("application_age_offset_months must be a multiple of step_months")

    @property
    def vigor_active(self) -> bool:
        return self.mode != "reference"

    @property
    def quality_active(self) -> bool:
        return self.mode != "reference"

    @property
    def quality_scales_growth(self) -> bool:
        return self.mode == "coupled"

    @property
    def vigor_scales_quality(self) -> bool:
        return self.mode == "coupled"
