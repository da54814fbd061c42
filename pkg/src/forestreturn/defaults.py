"""Bundled placeholder tables.

The shipped growth coefficients, assortment yields, prices and harvesting
costs are illustrative placeholders.  They let every part of the pipeline
run out of the box; absolute outputs mean nothing until regional tables and
published growth coefficients are supplied.
"""
from importlib import resources
from pathlib import Path

from .growth import DiameterGrid, load_coefficients
from .valuation import EconomicTables, load_costs, load_prices, load_yields

DEFAULT_ENTRY_COST = 150.0
DEFAULT_THINNING_FACTOR = 1.5


def data_path(name: str) -> Path:
    return Path(str(resources.files("forestreturn") / "data" / name))


def default_coefficients():
    return load_coefficients(data_path("placeholder_growth.csv"))


def default_tables(grid: DiameterGrid = DiameterGrid(), **overrides) -> EconomicTables:
    entry = overrides.pop("entry_cost", DEFAULT_ENTRY_COST)
    factor = overrides.pop("thinning_factor", DEFAULT_THINNING_FACTOR)
    return EconomicTables(
        yields=load_yields(data_path("placeholder_yields.csv"), grid),
        prices=load_prices(data_path("placeholder_prices.csv")),
        costs=load_costs(data_path("placeholder_costs.csv"), grid, entry_cost=entry, thinning_factor=factor),
        **overrides,
    )
