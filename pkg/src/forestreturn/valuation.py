"""
Roadside pricing of trees and stands.

The quality coefficient of a class multiplies the sawlog unit price only,
so it has no effect on trees without sawlog content.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, NamedTuple, Tuple

import numpy as np

from .errors import TableError
from .growth import SPECIES, DiameterGrid, species_index


def _read_csv(path, required):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    except OSError as exc:
        raise TableError(f"{path}: cannot read table ({exc})") from exc
    if rows:
        missing = [c for c in required if c not in rows[0]]
        if missing:
            raise TableError(f"{path}: missing column(s) {', '.join(missing)}")
    return path, rows


def _float(path, lineno, row, key):
    try:
        return float(row[key])
    except (TypeError, ValueError):
        raise TableError(f"{path}: row {lineno}: bad value for {key!r}: {row[key]!r}") from None


@dataclass(frozen=True)
class AssortmentYieldTable:
    """Expected pulpwood and sawlog volume per stem (m^3), species x class."""

    grid: DiameterGrid
    v_pulp: np.ndarray
    v_saw: np.ndarray
    covered: np.ndarray

    def __post_init__(self):
        if np.any(self.v_pulp < 0) or np.any(self.v_saw < 0):
            raise TableError("assortment volumes must be non-negative")
        total = np.where(self.covered, self.v_pulp + self.v_saw, np.nan)
        for k, sp in enumerate(SPECIES):
            v = total[k][self.covered[k]]
            if np.any(np.diff(v) < -1e-12):
                raise TableError(f"total volume of {sp} decreases with diameter")

    @property
    def total(self) -> np.ndarray:
        return self.v_pulp + self.v_saw

    def check(self, species: int, class_index: int):
        if not self.covered[species, class_index]:
            lower = self.grid.lower_bounds[class_index]
            raise TableError(f"assortment yield table has no row for ({SPECIES[species]}, {lower:g} mm)")


def load_yields(path, grid: DiameterGrid) -> AssortmentYieldTable:
    """CSV columns: ``species,class_lower_mm,v_pulp_m3,v_saw_m3``."""
    path, rows = _read_csv(path, ("species", "class_lower_mm", "v_pulp_m3", "v_saw_m3"))
    shape = (len(SPECIES), grid.n_classes)
    v_pulp, v_saw = np.zeros(shape), np.zeros(shape)
    covered = np.zeros(shape, dtype=bool)
    lowers = grid.lower_bounds
    for lineno, row in enumerate(rows, start=2):
        sp = row["species"].strip()
        if sp not in SPECIES:
            raise TableError(f"{path}: row {lineno}: unknown species {sp!r}")
        lower = _float(path, lineno, row, "class_lower_mm")
        hit = np.nonzero(np.isclose(lowers, lower))[0]
        if not hit.size:
            continue  # classes outside the grid are ignored
        k, d = species_index(sp), int(hit[0])
        v_pulp[k, d] = _float(path, lineno, row, "v_pulp_m3")
        v_saw[k, d] = _float(path, lineno, row, "v_saw_m3")
        covered[k, d] = True
    try:
        return AssortmentYieldTable(grid, v_pulp, v_saw, covered)
    except TableError as exc:
        raise TableError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class PriceTable:
    """Roadside unit prices per species, currency / m^3."""

    pulp: np.ndarray
    saw: np.ndarray

    def __post_init__(self):
        if np.any(self.pulp < 0) or np.any(self.saw < 0):
            raise TableError("prices must be non-negative")
        if np.any(self.saw < self.pulp):
            raise TableError("sawlog price below pulpwood price")

    @classmethod
    def from_dict(cls, prices: Dict[str, Tuple[float, float]]) -> "PriceTable":
        pulp = np.array([prices[s][0] for s in SPECIES], dtype=float)
        saw = np.array([prices[s][1] for s in SPECIES], dtype=float)
        return cls(pulp, saw)


def load_prices(path) -> PriceTable:
    """CSV columns: ``species,pulp_price,saw_price``."""
    path, rows = _read_csv(path, ("species", "pulp_price", "saw_price"))
    found = {}
    for lineno, row in enumerate(rows, start=2):
        sp = row["species"].strip()
        if sp not in SPECIES:
            raise TableError(f"{path}: row {lineno}: unknown species {sp!r}")
        found[sp] = (_float(path, lineno, row, "pulp_price"), _float(path, lineno, row, "saw_price"))
    missing = [s for s in SPECIES if s not in found]
    if missing:
        raise TableError(f"{path}: no price row for {', '.join(missing)}")
    try:
        return PriceTable.from_dict(found)
    except TableError as exc:
        raise TableError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class HarvestCostModel:
    """Harvesting cost: per stem and per m^3 by class, plus a per-operation entry
    cost.  Variable costs of thinnings are multiplied by ``thinning_factor``;
    the capital valuation always uses the clear-felling cost."""

    per_stem: np.ndarray
    per_m3: np.ndarray
    entry_cost: float = 0.0
    thinning_factor: float = 1.0

    def __post_init__(self):
        if np.any(self.per_stem < 0) or np.any(self.per_m3 < 0) or self.entry_cost < 0 or self.thinning_factor < 0:
            raise TableError("harvesting costs must be non-negative")
        if np.any(np.diff(self.per_m3) > 1e-12):
            raise TableError("per-m3 harvesting cost must not increase with diameter")

    @classmethod
    def zero(cls, grid: DiameterGrid) -> "HarvestCostModel":
        return cls(np.zeros(grid.n_classes), np.zeros(grid.n_classes), 0.0)


def load_costs(path, grid: DiameterGrid, entry_cost: float = 0.0, thinning_factor: float = 1.0) -> HarvestCostModel:
    """CSV columns: ``class_lower_mm,per_stem_cost,per_m3_cost``; every grid class needed."""
    path, rows = _read_csv(path, ("class_lower_mm", "per_stem_cost", "per_m3_cost"))
    per_stem = np.full(grid.n_classes, np.nan)
    per_m3 = np.full(grid.n_classes, np.nan)
    lowers = grid.lower_bounds
    for lineno, row in enumerate(rows, start=2):
        hit = np.nonzero(np.isclose(lowers, _float(path, lineno, row, "class_lower_mm")))[0]
        if hit.size:
            per_stem[hit[0]] = _float(path, lineno, row, "per_stem_cost")
            per_m3[hit[0]] = _float(path, lineno, row, "per_m3_cost")
    gaps = lowers[np.isnan(per_stem)]
    if gaps.size:
        raise TableError(f"{path}: no cost row for class(es) starting at {', '.join(f'{g:g}' for g in gaps)} mm")
    try:
        return HarvestCostModel(per_stem, per_m3, float(entry_cost), float(thinning_factor))
    except TableError as exc:
        raise TableError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class EconomicTables:
    yields: AssortmentYieldTable
    prices: PriceTable
    costs: HarvestCostModel
    capitalization: str = "net"
    land_value: float = 0.0
    annual_expense: float = 0.0
    amortization: float = 0.0

    def __post_init__(self):
        if self.capitalization not in ("net", "gross"):
            raise TableError(f"capitalization must be 'net' or 'gross', got {self.capitalization!r}")

    def scaled(self, factor: float) -> "EconomicTables":
        """All monetary quantities multiplied by ``factor``."""
        return replace(
            self,
            prices=PriceTable(self.prices.pulp * factor, self.prices.saw * factor),
            costs=HarvestCostModel(self.costs.per_stem * factor, self.costs.per_m3 * factor,
                                   self.costs.entry_cost * factor, self.costs.thinning_factor),
            land_value=self.land_value * factor,
            annual_expense=self.annual_expense * factor,
            amortization=self.amortization * factor,
        )


def check_price_consistency(prices: PriceTable, half_width_b: float, rel_tol: float = 0.1) -> bool:
    """Warn unless the worst sawlog is worth about a pulpwood log."""
    worst = (1.0 - half_width_b) * prices.saw
    ok = np.all(np.abs(prices.pulp - worst) <= rel_tol * np.maximum(worst, 1e-12))
    if not ok:
        warnings.warn(
            f"pulp prices {prices.pulp} differ from (1 - b) x sawlog prices {worst}; "
            "the worst sawlogs are not priced like pulpwood",
            stacklevel=2,
        )
    return bool(ok)


# --------------------------------------------------------------------------
# pricing

def tree_price(species: str, class_index: int, j: float, yields: AssortmentYieldTable, prices: PriceTable) -> float:
    """Roadside value of one stem with quality coefficient ``j``."""
    k = species_index(species)
    yields.check(k, class_index)
    return float(
        yields.v_pulp[k, class_index] * prices.pulp[k]
        + yields.v_saw[k, class_index] * j * prices.saw[k]
    )


def price_field(quality: np.ndarray, tables: EconomicTables) -> np.ndarray:
    """Roadside value per stem for every cell."""
    y, p = tables.yields, tables.prices
    return y.v_pulp * p.pulp[:, None] + y.v_saw * quality * p.saw[:, None]


def cost_field(tables: EconomicTables) -> np.ndarray:
    """Harvesting cost per stem for every cell (entry cost excluded)."""
    c = tables.costs
    return c.per_stem[None, :] + c.per_m3[None, :] * tables.yields.total


def _check_coverage(stems, yields):
    bad = np.argwhere((stems > 0) & ~yields.covered)
    if bad.size:
        yields.check(*bad[0])


def class_values(state, tables: EconomicTables) -> np.ndarray:
    """Capitalized value of each cell: net of clear-felling cost and floored at
    zero, or plain roadside value under the gross convention."""
    _check_coverage(state.stems, tables.yields)
    gross = state.stems * price_field(state.quality, tables)
    if tables.capitalization == "gross":
        return gross
    return np.maximum(gross - state.stems * cost_field(tables), 0.0)


def stand_value(state, tables: EconomicTables) -> float:
    """Capitalized stand value, currency/ha, including the land addend."""
    return float(class_values(state, tables).sum()) + tables.land_value


class HarvestValue(NamedTuple):
    gross: float
    cost: float
    net: float


def harvest_value(record, tables: EconomicTables) -> HarvestValue:
    """Roadside income, harvesting cost and net income of one operation."""
    if record.empty:
        return HarvestValue(0.0, 0.0, 0.0)
    _check_coverage(record.removed, tables.yields)
    gross = float((record.removed * price_field(record.removed_quality, tables)).sum())
    variable = float((record.removed * cost_field(tables)).sum())
    if record.kind == "thinning":
        variable *= tables.costs.thinning_factor
    cost = variable + tables.costs.entry_cost
    return HarvestValue(gross, cost, gross - cost)


def harvest_volume(record, yields: AssortmentYieldTable) -> Tuple[np.ndarray, np.ndarray]:
    """Removed pulpwood and sawlog volume per cell, m^3/ha."""
    return record.removed * yields.v_pulp, record.removed * yields.v_saw
