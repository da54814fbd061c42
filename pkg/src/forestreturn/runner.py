"""
Configuration loading and the batch pipeline behind the command line.

A run optimizes every (species, planting density) stand of the
configuration, then writes figure-ready CSV files and a manifest.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import defaults
from .early_stand import DEFAULT_HANDOFF_MONTHS, DEFAULT_SITE, BootstrapSpec
from .errors import ConfigurationError, TableError
from .growth import SPECIES, DiameterGrid, GrowthCoefficients, load_coefficients
from .policy import OptimizationResult, SearchSpace, figure_data, optimize, policy_as_dict, run_policy
from .scenario import ScenarioConfig
from .valuation import EconomicTables, check_price_consistency, load_costs, load_prices, load_yields

log = logging.getLogger(__name__)

FIG1 = "fig1_expected_rate_vs_rotation.csv"
FIG2 = "fig2_mean_diameter_vs_age.csv"
FIG3 = "fig3_removal_by_class.csv"
FIG4 = "fig4_thinning_triggers.csv"
OPTIMUM = "optimal_policies.csv"
ALPHA = "alpha_sensitivity.csv"
MANIFEST = "run_manifest.json"
TIMESTAMP = "run_timestamp.txt"

HEADERS = {
    FIG1: ["species", "planting_density_per_ha", "rotation_months", "expected_rate_per_yr"],
    FIG2: ["species", "planting_density_per_ha", "age_months", "ba_weighted_mean_dbh_cm"],
    FIG3: ["species", "planting_density_per_ha", "thinning_index", "age_months", "class_lower_mm",
           "ba_removed_fraction"],
    FIG4: ["species", "planting_density_per_ha", "thinning_index", "age_months", "ba_before_m2_per_ha",
           "ba_after_m2_per_ha", "stems_before_per_ha", "stems_after_per_ha"],
    OPTIMUM: ["species", "planting_density_per_ha", "expected_rate_per_yr", "rotation_months",
              "trigger_ba_m2_per_ha", "striproad_fraction", "pivot_class", "from_above", "ramp_classes",
              "quality_depth", "quality_min_class", "max_thinnings", "n_thinnings",
              "maturity_dbh_cm"],
    ALPHA: ["species", "planting_density_per_ha", "alpha", "expected_rate_per_yr", "rotation_months",
            "maturity_dbh_cm", "delta_rate_per_yr", "delta_maturity_dbh_cm"],
}

DEFAULT_SEARCH = dict(
    rotation_months=dict(start=300, stop=1200, step=30),
    trigger_ba=[None, 15.0, 20.0, 25.0, 30.0, 35.0],
    striproad_fraction=[0.15],
    pivot_class=[0, 1, 2, 3, 4],
    from_above=[0.0, 0.25, 0.5, 0.75, 0.9],
    ramp_classes=[1],
    quality_depth=[0.0, 0.2, 0.4, 0.6, 0.8],
    quality_min_class=[0, 1, 2],
    max_thinnings=[1, 2],
)


@dataclass
class RunConfig:
    scenario: ScenarioConfig
    stands: List[BootstrapSpec]
    search: SearchSpace
    tables: EconomicTables
    coefficients: GrowthCoefficients
    output_dir: Path
    alpha_sweep: Sequence[float] = ()
    table_sources: Dict[str, str] = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    config_bytes: bytes = b""


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"config section '{name}' must be a mapping")
    return value


def _tuple(value, name):
    if isinstance(value, dict):
        try:
            return tuple(range(int(value["start"]), int(value["stop"]) + 1, int(value["step"])))
        except (KeyError, TypeError, ValueError):
            raise ConfigurationError(f"search.{name}: range needs integer start, stop and step") from None
    if not isinstance(value, (list, tuple)):
        value = [value]
    return tuple(value)


def parse_search(section: dict) -> SearchSpace:
    merged = dict(DEFAULT_SEARCH)
    unknown = set(section) - set(merged)
    if unknown:
        raise ConfigurationError(f"unknown search key(s): {', '.join(sorted(unknown))}")
    merged.update(section)
    kw = {k: _tuple(v, k) for k, v in merged.items()}
    kw["trigger_ba"] = tuple(None if v is None else float(v) for v in kw["trigger_ba"])
    for key in ("rotation_months", "pivot_class", "ramp_classes", "quality_min_class", "max_thinnings"):
        kw[key] = tuple(int(v) for v in kw[key])
    for key in ("striproad_fraction", "from_above", "quality_depth"):
        kw[key] = tuple(float(v) for v in kw[key])
    return SearchSpace(**kw)


def _resolve(base: Path, value: Optional[str], default_name: str):
    if value is None:
        return defaults.data_path(default_name)
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_tables(section: dict, grid: DiameterGrid, base: Path):
    """Return (coefficients, economic tables, {name: source path})."""
    known = {"coefficients", "yields", "prices", "costs", "entry_cost", "thinning_factor",
             "capitalization", "land_value", "annual_expense", "amortization"}
    unknown = set(section) - known
    if unknown:
        raise ConfigurationError(f"unknown tables key(s): {', '.join(sorted(unknown))}")
    sources = {
        "coefficients": _resolve(base, section.get("coefficients"), "placeholder_growth.csv"),
        "yields": _resolve(base, section.get("yields"), "placeholder_yields.csv"),
        "prices": _resolve(base, section.get("prices"), "placeholder_prices.csv"),
        "costs": _resolve(base, section.get("costs"), "placeholder_costs.csv"),
    }
    coeffs = load_coefficients(sources["coefficients"])
    try:
        tables = EconomicTables(
            yields=load_yields(sources["yields"], grid),
            prices=load_prices(sources["prices"]),
            costs=load_costs(
                sources["costs"], grid,
                entry_cost=float(section.get("entry_cost", defaults.DEFAULT_ENTRY_COST)),
                thinning_factor=float(section.get("thinning_factor", defaults.DEFAULT_THINNING_FACTOR)),
            ),
            capitalization=section.get("capitalization", "net"),
            land_value=float(section.get("land_value", 0.0)),
            annual_expense=float(section.get("annual_expense", 0.0)),
            amortization=float(section.get("amortization", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, TableError):
            raise
        raise ConfigurationError(f"tables: {exc}") from None
    return coeffs, tables, {k: str(v) for k, v in sources.items()}


def parse_stands(section: dict, site: dict) -> List[BootstrapSpec]:
    species = section.get("species", list(SPECIES))
    densities = section.get("planting_densities", [1200, 2400])
    ages = dict(DEFAULT_HANDOFF_MONTHS)
    ages.update(section.get("handoff_age_months") or {})
    split = tuple(section.get("handoff_split", (0.5, 0.5)))
    regen = section.get("regeneration_cost")
    out = []
    for sp in species:
        for dens in densities:
            out.append(BootstrapSpec(
                species=sp, planting_density=float(dens), handoff_age_months=int(ages[sp]),
                handoff_split=split, regeneration_cost=None if regen is None else float(regen),
                site=dict(site),
            ))
    return out


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read config ({exc})") from None
    try:
        cfg = yaml.safe_load(data) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    known = {"scenario", "stands", "site", "tables", "search", "alpha_sweep", "output_dir"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown key(s) {', '.join(sorted(unknown))}")

    base = path.parent
    try:
        scenario = ScenarioConfig(**_section(cfg, "scenario"))
    except TypeError as exc:
        raise ConfigurationError(f"{path}: scenario: {exc}") from None
    grid = DiameterGrid.from_scenario(scenario)
    site = dict(DEFAULT_SITE)
    site.update(_section(cfg, "site"))
    coeffs, tables, sources = load_tables(_section(cfg, "tables"), grid, base)
    out = Path(cfg.get("output_dir", "out"))
    return RunConfig(
        scenario=scenario,
        stands=parse_stands(_section(cfg, "stands"), site),
        search=parse_search(_section(cfg, "search")),
        tables=tables,
        coefficients=coeffs,
        output_dir=out if out.is_absolute() else base / out,
        alpha_sweep=tuple(float(a) for a in cfg.get("alpha_sweep") or ()),
        table_sources=sources,
        raw=cfg,
        config_bytes=data,
    )


def validate_tables(config: RunConfig) -> List[str]:
    """Cross-checks beyond what loading enforces.  Returns human-readable notes."""
    notes = []
    missing = config.coefficients.required_covariates() - set(config.stands[0].site if config.stands else {})
    if missing:
        raise ConfigurationError(f"site covariate(s) {', '.join(sorted(missing))} required by the coefficient set")
    y = config.tables.yields
    for spec in config.stands:
        k = SPECIES.index(spec.species)
        gaps = y.grid.lower_bounds[~y.covered[k]]
        if gaps.size:
            raise TableError(
                f"assortment yield table has no row for ({spec.species}, {gaps[0]:g} mm)"
            )
    if not check_price_consistency(config.tables.prices, config.scenario.half_width_b):
        notes.append("warning: pulpwood prices are not (1 - b) x sawlog prices")
    notes.append(f"coefficients: {config.coefficients.provenance}")
    return notes


# --------------------------------------------------------------------------
# pipeline

@dataclass
class StandResult:
    spec: BootstrapSpec
    result: OptimizationResult
    figure: object  # policy.FigureData of the optimal policy


def optimize_stands(config: RunConfig, scenario: Optional[ScenarioConfig] = None) -> List[StandResult]:
    scenario = scenario or config.scenario
    out = []
    for spec in config.stands:
        log.info("optimizing %s %g/ha (%s)", spec.species, spec.planting_density, scenario.mode)
        res = optimize(spec, scenario, config.tables, config.coefficients, config.search)
        run = run_policy(spec, res.policy, scenario, config.tables, config.coefficients)
        out.append(StandResult(spec, res, figure_data(run)))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        if np.isnan(x):
            return ""
        return f"{float(x):.10g}"
    return str(x)


def _write(path: Path, rows):
    header = HEADERS[path.name]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _stand(sr: StandResult):
    return sr.spec.species, _fmt(sr.spec.planting_density)


def write_fig1(out: Path, results: List[StandResult]):
    rows = []
    for sr in results:
        rep = sr.result.report
        for tau, rate in zip(rep.taus, rep.envelope):
            if np.isfinite(rate):
                rows.append((*_stand(sr), int(tau), rate))
    _write(out / FIG1, rows)


def write_fig2(out: Path, results: List[StandResult]):
    rows = []
    for sr in results:
        fig = sr.figure
        for age, d in zip(fig.ages, fig.mean_dbh_cm):
            rows.append((*_stand(sr), int(age), d))
    _write(out / FIG2, rows)


def write_fig3(out: Path, results: List[StandResult]):
    rows = []
    for sr in results:
        for i, th in enumerate(sr.figure.thinnings):
            for lower, frac in zip(sr.figure.class_lower_mm, th.removal_by_class):
                rows.append((*_stand(sr), i + 1, th.age, _fmt(float(lower)), frac))
    _write(out / FIG3, rows)


def write_fig4(out: Path, results: List[StandResult]):
    rows = []
    for sr in results:
        for i, th in enumerate(sr.figure.thinnings):
            rows.append((*_stand(sr), i + 1, th.age, th.ba_before, th.ba_after, th.stems_before, th.stems_after))
    _write(out / FIG4, rows)


def write_optimum(out: Path, results: List[StandResult]):
    rows = []
    for sr in results:
        p = sr.result.policy
        rows.append((*_stand(sr), sr.result.rate, p.rotation_months, p.trigger_ba, p.striproad_fraction,
                     p.pivot_class, p.from_above, p.ramp_classes, p.quality_depth, p.quality_min_class,
                     p.max_thinnings, len(sr.figure.thinnings), sr.figure.mean_dbh_cm[-1]))
    _write(out / OPTIMUM, rows)


def alpha_sensitivity(config: RunConfig) -> List[tuple]:
    """Optimize every stand for each alpha in the sweep; deltas are relative to
    the first alpha."""
    rows = []
    per_alpha = []
    for alpha in config.alpha_sweep:
        sc = ScenarioConfig(**{**asdict(config.scenario), "alpha": alpha})
        per_alpha.append((alpha, optimize_stands(config, sc)))
    if not per_alpha:
        return rows
    base = per_alpha[0][1]
    for alpha, results in per_alpha:
        for b, sr in zip(base, results):
            d_now, d_base = sr.figure.mean_dbh_cm[-1], b.figure.mean_dbh_cm[-1]
            rows.append((*_stand(sr), alpha, sr.result.rate, sr.result.policy.rotation_months, d_now,
                         sr.result.rate - b.result.rate, d_now - d_base))
    return rows


def write_manifest(out: Path, config: RunConfig, command: str):
    def digest(p):
        try:
            return hashlib.sha256(Path(p).read_bytes()).hexdigest()
        except OSError:
            return None

    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(config.config_bytes).hexdigest(),
        "scenario": asdict(config.scenario),
        "tables": {k: {"path": v, "sha256": digest(v)} for k, v in sorted(config.table_sources.items())},
        "coefficient_provenance": config.coefficients.provenance,
        "stands": [{"species": s.species, "planting_density": s.planting_density,
                    "handoff_age_months": s.handoff_age, "regeneration_cost": s.investment}
                   for s in config.stands],
        "search_points": config.search.size(),
        "outputs": sorted(p.name for p in out.glob("*.csv")),
    }
    with open(out / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stamp(out: Path):
    from datetime import datetime, timezone

    (out / TIMESTAMP).write_text(datetime.now(timezone.utc).isoformat() + "\n")


def run(config: RunConfig) -> List[StandResult]:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    validate_tables(config)
    results = optimize_stands(config)
    write_fig1(out, results)
    write_fig2(out, results)
    write_fig3(out, results)
    write_fig4(out, results)
    write_optimum(out, results)
    if config.alpha_sweep:
        _write(out / ALPHA, alpha_sensitivity(config))
    write_manifest(out, config, "run")
    _stamp(out)
    return results


def sweep_rotation(config: RunConfig) -> List[StandResult]:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    validate_tables(config)
    results = optimize_stands(config)
    write_fig1(out, results)
    write_manifest(out, config, "sweep-rotation")
    _stamp(out)
    return results


def optimize_only(config: RunConfig) -> List[StandResult]:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    validate_tables(config)
    results = optimize_stands(config)
    write_optimum(out, results)
    write_manifest(out, config, "optimize")
    _stamp(out)
    return results
