"""
Diameter-class matrix growth engine.

The stand is a dense species x diameter-class grid of real-valued stem
counts.  Each 30-month step predicts a diameter increment and a survival
probability per cell from an ingested coefficient table, moves the
survivors up at most one class (Usher-type transition) and advects the
per-class vigor and quality coefficients with the stems.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, TableError
from .scenario import ScenarioConfig
from .vigor import TransitionRecord, propagate_coefficients

SPECIES = ("spruce", "pine", "birch")

INCREMENT_FORMS = ("linear", "exp_linear")
SURVIVAL_FORMS = ("logistic", "linear", "constant")
TRANSFORMS = ("none", "ln")
# covariates computed from the stand itself; anything else must be a site covariate
STAND_COVARIATES = ("const", "dbh", "ba", "bal", "stems")


def species_index(species: str) -> int:
    try:
        return SPECIES.index(species)
    except ValueError:
        raise ConfigurationError(f"unknown species {species!r}; expected one of {SPECIES}") from None


@dataclass(frozen=True)
class DiameterGrid:
    """Uniform diameter classes in mm; the top class absorbs upward moves."""

    class_width: float = 50.0
    lowest: float = 50.0
    n_classes: int = 12

    def __post_init__(self):
        if self.class_width <= 0:
            raise ConfigurationError("class_width must be positive")
        if self.n_classes < 1:
            raise ConfigurationError("grid needs at least one class")

    @classmethod
    def from_scenario(cls, scenario: ScenarioConfig) -> "DiameterGrid":
        return cls(scenario.class_width_mm, scenario.lowest_class_mm, scenario.n_classes)

    @property
    def lower_bounds(self) -> np.ndarray:
        return self.lowest + self.class_width * np.arange(self.n_classes)

    @property
    def midpoints(self) -> np.ndarray:
        return self.lower_bounds + 0.5 * self.class_width

    @property
    def tree_basal_area(self) -> np.ndarray:
        """Basal area of one stem at each class midpoint, m^2."""
        return np.pi / 4.0 * (self.midpoints / 1000.0) ** 2

    def class_of(self, dbh_mm: float) -> int:
        k = int(math.floor((dbh_mm - self.lowest) / self.class_width))
        if not 0 <= k < self.n_classes:
            raise ConfigurationError(f"diameter {dbh_mm} mm lies outside the grid")
        return k


@dataclass
class StandState:
    """Cohort grid of one stand.

    All per-cell arrays have shape ``(len(SPECIES), grid.n_classes)``.
    ``prev_increment`` holds the raw model increment of the previous step
    (mm/30 mo) and is NaN until a step has been taken.
    """

    grid: DiameterGrid
    stems: np.ndarray
    vigor: np.ndarray
    quality: np.ndarray
    prev_increment: np.ndarray
    age: int = 0
    site: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def empty(cls, grid: DiameterGrid, age: int = 0, site: Optional[Mapping[str, float]] = None):
        shape = (len(SPECIES), grid.n_classes)
        return cls(
            grid=grid,
            stems=np.zeros(shape),
            vigor=np.ones(shape),
            quality=np.ones(shape),
            prev_increment=np.full(shape, np.nan),
            age=age,
            site=dict(site or {}),
        )

    def copy(self, **changes) -> "StandState":
        fields = dict(
            stems=self.stems.copy(),
            vigor=self.vigor.copy(),
            quality=self.quality.copy(),
            prev_increment=self.prev_increment.copy(),
            site=dict(self.site),
        )
        fields.update(changes)
        return replace(self, **fields)

    @property
    def total_stems(self) -> float:
        return float(self.stems.sum())

    def validate(self):
        if np.any(self.stems < 0):
            raise ValueError("negative stem count")
        if np.any(self.vigor <= 0) or np.any(self.quality <= 0):
            raise ValueError("vigor and quality coefficients must be positive")


# --------------------------------------------------------------------------
# stand summaries

def class_basal_area(state: StandState) -> np.ndarray:
    """Basal area per cell, m^2/ha."""
    return state.stems * state.grid.tree_basal_area


def basal_area(state: StandState) -> float:
    return float(class_basal_area(state).sum())


def ba_weighted_mean_diameter(state: StandState) -> float:
    """Basal-area weighted mean dbh in cm; NaN for an empty stand."""
    ba = class_basal_area(state).sum(axis=0)
    total = ba.sum()
    if total <= 0:
        return math.nan
    return float((ba * state.grid.midpoints).sum() / total / 10.0)


def stem_mean_diameter(state: StandState) -> float:
    """Stem-count weighted mean dbh over all species, mm."""
    n = state.stems.sum(axis=0)
    total = n.sum()
    if total <= 0:
        return math.nan
    return float((n * state.grid.midpoints).sum() / total)


# --------------------------------------------------------------------------
# coefficient tables

@dataclass(frozen=True)
class Term:
    covariate: str
    transform: str
    exponent: float
    coefficient: float


@dataclass(frozen=True)
class GrowthCoefficients:
    """Per-species linear predictors for increment and survival.

    The predictor is ``eta = sum(coef * transform(covariate) ** exponent)``.
    ``linear`` increment is ``max(eta, 0)``, ``exp_linear`` is ``exp(eta)``;
    survival is ``logistic(eta)``, ``clip(eta, 0, 1)`` or a constant
    ``clip(eta, 0, 1)`` of the ``const`` terms only.
    """

    increment_form: str
    survival_form: str
    increment: Mapping[str, Tuple[Term, ...]]
    survival: Mapping[str, Tuple[Term, ...]]
    provenance: str = ""

    def __post_init__(self):
        if self.increment_form not in INCREMENT_FORMS:
            raise ConfigurationError(f"unknown increment form {self.increment_form!r}")
        if self.survival_form not in SURVIVAL_FORMS:
            raise ConfigurationError(f"unknown survival form {self.survival_form!r}")

    def required_covariates(self) -> set:
        names = set()
        for table in (self.increment, self.survival):
            for terms in table.values():
                names.update(t.covariate for t in terms)
        return names - set(STAND_COVARIATES)


def load_coefficients(path) -> GrowthCoefficients:
    """Read a coefficient table.

    Header lines start with ``#`` and carry ``key: value`` pairs; the keys
    ``increment_form`` and ``survival_form`` are required.  The body is CSV
    with columns ``species,function,covariate,transform,exponent,coefficient``.
    """
    path = Path(path)
    meta = {}
    rows = []
    try:
        with open(path, newline="") as fh:
            body = []
            for line in fh:
                if line.startswith("#"):
                    key, sep, value = line[1:].partition(":")
                    if sep:
                        meta[key.strip()] = value.strip()
                elif line.strip():
                    body.append(line)
        rows = list(csv.DictReader(body))
    except OSError as exc:
        raise TableError(f"{path}: cannot read coefficient table ({exc})") from exc

    for key in ("increment_form", "survival_form"):
        if key not in meta:
            raise TableError(f"{path}: header is missing '{key}'")

    increment = {s: [] for s in SPECIES}
    survival = {s: [] for s in SPECIES}
    for lineno, row in enumerate(rows, start=2):
        try:
            species = row["species"].strip()
            function = row["function"].strip()
            transform = row["transform"].strip() or "none"
            term = Term(row["covariate"].strip(), transform, float(row["exponent"]), float(row["coefficient"]))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise TableError(f"{path}: malformed row {lineno}: {row}") from exc
        if species not in SPECIES:
            raise TableError(f"{path}: row {lineno}: unknown species {species!r}")
        if transform not in TRANSFORMS:
            raise TableError(f"{path}: row {lineno}: unknown transform {transform!r}")
        if function == "increment":
            increment[species].append(term)
        elif function == "survival":
            survival[species].append(term)
        else:
            raise TableError(f"{path}: row {lineno}: unknown function {function!r}")

    try:
        return GrowthCoefficients(
            increment_form=meta["increment_form"],
            survival_form=meta["survival_form"],
            increment={s: tuple(v) for s, v in increment.items()},
            survival={s: tuple(v) for s, v in survival.items()},
            provenance=meta.get("provenance", str(path)),
        )
    except ConfigurationError as exc:
        raise TableError(f"{path}: {exc}") from exc


def stand_covariates(state: StandState) -> Dict[str, np.ndarray]:
    """Covariates evaluated for every cell (arrays broadcastable to the grid)."""
    cba = class_basal_area(state)
    per_class = cba.sum(axis=0)
    # basal area in strictly larger classes, all species pooled
    larger = np.concatenate([np.cumsum(per_class[::-1])[::-1][1:], [0.0]])
    return {
        "const": np.ones(1),
        "dbh": state.grid.midpoints[np.newaxis, :],
        "ba": np.array(cba.sum()),
        "bal": larger[np.newaxis, :],
        "stems": np.array(state.stems.sum()),
    }


def _predictor(terms, covariates, site, shape) -> np.ndarray:
    eta = np.zeros(shape)
    for t in terms:
        if t.covariate in covariates:
            x = covariates[t.covariate]
        elif t.covariate in site:
            x = np.asarray(float(site[t.covariate]))
        else:
            raise ConfigurationError(f"missing covariate {t.covariate!r} required by the coefficient set")
        if t.transform == "ln":
            x = np.log(x)
        eta = eta + t.coefficient * (x ** t.exponent if t.exponent != 1 else x)
    return eta


def increment_field(state: StandState, coeffs: GrowthCoefficients, cov=None) -> np.ndarray:
    """Raw expected diameter increment (mm / 30 months) for every cell."""
    cov = stand_covariates(state) if cov is None else cov
    n = state.grid.n_classes
    out = np.zeros((len(SPECIES), n))
    for k, sp in enumerate(SPECIES):
        terms = coeffs.increment.get(sp, ())
        if not terms:
            continue
        eta = _predictor(terms, cov, state.site, (n,))
        if coeffs.increment_form == "linear":
            out[k] = np.maximum(eta, 0.0)
        else:
            out[k] = np.exp(eta)
    return out


def survival_field(state: StandState, coeffs: GrowthCoefficients, cov=None) -> np.ndarray:
    """Survival probability per 30 months for every cell (1 if no terms)."""
    cov = stand_covariates(state) if cov is None else cov
    n = state.grid.n_classes
    out = np.ones((len(SPECIES), n))
    for k, sp in enumerate(SPECIES):
        terms = coeffs.survival.get(sp, ())
        if not terms:
            continue
        if coeffs.survival_form == "constant":
            terms = tuple(t for t in terms if t.covariate == "const")
        eta = _predictor(terms, cov, state.site, (n,))
        if coeffs.survival_form == "logistic":
            out[k] = 1.0 / (1.0 + np.exp(-eta))
        else:
            out[k] = np.clip(eta, 0.0, 1.0)
    return out


def predict_increment(state: StandState, species: str, class_index: int, coeffs: GrowthCoefficients) -> float:
    """Expected increment of a midpoint tree, before vigor/quality scaling."""
    return float(increment_field(state, coeffs)[species_index(species), class_index])


def effective_increment(raw, prev, mode: str):
    """Increment actually applied: the raw prediction, or its average with the
    previous step's prediction in non-Markovian mode (raw where no history)."""
    if mode == "markov":
        return raw
    if mode != "non_markov":
        raise ConfigurationError(f"unknown growth mode {mode!r}")
    raw = np.asarray(raw, dtype=float)
    prev = np.asarray(prev, dtype=float)
    out = np.where(np.isnan(prev), raw, 0.5 * (raw + np.nan_to_num(prev)))
    return out if out.ndim else float(out)


def growth_multiplier(state: StandState, scenario: ScenarioConfig) -> np.ndarray:
    if scenario.quality_scales_growth:
        return state.vigor * state.quality
    return state.vigor


def transition_fractions(state: StandState, coeffs: GrowthCoefficients, scenario: ScenarioConfig):
    """Return (raw increment, survival, upward fraction f) for every cell."""
    cov = stand_covariates(state)
    raw = increment_field(state, coeffs, cov)
    surv = survival_field(state, coeffs, cov)
    eff = effective_increment(raw, state.prev_increment, scenario.growth_mode)
    scaled = eff * growth_multiplier(state, scenario)
    f = np.minimum(scaled / state.grid.class_width, 1.0)
    f[:, -1] = 0.0
    return raw, surv, f


def step(state: StandState, coeffs: GrowthCoefficients, scenario: ScenarioConfig):
    """Advance the stand by one step.  Returns ``(new_state, TransitionRecord)``."""
    raw, surv, f = transition_fractions(state, coeffs, scenario)
    survivors = state.stems * surv
    nt = survivors * f
    nr = survivors * (1.0 - f)

    stems = nr.copy()
    stems[:, 1:] += nt[:, :-1]
    record = TransitionRecord(nt=nt, nr=nr)
    new = replace(
        state,
        stems=stems,
        vigor=propagate_coefficients(record, state.vigor),
        quality=propagate_coefficients(record, state.quality),
        prev_increment=raw,
        age=state.age + scenario.step_months,
        site=dict(state.site),
    )
    return new, record


def transition_matrix(state: StandState, coeffs: GrowthCoefficients, scenario: ScenarioConfig, species: str):
    """Explicit Usher matrix of one species for the current state."""
    _, surv, f = transition_fractions(state, coeffs, scenario)
    k = species_index(species)
    n = state.grid.n_classes
    a = np.zeros((n, n))
    for d in range(n):
        a[d, d] = surv[k, d] * (1.0 - f[k, d])
        if d + 1 < n:
            a[d + 1, d] = surv[k, d] * f[k, d]
    return a
