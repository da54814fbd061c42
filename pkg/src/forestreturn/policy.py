"""
Thinning and rotation policies: full-rotation simulation and exhaustive
grid search for the policy with the highest expected return rate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import growth, vigor
from .early_stand import BootstrapSpec, bootstrap as run_bootstrap
from .errors import ConfigurationError, DegenerateStandError
from .finance import MONTHS_PER_YEAR, StandEvent, Trajectory, build_trajectory
from .growth import DiameterGrid, GrowthCoefficients, StandState
from .quality import ThinningSpec, apply_thinning, clear_fell
from .scenario import ScenarioConfig
from .valuation import EconomicTables, harvest_value, stand_value


@dataclass(frozen=True)
class PolicySpec:
    """A thinning schedule plus rotation age.

    Thinning fires at the first sample where stand basal area reaches
    ``trigger_ba`` (or at the listed ``trigger_ages``), at most
    ``max_thinnings`` times.  Outside the strip roads, the share of stems
    removed in class ``d`` is ``from_above`` ramped in over ``ramp_classes``
    classes from ``pivot_class`` upwards, combined with a uniform selective
    removal ``quality_depth`` in classes from ``quality_min_class`` up.
    Strip roads (``striproad_fraction`` of all stems) are opened at the first
    thinning only.
    """

    rotation_months: int
    trigger_ba: Optional[float] = None
    trigger_ages: Tuple[int, ...] = ()
    striproad_fraction: float = 0.15
    pivot_class: int = 0
    from_above: float = 0.0
    ramp_classes: int = 1
    quality_depth: float = 0.0
    quality_min_class: int = 0
    max_thinnings: int = 1

    def __post_init__(self):
        for name in ("striproad_fraction", "from_above", "quality_depth"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.striproad_fraction >= 1.0:
            raise ConfigurationError("striproad_fraction must be below 1")
        if self.ramp_classes < 1 or self.pivot_class < 0 or self.quality_min_class < 0:
            raise ConfigurationError("pivot, ramp and quality classes must be non-negative (ramp >= 1)")
        if self.max_thinnings < 0 or self.rotation_months <= 0:
            raise ConfigurationError("rotation must be positive and max_thinnings non-negative")
        object.__setattr__(self, "trigger_ages", tuple(int(a) for a in self.trigger_ages))

    @property
    def thins(self) -> bool:
        return self.max_thinnings > 0 and (self.trigger_ba is not None or bool(self.trigger_ages))

    def selective_survival(self, n_classes: int) -> np.ndarray:
        """Survival outside the strip roads, per class."""
        d = np.arange(n_classes)
        ramp = np.clip((d - self.pivot_class + 1) / self.ramp_classes, 0.0, 1.0)
        above = 1.0 - self.from_above * ramp
        depth = 1.0 - self.quality_depth * (d >= self.quality_min_class)
        return above * depth

    def thinning_spec(self, index: int, n_classes: int) -> ThinningSpec:
        a = 1.0 - self.striproad_fraction if index == 0 else 1.0
        return ThinningSpec(a * self.selective_survival(n_classes), a)

    def triggered(self, state: StandState, done: int) -> bool:
        if done >= self.max_thinnings:
            return False
        if self.trigger_ages and state.age in self.trigger_ages:
            return True
        return self.trigger_ba is not None and growth.basal_area(state) >= self.trigger_ba

    def signature(self, n_classes: int) -> tuple:
        """Everything that determines the simulated run apart from the rotation."""
        if not self.thins:
            return ()
        specs = [self.thinning_spec(i, n_classes) for i in range(self.max_thinnings)]
        profiles = tuple((sp.striproad_survival, tuple(sp.total_survival)) for sp in specs)
        return (self.trigger_ba, self.trigger_ages, profiles)

    def key(self) -> tuple:
        """Parameter vector used for deterministic tie-breaking."""
        if not self.thins:
            trig = (0, 0.0, ())
        elif self.trigger_ba is not None:
            trig = (1, self.trigger_ba, self.trigger_ages)
        else:
            trig = (2, 0.0, self.trigger_ages)
        return trig + (
            self.striproad_fraction, self.pivot_class, self.from_above, self.ramp_classes,
            self.quality_depth, self.quality_min_class, self.max_thinnings, self.rotation_months,
        )


# --------------------------------------------------------------------------
# simulation

@dataclass
class ThinningSummary:
    age: int
    ba_before: float
    ba_after: float
    stems_before: float
    stems_after: float
    removal_by_class: np.ndarray  # share of class basal area removed, species pooled


@dataclass
class FigureData:
    ages: np.ndarray  # months, model phase
    mean_dbh_cm: np.ndarray
    basal_area: np.ndarray
    stems: np.ndarray
    thinnings: List[ThinningSummary] = field(default_factory=list)
    class_lower_mm: np.ndarray = None


@dataclass
class RunRecord:
    """Open (not yet felled) simulation from regeneration to ``horizon``."""

    prefix: Trajectory
    samples: List[Tuple[StandState, List[StandEvent]]]
    normalization_age: Optional[int]


def _summarize_thinning(before: StandState, after: StandState) -> ThinningSummary:
    ba0 = growth.class_basal_area(before).sum(axis=0)
    ba1 = growth.class_basal_area(after).sum(axis=0)
    removal = np.divide(ba0 - ba1, ba0, out=np.zeros_like(ba0), where=ba0 > 0)
    return ThinningSummary(
        age=before.age,
        ba_before=float(ba0.sum()),
        ba_after=float(ba1.sum()),
        stems_before=before.total_stems,
        stems_after=after.total_stems,
        removal_by_class=removal,
    )


def run_policy(
    spec: BootstrapSpec,
    policy: PolicySpec,
    scenario: ScenarioConfig,
    tables: EconomicTables,
    coeffs: GrowthCoefficients,
    horizon: Optional[int] = None,
) -> RunRecord:
    """Simulate from regeneration to ``horizon`` months (default: the rotation)
    applying the policy's thinnings, without the final felling."""
    horizon = policy.rotation_months if horizon is None else horizon
    grid = DiameterGrid.from_scenario(scenario)
    prefix, state = run_bootstrap(spec, tables, grid, scenario.step_months)
    if horizon < state.age or (horizon - state.age) % scenario.step_months:
        raise ConfigurationError(
            f"rotation {horizon} months must be a step multiple not before handoff at {state.age}"
        )
    norm_age = state.age + scenario.application_age_offset_months if scenario.vigor_active else None
    samples = _continue(state, [], policy, scenario, coeffs, horizon, norm_age, grid)
    return RunRecord(prefix, samples, norm_age)


def _continue(state, samples, policy, scenario, coeffs, horizon, norm_age, grid):
    """Simulate from ``state`` (no thinning done yet) and append to ``samples``."""
    samples = list(samples)
    done = 0
    while True:
        events = []
        if state.age >= horizon:
            samples.append((state, events))
            return samples
        current = state
        if state.age == norm_age:
            current = vigor.apply_normalization(current, coeffs, scenario)
            events.append(StandEvent("normalization", None, current))
        if policy.triggered(current, done):
            thinned, record = apply_thinning(current, policy.thinning_spec(done, grid.n_classes), scenario)
            events.append(StandEvent("thinning", record, thinned))
            current = thinned
            done += 1
        samples.append((state, events))
        state, _ = growth.step(current, coeffs, scenario)


def branch_run(base: RunRecord, policy: PolicySpec, scenario: ScenarioConfig, coeffs: GrowthCoefficients,
               horizon: int) -> RunRecord:
    """Run ``policy`` reusing an unthinned ``base`` run up to its first thinning.

    Both runs are identical until the policy first triggers, so only the
    remainder is simulated.
    """
    grid = base.samples[0][0].grid
    for i, (state, events) in enumerate(base.samples):
        current = events[-1].after if events else state
        if state.age < horizon and policy.triggered(current, 0):
            samples = _continue(state, base.samples[:i], policy, scenario, coeffs, horizon,
                                base.normalization_age, grid)
            return RunRecord(base.prefix, samples, base.normalization_age)
    return base


def figure_data(run: RunRecord) -> FigureData:
    states = [s for s, _ in run.samples]
    thinnings = []
    for state, events in run.samples:
        current = state
        for ev in events:
            if ev.kind == "thinning":
                thinnings.append(_summarize_thinning(current, ev.after))
            current = ev.after
    return FigureData(
        ages=np.array([s.age for s in states]),
        mean_dbh_cm=np.array([growth.ba_weighted_mean_diameter(s) for s in states]),
        basal_area=np.array([growth.basal_area(s) for s in states]),
        stems=np.array([s.total_stems for s in states]),
        thinnings=thinnings,
        class_lower_mm=states[0].grid.lower_bounds,
    )


def close_rotation(run: RunRecord) -> List[Tuple[StandState, List[StandEvent]]]:
    """Samples of the run with a final felling appended at the last age."""
    samples = list(run.samples)
    last, events = samples[-1]
    felled, record = clear_fell(last)
    samples[-1] = (last, list(events) + [StandEvent("final_felling", record, felled)])
    return samples


def simulate_rotation(
    spec: BootstrapSpec,
    policy: PolicySpec,
    scenario: ScenarioConfig,
    tables: EconomicTables,
    coeffs: GrowthCoefficients,
):
    """Simulate one full rotation.  Returns ``(Trajectory, FigureData)``."""
    run = run_policy(spec, policy, scenario, tables, coeffs)
    traj = build_trajectory(close_rotation(run), tables, prefix=run.prefix)
    return traj, figure_data(run)


def rotation_curve(run: RunRecord, taus: Sequence[int], tables: EconomicTables) -> np.ndarray:
    """Expected return rate for each rotation age in ``taus`` from one open run.

    Equivalent to closing the cycle at each age with ``truncate_cycle`` and
    calling ``expected_rate``, but evaluated with running sums.  Rotation
    ages outside the run (before handoff or past its horizon) give NaN.
    """
    traj = build_trajectory(run.samples, tables, prefix=run.prefix, periodic=False)
    da = np.diff(traj.age) / MONTHS_PER_YEAR
    num = np.concatenate([[0.0], np.cumsum(0.5 * (traj.dkappa_dt[1:] + traj.dkappa_dt[:-1]) * da)])
    den = np.concatenate([[0.0], np.cumsum(0.5 * (traj.K[1:] + traj.K[:-1]) * da)])
    by_age = {s.age: s for s, _ in run.samples}
    land = tables.land_value
    out = np.full(len(taus), np.nan)
    for i, tau in enumerate(taus):
        state = by_age.get(tau)
        if state is None:
            continue
        at = int(np.searchsorted(traj.age, tau))  # left limit at tau
        final = harvest_value(clear_fell(state)[1], tables).net
        kappa = sum(e.kappa for e in traj.events if e.age < tau) + land - traj.K[at] + final
        if den[at] > 0:
            out[i] = (num[at] + kappa) / den[at]
    return out


# --------------------------------------------------------------------------
# search

@dataclass(frozen=True)
class SearchSpace:
    """Grid of policy parameters; ``None`` in ``trigger_ba`` means no thinning."""

    rotation_months: Tuple[int, ...]
    trigger_ba: Tuple[Optional[float], ...] = (None,)
    striproad_fraction: Tuple[float, ...] = (0.15,)
    pivot_class: Tuple[int, ...] = (0,)
    from_above: Tuple[float, ...] = (0.0,)
    ramp_classes: Tuple[int, ...] = (1,)
    quality_depth: Tuple[float, ...] = (0.0,)
    quality_min_class: Tuple[int, ...] = (0,)
    max_thinnings: Tuple[int, ...] = (1,)

    def thinning_policies(self) -> Iterator[PolicySpec]:
        """Distinct policies with the rotation left at the longest age."""
        tau = max(self.rotation_months)
        seen = set()
        for trig in self.trigger_ba:
            if trig is None:
                combos = [(self.striproad_fraction[0], self.pivot_class[0], self.from_above[0],
                           self.ramp_classes[0], self.quality_depth[0], self.quality_min_class[0], 0)]
            else:
                combos = itertools.product(
                    self.striproad_fraction, self.pivot_class, self.from_above, self.ramp_classes,
                    self.quality_depth, self.quality_min_class, self.max_thinnings,
                )
            for sf, pv, fa, rc, qd, qm, mt in combos:
                p = PolicySpec(
                    rotation_months=tau, trigger_ba=trig, striproad_fraction=sf, pivot_class=pv,
                    from_above=fa, ramp_classes=rc, quality_depth=qd, quality_min_class=qm,
                    max_thinnings=mt,
                )
                if p not in seen:
                    seen.add(p)
                    yield p

    def size(self) -> int:
        return sum(1 for _ in self.thinning_policies()) * len(self.rotation_months)


@dataclass
class OptimizationReport:
    taus: np.ndarray
    policies: List[PolicySpec]  # rotation field is the search horizon
    rates: np.ndarray  # (len(policies), len(taus))
    best_curve: np.ndarray  # rate vs tau for the winning thinning policy
    envelope: np.ndarray  # best rate over policies, per tau


@dataclass
class OptimizationResult:
    policy: PolicySpec
    rate: float
    report: OptimizationReport


def optimize(
    spec: BootstrapSpec,
    scenario: ScenarioConfig,
    tables: EconomicTables,
    coeffs: GrowthCoefficients,
    space: SearchSpace,
) -> OptimizationResult:
    """Exhaustive grid search; ties go to the lexicographically smallest
    parameter vector (see ``PolicySpec.key``)."""
    taus = np.array(sorted(set(space.rotation_months)), dtype=int)
    if not taus.size:
        raise ConfigurationError("empty search space: no rotation ages")
    horizon = int(taus.max())
    policies = list(space.thinning_policies())
    if not policies:
        raise ConfigurationError("empty search space: no thinning policies")

    rates = np.full((len(policies), len(taus)), np.nan)
    try:
        base = run_policy(spec, PolicySpec(rotation_months=horizon), scenario, tables, coeffs)
    except DegenerateStandError:
        base = None
    grid = DiameterGrid.from_scenario(scenario)
    done = {}
    for i, pol in enumerate(policies):
        # policies with the same triggers and removal profiles run identically
        sig = pol.signature(grid.n_classes)
        if sig in done:
            rates[i] = rates[done[sig]]
            continue
        done[sig] = i
        try:
            if base is None:
                run = run_policy(spec, pol, scenario, tables, coeffs, horizon=horizon)
            else:
                run = branch_run(base, pol, scenario, coeffs, horizon)
            rates[i] = rotation_curve(run, [int(t) for t in taus], tables)
        except DegenerateStandError:
            continue

    if np.all(np.isnan(rates)):
        raise DegenerateStandError("no policy in the search space yields a finite return rate")
    best = np.nanmax(rates)
    candidates = []
    for i, j in zip(*np.nonzero(rates == best)):
        candidates.append(replace(policies[i], rotation_months=int(taus[j])))
    winner = min(candidates, key=PolicySpec.key)
    row = policies.index(replace(winner, rotation_months=horizon))
    report = OptimizationReport(
        taus=taus,
        policies=policies,
        rates=rates,
        best_curve=rates[row].copy(),
        envelope=np.nanmax(np.where(np.isnan(rates), -np.inf, rates), axis=0),
    )
    return OptimizationResult(winner, float(best), report)


def policy_as_dict(policy: PolicySpec) -> dict:
    d = asdict(policy)
    d["trigger_ages"] = list(policy.trigger_ages)
    return d
