"""
Return rate on capital.

The momentary rate is the operating value change per unit of capital.  Its
expectation over a rotation weights the rate by capitalization, i.e. it is
the ratio of the integrated operating value change to the integrated
capital.  Investments and withdrawals move the capital but not the
operating value change.

Trajectories are sampled on the simulation grid.  A sample age may repeat:
consecutive samples at the same age are the left and right limits of a
jump, and zero-width pieces drop out of the trapezoid sums.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateStandError
from .valuation import harvest_value, stand_value

MONTHS_PER_YEAR = 12.0


@dataclass(frozen=True)
class Event:
    """Cash event at ``age`` (months).

    ``amount`` is signed from the stand's point of view: an investment is
    positive, a withdrawal negative.  ``kappa`` is any operating value change
    realized at the instant (e.g. harvesting cost beyond what the capital
    valuation anticipated); it enters the numerator of the expected rate.
    """

    age: float
    kind: str
    amount: float
    kappa: float = 0.0


@dataclass
class Trajectory:
    age: np.ndarray  # months
    K: np.ndarray  # currency/ha
    dkappa_dt: np.ndarray  # currency/ha/yr
    events: Tuple[Event, ...] = ()
    rotation_months: Optional[float] = None

    def __post_init__(self):
        self.age = np.asarray(self.age, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        self.dkappa_dt = np.asarray(self.dkappa_dt, dtype=float)
        self.events = tuple(self.events)
        if not (self.age.shape == self.K.shape == self.dkappa_dt.shape):
            raise ValueError("age, K and dkappa_dt must have equal length")
        if np.any(np.diff(self.age) < 0):
            raise ValueError("sample ages must be non-decreasing")

    @property
    def span(self) -> float:
        return float(self.age[-1] - self.age[0]) if self.age.size else 0.0


def instantaneous_rate(dkappa_dt, K):
    """Operating value change per unit capital, 1/yr."""
    K = np.asarray(K, dtype=float)
    if np.any(K <= 0):
        raise DegenerateStandError("capitalization must be positive")
    r = np.asarray(dkappa_dt, dtype=float) / K
    return r if r.ndim else float(r)


def integrals(traj: Trajectory) -> Tuple[float, float]:
    """(numerator, denominator) of the expected rate: currency and currency*yr."""
    da = np.diff(traj.age) / MONTHS_PER_YEAR
    num = float(np.sum(0.5 * (traj.dkappa_dt[1:] + traj.dkappa_dt[:-1]) * da))
    den = float(np.sum(0.5 * (traj.K[1:] + traj.K[:-1]) * da))
    num += sum(e.kappa for e in traj.events)
    return num, den


def expected_rate(traj: Trajectory) -> float:
    """Capital-weighted mean return rate over one rotation, 1/yr."""
    if traj.rotation_months is not None and not np.isclose(traj.span, traj.rotation_months):
        raise ValueError(
            f"trajectory spans {traj.span} months, not one rotation of {traj.rotation_months}"
        )
    _, den = integrals(traj)
    if not den > 0:
        raise DegenerateStandError("integrated capitalization is not positive")
    # Same ratio as integrals(), written as a reference rate plus a weighted
    # deviation so that a constant rate comes back exactly.
    da = np.diff(traj.age) / MONTHS_PER_YEAR
    w = np.zeros(traj.age.size)
    w[:-1] += 0.5 * da
    w[1:] += 0.5 * da
    K, dk = traj.K, traj.dkappa_dt
    live = K != 0
    r = np.zeros_like(K)
    r[live] = dk[live] / K[live]
    r0 = r[np.argmax(live)] if live.any() else 0.0
    dev = np.sum(w[live] * K[live] * (r[live] - r0)) + np.sum(w[~live] * dk[~live])
    dev += sum(e.kappa for e in traj.events)
    return float(r0 + dev / den)


def shift_start(traj: Trajectory, start: float) -> Trajectory:
    """Re-cut a one-rotation trajectory to begin at ``start`` (periodic boundary).

    ``start`` must be one of the sample ages.
    """
    if traj.rotation_months is None:
        raise ValueError("shift_start needs a periodic (one-rotation) trajectory")
    tau = traj.rotation_months
    at = np.nonzero(traj.age == start)[0]
    if not at.size:
        raise ValueError(f"{start} is not a sample age")
    first, last = at[0], at[-1]
    head = slice(last, None)
    tail = slice(0, first + 1)

    def cut(x, shift=0.0):
        return np.concatenate([x[head], x[tail] + shift])

    events = tuple(replace(e, age=e.age + tau) if e.age < start else e for e in traj.events)
    return Trajectory(
        age=cut(traj.age, tau),
        K=cut(traj.K),
        dkappa_dt=cut(traj.dkappa_dt),
        events=tuple(sorted(events, key=lambda e: e.age)),
        rotation_months=tau,
    )


def concatenate(first: Trajectory, second: Trajectory, rotation_months=None) -> Trajectory:
    return Trajectory(
        age=np.concatenate([first.age, second.age]),
        K=np.concatenate([first.K, second.K]),
        dkappa_dt=np.concatenate([first.dkappa_dt, second.dkappa_dt]),
        events=first.events + second.events,
        rotation_months=rotation_months,
    )


# --------------------------------------------------------------------------
# from simulation output to trajectory

@dataclass
class StandEvent:
    """A harvest applied to the stand at a sample age."""

    kind: str
    record: object  # quality.HarvestRecord, None for a pure revaluation
    after: object  # StandState after the harvest


def build_trajectory(
    sim_run: Sequence[Tuple[object, Sequence[StandEvent]]],
    tables,
    prefix: Optional[Trajectory] = None,
    regeneration_cost: Optional[float] = None,
    periodic: bool = True,
) -> Trajectory:
    """Value a simulated rotation.

    ``sim_run`` lists ``(state, events)`` per sample age, states taken before
    the events at that age.  The last sample must carry the final felling when
    ``periodic`` is set.  Between samples the operating value change is the
    capital change, so ``dkappa_dt`` is constant on each interval, less the
    annual expense and amortization from ``tables``.  At an event the capital
    drops by the withdrawal; anything beyond that (harvesting cost not covered
    by the valuation) is booked as the event's ``kappa``.
    """
    if not sim_run:
        raise ValueError("empty simulation run")
    ages, k_left, k_right, events = [], [], [], []
    for state, evs in sim_run:
        k_before = stand_value(state, tables)
        k = k_before
        for ev in evs:
            net = harvest_value(ev.record, tables).net if ev.record is not None else 0.0
            k_after = stand_value(ev.after, tables)
            events.append(Event(state.age, ev.kind, 0.0 - net, kappa=k_after - k + net))
            k = k_after
        ages.append(state.age)
        k_left.append(k_before)
        k_right.append(k)

    ages = np.asarray(ages, dtype=float)
    k_left, k_right = np.asarray(k_left), np.asarray(k_right)
    expense = tables.annual_expense + tables.amortization
    dt = np.diff(ages) / MONTHS_PER_YEAR
    if np.any(dt <= 0):
        raise ValueError("sample ages must be strictly increasing")
    rate = (k_left[1:] - k_right[:-1]) / dt - expense

    # each interval contributes its own pair of samples
    n = len(dt)
    age = np.empty(2 * n)
    age[0::2], age[1::2] = ages[:-1], ages[1:]
    K = np.empty(2 * n)
    K[0::2], K[1::2] = k_right[:-1], k_left[1:]
    dk = np.repeat(rate, 2)

    lead = []
    if prefix is not None:
        body = Trajectory(age, K, dk, events=tuple(events))
        traj = concatenate(prefix, body)
    else:
        standing = k_right[0] - tables.land_value
        invest = standing if regeneration_cost is None else regeneration_cost
        lead.append(Event(ages[0], "regeneration", invest, kappa=standing - invest))
        traj = Trajectory(age, K, dk, events=tuple(lead + events))
    if periodic:
        traj.rotation_months = float(traj.age[-1] - traj.age[0])
    return traj


def truncate_cycle(traj: Trajectory, tau: float, final_net: float, k_after: float = 0.0) -> Trajectory:
    """One-rotation trajectory from a longer open run.

    Keeps samples up to age ``tau`` (dropping right limits of any event at
    ``tau``) and closes the cycle with a final felling of net income
    ``final_net`` that leaves capital ``k_after`` (the land value).
    """
    keep = traj.age <= tau
    idx = np.nonzero(keep)[0]
    # at tau itself keep only the left limit (the first sample)
    at_tau = np.nonzero(traj.age == tau)[0]
    if not at_tau.size:
        raise ValueError(f"{tau} is not a sample age")
    idx = idx[idx <= at_tau[0]]
    k_end = traj.K[at_tau[0]]
    events = [e for e in traj.events if e.age < tau]
    events.append(Event(tau, "final_felling", -final_net, kappa=k_after - k_end + final_net))
    return Trajectory(
        age=traj.age[idx], K=traj.K[idx], dkappa_dt=traj.dkappa_dt[idx],
        events=tuple(events), rotation_months=float(tau - traj.age[0]),
    )
