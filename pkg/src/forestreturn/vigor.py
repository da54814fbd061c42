"""
Size-based growth vigor.

Tree size relative to the stand mean is taken as a proxy of inherited
production capacity.  The raw coefficient is rescaled once per rotation so
that stand basal-area growth is unchanged, and afterwards the coefficients
are carried along with the stems as they move between diameter classes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import growth
from .errors import DegenerateStandError


@dataclass(frozen=True)
class VigorParams:
    alpha: float = 0.5
    application_age_offset: int = 90

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class TransitionRecord:
    """Stems moving up (``nt``) and staying (``nr``) per cell in one step."""

    nt: np.ndarray
    nr: np.ndarray


def raw_capacity(d, mean_d, alpha):
    """Inherited capacity of a tree of diameter ``d`` in a stand of mean ``mean_d``."""
    if np.any(np.asarray(mean_d) <= 0):
        raise DegenerateStandError("mean diameter must be positive (empty stand?)")
    return alpha * (np.asarray(d, dtype=float) / mean_d) + (1.0 - alpha)


def capacity_field(state, alpha: float) -> np.ndarray:
    """Raw capacity for every cell; the mean is pooled over all species."""
    mean_d = growth.stem_mean_diameter(state)
    if not mean_d > 0:
        raise DegenerateStandError("cannot compute capacity of an empty stand")
    m = raw_capacity(state.grid.midpoints, mean_d, alpha)
    return np.broadcast_to(m, state.stems.shape).copy()


def propagate_coefficients(record: TransitionRecord, c: np.ndarray) -> np.ndarray:
    """Stem-weighted mix of incoming and remaining coefficients per class.

    Classes that receive nobody keep their previous value.
    """
    inflow = np.zeros_like(record.nt)
    inflow[:, 1:] = record.nt[:, :-1]
    carried = np.zeros_like(record.nt)
    carried[:, 1:] = record.nt[:, :-1] * c[:, :-1]
    total = inflow + record.nr
    mixed = np.divide(carried + record.nr * c, total, out=np.zeros_like(total), where=total > 0)
    return np.where((inflow > 0) & (total > 0), mixed, c)


def _gross_ba_growth(state, coeffs, scenario, vigor, quality) -> tuple:
    """Basal-area gain of survivors over one step, and whether any populated
    cell hit the one-class-per-step cap."""
    trial = state.copy(vigor=vigor, quality=quality)
    _, _, f = growth.transition_fractions(trial, coeffs, scenario)
    nxt, rec = growth.step(trial, coeffs, scenario)
    survivors_ba = ((rec.nt + rec.nr) * state.grid.tree_basal_area).sum()
    saturated = bool(np.any((f[:, :-1] >= 1.0) & (state.stems[:, :-1] > 0)))
    return growth.basal_area(nxt) - survivors_ba, saturated


def normalize_capacity(state, m: np.ndarray, coeffs, scenario) -> np.ndarray:
    """Rescale raw capacities so one step grows the same stand basal area.

    Mortality does not depend on the coefficients, so the comparison is made
    on the survivors' basal-area gain.  In the coupled scenario the trial
    step also multiplies quality by ``m``, as the simulation will.
    """
    quality_m = state.quality * m if scenario.vigor_scales_quality else state.quality
    base, _ = _gross_ba_growth(state, coeffs, scenario, np.ones_like(m), state.quality)
    with_m, saturated = _gross_ba_growth(state, coeffs, scenario, m, quality_m)
    if with_m <= 0:
        raise DegenerateStandError("basal-area growth with capacity coefficients is not positive")
    ratio = base / with_m

    if saturated or _gross_ba_growth(state, coeffs, scenario, m * ratio, quality_m)[1]:
        # capped transitions make growth non-linear in the scale; solve for it
        def gap(c):
            return _gross_ba_growth(state, coeffs, scenario, m * c, quality_m)[0] - base

        hi = max(ratio, 1.0)
        while gap(hi) < 0:
            hi *= 2.0
            if hi > 1e6:
                raise DegenerateStandError("cannot match basal-area growth under saturation")
        ratio = brentq(gap, 1e-12, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return m * ratio


def apply_normalization(state, coeffs, scenario):
    """Install normalized vigor (and, in the coupled scenario, scale quality by
    the raw capacity).  Returns a new state."""
    m = capacity_field(state, scenario.alpha)
    n = normalize_capacity(state, m, coeffs, scenario)
    quality = state.quality * m if scenario.vigor_scales_quality else state.quality.copy()
    return state.copy(vigor=n, quality=quality)
