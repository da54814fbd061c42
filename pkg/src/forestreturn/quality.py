"""
Quality thinning.

Within a class, quality is uniformly distributed on ``mean * (1 +/- b)``.
Strip roads remove trees regardless of quality; the rest of the removal
takes the worst trees first, which raises the survivors' expected quality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ThinningSpecError


@dataclass(frozen=True)
class QualityParams:
    half_width_b: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.half_width_b <= 1.0:
            raise ValueError(f"half_width_b must lie in [0, 1], got {self.half_width_b}")


@dataclass(frozen=True)
class ThinningSpec:
    """Total survival per class (broadcast over species) and strip-road survival."""

    total_survival: np.ndarray
    striproad_survival: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.total_survival, dtype=float)
        a = self.striproad_survival
        if not 0.0 < a <= 1.0:
            raise ThinningSpecError(f"strip-road survival must lie in (0, 1], got {a}")
        if np.any(s < 0) or np.any(s > a * (1 + 1e-12)):
            raise ThinningSpecError("total survival must lie in [0, strip-road survival]")
        object.__setattr__(self, "total_survival", s)


@dataclass
class HarvestRecord:
    """Stems removed per cell and the mean quality coefficient of the removed trees."""

    removed: np.ndarray
    removed_quality: np.ndarray
    age: int = 0
    kind: str = "thinning"

    @property
    def empty(self) -> bool:
        return not np.any(self.removed > 0)


def quality_survival(s, a):
    """Share of trees left standing by the selective part of a harvest."""
    s = np.asarray(s, dtype=float)
    if not 0.0 < a <= 1.0:
        raise ThinningSpecError(f"strip-road survival must lie in (0, 1], got {a}")
    if np.any(s < 0) or np.any(s > a):
        raise ThinningSpecError(f"total survival {s} exceeds strip-road survival {a}")
    p = s / a
    return p if p.ndim else float(p)


def quality_correction(p, b):
    """Relative rise of mean quality when only the best share ``p`` survives."""
    out = 1.0 + b * (1.0 - np.asarray(p, dtype=float))
    return out if out.ndim else float(out)


def removed_quality_factor(s, a, b):
    """Mean quality (relative to the pre-harvest mean) of the removed trees.

    Strip-road removals are average trees; selective removals are the lower
    tail of the uniform distribution with mean ``1 - b * p``.
    """
    s = np.asarray(s, dtype=float)
    p = s / a
    removed = 1.0 - s
    selective = a - s
    # strip + selective == removed, so the mix is 1 - b * p * selective / removed
    share = np.divide(selective, removed, out=np.zeros_like(removed), where=removed > 0)
    return 1.0 - b * p * share


def apply_thinning(state, spec: ThinningSpec, scenario):
    """Thin a stand.  Returns ``(new_state, HarvestRecord)``."""
    s = np.broadcast_to(spec.total_survival, state.stems.shape)
    a = spec.striproad_survival
    removed = state.stems * (1.0 - s)
    stems = state.stems * s

    if scenario.quality_active:
        b = scenario.half_width_b
        p = quality_survival(s, a)
        quality = state.quality * quality_correction(p, b)
        removed_q = state.quality * removed_quality_factor(s, a, b)
    else:
        quality = state.quality.copy()
        removed_q = state.quality.copy()

    new = state.copy(stems=stems, quality=quality)
    return new, HarvestRecord(removed=removed, removed_quality=removed_q, age=state.age)


def clear_fell(state):
    """Remove every stem.  Returns ``(empty_state, HarvestRecord)``."""
    new = state.copy(stems=np.zeros_like(state.stems))
    return new, HarvestRecord(
        removed=state.stems.copy(), removed_quality=state.quality.copy(),
        age=state.age, kind="final_felling",
    )
