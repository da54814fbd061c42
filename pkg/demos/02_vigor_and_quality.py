"""
Size-based vigor and quality thinning
=====================================

Larger trees are assumed to carry more inherited growth capacity.  The raw
coefficient is rescaled so that stand basal-area growth does not change;
afterwards the coefficients travel with the stems.  Thinning away the worst
trees of a class raises the expected quality of the survivors.
"""
import numpy as np

from forestreturn import BootstrapSpec, DiameterGrid, ScenarioConfig, basal_area, default_coefficients, step
from forestreturn.early_stand import handoff_state
from forestreturn.quality import ThinningSpec, apply_thinning
from forestreturn.vigor import apply_normalization, capacity_field

coeffs = default_coefficients()
scenario = ScenarioConfig(mode="vigor_quality", alpha=0.5)
state = handoff_state(BootstrapSpec("pine", 2400), DiameterGrid())
for _ in range(3):
    state, _ = step(state, coeffs, scenario)

populated = state.stems[1] > 0
m = capacity_field(state, scenario.alpha)
corrected = apply_normalization(state, coeffs, scenario)
print("raw capacity     ", np.round(m[1, populated], 3))
print("normalized vigor ", np.round(corrected.vigor[1, populated], 3))

# Basal-area growth over the next step is the same with and without vigor
plain, _ = step(state, coeffs, scenario)
spread, _ = step(corrected, coeffs, scenario)
print(f"BA growth: {basal_area(plain) - basal_area(state):.6f} vs {basal_area(spread) - basal_area(state):.6f}")

# Strip roads take 15 % of all stems; quality thinning takes 30 % of the rest
a = 0.85
spec = ThinningSpec(np.full(12, a * 0.7), a)
thinned, record = apply_thinning(corrected, spec, scenario)
print("quality after thinning:", np.round(thinned.quality[1, populated], 3))
print("mean quality of removed trees:", np.round(record.removed_quality[1, populated], 3))
