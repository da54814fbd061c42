"""
Stepping a stand through diameter classes
=========================================

A young spruce stand is advanced in 30-month steps.  Each step moves a share
of the survivors of every class one class up; the rest stay.
"""
import numpy as np

from forestreturn import (
    BootstrapSpec, DiameterGrid, ScenarioConfig, basal_area, ba_weighted_mean_diameter,
    default_coefficients, step,
)
from forestreturn.early_stand import handoff_state
from forestreturn.growth import transition_matrix

coeffs = default_coefficients()
scenario = ScenarioConfig(mode="reference")
state = handoff_state(BootstrapSpec("spruce", 2400), DiameterGrid())

# 2400 saplings split evenly between the 50 and 100 mm classes at age 20
print(f"age {state.age / 12:.1f} yr  stems {state.total_stems:.0f}  BA {basal_area(state):.1f} m2/ha")

for _ in range(12):
    state, record = step(state, coeffs, scenario)
    print(
        f"age {state.age / 12:.1f} yr  stems {state.total_stems:.0f}  BA {basal_area(state):.1f} m2/ha"
        f"  mean dbh {ba_weighted_mean_diameter(state):.1f} cm"
    )

# The same step written as a matrix acting on the stem vector
A = transition_matrix(state, coeffs, scenario, "spruce")
nxt, _ = step(state, coeffs, scenario)
print("matrix form agrees:", np.allclose(A @ state.stems[0], nxt.stems[0]))
