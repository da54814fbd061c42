"""
Return rate on capital over one rotation
========================================

The stand is valued at every sample.  Value growth between samples is the
operating return; harvest income leaves the capital without counting as
return.  The expected rate weights the momentary rate by the capital.
"""
import numpy as np

from forestreturn import BootstrapSpec, PolicySpec, ScenarioConfig, default_coefficients, default_tables
from forestreturn import expected_rate, simulate_rotation
from forestreturn.finance import instantaneous_rate, shift_start

coeffs = default_coefficients()
tables = default_tables()
policy = PolicySpec(rotation_months=600, trigger_ba=25.0, pivot_class=2, from_above=0.5, quality_depth=0.2)
traj, fig = simulate_rotation(BootstrapSpec("spruce", 2400), policy, ScenarioConfig(), tables, coeffs)

for e in traj.events:
    print(f"{e.age / 12:5.1f} yr  {e.kind:13s} amount {e.amount:10.1f}")

live = traj.K > 0
r = instantaneous_rate(traj.dkappa_dt[live], traj.K[live])
print(f"momentary rate ranges from {r.min():.3f} to {r.max():.3f} per year")
print(f"expected rate over the rotation: {expected_rate(traj):.4f} per year")

# The cycle repeats, so the integration may start anywhere in it
for start in (120.0, 300.0, 450.0):
    print(f"starting at {start / 12:4.1f} yr: {expected_rate(shift_start(traj, start)):.10f}")
