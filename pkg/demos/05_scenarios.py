"""
Three ways of treating vigor and quality
========================================

The reference case ignores both.  In the second, size-based vigor drives
growth and thinning selects for quality, which is priced into sawlogs.  In
the coupled case vigor also sets initial quality and quality feeds back into
growth.  The same search is run for a sparse spruce stand in each case.
"""
from forestreturn import BootstrapSpec, ScenarioConfig, SearchSpace, default_coefficients, default_tables, optimize
from forestreturn.policy import figure_data, run_policy

coeffs, tables = default_coefficients(), default_tables()
spec = BootstrapSpec("spruce", 1200)
space = SearchSpace(
    rotation_months=tuple(range(300, 1051, 30)),
    trigger_ba=(None, 15.0, 20.0, 25.0),
    pivot_class=(1, 2, 3),
    from_above=(0.0, 0.5),
    quality_depth=(0.0, 0.4),
)

for mode in ("reference", "vigor_quality", "coupled"):
    scenario = ScenarioConfig(mode=mode)
    res = optimize(spec, scenario, tables, coeffs, space)
    fig = figure_data(run_policy(spec, res.policy, scenario, tables, coeffs))
    print(
        f"{mode:14s} rate {res.rate:.4f}  rotation {res.policy.rotation_months / 12:4.1f} yr"
        f"  thinnings {len(fig.thinnings)}  maturity dbh {fig.mean_dbh_cm[-1]:.1f} cm"
    )
