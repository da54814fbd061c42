import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forestreturn.defaults import data_path
from forestreturn.errors import ConfigurationError, TableError
from forestreturn.growth import (
    DiameterGrid, StandState, Term, GrowthCoefficients, ba_weighted_mean_diameter, basal_area,
    effective_increment, load_coefficients, predict_increment, step, transition_matrix,
)
from forestreturn.scenario import ScenarioConfig
from toys import toy_coeffs, toy_state

REF = ScenarioConfig(mode="reference")


def mixed_fixture():
    """Three-species stand used by the spreadsheet oracle."""
    state = StandState.empty(DiameterGrid(), site={"site_index": 20.0})
    state.stems[0, :5] = [300, 200, 100, 50, 20]
    state.stems[1, :4] = [100, 80, 40, 10]
    state.stems[2, :3] = [50, 40, 5]
    return state


# --------------------------------------------------------------------------
# grid and summaries

def test_grid_bounds_and_midpoints():
    g = DiameterGrid(50.0, 50.0, 4)
    assert list(g.lower_bounds) == [50, 100, 150, 200]
    assert list(g.midpoints) == [75, 125, 175, 225]
    assert g.class_of(99.9) == 0 and g.class_of(100) == 1
    with pytest.raises(ConfigurationError):
        g.class_of(400)


def test_single_class_mean_diameter():
    state = toy_state([10, 0, 0], grid=DiameterGrid(50.0, 125.0, 3))  # midpoint 150 mm
    assert ba_weighted_mean_diameter(state) == pytest.approx(15.0, rel=1e-15)


def test_weighted_mean_diameter():
    grid = DiameterGrid(100.0, 100.0, 2)  # midpoints 150 and 250 mm
    state = toy_state(np.array([1.0, 3.0]) / grid.tree_basal_area, grid=grid)
    assert basal_area(state) == pytest.approx(4.0)
    assert ba_weighted_mean_diameter(state) == pytest.approx(22.5, rel=1e-14)


def test_empty_stand_summaries():
    state = StandState.empty(DiameterGrid())
    assert basal_area(state) == 0.0
    assert math.isnan(ba_weighted_mean_diameter(state))


def test_basal_area_definition():
    state = mixed_fixture()
    expected = 0.0
    for k in range(3):
        for d in range(12):
            mid = 75 + 50 * d
            expected += state.stems[k, d] * math.pi / 4 * (mid / 1000) ** 2
    assert basal_area(state) == pytest.approx(expected, rel=1e-14)


# --------------------------------------------------------------------------
# increment prediction

def test_zero_coefficients_give_zero_increment():
    state = mixed_fixture()
    assert predict_increment(state, "pine", 3, toy_coeffs()) == 0.0


def test_density_free_coefficients_use_intercept():
    state = StandState.empty(DiameterGrid())
    coeffs = toy_coeffs(inc_const=3.0, inc_dbh=0.01, inc_ba=-0.5)
    assert predict_increment(state, "spruce", 1, coeffs) == pytest.approx(3.0 + 0.01 * 125)


def _spreadsheet_increment(path, species, state, class_index):
    """Evaluate the linear increment formula of one species by hand."""
    mids = [75 + 50 * d for d in range(12)]
    tree_ba = [math.pi / 4 * (m / 1000) ** 2 for m in mids]
    ba = sum(state.stems[k, d] * tree_ba[d] for k in range(3) for d in range(12))
    bal = sum(state.stems[k, d] * tree_ba[d] for k in range(3) for d in range(class_index + 1, 12))
    covariates = {"const": 1.0, "dbh": mids[class_index], "ba": ba, "bal": bal, "site_index": 20.0}
    eta = 0.0
    with open(path) as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            if row["species"] == species and row["function"] == "increment":
                eta += float(row["coefficient"]) * covariates[row["covariate"]] ** float(row["exponent"])
    return max(eta, 0.0)


def test_increment_matches_spreadsheet_oracle(coeffs):
    state = mixed_fixture()
    path = data_path("placeholder_growth.csv")
    expected = _spreadsheet_increment(path, "spruce", state, 1)
    assert predict_increment(state, "spruce", 1, coeffs) == pytest.approx(expected, rel=1e-12)
    # frozen value of the same hand evaluation
    assert expected == pytest.approx(7.8922398, abs=1e-7)
    for sp in ("pine", "birch"):
        for d in (0, 4, 9):
            assert predict_increment(state, sp, d, coeffs) == pytest.approx(
                _spreadsheet_increment(path, sp, state, d), rel=1e-12, abs=1e-12
            )


def test_missing_covariate_is_named(coeffs):
    state = mixed_fixture()
    state.site.clear()
    with pytest.raises(ConfigurationError, match="site_index"):
        predict_increment(state, "spruce", 1, coeffs)


def test_exp_linear_form():
    coeffs = GrowthCoefficients(
        "exp_linear", "constant",
        {s: (Term("dbh", "ln", 1, 0.5),) for s in ("spruce", "pine", "birch")},
        {}, "toy",
    )
    state = StandState.empty(DiameterGrid())
    assert predict_increment(state, "birch", 1, coeffs) == pytest.approx(math.sqrt(125.0))


# --------------------------------------------------------------------------
# coefficient table ingestion

def test_load_coefficients_header_and_terms(coeffs):
    assert coeffs.increment_form == "linear"
    assert coeffs.survival_form == "logistic"
    assert "placeholder" in coeffs.provenance
    assert coeffs.required_covariates() == {"site_index"}
    assert len(coeffs.increment["spruce"]) == 6


@pytest.mark.parametrize("body, message", [
    ("# survival_form: constant\nspecies,function,covariate,transform,exponent,coefficient\n", "increment_form"),
    ("# increment_form: linear\n# survival_form: constant\n"
     "species,function,covariate,transform,exponent,coefficient\noak,increment,const,none,1,1\n", "oak"),
    ("# increment_form: linear\n# survival_form: constant\n"
     "species,function,covariate,transform,exponent,coefficient\nspruce,increment,const,none,x,1\n", "row 2"),
    ("# increment_form: cubic\n# survival_form: constant\n"
     "species,function,covariate,transform,exponent,coefficient\n", "cubic"),
])
def test_bad_coefficient_tables(tmp_path, body, message):
    p = tmp_path / "c.csv"
    p.write_text(body)
    with pytest.raises(TableError, match=message):
        load_coefficients(p)


# --------------------------------------------------------------------------
# effective increment

def test_effective_increment_examples():
    assert effective_increment(4.0, 2.0, "markov") == 4.0
    assert effective_increment(4.0, 2.0, "non_markov") == 3.0
    assert effective_increment(4.0, float("nan"), "non_markov") == 4.0


def test_non_markov_step_averages_raw_predictions():
    sc = ScenarioConfig(mode="reference", growth_mode="non_markov")
    state = toy_state([100, 0, 0])
    first, _ = step(state, toy_coeffs(inc_const=10.0), sc)
    assert np.all(first.prev_increment[0] == 10.0)
    # raw prediction changes to 30 mm; the applied increment is the mean, 20 mm
    second, rec = step(first, toy_coeffs(inc_const=30.0), sc)
    assert rec.nt[0, 0] == pytest.approx(first.stems[0, 0] * 20.0 / 50.0)
    assert np.all(second.prev_increment[0] == 30.0)


# --------------------------------------------------------------------------
# stepping

def test_zero_growth_full_survival_is_identity():
    state = toy_state([100, 50, 25])
    new, _ = step(state, toy_coeffs(), REF)
    assert np.array_equal(new.stems, state.stems)
    assert new.age == state.age + 30


def test_single_cohort_split():
    state = toy_state([100, 0])
    new, rec = step(state, toy_coeffs(inc_const=20.0, survival=0.98), REF)
    assert rec.nt[0, 0] == pytest.approx(39.2, rel=1e-14)
    assert rec.nr[0, 0] == pytest.approx(58.8, rel=1e-14)
    assert new.stems[0].tolist() == pytest.approx([58.8, 39.2], rel=1e-14)


def test_two_class_matrix_power_oracle():
    # f = 10/50 = 0.2 below the absorbing top class, survival 0.98
    a = np.array([[0.98 * 0.8, 0.0], [0.98 * 0.2, 0.98]])
    x0 = np.array([120.0, 30.0])
    state = toy_state(x0)
    coeffs = toy_coeffs(inc_const=10.0, survival=0.98)
    for _ in range(2):
        state, _ = step(state, coeffs, REF)
    np.testing.assert_allclose(state.stems[0], np.linalg.matrix_power(a, 2) @ x0, rtol=1e-14)


def test_transition_matrix_layout():
    state = toy_state([10, 10, 10])
    m = transition_matrix(state, toy_coeffs(inc_const=25.0, survival=0.9), REF, "spruce")
    np.testing.assert_allclose(m, [[0.45, 0, 0], [0.45, 0.45, 0], [0, 0.45, 0.9]])


def test_saturation_caps_transition():
    state = toy_state([100, 0, 0])
    new, rec = step(state, toy_coeffs(inc_const=500.0), REF)
    assert new.stems[0].tolist() == [0.0, 100.0, 0.0]


def test_coupled_growth_uses_quality():
    sc = ScenarioConfig(mode="coupled")
    state = toy_state([100, 0])
    state.quality[0, 0] = 1.5
    _, rec = step(state, toy_coeffs(inc_const=10.0), sc)
    assert rec.nt[0, 0] == pytest.approx(100 * 0.3)
    _, rec = step(state, toy_coeffs(inc_const=10.0), ScenarioConfig(mode="vigor_quality"))
    assert rec.nt[0, 0] == pytest.approx(100 * 0.2)


stem_vectors = st.lists(st.floats(0, 2000, allow_nan=False), min_size=3, max_size=12)


@settings(max_examples=60, deadline=None)
@given(stems=stem_vectors, species=st.integers(0, 2))
def test_step_invariants(coeffs, stems, species):
    state = toy_state(stems, species=species, site={"site_index": 20.0})
    new, rec = step(state, coeffs, REF)
    from forestreturn.growth import survival_field
    surv = survival_field(state, coeffs)
    # mass split exactness
    np.testing.assert_allclose(rec.nt + rec.nr, state.stems * surv, rtol=1e-15, atol=0)
    # no recruitment
    assert new.stems.sum() <= state.stems.sum() * (1 + 1e-12)
    # at most one class per step: class d+1 receives only from class d
    assert np.all(rec.nt[:, -1] == 0)
    np.testing.assert_allclose(new.stems[:, 1:], rec.nr[:, 1:] + rec.nt[:, :-1], rtol=1e-15)
    # determinism
    again, _ = step(state.copy(), coeffs, REF)
    assert np.array_equal(again.stems, new.stems)
