import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forestreturn import growth
from forestreturn.errors import DegenerateStandError
from forestreturn.growth import DiameterGrid, StandState, basal_area, step
from forestreturn.scenario import ScenarioConfig
from forestreturn.vigor import (
    TransitionRecord, apply_normalization, capacity_field, normalize_capacity, propagate_coefficients,
    raw_capacity,
)
from toys import toy_coeffs, toy_state

VQ = ScenarioConfig(mode="vigor_quality")


def test_raw_capacity_examples():
    assert raw_capacity(180.0, 180.0, 0.3) == pytest.approx(1.0, abs=1e-15)
    assert raw_capacity(0.0, 200.0, 0.5) == 0.5
    assert raw_capacity(300.0, 200.0, 0.5) == 1.25


def test_raw_capacity_empty_stand():
    with pytest.raises(DegenerateStandError):
        raw_capacity(100.0, 0.0, 0.5)
    with pytest.raises(DegenerateStandError):
        capacity_field(StandState.empty(DiameterGrid()), 0.5)


@settings(max_examples=100, deadline=None)
@given(
    stems=st.lists(st.floats(0, 1e4, allow_nan=False), min_size=12, max_size=36),
    alpha=st.sampled_from([0.0, 0.3, 0.5, 0.7, 1.0]),
)
def test_capacity_mean_is_one(stems, alpha):
    arr = np.zeros(36)
    arr[: len(stems)] = stems
    if arr.sum() <= 0:
        return
    state = StandState.empty(DiameterGrid())
    state.stems[:] = arr.reshape(3, 12)
    m = capacity_field(state, alpha)
    assert (state.stems * m).sum() / state.stems.sum() == pytest.approx(1.0, abs=1e-12)


@given(d1=st.floats(0, 1000), d2=st.floats(0, 1000), alpha=st.floats(0.01, 1.0))
def test_capacity_increasing_in_diameter(d1, d2, alpha):
    if d2 - d1 > 1e-6:
        assert raw_capacity(d1, 200.0, alpha) < raw_capacity(d2, 200.0, alpha)


# --------------------------------------------------------------------------
# normalization

def _one_step_gross_gain(stems, inc, width, mids, m):
    """Independent scalar oracle: basal-area gain of one step, full survival,
    one species, capacities ``m`` scaling the increment."""
    gain = 0.0
    n = len(stems)
    for d in range(n - 1):
        f = min(inc * m[d] / width, 1.0)
        up = stems[d] * f
        gain += up * math.pi / 4 * ((mids[d + 1] / 1000) ** 2 - (mids[d] / 1000) ** 2)
    return gain


def test_normalization_two_class_fixture():
    state = toy_state([100.0, 50.0, 0.0])
    m = np.ones_like(state.stems)
    m[0, :2] = [0.8, 1.2]
    n = normalize_capacity(state, m, toy_coeffs(inc_const=10.0), VQ)
    mids = state.grid.midpoints
    ratio = _one_step_gross_gain([100, 50, 0], 10.0, 50.0, mids, [1, 1, 1]) / _one_step_gross_gain(
        [100, 50, 0], 10.0, 50.0, mids, [0.8, 1.2, 1.0]
    )
    np.testing.assert_allclose(n[0, :2], [0.8 * ratio, 1.2 * ratio], rtol=1e-13)
    # closed form of the same oracle: ratio = 35/34
    np.testing.assert_allclose(n[0, :2], [14 / 17, 21 / 17], rtol=1e-13)


def test_normalization_identity():
    state = toy_state([100.0, 50.0, 20.0])
    m = np.ones_like(state.stems)
    assert np.array_equal(normalize_capacity(state, m, toy_coeffs(inc_const=10.0), VQ), m)


def test_normalization_degenerate():
    state = toy_state([100.0, 50.0, 20.0])
    with pytest.raises(DegenerateStandError):
        normalize_capacity(state, np.ones_like(state.stems), toy_coeffs(), VQ)


def _random_stand(rng):
    state = StandState.empty(DiameterGrid(), site={"site_index": 20.0})
    for k in range(3):
        top = rng.integers(2, 9)
        state.stems[k, :top] = rng.uniform(0, 150, top)
    return state


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("mode", ["vigor_quality", "coupled"])
def test_normalization_conserves_ba_growth(coeffs, seed, mode):
    sc = ScenarioConfig(mode=mode, alpha=0.5)
    state = _random_stand(np.random.default_rng(seed))
    before = basal_area(state)
    plain, _ = step(state, coeffs, sc)
    corrected, _ = step(apply_normalization(state, coeffs, sc), coeffs, sc)
    assert basal_area(corrected) - before == pytest.approx(basal_area(plain) - before, rel=1e-9)


def test_normalization_under_saturation():
    # fast growth saturates the small classes' transitions; the refinement
    # must still match basal-area growth
    state = toy_state([100.0, 80.0, 60.0, 40.0, 0.0])
    coeffs = toy_coeffs(inc_const=45.0)
    m = capacity_field(state, 0.9)
    n = normalize_capacity(state, m, coeffs, VQ)
    plain, _ = step(state, coeffs, VQ)
    corrected, _ = step(state.copy(vigor=n), coeffs, VQ)
    assert basal_area(corrected) == pytest.approx(basal_area(plain), rel=1e-9)


def test_coupled_normalization_scales_quality_by_raw_capacity(coeffs):
    state = _random_stand(np.random.default_rng(1))
    sc = ScenarioConfig(mode="coupled")
    out = apply_normalization(state, coeffs, sc)
    np.testing.assert_allclose(out.quality, capacity_field(state, sc.alpha), rtol=1e-15)
    assert np.array_equal(apply_normalization(state, coeffs, VQ).quality, state.quality)


# --------------------------------------------------------------------------
# propagation

def test_propagation_examples():
    nt = np.array([[50.0, 0.0]])
    nr = np.array([[0.0, 150.0]])
    c = np.array([[1.2, 1.0]])
    assert propagate_coefficients(TransitionRecord(nt, nr), c)[0, 1] == pytest.approx(1.05, rel=1e-15)
    still = TransitionRecord(np.zeros((1, 2)), nr)
    assert np.array_equal(propagate_coefficients(still, c), c)


def test_empty_class_keeps_coefficient():
    rec = TransitionRecord(np.zeros((1, 3)), np.array([[5.0, 0.0, 0.0]]))
    c = np.array([[1.1, 0.7, 1.3]])
    assert np.array_equal(propagate_coefficients(rec, c), c)


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(6, 10),
    seed=st.integers(0, 2**32 - 1),
    inc=st.floats(0.0, 80.0),
)
def test_propagation_conserves_coefficient_mass(n, seed, inc):
    rng = np.random.default_rng(seed)
    state = toy_state(rng.uniform(0, 500, n))
    state.vigor[0] = rng.uniform(0.5, 1.5, n)
    sc = ScenarioConfig(mode="reference")
    new, rec = step(state, toy_coeffs(inc_const=inc), sc)
    before = (state.stems * state.vigor).sum()
    after = (new.stems * new.vigor).sum()
    assert after == pytest.approx(before, rel=1e-12)
