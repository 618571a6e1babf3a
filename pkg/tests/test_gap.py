import math

import pytest
from hypothesis import given, strategies as st

from lanechange.gap import GuardDecision, SafetyParams, assess_gap, lateral_progress, required_gap, safety_guard


def test_empty_neighborhood_accepted():
    g = assess_gap(20.0)
    assert g.accepted and g.lead_gap == math.inf and g.lag_gap == math.inf


def test_equal_speed_boundary():
    g = assess_gap(20.0, lead=(2.0, 20.0), lag=(2.0, 20.0))
    assert g.lead_required == 2.0 and g.lag_required == 2.0
    assert g.accepted


def test_fast_lag_rejects():
    g = assess_gap(20.0, lag=(40.0, 26.0))
    assert g.lag_required == pytest.approx(48.0)
    assert not g.accepted


def test_params_validated():
    with pytest.raises(ValueError):
        SafetyParams(d_min=0.0)


@given(st.floats(0, 40), st.floats(0, 40))
def test_requirements_at_least_d_min(v_follow, v_lead):
    assert required_gap(v_follow, v_lead) >= 2.0


@given(st.floats(0, 30), st.floats(0.1, 10))
def test_quadratic_growth_in_adverse_speed_difference(v_lead, dv):
    r1 = required_gap(v_lead + dv, v_lead) - 2.0
    r2 = required_gap(v_lead + 2 * dv, v_lead) - 2.0
    assert r2 > r1 > 0


@given(st.floats(0, 40), st.floats(0, 40))
def test_missing_neighbor_equals_infinite_gap(v_ego, v_other):
    assert assess_gap(v_ego).accepted == assess_gap(v_ego, (math.inf, v_other), (math.inf, v_other)).accepted


def test_guard_halfway_rule():
    bad = assess_gap(20.0, lag=(40.0, 26.0))
    good = assess_gap(20.0)
    assert safety_guard(good, 0.2) is GuardDecision.CONTINUE
    assert safety_guard(bad, 0.2) is GuardDecision.ABORT
    assert safety_guard(bad, 0.7) is GuardDecision.CONTINUE
    assert lateral_progress(1.875 + 0.75, 1.875, 5.625) == pytest.approx(0.2)
    assert lateral_progress(9.375 - 2.625, 9.375, 5.625) == pytest.approx(0.7)
