"""Gap acceptance at lane-change initiation and the in-maneuver safety guard."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SafetyParams:
    d_min: float = 2.0   # m, minimum bumper gap
    b_max: float = 3.0   # m/s^2, deceleration allowed to absorb a speed difference

    def __post_init__(self):
        if not (self.d_min > 0 and self.b_max > 0):
            raise ValueError("d_min and b_max must be positive")


DEFAULT_SAFETY = SafetyParams()


@dataclass(frozen=True)
class GapAssessment:
    lead_gap: float
    lag_gap: float
    lead_required: float
    lag_required: float

    @property
    def accepted(self) -> bool:
        return self.lead_gap >= self.lead_required and self.lag_gap >= self.lag_required


class GuardDecision(enum.Enum):
    CONTINUE = "continue"
    ABORT = "abort"


def required_gap(v_follow: float, v_lead: float, params: SafetyParams = DEFAULT_SAFETY) -> float:
    """Gap needed so the follower can shed its excess speed at ``b_max`` and still keep ``d_min``."""
    return params.d_min + max(0.0, (v_follow ** 2 - v_lead ** 2) / (2.0 * params.b_max))


def assess_gap(v_ego: float, lead=None, lag=None, params: SafetyParams = DEFAULT_SAFETY) -> GapAssessment:
    """Check the target-lane gap.

    Args:
        v_ego: ego speed, m/s.
        lead: ``(gap, speed)`` of the target-lane leader, or ``None``.
        lag: ``(gap, speed)`` of the target-lane follower, or ``None``.

    Returns:
        A :class:`GapAssessment`; a missing neighbor contributes an infinite gap.
    """
    if lead is None:
        lead_gap, lead_req = math.inf, params.d_min
    else:
        lead_gap, lead_req = lead[0], required_gap(v_ego, lead[1], params)
    if lag is None:
        lag_gap, lag_req = math.inf, params.d_min
    else:
        lag_gap, lag_req = lag[0], required_gap(lag[1], v_ego, params)
    return GapAssessment(lead_gap, lag_gap, lead_req, lag_req)


def lateral_progress(y: float, origin_center: float, target_center: float) -> float:
    """Signed fraction of the lateral distance from origin to target lane center covered so far."""
    return (y - origin_center) / (target_center - origin_center)


def safety_guard(assessment: GapAssessment, progress: float) -> GuardDecision:
    """Abort only while the ego is short of halfway; past that the maneuver is committed."""
    if not assessment.accepted and progress < 0.5:
        return GuardDecision.ABORT
    return GuardDecision.CONTINUE
