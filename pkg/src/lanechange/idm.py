"""Intelligent Driver Model (IDM) longitudinal control.

Reference:
    Treiber, Hennecke, Helbing. "Congested traffic states in empirical
    observations and microscopic simulations." Physical Review E 62 (2000).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class IdmParams:
    """IDM parameters (standard literature values).

    Attributes:
        a_max: maximum acceleration, m/s^2.
        b_comf: comfortable deceleration, m/s^2.
        s0: jam distance, m.
        T: desired time headway, s.
        delta: free-road acceleration exponent.
        k_free: the interaction term is ignored once the gap exceeds
            ``k_free * s*`` (see :func:`modified_idm_accel`).
        decel_floor: physical braking limit applied by the simulator, m/s^2.
    """

    a_max: float = 1.5
    b_comf: float = 2.0
    s0: float = 2.0
    T: float = 1.5
    delta: float = 4.0
    k_free: float = 5.0
    decel_floor: float = 8.0

    def __post_init__(self):
        for name in ("a_max", "b_comf", "s0", "T", "delta", "k_free", "decel_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")


DEFAULT_IDM = IdmParams()


def desired_gap(v: float, v_lead: float, params: IdmParams = DEFAULT_IDM) -> float:
    """Dynamic desired gap s* = s0 + max(0, v*T + v*dv / (2*sqrt(a*b)))."""
    dv = v - v_lead
    dyn = v * params.T + v * dv / (2.0 * math.sqrt(params.a_max * params.b_comf))
    return params.s0 + max(0.0, dyn)


def _free_term(v: float, v_limit: float, params: IdmParams) -> float:
    return 1.0 - (v / v_limit) ** params.delta


def _check(v, v_limit, gap, v_lead):
    if v < 0 or v_limit <= 0:
        raise ValueError("speeds must be nonnegative and v_limit positive")
    if gap is not None:
        if v_lead is None or v_lead < 0:
            raise ValueError("leader speed must be given and nonnegative")
        if not gap > 0:
            raise ValueError(f"nonpositive gap {gap!r} with a leader present (collision state)")


def idm_accel(v: float, v_limit: float, gap: float | None = None, v_lead: float | None = None,
              params: IdmParams = DEFAULT_IDM) -> float:
    """Plain IDM acceleration.

    Args:
        v: own speed, m/s.
        v_limit: desired speed, m/s.
        gap: bumper-to-bumper distance to the leader, m; ``None`` if no leader.
        v_lead: leader speed, m/s.

    Returns:
        Acceleration in m/s^2 (unclamped).
    """
    _check(v, v_limit, gap, v_lead)
    free = _free_term(v, v_limit, params)
    if gap is None:
        return params.a_max * free
    s_star = desired_gap(v, v_lead, params)
    return params.a_max * (free - (s_star / gap) ** 2)


def modified_idm_accel(v: float, v_limit: float, gap: float | None = None,
                       v_lead: float | None = None, params: IdmParams = DEFAULT_IDM) -> float:
    """IDM with a free-gap gate.

    The interaction term is dropped when ``gap > k_free * s*`` so that
    lightly constrained vehicles settle at their speed limit instead of
    crawling behind a distant leader.
    """
    _check(v, v_limit, gap, v_lead)
    free = _free_term(v, v_limit, params)
    if gap is None:
        return params.a_max * free
    s_star = desired_gap(v, v_lead, params)
    if gap > params.k_free * s_star:
        return params.a_max * free
    return params.a_max * (free - (s_star / gap) ** 2)


def dual_leader_accel(v: float, v_limit: float, leaders, params: IdmParams = DEFAULT_IDM) -> float:
    """Acceleration of a lane-changing vehicle that watches two leaders.

    ``leaders`` is an iterable of ``(gap, v_lead)`` pairs or ``None`` entries
    (ego-lane leader, target-lane leader). The smaller of the per-leader
    accelerations is returned; with no leader at all the free-flow value.
    """
    values = [modified_idm_accel(v, v_limit, g, vl, params)
              for g, vl in (ld for ld in leaders if ld is not None)]
    if not values:
        return modified_idm_accel(v, v_limit, None, None, params)
    return min(values)


def clamp_accel(a: float, params: IdmParams = DEFAULT_IDM) -> float:
    """Apply the physical braking floor; IDM itself never exceeds ``a_max``."""
    return max(a, -params.decel_floor)


def equilibrium_gap(v: float, v_limit: float, params: IdmParams = DEFAULT_IDM) -> float:
    """Closed-form steady-state gap at speed ``v`` behind an equal-speed leader."""
    if not 0 <= v < v_limit:
        raise ValueError("equilibrium requires 0 <= v < v_limit")
    s_star = params.s0 + v * params.T
    return s_star / math.sqrt(_free_term(v, v_limit, params))
