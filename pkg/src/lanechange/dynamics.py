"""Lane-change environment: RL state, lateral kinematics, rewards and the episode phase machine."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .road import RoadGeometry, VehicleState, lane_center

# raw / scale; longitudinal acceleration uses 4 so the -8 m/s^2 braking floor maps to -2
STATE_SCALES = np.array([40.0, 4.0, 1000.0, 11.25, 0.2, 2.0, 5.0, 1.0e-3])
STATE_FIELDS = ("v", "a", "x", "y", "theta", "id", "w", "c")


@dataclass(frozen=True)
class StateVector:
    v: float
    a: float
    x: float
    y: float
    theta: float
    id: int
    w: float
    c: float

    def raw(self) -> np.ndarray:
        return np.array([self.v, self.a, self.x, self.y, self.theta, self.id, self.w, self.c])

    def normalized(self) -> np.ndarray:
        return self.raw() / STATE_SCALES


def build_state(ego: VehicleState, road: RoadGeometry, target_lane: int) -> StateVector:
    if not 0 <= target_lane < road.n_lanes or abs(target_lane - ego.lane_index) > 1:
        raise ValueError(f"target lane {target_lane} is not adjacent to lane {ego.lane_index}")
    return StateVector(ego.v, ego.a, ego.x, ego.y, ego.theta, target_lane,
                       road.lane_width, road.curvature)


@dataclass(frozen=True)
class LateralLimits:
    a_yaw: float = 0.5   # rad/s^2, action clamp
    omega: float = 0.3   # rad/s
    theta: float = 0.3   # rad


DEFAULT_LIMITS = LateralLimits()


def _clip(value, bound):
    return min(bound, max(-bound, value))


def integrate_lateral(ego: VehicleState, a_yaw: float, dt: float,
                      limits: LateralLimits = DEFAULT_LIMITS, y_bounds=None) -> VehicleState:
    """Semi-implicit Euler step of yaw rate, heading and lateral position (in place).

    ``y_bounds`` optionally confines ``y`` to a lateral corridor.
    """
    a_yaw = _clip(a_yaw, limits.a_yaw)
    ego.omega = _clip(ego.omega + a_yaw * dt, limits.omega)
    ego.theta = _clip(ego.theta + ego.omega * dt, limits.theta)
    y = ego.y + ego.v * math.sin(ego.theta) * dt
    if y_bounds is not None:
        y = min(y_bounds[1], max(y_bounds[0], y))
    ego.y = y
    return ego


@dataclass(frozen=True)
class RewardWeights:
    w_acce: float = -1.0
    w_rate: float = -1.0
    w_time: float = -0.05

    def __post_init__(self):
        if max(self.w_acce, self.w_rate, self.w_time) > 0:
            raise ValueError("reward weights must be nonpositive (cost formulation)")


DEFAULT_WEIGHTS = RewardWeights()


def immediate_reward(a_yaw: float, omega: float, delta_d_lat: float,
                     weights: RewardWeights = DEFAULT_WEIGHTS):
    """Return ``(r, r_acce, r_rate, r_time)`` for one step."""
    r_acce = weights.w_acce * abs(a_yaw)
    r_rate = weights.w_rate * abs(omega)
    r_time = weights.w_time * abs(delta_d_lat)
    return r_acce + r_rate + r_time, r_acce, r_rate, r_time


@dataclass(frozen=True)
class TerminalTolerance:
    dy: float = 0.1
    theta: float = 0.02
    omega: float = 0.05


DEFAULT_TOLERANCE = TerminalTolerance()


def check_terminal(ego: VehicleState, target_lane: int, road: RoadGeometry,
                   tol: TerminalTolerance = DEFAULT_TOLERANCE) -> bool:
    return (abs(lane_center(road, target_lane) - ego.y) <= tol.dy
            and abs(ego.theta) <= tol.theta
            and abs(ego.omega) <= tol.omega)


class Phase(enum.Enum):
    SEEKING = "seeking"
    CHANGING = "changing"
    ABORTING = "aborting"
    DONE = "done"
    TIMED_OUT = "timed_out"


ACTIVE_PHASES = (Phase.CHANGING, Phase.ABORTING)


@dataclass(frozen=True)
class Transition:
    s: StateVector
    a: float
    r: float
    s_next: StateVector
    terminal: bool
    r_acce: float = 0.0
    r_rate: float = 0.0
    r_time: float = 0.0


class EpisodeError(RuntimeError):
    pass


@dataclass
class LaneChangeEpisode:
    """Lane change of one vehicle from ``origin_lane`` toward ``change_lane``.

    ``target_lane`` is the lane currently steered to; it flips back to
    ``origin_lane`` on abort.
    """

    vid: int
    origin_lane: int
    change_lane: int
    episode_id: int = -1
    phase: Phase = Phase.SEEKING
    target_lane: int = -1
    step_count: int = 0
    aborted: bool = False
    truncated: bool = False
    start_step: int = -1
    transitions: list = field(default_factory=list)
    component_sums: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    max_abs_omega: float = 0.0
    sum_abs_a_yaw: float = 0.0

    def __post_init__(self):
        if abs(self.origin_lane - self.change_lane) != 1:
            raise ValueError("a lane change goes to an adjacent lane")
        if self.target_lane < 0:
            self.target_lane = self.change_lane

    @property
    def active(self) -> bool:
        return self.phase in ACTIVE_PHASES

    @property
    def finished(self) -> bool:
        return self.phase in (Phase.DONE, Phase.TIMED_OUT)

    @property
    def total_return(self) -> float:
        r_acce, r_rate, r_time = self.component_sums
        return r_acce + r_rate + r_time

    @property
    def outcome(self) -> str:
        """``"done"``, ``"aborted"`` or ``"timeout"``; an abort dominates how it ended."""
        if self.aborted:
            return "aborted"
        return "done" if self.phase is Phase.DONE else "timeout"

    def start(self, ego: VehicleState, episode_id: int, step: int):
        if self.phase is not Phase.SEEKING:
            raise EpisodeError(f"cannot start an episode in phase {self.phase.value}")
        self.phase = Phase.CHANGING
        self.episode_id = episode_id
        self.start_step = step
        ego.omega = 0.0

    def abort(self):
        if self.phase is not Phase.CHANGING:
            raise EpisodeError("only a changing episode can abort")
        self.phase = Phase.ABORTING
        self.aborted = True
        self.target_lane = self.origin_lane

    def corridor(self, road: RoadGeometry):
        lo = min(self.origin_lane, self.change_lane) * road.lane_width
        return lo, lo + 2.0 * road.lane_width

    def record(self, s: StateVector, a_yaw: float, ego: VehicleState, road: RoadGeometry,
               weights: RewardWeights = DEFAULT_WEIGHTS,
               tol: TerminalTolerance = DEFAULT_TOLERANCE, timeout_steps: int = 100) -> Transition:
        """Score the step just integrated and advance the phase machine."""
        if not self.active:
            raise EpisodeError(f"cannot step an episode in phase {self.phase.value}")
        delta = lane_center(road, self.target_lane) - ego.y
        r, r_acce, r_rate, r_time = immediate_reward(a_yaw, ego.omega, delta, weights)
        s_next = build_state(ego, road, self.target_lane)
        terminal = check_terminal(ego, self.target_lane, road, tol)
        tr = Transition(s, a_yaw, r, s_next, terminal, r_acce, r_rate, r_time)
        self.transitions.append(tr)
        self.component_sums[0] += r_acce
        self.component_sums[1] += r_rate
        self.component_sums[2] += r_time
        self.step_count += 1
        self.max_abs_omega = max(self.max_abs_omega, abs(ego.omega))
        self.sum_abs_a_yaw += abs(a_yaw)
        if terminal:
            self.phase = Phase.DONE
        elif self.step_count >= timeout_steps:
            self.phase = Phase.TIMED_OUT
        return tr

    def truncate(self):
        """End an active episode early (left the segment or the corridor, or was blocked laterally)."""
        self.phase = Phase.TIMED_OUT
        self.truncated = True
