"""Highway segment: traffic generation, the fixed-step clock, and per-step orchestration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import idm as idm_mod
from .dynamics import (DEFAULT_LIMITS, DEFAULT_TOLERANCE, DEFAULT_WEIGHTS,
                       LaneChangeEpisode, LateralLimits, Phase, RewardWeights, TerminalTolerance,
                       build_state, integrate_lateral)
from .gap import DEFAULT_SAFETY, GuardDecision, SafetyParams, assess_gap, lateral_progress, safety_guard
from .idm import DEFAULT_IDM, IdmParams
from .road import RoadGeometry, VehicleState, lane_center

KMH = 1.0 / 3.6


@dataclass(frozen=True)
class ScenarioConfig:
    """Traffic scenario; all values SI (speeds in m/s)."""

    departure_interval: tuple = (5.0, 10.0)
    v_limit_range: tuple = (80.0 * KMH, 120.0 * KMH)
    dt: float = 0.1
    seed: int = 0
    command_x_range: tuple = (50.0, 500.0)
    max_sim_steps: int = 400_000
    vehicle_length: float = 5.0
    entrance_clear: float = 15.0
    timeout_steps: int = 100

    def __post_init__(self):
        lo, hi = self.departure_interval
        if not (self.dt > 0 and 0 < lo <= hi):
            raise ValueError("need dt > 0 and 0 < departure interval min <= max")
        vlo, vhi = self.v_limit_range
        if not 0 < vlo <= vhi:
            raise ValueError("need 0 < speed limit min <= max")
        clo, chi = self.command_x_range
        if not 0 <= clo <= chi:
            raise ValueError("need 0 <= command x min <= max")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.max_sim_steps <= 0 or self.timeout_steps <= 0:
            raise ValueError("step counts must be positive")


class CollisionError(RuntimeError):
    """Two vehicles sharing a lane overlap; the simulator state is invalid."""


@dataclass
class StepResult:
    transitions: list = field(default_factory=list)
    finished: list = field(default_factory=list)


class World:
    """Vehicle population on one road segment, stepped at a fixed ``dt``.

    With ``lane_changes=True`` every spawned vehicle is commanded to change to
    a random adjacent lane once it passes a random position drawn from
    ``config.command_x_range``; the lateral motion of those maneuvers is driven
    by the ``policy`` passed to :meth:`step`.
    """

    def __init__(self, road: RoadGeometry = RoadGeometry(), config: ScenarioConfig = ScenarioConfig(),
                 idm: IdmParams = DEFAULT_IDM, safety: SafetyParams = DEFAULT_SAFETY,
                 weights: RewardWeights = DEFAULT_WEIGHTS, limits: LateralLimits = DEFAULT_LIMITS,
                 tolerance: TerminalTolerance = DEFAULT_TOLERANCE, rng=None, lane_changes: bool = False):
        self.road = road
        self.config = config
        self.idm = idm
        self.safety = safety
        self.weights = weights
        self.limits = limits
        self.tolerance = tolerance
        self.rng = np.random.default_rng(config.seed) if rng is None else rng
        self.lane_changes = lane_changes
        self.vehicles: dict[int, VehicleState] = {}
        self.episodes: dict[int, LaneChangeEpisode] = {}
        self.commands: dict[int, tuple] = {}
        self.step_count = 0
        self.spawned = 0
        self.exited = 0
        self.next_vid = 0
        self.next_episode_id = 0
        self.countdown = [self._draw_interval() for _ in range(road.n_lanes)]

    @property
    def time(self) -> float:
        return self.step_count * self.config.dt

    def _draw_interval(self) -> int:
        lo, hi = self.config.departure_interval
        return max(1, int(round(self.rng.uniform(lo, hi) / self.config.dt)))

    # -- lane membership -------------------------------------------------

    def lanes_of(self, veh: VehicleState):
        """Lanes a vehicle currently occupies for car-following purposes.

        A maneuvering vehicle always keeps its origin lane and joins the
        other lane once it is more than a quarter lane width off the origin
        center toward it.
        """
        ep = self.episodes.get(veh.vid)
        if ep is not None and ep.active:
            c0 = lane_center(self.road, ep.origin_lane)
            side = 1.0 if ep.change_lane > ep.origin_lane else -1.0
            if (veh.y - c0) * side > 0.25 * self.road.lane_width:
                return (ep.origin_lane, ep.change_lane)
        return (veh.lane_index,)

    def _blocked_entry(self, veh: VehicleState, ep: LaneChangeEpisode, was_member: bool) -> bool:
        """True if ``veh`` just moved into its change lane closer than ``d_min`` to a vehicle there.

        Gap quality is the guard's business; this only stops a maneuvering
        vehicle from sliding in beside a car it never had a gap to.
        """
        if was_member or ep.change_lane not in self.lanes_of(veh):
            return False
        g = self.assess(veh, ep.change_lane, self.lane_members())
        return min(g.lead_gap, g.lag_gap) < self.safety.d_min

    def lane_members(self, reserved: bool = False):
        """Per-lane lists of vehicles sorted by ``x``.

        With ``reserved`` a vehicle in an active maneuver also counts as a
        member of the lane it is changing into.
        """
        members = [[] for _ in range(self.road.n_lanes)]
        for veh in self.vehicles.values():
            lanes = set(self.lanes_of(veh))
            if reserved:
                ep = self.episodes.get(veh.vid)
                if ep is not None and ep.active:
                    lanes.add(ep.change_lane)
            for lane in lanes:
                members[lane].append(veh)
        for lst in members:
            lst.sort(key=lambda v: (v.x, v.vid))
        return members

    @staticmethod
    def _neighbors(lane_list, ego):
        lead = lag = None
        for veh in lane_list:
            if veh is ego:
                continue
            if veh.x > ego.x:
                if lead is None:
                    lead = veh
            else:
                lag = veh
        return lead, lag

    def neighbors(self, ego: VehicleState, lane: int, members=None):
        """Nearest ``(lead, lag)`` vehicles of ``ego`` in ``lane``; either may be ``None``."""
        if members is None:
            members = self.lane_members()
        return self._neighbors(members[lane], ego)

    def assess(self, ego: VehicleState, lane: int, members=None):
        if members is None:
            members = self.lane_members(reserved=True)
        lead, lag = self._neighbors(members[lane], ego)
        lead_pair = None if lead is None else (lead.rear - ego.x, lead.v)
        lag_pair = None if lag is None else (ego.rear - lag.x, lag.v)
        return assess_gap(ego.v, lead_pair, lag_pair, self.safety)

    # -- traffic generation ----------------------------------------------

    def spawn_traffic(self):
        members = self.lane_members()
        for lane in range(self.road.n_lanes):
            if self.countdown[lane] > 0:
                self.countdown[lane] -= 1
            if self.countdown[lane] > 0:
                continue
            if any(v.x < self.config.entrance_clear for v in members[lane]):
                continue
            v_limit = self.rng.uniform(*self.config.v_limit_range)
            ahead = members[lane][0] if members[lane] else None
            v0 = v_limit if ahead is None else min(v_limit, ahead.v)
            veh = VehicleState(self.next_vid, lane, 0.0, lane_center(self.road, lane), v0,
                               length=self.config.vehicle_length, v_limit=v_limit)
            self.vehicles[veh.vid] = veh
            members[lane].insert(0, veh)
            if self.lane_changes:
                choices = [l for l in (lane - 1, lane + 1) if 0 <= l < self.road.n_lanes]
                target = choices[int(self.rng.integers(len(choices)))]
                self.commands[veh.vid] = (self.rng.uniform(*self.config.command_x_range), target)
            self.next_vid += 1
            self.spawned += 1
            self.countdown[lane] = self._draw_interval()

    def add_vehicle(self, lane: int, x: float, v: float, v_limit: float | None = None, **kw) -> VehicleState:
        """Place a vehicle by hand (scripted scenarios)."""
        veh = VehicleState(self.next_vid, lane, x, lane_center(self.road, lane), v,
                           length=kw.pop("length", self.config.vehicle_length),
                           v_limit=v if v_limit is None else v_limit, **kw)
        self.vehicles[veh.vid] = veh
        self.next_vid += 1
        return veh

    def command_lane_change(self, vid: int, target_lane: int) -> LaneChangeEpisode:
        veh = self.vehicles[vid]
        ep = LaneChangeEpisode(vid, veh.lane_index, target_lane)
        self.episodes[vid] = ep
        return ep

    # -- stepping ---------------------------------------------------------

    def _accelerations(self, members):
        acc = {}
        for veh in self.vehicles.values():
            ep = self.episodes.get(veh.vid)
            if ep is not None and ep.active:
                own = self.lanes_of(veh)
                leaders = []
                for lane in (ep.origin_lane, ep.change_lane):
                    if lane in own:
                        lead, _ = self._neighbors(members[lane], veh)
                    else:
                        # not in this lane yet: a vehicle alongside is not a leader
                        lead = next((o for o in members[lane] if o.rear > veh.x), None)
                    leaders.append(None if lead is None else (lead.rear - veh.x, lead.v))
                a = idm_mod.dual_leader_accel(veh.v, veh.v_limit, leaders, self.idm)
            else:
                lead, _ = self._neighbors(members[veh.lane_index], veh)
                if lead is None:
                    a = idm_mod.modified_idm_accel(veh.v, veh.v_limit, None, None, self.idm)
                else:
                    a = idm_mod.modified_idm_accel(veh.v, veh.v_limit, lead.rear - veh.x, lead.v, self.idm)
            acc[veh.vid] = idm_mod.clamp_accel(a, self.idm)
        return acc

    def _settle(self, ep: LaneChangeEpisode):
        """Hand a finished maneuver back to lane keeping at the nearest lane center."""
        veh = self.vehicles[ep.vid]
        if ep.phase is Phase.DONE:
            lane = ep.target_lane
        else:
            c0 = lane_center(self.road, ep.origin_lane)
            c1 = lane_center(self.road, ep.change_lane)
            lane = ep.origin_lane if abs(veh.y - c0) <= abs(veh.y - c1) else ep.change_lane
        veh.lane_index = lane
        veh.y = lane_center(self.road, lane)
        veh.theta = 0.0
        veh.omega = 0.0

    def check_collisions(self):
        for lane, lst in enumerate(self.lane_members()):
            for follower, leader in zip(lst, lst[1:]):
                gap = leader.rear - follower.x
                if gap < 0:
                    raise CollisionError(
                        f"step {self.step_count}: vehicles {follower.vid} and {leader.vid} overlap "
                        f"in lane {lane} (gap {gap:.3f} m)")

    def step(self, policy=None) -> StepResult:
        """Advance one ``dt``.

        Args:
            policy: callable mapping an ``(k, 8)`` array of normalized states
                to ``k`` yaw accelerations; required while maneuvers are active.

        Returns:
            The transitions logged this step and the episodes that finished.
        """
        cfg, road = self.config, self.road
        result = StepResult()
        self.spawn_traffic()

        if self.lane_changes:
            for vid, (x_cmd, target) in list(self.commands.items()):
                veh = self.vehicles[vid]
                if veh.x >= x_cmd:
                    del self.commands[vid]
                    self.episodes[vid] = LaneChangeEpisode(vid, veh.lane_index, target)

        reserved = self.lane_members(reserved=True)
        acting = []
        for vid in sorted(self.episodes):
            ep = self.episodes[vid]
            veh = self.vehicles[vid]
            if ep.phase is Phase.SEEKING:
                if self.assess(veh, ep.change_lane, reserved).accepted:
                    ep.start(veh, self.next_episode_id, self.step_count)
                    self.next_episode_id += 1
                continue
            if ep.phase is Phase.CHANGING:
                progress = lateral_progress(veh.y, lane_center(road, ep.origin_lane),
                                            lane_center(road, ep.change_lane))
                if safety_guard(self.assess(veh, ep.change_lane, reserved), progress) is GuardDecision.ABORT:
                    ep.abort()
            if ep.active:
                acting.append((ep, veh, build_state(veh, road, ep.target_lane)))

        actions = []
        if acting:
            if policy is None:
                raise ValueError("a policy is required while lane changes are active")
            states = np.stack([s.normalized() for _, _, s in acting])
            actions = [float(a) for a in np.asarray(policy(states), dtype=float).reshape(-1)]

        members = self.lane_members()
        acc = self._accelerations(members)
        was_member = {ep.vid: ep.change_lane in self.lanes_of(veh) for ep, veh, _ in acting}
        for (ep, veh, _), a_yaw in zip(acting, actions):
            integrate_lateral(veh, a_yaw, cfg.dt, self.limits, ep.corridor(road))
        for veh in self.vehicles.values():
            veh.a = acc[veh.vid]
            veh.v = max(0.0, veh.v + veh.a * cfg.dt)
            veh.x += veh.v * math.cos(veh.theta) * cfg.dt

        for (ep, veh, s), a_yaw in zip(acting, actions):
            a_clamped = min(self.limits.a_yaw, max(-self.limits.a_yaw, a_yaw))
            result.transitions.append(
                ep.record(s, a_clamped, veh, road, self.weights, self.tolerance, cfg.timeout_steps))
            lo, hi = ep.corridor(road)
            if ep.active and (not lo < veh.y < hi or self._blocked_entry(veh, ep, was_member[ep.vid])):
                ep.truncate()
            if ep.finished:
                self._settle(ep)
                result.finished.append(ep)
                del self.episodes[ep.vid]

        for vid in [vid for vid, veh in self.vehicles.items() if veh.x > road.segment_length]:
            ep = self.episodes.pop(vid, None)
            if ep is not None and ep.active:
                ep.truncate()
                result.finished.append(ep)
            self.commands.pop(vid, None)
            del self.vehicles[vid]
            self.exited += 1

        self.check_collisions()
        self.step_count += 1
        return result

    def trace_rows(self):
        """One ``(step, time, vid, lane, x, y, v, a, theta, omega)`` row per vehicle."""
        t = round(self.time, 9)
        return [(self.step_count, t, v.vid, v.lane_index, v.x, v.y, v.v, v.a, v.theta, v.omega)
                for v in self.vehicles.values()]

