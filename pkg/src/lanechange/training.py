"""Training loop and greedy evaluation over the simulated highway."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import DEFAULT_LIMITS, DEFAULT_TOLERANCE, DEFAULT_WEIGHTS, LateralLimits, RewardWeights, TerminalTolerance
from .gap import DEFAULT_SAFETY, SafetyParams
from .idm import DEFAULT_IDM, IdmParams
from .qlearning import QuadraticQ, ReplayBuffer, explore_action, sync_target, train_step
from .road import RoadGeometry
from .world import ScenarioConfig, World

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    total_gradient_steps: int = 40_000
    gamma: float = 0.9
    alpha: float = 0.01
    batch_size: int = 64
    warmup_transitions: int = 1_000
    target_sync_period: int = 500
    sigma_start: float = 0.1
    sigma_end: float = 0.01
    sigma_anneal_steps: int = 30_000
    buffer_capacity: int = 50_000
    max_grad_norm: float = 10.0
    b_form: str = "clamp"
    hidden_ac: int = 100
    hidden_b: int = 150
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 <= self.sigma_end <= self.sigma_start:
            raise ValueError("need 0 <= sigma_end <= sigma_start")
        for name in ("total_gradient_steps", "batch_size", "target_sync_period", "buffer_capacity",
                     "hidden_ac", "hidden_b", "sigma_anneal_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.warmup_transitions < 0 or not self.alpha > 0 or not self.max_grad_norm > 0:
            raise ValueError("need warmup >= 0, alpha > 0, max_grad_norm > 0")

    def sigma(self, grad_step: int) -> float:
        frac = min(1.0, grad_step / self.sigma_anneal_steps)
        return self.sigma_start + frac * (self.sigma_end - self.sigma_start)


@dataclass(frozen=True)
class Environment:
    """Everything the simulator needs besides the learner."""

    road: RoadGeometry = RoadGeometry()
    scenario: ScenarioConfig = ScenarioConfig()
    idm: IdmParams = DEFAULT_IDM
    safety: SafetyParams = DEFAULT_SAFETY
    weights: RewardWeights = DEFAULT_WEIGHTS
    limits: LateralLimits = DEFAULT_LIMITS
    tolerance: TerminalTolerance = DEFAULT_TOLERANCE

    def world(self, rng, lane_changes: bool = True) -> World:
        return World(self.road, self.scenario, self.idm, self.safety, self.weights, self.limits,
                     self.tolerance, rng=rng, lane_changes=lane_changes)


@dataclass(frozen=True)
class MetricsRow:
    step: int
    episode_id: int
    loss: float
    r: float
    r_acce: float
    r_rate: float
    r_time: float
    sigma: float
    episodes_done: int
    episodes_aborted: int
    episodes_timeout: int


METRICS_HEADER = tuple(f.name for f in fields(MetricsRow))


@dataclass(frozen=True)
class EpisodeRecord:
    episode_id: int
    vid: int
    outcome: str
    steps: int
    R: float
    R_acce: float
    R_rate: float
    R_time: float
    mean_abs_a_yaw: float
    max_abs_omega: float
    decomposition_exact: bool
    duration: float

    @classmethod
    def from_episode(cls, ep, dt: float):
        r_acce, r_rate, r_time = ep.component_sums
        exact = ep.total_return == r_acce + r_rate + r_time
        steps = ep.step_count
        return cls(ep.episode_id, ep.vid, ep.outcome, steps, ep.total_return, r_acce, r_rate, r_time,
                   ep.sum_abs_a_yaw / steps if steps else 0.0, ep.max_abs_omega, exact, steps * dt)


@dataclass
class TrainingResult:
    q: QuadraticQ
    metrics: list
    episodes: list
    env_steps: int
    syncs: int
    transitions: int


def _seed_streams(seed: int):
    world_ss, init_ss, learn_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(world_ss), np.random.default_rng(init_ss),
            np.random.default_rng(learn_ss))


def run_training(env: Environment = Environment(), cfg: TrainConfig = TrainConfig(),
                 progress_every: int = 0) -> TrainingResult:
    """Train the quadratic Q-function on lane changes in live traffic.

    Every environment step with at least ``warmup_transitions`` stored takes
    one gradient step; the loop ends after ``total_gradient_steps``.
    """
    world_rng, init_rng, learn_rng = _seed_streams(cfg.seed)
    q = QuadraticQ.initialize(init_rng, hidden_ac=cfg.hidden_ac, hidden_b=cfg.hidden_b,
                              b_form=cfg.b_form, action_limit=env.limits.a_yaw)
    q_target = q.copy()
    buffer = ReplayBuffer(cfg.buffer_capacity)
    world = env.world(world_rng)
    metrics, episodes = [], []
    counts = {"done": 0, "aborted": 0, "timeout": 0}
    last = None
    grad_steps = syncs = 0

    while grad_steps < cfg.total_gradient_steps:
        if world.step_count >= env.scenario.max_sim_steps:
            raise RuntimeError(f"simulation budget of {env.scenario.max_sim_steps} steps exhausted "
                               f"after {grad_steps} gradient steps")
        sigma = cfg.sigma(grad_steps)
        result = world.step(lambda states: explore_action(q, states, sigma, learn_rng))
        for tr in result.transitions:
            buffer.add_transition(tr)
        for ep in result.finished:
            if ep.step_count == 0:
                continue
            rec = EpisodeRecord.from_episode(ep, env.scenario.dt)
            episodes.append(rec)
            counts[rec.outcome] += 1
            last = rec
        if len(buffer) < max(cfg.warmup_transitions, 1):
            continue
        batch = buffer.sample(cfg.batch_size, learn_rng)
        loss = train_step(q, q_target, batch, cfg.alpha, cfg.gamma, cfg.max_grad_norm)
        grad_steps += 1
        if grad_steps % cfg.target_sync_period == 0:
            sync_target(q, q_target)
            syncs += 1
        metrics.append(MetricsRow(
            grad_steps, -1 if last is None else last.episode_id, loss,
            0.0 if last is None else last.R, 0.0 if last is None else last.R_acce,
            0.0 if last is None else last.R_rate, 0.0 if last is None else last.R_time,
            sigma, counts["done"], counts["aborted"], counts["timeout"]))
        if progress_every and grad_steps % progress_every == 0:
            log.info("step %d loss %.4g episodes %d (done %d)", grad_steps, loss, len(episodes), counts["done"])
    return TrainingResult(q, metrics, episodes, world.step_count, syncs, buffer.inserted)


@dataclass
class EvalReport:
    episodes: list = field(default_factory=list)
    env_steps: int = 0
    collisions: int = 0

    def rate(self, outcome: str) -> float:
        return sum(e.outcome == outcome for e in self.episodes) / len(self.episodes) if self.episodes else math.nan

    def summary(self) -> dict:
        eps = self.episodes
        done = [e for e in eps if e.outcome == "done"]
        mean = lambda xs: float(np.mean(xs)) if len(xs) else math.nan  # noqa: E731
        total_steps = sum(e.steps for e in eps)
        return {
            "episodes": len(eps),
            "completion_rate": self.rate("done"),
            "abort_rate": self.rate("aborted"),
            "timeout_rate": self.rate("timeout"),
            "mean_duration_s": mean([e.duration for e in done]),
            "mean_abs_a_yaw": (sum(e.mean_abs_a_yaw * e.steps for e in eps) / total_steps
                               if total_steps else math.nan),
            "max_abs_omega": max((e.max_abs_omega for e in eps), default=math.nan),
            "mean_R": mean([e.R for e in eps]),
            "mean_R_acce": mean([e.R_acce for e in eps]),
            "mean_R_rate": mean([e.R_rate for e in eps]),
            "mean_R_time": mean([e.R_time for e in eps]),
            "collisions": self.collisions,
        }


def evaluate(q: QuadraticQ, env: Environment = Environment(), episodes: int = 200, seed: int = 0,
             sigma: float = 0.0) -> EvalReport:
    """Run lane changes in fresh traffic until ``episodes`` maneuvers have finished.

    With ``sigma = 0`` actions are greedy and the report is a pure function of
    ``(q, env, episodes, seed)``. A collision raises
    :class:`~lanechange.world.CollisionError`.
    """
    world_rng, _, act_rng = _seed_streams(seed)
    world = env.world(world_rng)
    report = EvalReport()
    while len(report.episodes) < episodes:
        if world.step_count >= env.scenario.max_sim_steps:
            raise RuntimeError("simulation budget exhausted before enough episodes finished")
        result = world.step(lambda states: explore_action(q, states, sigma, act_rng))
        for ep in result.finished:
            if ep.step_count and len(report.episodes) < episodes:
                report.episodes.append(EpisodeRecord.from_episode(ep, env.scenario.dt))
    report.env_steps = world.step_count
    return report
