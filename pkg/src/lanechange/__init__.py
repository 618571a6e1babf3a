"""Learning highway lane changes with a quadratic Q-function on yaw acceleration.

The package is layered bottom-up: ``idm`` and ``gap`` (car following and
gap acceptance), ``road``/``dynamics``/``world`` (simulation), ``nn`` and
``qlearning`` (function approximation and TD learning), then ``training``,
``config``, ``persistence`` and ``cli``.
"""

from .config import Config, ConfigError, dump_config, load_config, parse_config
from .dynamics import (
    DEFAULT_LIMITS, DEFAULT_TOLERANCE, DEFAULT_WEIGHTS, STATE_SCALES, EpisodeError, LaneChangeEpisode,
    LateralLimits, Phase, RewardWeights, StateVector, TerminalTolerance, Transition, build_state,
    check_terminal, immediate_reward, integrate_lateral,
)
from .gap import DEFAULT_SAFETY, GapAssessment, GuardDecision, SafetyParams, assess_gap, lateral_progress, safety_guard
from .idm import DEFAULT_IDM, IdmParams, dual_leader_accel, equilibrium_gap, idm_accel, modified_idm_accel
from .nn import Gradients, Mlp, TrainingHalted, gradient_check, mlp_backward, mlp_forward, sgd_step
from .persistence import CheckpointError, export_metrics, load_checkpoint, read_metrics, save_checkpoint
from .qlearning import (
    Batch, QuadraticQ, ReplayBuffer, compose_B, explore_action, greedy_action, q_value, sync_target, td_target,
    train_step,
)
from .road import RoadGeometry, VehicleState, lane_center
from .training import Environment, EvalReport, MetricsRow, TrainConfig, evaluate, run_training
from .world import KMH, CollisionError, ScenarioConfig, World

__version__ = "0.1.0"
