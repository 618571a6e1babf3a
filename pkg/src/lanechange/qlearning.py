"""Q-learning with a Q-function that is quadratic in the action.

    Q(s, a) = A(s) * (B(s) - a)^2 + C(s, terminal),   A(s) < 0

so the greedy action is ``B(s)`` and the greedy value is ``C(s)``. ``B`` is
assembled from three networks: a preliminary yaw acceleration, a positive
sensitivity factor and a positive, state-dependent bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Gradients, Mlp, TrainingHalted, clip_global_norm, mlp_backward, mlp_forward, sgd_step

NET_ORDER = ("A", "C", "B_pre", "B_sen", "B_max")
A_OFFSET = 1e-6    # keeps A strictly negative
BOUND_FLOOR = 0.01  # rad/s^2, smallest admissible |B| bound
B_FORMS = ("clamp", "max")


class QuadraticQ:
    """Five networks; ``C`` sees the state plus a terminal flag, the others the state only."""

    def __init__(self, nets: dict, b_form: str = "clamp", action_limit: float = 0.5):
        if set(nets) != set(NET_ORDER):
            raise ValueError(f"need networks {NET_ORDER}")
        if b_form not in B_FORMS:
            raise ValueError(f"b_form must be one of {B_FORMS}")
        self.nets = {k: nets[k] for k in NET_ORDER}
        self.b_form = b_form
        self.action_limit = action_limit

    @classmethod
    def initialize(cls, rng, state_dim: int = 8, hidden_ac: int = 100, hidden_b: int = 150,
                   b_form: str = "clamp", action_limit: float = 0.5) -> "QuadraticQ":
        nets = {
            "A": Mlp.initialize([state_dim, hidden_ac, 1], "neg_softplus", rng),
            "C": Mlp.initialize([state_dim + 1, hidden_ac, 1], "linear", rng),
            "B_pre": Mlp.initialize([state_dim, hidden_b, 1], "linear", rng),
            "B_sen": Mlp.initialize([state_dim, hidden_b, 1], "pos_softplus", rng),
            "B_max": Mlp.initialize([state_dim, hidden_b, 1], "pos_softplus", rng),
        }
        return cls(nets, b_form, action_limit)

    def copy(self) -> "QuadraticQ":
        return QuadraticQ({k: n.copy() for k, n in self.nets.items()}, self.b_form, self.action_limit)

    def architecture(self):
        return [(k, self.nets[k].layer_sizes, self.nets[k].head) for k in NET_ORDER]

    def a_coef(self, s):
        return self.nets["A"](s) - A_OFFSET

    def c_value(self, s, terminal=0.0):
        return self.nets["C"](with_flag(s, terminal))


def with_flag(s, terminal):
    s = np.asarray(s)
    if s.ndim == 1:
        return np.append(s, float(terminal))
    flag = np.broadcast_to(np.asarray(terminal, dtype=s.dtype), (s.shape[0],))
    return np.column_stack([s, flag])


def _combine(prod, m, b_form):
    if b_form == "clamp":
        return np.clip(prod, -m, m)
    return np.maximum(prod, m)


def compose_B(q: QuadraticQ, s):
    """Greedy yaw acceleration before the environment clamp.

    Returns:
        ``(B, pre, sen, bound)``; in the default ``clamp`` form
        ``B = clip(pre * sen, -bound, bound)``.
    """
    pre = q.nets["B_pre"](s)
    sen = q.nets["B_sen"](s)
    bound = q.nets["B_max"](s) + BOUND_FLOOR
    return _combine(pre * sen, bound, q.b_form), pre, sen, bound


def q_value(q: QuadraticQ, s, a, terminal=0.0):
    b = compose_B(q, s)[0]
    return q.a_coef(s) * (b - a) ** 2 + q.c_value(s, terminal)


def greedy_action(q: QuadraticQ, s):
    return np.clip(compose_B(q, s)[0], -q.action_limit, q.action_limit)


def explore_action(q: QuadraticQ, s, sigma: float, rng):
    """Gaussian perturbation of the greedy action, clamped to the action range."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    g = greedy_action(q, s)
    if sigma == 0:
        return g
    return np.clip(g + sigma * rng.standard_normal(np.shape(g)), -q.action_limit, q.action_limit)


def td_target(q_target: QuadraticQ, r, s_next, terminal, gamma: float):
    """``r`` for terminal transitions, else ``r + gamma * C_target(s_next, 0)``."""
    r = np.asarray(r, dtype=float)
    terminal = np.asarray(terminal, dtype=bool)
    boot = q_target.c_value(s_next, 0.0)
    return np.where(terminal, r, r + gamma * boot)


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    terminal: np.ndarray

    def __len__(self):
        return len(self.a)


def loss_and_gradients(q: QuadraticQ, targets, batch: Batch):
    """Mean squared TD error of ``q`` against fixed ``targets`` and its exact gradient.

    Returns:
        ``(loss, {net name: Gradients})``.
    """
    s, a = batch.s, batch.a
    n = len(a)
    flag = batch.terminal.astype(float)
    out_a, cache_a = mlp_forward(q.nets["A"], s)
    out_c, cache_c = mlp_forward(q.nets["C"], with_flag(s, flag))
    pre, cache_p = mlp_forward(q.nets["B_pre"], s)
    sen, cache_s = mlp_forward(q.nets["B_sen"], s)
    raw_m, cache_m = mlp_forward(q.nets["B_max"], s)
    coef = out_a - A_OFFSET
    bound = raw_m + BOUND_FLOOR
    prod = pre * sen
    b = _combine(prod, bound, q.b_form)
    diff = b - a
    qv = coef * diff ** 2 + out_c
    err = qv - targets
    loss = float(np.mean(err ** 2))
    if not np.isfinite(loss):
        raise TrainingHalted(f"non-finite TD loss {loss}")

    g = 2.0 * err / n
    d_b = g * 2.0 * coef * diff
    if q.b_form == "clamp":
        through = np.abs(prod) < bound
        d_bound = np.where(prod >= bound, d_b, 0.0) - np.where(prod <= -bound, d_b, 0.0)
    else:
        through = prod >= bound
        d_bound = np.where(through, 0.0, d_b)
    d_prod = np.where(through, d_b, 0.0)
    grads = {
        "A": mlp_backward(q.nets["A"], cache_a, g * diff ** 2)[0],
        "C": mlp_backward(q.nets["C"], cache_c, g)[0],
        "B_pre": mlp_backward(q.nets["B_pre"], cache_p, d_prod * sen)[0],
        "B_sen": mlp_backward(q.nets["B_sen"], cache_s, d_prod * pre)[0],
        "B_max": mlp_backward(q.nets["B_max"], cache_m, d_bound)[0],
    }
    return loss, grads


def batch_loss(q: QuadraticQ, targets, batch: Batch) -> float:
    err = q_value(q, batch.s, batch.a, batch.terminal.astype(float)) - targets
    return float(np.mean(err ** 2))


def train_step(q_online: QuadraticQ, q_target: QuadraticQ, batch: Batch, alpha: float,
               gamma: float, max_grad_norm: float = 10.0) -> float:
    """One clipped gradient-descent step on all five networks; returns the pre-update loss."""
    targets = td_target(q_target, batch.r, batch.s_next, batch.terminal, gamma)
    loss, grads = loss_and_gradients(q_online, targets, batch)
    clipped, _ = clip_global_norm([grads[k] for k in NET_ORDER], max_grad_norm)
    for name, gset in zip(NET_ORDER, clipped):
        sgd_step(q_online.nets[name], gset, alpha)
    return loss


def sync_target(q_online: QuadraticQ, q_target: QuadraticQ) -> QuadraticQ:
    """Hard copy of every online parameter into the target networks."""
    for name in NET_ORDER:
        for dst, src in zip(q_target.nets[name].arrays(), q_online.nets[name].arrays()):
            dst[...] = src
    return q_target


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling (with replacement)."""

    def __init__(self, capacity: int = 50_000, state_dim: int = 8):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros(capacity)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.inserted = 0

    def __len__(self):
        return min(self.inserted, self.capacity)

    def add(self, s, a, r, s_next, terminal):
        i = self.inserted % self.capacity
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.terminal[i] = terminal
        self.inserted += 1

    def add_transition(self, tr):
        self.add(tr.s.normalized(), tr.a, tr.r, tr.s_next.normalized(), tr.terminal)

    def sample_indices(self, batch_size: int, rng):
        if len(self) == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, len(self), size=batch_size)

    def sample(self, batch_size: int, rng) -> Batch:
        idx = self.sample_indices(batch_size, rng)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s_next[idx], self.terminal[idx])


def flat_parameters(q: QuadraticQ) -> np.ndarray:
    return np.concatenate([q.nets[k].flat() for k in NET_ORDER])


def gradient_vector(grads: dict) -> np.ndarray:
    return np.concatenate([np.concatenate([a.ravel() for a in grads[k].arrays()]) for k in NET_ORDER])


__all__ = ["QuadraticQ", "ReplayBuffer", "Batch", "compose_B", "q_value", "greedy_action",
           "explore_action", "td_target", "train_step", "sync_target", "loss_and_gradients",
           "batch_loss", "Gradients", "NET_ORDER"]
