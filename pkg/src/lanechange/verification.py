"""Independent numerical checks: finite-difference gradients of the TD loss and grid argmax."""

from __future__ import annotations

import numpy as np

from .nn import mlp_forward, numeric_gradient, relative_error, unflatten
from .qlearning import A_OFFSET, BOUND_FLOOR, NET_ORDER, Batch, QuadraticQ, gradient_vector, loss_and_gradients, q_value, td_target, with_flag


def randomize(q: QuadraticQ, rng, bias_scale: float = 0.1) -> QuadraticQ:
    """Fresh parameter point: init-style weights and small random biases."""
    for net in q.nets.values():
        for w, b in zip(net.weights, net.biases):
            bound = 1.0 / np.sqrt(w.shape[1])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
            b[...] = rng.uniform(-bias_scale, bias_scale, size=b.shape)
    return q


def random_batch(rng, n: int = 4, state_dim: int = 8) -> Batch:
    return Batch(rng.uniform(-1, 1, (n, state_dim)), rng.uniform(-0.5, 0.5, n), rng.uniform(-1, 0, n),
                 rng.uniform(-1, 1, (n, state_dim)), rng.random(n) < 0.5)


def _net_inputs(name, batch):
    if name == "C":
        return with_flag(batch.s, batch.terminal.astype(float))
    return batch.s


def _ext_loss(outs, a, targets, b_form):
    coef = outs["A"] - A_OFFSET
    prod = outs["B_pre"] * outs["B_sen"]
    bound = outs["B_max"] + BOUND_FLOOR
    b = np.clip(prod, -bound, bound) if b_form == "clamp" else np.maximum(prod, bound)
    err = coef * (b - a) ** 2 + outs["C"] - targets
    return np.mean(err ** 2)


def numeric_loss_gradient(q: QuadraticQ, targets, batch: Batch, h: float = 1e-5):
    """Central differences of the batch TD loss over every parameter of the five networks."""
    a = batch.a.astype(np.longdouble)
    tg = np.asarray(targets).astype(np.longdouble)
    inputs = {k: _net_inputs(k, batch).astype(np.longdouble) for k in NET_ORDER}
    flats = {k: q.nets[k].flat().astype(np.longdouble) for k in NET_ORDER}
    base = {k: mlp_forward(q.nets[k], inputs[k], *unflatten(q.nets[k], flats[k]))[0] for k in NET_ORDER}
    parts = []
    for name in NET_ORDER:
        net = q.nets[name]

        def f(flat, name=name, net=net):
            outs = dict(base)
            outs[name] = mlp_forward(net, inputs[name], *unflatten(net, flat))[0]
            return _ext_loss(outs, a, tg, q.b_form)

        parts.append(numeric_gradient(f, flats[name], h))
    return np.concatenate(parts)


def clamp_interior(q: QuadraticQ, batch: Batch, margin: float = 1e-3) -> bool:
    pre = q.nets["B_pre"](batch.s)
    sen = q.nets["B_sen"](batch.s)
    bound = q.nets["B_max"](batch.s) + BOUND_FLOOR
    return bool(np.all(np.abs(pre * sen) < bound - margin))


def loss_gradient_check(q: QuadraticQ, trials: int = 1, rng=None, h: float = 1e-5, batch_size: int = 4,
                        gamma: float = 0.9) -> float:
    """Worst relative error of the analytic TD-loss gradient over random parameter points.

    Each trial randomizes a copy of ``q`` (online) and an independent target
    copy, draws a batch, and redraws until every ``B`` is strictly inside its
    clamp so the loss is differentiable at the probe.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(trials):
        for _attempt in range(100):
            online = randomize(q.copy(), rng)
            batch = random_batch(rng, batch_size)
            if clamp_interior(online, batch):
                break
        else:
            raise RuntimeError("could not find a clamp-interior probe point")
        target = randomize(q.copy(), rng)
        targets = td_target(target, batch.r, batch.s_next, batch.terminal, gamma)
        _, grads = loss_and_gradients(online, targets, batch)
        numeric = numeric_loss_gradient(online, targets, batch, h)
        worst = max(worst, float(relative_error(gradient_vector(grads), numeric).max()))
    return worst


def grid_argmax(q: QuadraticQ, states, lo: float = -0.5, hi: float = 0.5, step: float = 1e-3):
    """Brute-force argmax of ``q_value`` over an action grid, one state at a time."""
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    best = np.empty(len(states))
    for i, s in enumerate(states):
        s_rep = np.repeat(s[None, :], len(grid), axis=0)
        best[i] = grid[int(np.argmax(q_value(q, s_rep, grid)))]
    return best


def reference_controller(world, pole: float = 1.2):
    """Linear full-state lateral feedback for scripted scenarios and demos.

    Places a triple pole at ``-pole`` for the linearized chain
    ``y''' = v * a_yaw``. It reads the yaw rate straight from the simulator,
    which the learned policy's 8-component state does not contain.
    """
    road = world.road

    def policy(states):
        active = [vid for vid in sorted(world.episodes) if world.episodes[vid].active]
        out = []
        for vid in active:
            veh, ep = world.vehicles[vid], world.episodes[vid]
            e = veh.y - road.lane_center(ep.target_lane)
            v = max(veh.v, 1.0)
            out.append(-(pole ** 3 * e + 3 * pole ** 2 * v * veh.theta + 3 * pole * v * veh.omega) / v)
        return np.asarray(out)

    return policy
