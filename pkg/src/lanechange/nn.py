"""Small dense networks with hand-written backpropagation.

Each network is ``input -> tanh hidden layer(s) -> scalar`` with an optional
softplus output head. Forward passes are dtype-generic, which lets the
finite-difference checks evaluate in extended precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEADS = ("linear", "neg_softplus", "pos_softplus")


class TrainingHalted(FloatingPointError):
    """A non-finite gradient or loss was produced."""


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class Gradients:
    """Partials of a scalar with respect to every weight and bias of an :class:`Mlp`."""

    weights: list
    biases: list

    def arrays(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def sq_norm(self) -> float:
        return float(sum(np.sum(g * g) for g in self.arrays()))

    def scale(self, factor: float) -> "Gradients":
        return Gradients([w * factor for w in self.weights], [b * factor for b in self.biases])

    def __add__(self, other):
        return Gradients([a + b for a, b in zip(self.weights, other.weights)],
                         [a + b for a, b in zip(self.biases, other.biases)])


class Mlp:
    """Feed-forward network with tanh hidden units and a scalar output.

    ``weights[l]`` has shape ``(layer_sizes[l + 1], layer_sizes[l])``.
    """

    def __init__(self, layer_sizes, head: str = "linear", weights=None, biases=None):
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        if len(layer_sizes) < 2 or layer_sizes[-1] != 1:
            raise ValueError("need at least an input and a scalar output layer")
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.head = head
        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        if weights is None:
            weights = [np.zeros((o, i)) for i, o in pairs]
        if biases is None:
            biases = [np.zeros(o) for _, o in pairs]
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        for (i, o), w, b in zip(pairs, self.weights, self.biases):
            if w.shape != (o, i) or b.shape != (o,):
                raise ValueError(f"parameter shapes {w.shape}/{b.shape} do not match layer {i}->{o}")

    @classmethod
    def initialize(cls, layer_sizes, head, rng) -> "Mlp":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
        net = cls(layer_sizes, head)
        for w in net.weights:
            bound = 1.0 / np.sqrt(w.shape[1])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return net

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, self.head,
                   [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def set_flat(self, values):
        values = np.asarray(values, dtype=float)
        if values.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {values.size}")
        pos = 0
        for a in self.arrays():
            a[...] = values[pos:pos + a.size].reshape(a.shape)
            pos += a.size

    def __call__(self, x):
        return mlp_forward(self, x)[0]


def mlp_forward(net: Mlp, x, weights=None, biases=None):
    """Evaluate ``net`` on one input vector or an ``(n, d)`` batch.

    Returns:
        ``(output, cache)``; output is a scalar for a single vector and an
        ``(n,)`` array for a batch.
    """
    weights = net.weights if weights is None else weights
    biases = net.biases if biases is None else biases
    x = np.asarray(x)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"input length {h.shape[1]} != {net.layer_sizes[0]}")
    acts = [h]
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.tanh(h @ w.T + b)
        acts.append(h)
    z = (h @ weights[-1].T + biases[-1])[:, 0]
    if net.head == "linear":
        out = z
    elif net.head == "neg_softplus":
        out = -softplus(z)
    else:
        out = softplus(z)
    cache = (acts, z, single)
    return (out[0] if single else out), cache


def mlp_backward(net: Mlp, cache, d_output):
    """Reverse-mode partials given the upstream derivative ``d_output``.

    For a batch, ``d_output`` has one entry per row and parameter gradients are
    summed over the batch.

    Returns:
        ``(Gradients, d_input)``.
    """
    acts, z, single = cache
    d = np.atleast_1d(np.asarray(d_output, dtype=float))
    if net.head == "neg_softplus":
        d = -d * sigmoid(z)
    elif net.head == "pos_softplus":
        d = d * sigmoid(z)
    delta = d[:, None]
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        gw[layer] = delta.T @ acts[layer]
        gb[layer] = delta.sum(axis=0)
        delta = delta @ net.weights[layer]
        if layer > 0:
            delta = delta * (1.0 - acts[layer] ** 2)
    d_input = delta[0] if single else delta
    return Gradients(gw, gb), d_input


def relative_error(analytic, numeric, floor: float = 1e-12):
    """Elementwise ``|a - n| / max(|a|, |n|)``, defined as 0 where both are below ``floor``."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(n))
    err = np.zeros_like(scale)
    mask = scale >= floor
    err[mask] = np.abs(a - n)[mask] / scale[mask]
    return err


def numeric_gradient(f, params, h: float):
    """Central differences of scalar ``f(params)`` over a flat parameter vector."""
    params = np.array(params, dtype=np.longdouble)
    grad = np.empty(params.size, dtype=np.longdouble)
    for k in range(params.size):
        old = params[k]
        params[k] = old + h
        up = f(params)
        params[k] = old - h
        down = f(params)
        params[k] = old
        grad[k] = (up - down) / (2 * h)
    return grad


def unflatten(net: Mlp, flat):
    """Split a flat vector into ``(weights, biases)`` lists shaped like ``net`` (dtype kept)."""
    ws, bs, pos = [], [], 0
    for w, b in zip(net.weights, net.biases):
        ws.append(flat[pos:pos + w.size].reshape(w.shape))
        pos += w.size
        bs.append(flat[pos:pos + b.size])
        pos += b.size
    return ws, bs


def gradient_check(net: Mlp, trials: int = 5, h: float = 1e-5, tol: float = 1e-5, rng=None,
                   randomize: bool = True, scale: float = 1.0, corrupt: float = 1.0):
    """Worst relative error between backprop and central differences.

    Each trial draws a random input in [-1, 1]^d and, with ``randomize``, a
    fresh random parameter point. Partials with respect to every parameter
    and every input component are compared; differences are evaluated in
    extended precision. ``corrupt`` scales the analytic gradient (a canary
    for the checker itself).

    Returns:
        ``(max_error, passed)``.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-7, 1e-4]")
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(trials):
        probe = net.copy()
        if randomize:
            for a in probe.arrays():
                a[...] = rng.normal(0.0, scale / np.sqrt(max(1, a.shape[-1])), size=a.shape)
        x = rng.uniform(-1.0, 1.0, size=probe.layer_sizes[0])
        _, cache = mlp_forward(probe, x)
        grads, d_in = mlp_backward(probe, cache, 1.0)
        analytic = np.concatenate([g.ravel() for g in grads.arrays()] + [d_in]) * corrupt

        x_ext = x.astype(np.longdouble)

        def f_params(flat):
            ws, bs = unflatten(probe, flat)
            return mlp_forward(probe, x_ext, ws, bs)[0]

        flat_ext = probe.flat().astype(np.longdouble)
        ws_ext, bs_ext = unflatten(probe, flat_ext)
        numeric = np.concatenate([
            numeric_gradient(f_params, flat_ext, h),
            numeric_gradient(lambda xi: mlp_forward(probe, xi, ws_ext, bs_ext)[0], x_ext, h),
        ])
        worst = max(worst, float(relative_error(analytic, numeric).max()))
    return worst, worst < tol


def clip_global_norm(grad_sets, max_norm: float):
    """Scale a list of :class:`Gradients` jointly so their global norm is at most ``max_norm``."""
    total = float(np.sqrt(sum(g.sq_norm() for g in grad_sets)))
    if not np.isfinite(total):
        raise TrainingHalted(f"non-finite gradient norm {total}")
    if total > max_norm:
        factor = max_norm / total
        return [g.scale(factor) for g in grad_sets], total
    return list(grad_sets), total


def sgd_step(net: Mlp, grads: Gradients, alpha: float) -> Mlp:
    """In-place ``p <- p - alpha * g``."""
    for g in grads.arrays():
        if not np.all(np.isfinite(g)):
            raise TrainingHalted("non-finite gradient entry; refusing to update")
    for p, g in zip(net.arrays(), grads.arrays()):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        p -= alpha * g
    return net
