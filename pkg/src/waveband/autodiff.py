"""Define-by-run reverse-mode differentiation over float64 numpy arrays.

Just enough machinery to train the frequency-branch networks: affine
maps, element-wise nonlinearities, axis shuffles, gathers, and the
Smooth-L1 loss, each with an exact analytic backward.  The tape is the
implicit graph hanging off each tensor; it is rebuilt every batch.
"""

import numpy as np

from .errors import EmptyTape, ShapeMismatch

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_GELU_CUBIC = 0.044715


class Tensor:
    __slots__ = ("value", "_parents", "_backward")

    def __init__(self, value, parents=(), backward_fn=None):
        self.value = np.asarray(value, dtype=np.float64)
        self._parents = parents
        self._backward = backward_fn

    @property
    def shape(self):
        return self.value.shape


class Parameter(Tensor):
    """Trainable tensor with a persistent, accumulating gradient."""

    __slots__ = ("grad", "name")

    def __init__(self, value, name: str):
        super().__init__(value)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self):
        self.grad.fill(0.0)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the original shape."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------

def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_val = a.value + b.value

    def backward(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Tensor(out_val, (a, b), backward)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_val = a.value * b.value

    def backward(g):
        return (_unbroadcast(g * b.value, a.value.shape),
                _unbroadcast(g * a.value, b.value.shape))

    return Tensor(out_val, (a, b), backward)


def matmul(a, w):
    """Contract the last axis of ``a`` with the first axis of 2-D ``w``."""
    a, w = _as_tensor(a), _as_tensor(w)
    if a.value.shape[-1] != w.value.shape[0]:
        raise ShapeMismatch(
            f"matmul: {a.value.shape} x {w.value.shape}")
    out_val = a.value @ w.value

    def backward(g):
        ga = g @ w.value.T
        gw = np.tensordot(a.value, g,
                          axes=(tuple(range(a.value.ndim - 1)),) * 2)
        return ga, gw

    return Tensor(out_val, (a, w), backward)


def dense(x, weight, bias):
    """x @ weight + bias, bias broadcast over leading axes."""
    return add(matmul(x, weight), bias)


def relu(x):
    x = _as_tensor(x)
    mask = x.value > 0

    def backward(g):
        return (g * mask,)

    return Tensor(x.value * mask, (x,), backward)


def tanh(x):
    x = _as_tensor(x)
    t = np.tanh(x.value)

    def backward(g):
        return (g * (1.0 - t * t),)

    return Tensor(t, (x,), backward)


def gelu(x):
    """Tanh-approximation GELU with its exact analytic derivative."""
    x = _as_tensor(x)
    v = x.value
    inner = _SQRT_2_OVER_PI * (v + _GELU_CUBIC * v ** 3)
    t = np.tanh(inner)
    out_val = 0.5 * v * (1.0 + t)

    def backward(g):
        dinner = _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_CUBIC * v * v)
        dv = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner
        return (g * dv,)

    return Tensor(out_val, (x,), backward)


ACTIVATIONS = {"gelu": gelu, "relu": relu, "tanh": tanh}


def activation(x, kind: str):
    try:
        fn = ACTIVATIONS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    return fn(x)


def reshape(x, shape):
    x = _as_tensor(x)
    orig = x.value.shape

    def backward(g):
        return (g.reshape(orig),)

    return Tensor(x.value.reshape(shape), (x,), backward)


def swap_last_axes(x):
    x = _as_tensor(x)

    def backward(g):
        return (np.swapaxes(g, -1, -2),)

    return Tensor(np.swapaxes(x.value, -1, -2), (x,), backward)


def gather_last(x, index):
    """Index the last axis with an integer array (duplicates allowed)."""
    x = _as_tensor(x)
    index = np.asarray(index)

    def backward(g):
        gx = np.zeros_like(x.value)
        flat_g = g.reshape(-1, index.size)
        flat_gx = gx.reshape(-1, gx.shape[-1])
        np.add.at(flat_gx, (slice(None), index.reshape(-1)), flat_g)
        return (gx,)

    return Tensor(x.value[..., index], (x,), backward)


def sum_all(x):
    x = _as_tensor(x)

    def backward(g):
        return (np.full_like(x.value, float(g)),)

    return Tensor(x.value.sum(), (x,), backward)


def smooth_l1_loss(prediction, target):
    """Mean Smooth-L1 (threshold 1) and its gradient via the tape."""
    prediction = _as_tensor(prediction)
    tval = target.value if isinstance(target, Tensor) else np.asarray(
        target, dtype=np.float64)
    if prediction.value.shape != tval.shape:
        raise ShapeMismatch(
            f"smooth_l1_loss: {prediction.value.shape} vs {tval.shape}")
    d = prediction.value - tval
    absd = np.abs(d)
    quad = absd < 1.0
    elems = np.where(quad, 0.5 * d * d, absd - 0.5)
    n = d.size

    def backward(g):
        return (float(g) * np.where(quad, d, np.sign(d)) / n,)

    return Tensor(elems.mean(), (prediction,), backward)


def mse_loss(prediction, target):
    prediction = _as_tensor(prediction)
    tval = target.value if isinstance(target, Tensor) else np.asarray(
        target, dtype=np.float64)
    if prediction.value.shape != tval.shape:
        raise ShapeMismatch(
            f"mse_loss: {prediction.value.shape} vs {tval.shape}")
    d = prediction.value - tval
    n = d.size

    def backward(g):
        return (float(g) * 2.0 * d / n,)

    return Tensor((d * d).mean(), (prediction,), backward)


def lift(value, parents, backward_fn):
    """Wrap an externally computed linear stage into the tape."""
    return Tensor(value, tuple(parents), backward_fn)


# ----------------------------------------------------------------------
# reverse pass
# ----------------------------------------------------------------------

def backward(loss: Tensor, seed: float = 1.0):
    """Propagate d(loss)/d(theta) into every reachable Parameter.grad.

    Gradients accumulate across calls; call ``zero_grad`` between steps.
    """
    if not isinstance(loss, Tensor):
        raise TypeError("backward expects a Tensor")
    if not loss._parents and not isinstance(loss, Parameter):
        raise EmptyTape("no forward computation recorded for this tensor")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.asarray(seed, dtype=np.float64)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += np.broadcast_to(g, node.value.shape)
            continue
        if node._backward is None:
            continue
        parent_grads = node._backward(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None:
                continue
            acc = grads.get(id(p))
            grads[id(p)] = pg if acc is None else acc + pg


def parameters_of(loss: Tensor):
    """All distinct Parameters reachable from a tensor's graph."""
    out = []
    seen = set()
    stack = [loss]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Parameter):
            out.append(node)
        stack.extend(node._parents)
    return out


def init_dense(rng: np.random.Generator, in_dim: int, out_dim: int,
               name: str):
    """Fan-in uniform weight + zero bias pair."""
    bound = 1.0 / np.sqrt(in_dim)
    w = Parameter(rng.uniform(-bound, bound, size=(in_dim, out_dim)),
                  f"{name}/weight")
    b = Parameter(np.zeros(out_dim), f"{name}/bias")
    return w, b
