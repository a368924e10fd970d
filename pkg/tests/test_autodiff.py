import numpy as np
import pytest

import waveband.autodiff as ad
from waveband.errors import EmptyTape, ShapeMismatch


def naive_matmul(a, w):
    rows, inner = a.shape
    _, cols = w.shape
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            for k in range(inner):
                out[i, j] += a[i, k] * w[k, j]
    return out


def fd_grad(fn, x, step=1e-5):
    """Central finite differences of a scalar function of an array."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        hi = fn()
        x[idx] = orig - step
        lo = fn()
        x[idx] = orig
        g[idx] = (hi - lo) / (2 * step)
    return g


def assert_close_grad(analytic, numeric, rel=1e-4, floor=1e-8):
    denom = np.maximum(np.abs(numeric), floor)
    assert np.max(np.abs(analytic - numeric) / denom) < rel


# ---------------------------------------------------------------- dense

def test_dense_identity():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    w = ad.Parameter(np.eye(2), "w")
    b = ad.Parameter(np.zeros(2), "b")
    assert np.array_equal(ad.dense(ad.Tensor(x), w, b).value, x)


def test_dense_hand_example():
    out = ad.dense(ad.Tensor([[1.0, 2.0]]),
                   ad.Parameter(np.eye(2), "w"),
                   ad.Parameter(np.array([1.0, 1.0]), "b"))
    assert np.array_equal(out.value, [[2.0, 3.0]])


def test_dense_matches_naive_matmul():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 7))
    w = rng.normal(size=(7, 3))
    b = rng.normal(size=3)
    out = ad.dense(ad.Tensor(a), ad.Parameter(w, "w"), ad.Parameter(b, "b"))
    assert np.max(np.abs(out.value - (naive_matmul(a, w) + b))) < 1e-12


def test_matmul_shape_error():
    with pytest.raises(ShapeMismatch):
        ad.matmul(ad.Tensor(np.zeros((2, 3))), ad.Tensor(np.zeros((4, 2))))


def test_dense_backward_closed_form():
    # quadratic loss through one linear layer: dL/dW = 2 X^T (XW - Y)/n
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 4))
    y = rng.normal(size=(6, 3))
    w = ad.Parameter(rng.normal(size=(4, 3)), "w")
    b = ad.Parameter(np.zeros(3), "b")
    out = ad.dense(ad.Tensor(x), w, b)
    loss = ad.mse_loss(out, y)
    ad.backward(loss)
    resid = x @ w.value + b.value - y
    expect_w = 2.0 * x.T @ resid / resid.size
    expect_b = 2.0 * resid.sum(axis=0) / resid.size
    assert np.max(np.abs(w.grad - expect_w)) < 1e-12
    assert np.max(np.abs(b.grad - expect_b)) < 1e-12


# ---------------------------------------------------------------- nonlin

def test_relu_values():
    out = ad.relu(ad.Tensor([-1.0, 0.0, 2.0]))
    assert np.array_equal(out.value, [0.0, 0.0, 2.0])


def test_tanh_at_zero():
    assert ad.tanh(ad.Tensor([0.0])).value[0] == 0.0


@pytest.mark.parametrize("kind", ["gelu", "relu", "tanh"])
def test_activation_gradient_fd(kind):
    rng = np.random.default_rng(2)
    x = rng.normal(size=12) * 2.0
    if kind == "relu":
        x = x[np.abs(x) > 1e-3]  # keep away from the kink
    p = ad.Parameter(x.copy(), "x")

    def loss_value():
        return float(ad.sum_all(ad.activation(p, kind)).value)

    p.zero_grad()
    ad.backward(ad.sum_all(ad.activation(p, kind)))
    numeric = fd_grad(loss_value, p.value)
    assert_close_grad(p.grad, numeric, rel=1e-6 if kind != "relu" else 1e-4)


def test_unknown_activation():
    with pytest.raises(ValueError):
        ad.activation(ad.Tensor([0.0]), "swish")


# ---------------------------------------------------------------- losses

def test_smooth_l1_quadratic_branch():
    pred = ad.Tensor(np.full(10, 0.5))
    assert abs(float(ad.smooth_l1_loss(pred, np.zeros(10)).value)
               - 0.125) < 1e-15


def test_smooth_l1_linear_branch():
    pred = ad.Tensor(np.full(10, 2.0))
    assert abs(float(ad.smooth_l1_loss(pred, np.zeros(10)).value)
               - 1.5) < 1e-15


def test_smooth_l1_gradient_fd():
    rng = np.random.default_rng(3)
    p = ad.Parameter(rng.normal(size=(4, 5)) * 2.0, "p")
    target = rng.normal(size=(4, 5))

    def loss_value():
        return float(ad.smooth_l1_loss(p, target).value)

    ad.backward(ad.smooth_l1_loss(p, target))
    assert_close_grad(p.grad, fd_grad(loss_value, p.value), rel=1e-5)


def test_loss_shape_errors():
    with pytest.raises(ShapeMismatch):
        ad.smooth_l1_loss(ad.Tensor(np.zeros(3)), np.zeros(4))
    with pytest.raises(ShapeMismatch):
        ad.mse_loss(ad.Tensor(np.zeros(3)), np.zeros(4))


# ---------------------------------------------------------------- backward

def test_backward_sum_of_parameters():
    a = ad.Parameter(np.zeros(4), "a")
    b = ad.Parameter(np.zeros(4), "b")
    ad.backward(ad.sum_all(ad.add(a, b)))
    assert np.array_equal(a.grad, np.ones(4))
    assert np.array_equal(b.grad, np.ones(4))


def test_backward_accumulates():
    p = ad.Parameter(np.arange(3.0), "p")
    loss = ad.sum_all(ad.mul(p, p))
    ad.backward(loss)
    once = p.grad.copy()
    ad.backward(ad.sum_all(ad.mul(p, p)))
    assert np.array_equal(p.grad, 2.0 * once)


def test_backward_empty_tape():
    with pytest.raises(EmptyTape):
        ad.backward(ad.Tensor(1.0))


def test_backward_on_parameter_is_allowed():
    p = ad.Parameter(np.array(2.0), "p")
    ad.backward(p)
    assert p.grad == 1.0


def test_backward_seed_scales_gradients():
    p = ad.Parameter(np.arange(1.0, 4.0), "p")
    ad.backward(ad.sum_all(p), seed=3.0)
    assert np.array_equal(p.grad, np.full(3, 3.0))


def test_diamond_graph_accumulation():
    p = ad.Parameter(np.array([2.0]), "p")
    out = ad.add(ad.mul(p, 3.0), ad.mul(p, 5.0))
    ad.backward(ad.sum_all(out))
    assert p.grad[0] == 8.0


# ---------------------------------------------------------------- shuffles

def test_gather_last_gradient_fd():
    rng = np.random.default_rng(4)
    p = ad.Parameter(rng.normal(size=(2, 6)), "p")
    index = np.array([[0, 1, 2], [2, 2, 5]])  # duplicates allowed
    weights = rng.normal(size=(2, 2, 3))

    def loss_value():
        return float(ad.sum_all(ad.mul(ad.gather_last(p, index),
                                       ad.Tensor(weights))).value)

    ad.backward(ad.sum_all(ad.mul(ad.gather_last(p, index),
                                  ad.Tensor(weights))))
    assert_close_grad(p.grad, fd_grad(loss_value, p.value), rel=1e-6)


def test_reshape_and_swap_round_trip_gradient():
    rng = np.random.default_rng(5)
    p = ad.Parameter(rng.normal(size=(2, 3, 4)), "p")
    out = ad.swap_last_axes(ad.reshape(ad.swap_last_axes(p), (2, 4, 3)))
    ad.backward(ad.sum_all(out))
    assert np.array_equal(p.grad, np.ones((2, 3, 4)))


def test_determinism():
    def run():
        rng = np.random.default_rng(7)
        w, b = ad.init_dense(rng, 4, 3, "layer")
        out = ad.dense(ad.Tensor(np.ones((2, 4))), w, b)
        loss = ad.mse_loss(out, np.zeros((2, 3)))
        ad.backward(loss)
        return float(loss.value), w.grad.copy()

    l1, g1 = run()
    l2, g2 = run()
    assert l1 == l2
    assert np.array_equal(g1, g2)


def test_init_dense_bounds_and_names():
    rng = np.random.default_rng(8)
    w, b = ad.init_dense(rng, 16, 4, "blk")
    assert w.name == "blk/weight" and b.name == "blk/bias"
    assert np.all(np.abs(w.value) <= 0.25)
    assert np.array_equal(b.value, np.zeros(4))
