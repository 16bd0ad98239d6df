import threading

import numpy as np
import pytest

from driver_attention.tensor import (
    ShapeError,
    Tensor,
    add,
    concat,
    gradients,
    leaky_relu,
    mse,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    total,
)


def test_mse_gradient_matches_hand_derivation():
    x = Tensor([1.0, 2.0, 4.0], requires_grad=True)
    target = np.array([0.0, 2.0, 1.0])
    loss = mse(x, target)
    assert loss.item() == pytest.approx((1.0 + 0.0 + 9.0) / 3.0)
    grads = gradients(loss, {"x": x})
    np.testing.assert_allclose(grads["x"], 2.0 / 3.0 * (x.data - target))


def test_constant_loss_gives_zero_gradient():
    x = Tensor(np.ones((2, 3)), requires_grad=True)
    unrelated = Tensor(np.ones(4), requires_grad=True)
    grads = gradients(total(scale(unrelated, 2.0)), {"x": x, "unrelated": unrelated})
    np.testing.assert_array_equal(grads["x"], np.zeros((2, 3)))
    np.testing.assert_array_equal(grads["unrelated"], np.full(4, 2.0))


def test_backward_needs_scalar_root():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        scale(x, 2.0).backward()


def test_shared_tensor_accumulates_contributions():
    w = Tensor([3.0], requires_grad=True)
    loss = total(add(mul(w, w), w))
    grads = gradients(loss, {"w": w})
    np.testing.assert_allclose(grads["w"], [7.0])


def test_concat_routes_gradients_back_to_each_part():
    a = Tensor(np.ones((1, 2, 2)), requires_grad=True)
    b = Tensor(np.ones((3, 2, 2)), requires_grad=True)
    weights = Tensor(np.arange(16.0).reshape(4, 2, 2))
    grads = gradients(total(mul(concat([a, b], axis=0), weights)), {"a": a, "b": b})
    np.testing.assert_array_equal(grads["a"], weights.data[:1])
    np.testing.assert_array_equal(grads["b"], weights.data[1:])


def test_shape_mismatches_raise():
    with pytest.raises(ShapeError):
        add(Tensor(np.ones(2)), Tensor(np.ones(3)))
    with pytest.raises(ShapeError):
        mse(Tensor(np.ones((2, 2))), np.ones(4))
    with pytest.raises(ShapeError):
        reshape(Tensor(np.ones(6)), (4, 2))
    with pytest.raises(ShapeError):
        concat([Tensor(np.ones((1, 2))), Tensor(np.ones((1, 3)))], axis=0)


def test_no_grad_records_nothing():
    x = Tensor(np.ones(2), requires_grad=True)
    with no_grad():
        y = scale(x, 3.0)
    assert not y.requires_grad
    assert scale(x, 3.0).requires_grad


def test_no_grad_in_another_thread_leaves_training_graph_intact():
    entered = threading.Event()
    release = threading.Event()

    def hold_no_grad():
        with no_grad():
            entered.set()
            release.wait(timeout=10)

    worker = threading.Thread(target=hold_no_grad)
    worker.start()
    try:
        assert entered.wait(timeout=10)
        w = Tensor([2.0], requires_grad=True)
        loss = mse(scale(w, 3.0), np.zeros(1))
        assert loss.requires_grad
        np.testing.assert_allclose(gradients(loss, {"w": w})["w"], [36.0])
    finally:
        release.set()
        worker.join()


def test_leaky_relu_values():
    x = Tensor([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(leaky_relu(x, 0.001).data, [-0.001, 0.0, 2.0])
    np.testing.assert_allclose(relu(x).data, [0.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        leaky_relu(x, -0.1)
