import numpy as np
import pytest

from skigears.errors import ShapeError
from skigears.numerics import (
    GradientTape,
    Tensor,
    backward,
    check_gradients,
    conv1d,
    global_maxpool,
    lstm_sequence,
    maxpool1d,
    mean_all,
    mul,
    sum_all,
)


def test_conv1d_hand_computed_sliding_sum():
    x = Tensor(np.array([1.0, 2.0, 3.0, 4.0, 5.0]).reshape(5, 1))
    k = Tensor(np.ones((1, 3, 1)))
    b = Tensor(np.zeros(1))
    out = conv1d(x, k, b, stride=1)
    assert out.data.reshape(-1).tolist() == [6.0, 9.0, 12.0]


def test_conv1d_zero_input_gives_zero_output():
    rng = np.random.default_rng(0)
    x = Tensor(np.zeros((20, 4)))
    k = Tensor(rng.normal(size=(3, 5, 4)))
    out = conv1d(x, k, Tensor(np.zeros(3)))
    assert np.array_equal(out.data, np.zeros((16, 3)))


def test_conv1d_output_length_formula():
    for steps in range(1, 201):
        for width in (1, 3, 5):
            if steps < width:
                continue
            for stride in (1, 2):
                x = Tensor(np.zeros((steps, 1)))
                out = conv1d(x, Tensor(np.zeros((1, width, 1))), Tensor(np.zeros(1)), stride)
                assert out.shape[0] == (steps - width) // stride + 1


def test_conv1d_140_5_gives_136():
    out = conv1d(Tensor(np.zeros((140, 16))), Tensor(np.zeros((52, 5, 16))), Tensor(np.zeros(52)))
    assert out.shape == (136, 52)


def test_conv1d_too_short_sequence():
    with pytest.raises(ShapeError, match="shorter than kernel"):
        conv1d(Tensor(np.zeros((2, 1))), Tensor(np.zeros((1, 3, 1))), Tensor(np.zeros(1)))


def test_conv1d_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    params = {
        "x": rng.normal(size=(2, 11, 3)),
        "k": rng.normal(size=(4, 3, 3)),
        "b": rng.normal(size=(4,)),
    }

    def graph(p):
        tape = GradientTape(p)
        out = conv1d(tape["x"], tape["k"], tape["b"], stride=2)
        return sum_all(mul(out, out)), tape

    def loss(p):
        out, _ = graph(p)
        return out.item()

    out, tape = graph(params)
    grads = tape.backward(out)
    report = check_gradients(loss, params, grads, step=1e-5, rtol=1e-6)
    assert report.ok, report.failures


def test_maxpool_hand_computed():
    x = Tensor(np.array([1.0, 3.0, 2.0, 5.0, 4.0, 0.0]).reshape(6, 1))
    out = maxpool1d(x, 2)
    assert out.data.reshape(-1).tolist() == [3.0, 5.0, 4.0]


def test_maxpool_pool_one_is_identity():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(9, 4))
    assert np.array_equal(maxpool1d(Tensor(x), 1).data, x)


def test_maxpool_length_formula_with_remainder_dropped():
    for steps in range(1, 201):
        for pool in (1, 2, 5):
            if steps // pool < 1:
                continue
            out = maxpool1d(Tensor(np.zeros((steps, 2))), pool)
            assert out.shape[0] == steps // pool
    assert maxpool1d(Tensor(np.zeros((136, 52))), 5).shape == (27, 52)


def test_maxpool_gradient_goes_to_first_argmax():
    x = Tensor(np.array([[1.0], [1.0], [0.0], [2.0]]), requires_grad=True)
    backward(sum_all(maxpool1d(x, 2)))
    assert x.grad.reshape(-1).tolist() == [1.0, 0.0, 0.0, 1.0]


def test_global_maxpool_hand_computed():
    x = Tensor(np.array([[1.0, 9.0], [4.0, 2.0], [3.0, 3.0]]))
    assert global_maxpool(x).data.tolist() == [4.0, 9.0]


def test_global_maxpool_single_step_and_constant():
    row = np.array([[2.0, -1.0, 5.0]])
    assert np.array_equal(global_maxpool(Tensor(row)).data, row[0])
    const = np.full((7, 3), 1.25)
    assert np.array_equal(global_maxpool(Tensor(const)).data, np.full(3, 1.25))


def test_global_maxpool_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    params = {"x": rng.normal(size=(3, 8, 4))}

    def graph(p):
        tape = GradientTape(p)
        out = global_maxpool(tape["x"])
        return mean_all(mul(out, out)), tape

    def loss(p):
        out, _ = graph(p)
        return out.item()

    out, tape = graph(params)
    grads = tape.backward(out)
    report = check_gradients(loss, params, grads, step=1e-5, rtol=1e-6)
    assert report.ok, report.failures


def _lstm_params(rng, d, h):
    return {
        "w": rng.normal(scale=0.4, size=(d + h, 4 * h)),
        "b": rng.normal(scale=0.2, size=(4 * h,)),
        "x": rng.normal(size=(2, 7, d)),
    }


def test_lstm_sequence_shapes_and_determinism():
    rng = np.random.default_rng(10)
    p = _lstm_params(rng, d=3, h=5)
    out1 = lstm_sequence(Tensor(p["x"]), Tensor(p["w"]), Tensor(p["b"]))
    out2 = lstm_sequence(Tensor(p["x"]), Tensor(p["w"]), Tensor(p["b"]))
    assert out1.shape == (2, 7, 5)
    assert np.array_equal(out1.data, out2.data)


def test_lstm_sequence_matches_stepwise_reference():
    # Independent per-step reference with explicit gate equations.
    rng = np.random.default_rng(12)
    d, h = 3, 4
    p = _lstm_params(rng, d, h)
    x, w, b = p["x"], p["w"], p["b"]
    wx, wh = w[:d], w[d:]

    def sigmoid(v):
        return 1.0 / (1.0 + np.exp(-v))

    expected = np.zeros((2, 7, h))
    for batch in range(2):
        hs = np.zeros(h)
        cs = np.zeros(h)
        for t in range(7):
            z = x[batch, t] @ wx + hs @ wh + b
            i, f = sigmoid(z[:h]), sigmoid(z[h:2 * h])
            g, o = np.tanh(z[2 * h:3 * h]), sigmoid(z[3 * h:])
            cs = f * cs + i * g
            hs = o * np.tanh(cs)
            expected[batch, t] = hs

    out = lstm_sequence(Tensor(x), Tensor(w), Tensor(b))
    np.testing.assert_allclose(out.data, expected, atol=1e-12)


def test_lstm_sequence_gradients_match_finite_differences():
    rng = np.random.default_rng(13)
    params = _lstm_params(rng, d=3, h=4)

    def graph(p):
        tape = GradientTape(p)
        out = lstm_sequence(tape["x"], tape["w"], tape["b"])
        return sum_all(mul(out, out)), tape

    def loss(p):
        out, _ = graph(p)
        return out.item()

    out, tape = graph(params)
    grads = tape.backward(out)
    report = check_gradients(loss, params, grads, step=1e-5, rtol=1e-4)
    assert report.ok, report.failures[:5]


def test_lstm_rejects_mismatched_weights():
    with pytest.raises(ShapeError):
        lstm_sequence(Tensor(np.zeros((1, 5, 3))), Tensor(np.zeros((9, 16))), Tensor(np.zeros(16)))


def test_batch_rows_are_independent():
    rng = np.random.default_rng(14)
    p = _lstm_params(rng, d=3, h=4)
    full = lstm_sequence(Tensor(p["x"]), Tensor(p["w"]), Tensor(p["b"])).data
    solo = lstm_sequence(Tensor(p["x"][1]), Tensor(p["w"]), Tensor(p["b"])).data
    np.testing.assert_allclose(full[1], solo, atol=1e-12)
