import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fibernlc.errors import ShapeError
from fibernlc.numerics import layers as nn
from gradcheck import layer_errors, numeric_grad, rel_error

TOL = 1e-5


def _check(forward, backward, inputs, rng, tol=TOL):
    assert max(layer_errors(forward, backward, inputs, rng)) < tol


# --- linear -----------------------------------------------------------------


def test_linear_identity():
    x = np.arange(6.0).reshape(2, 3)
    y, _ = nn.linear_forward(x, np.eye(3), np.zeros(3))
    np.testing.assert_array_equal(y, x)


def test_linear_gradients_small_case(rng):
    x, w, b = rng.normal(size=(4, 3)), rng.normal(size=(3, 5)), rng.normal(size=5)
    _check(nn.linear_forward, nn.linear_backward, (x, w, b), rng, tol=1e-6)


def test_linear_bias_only_gradient_is_one():
    x = np.ones((3, 2))
    _, cache = nn.linear_forward(x, np.zeros((2, 4)), np.zeros(4))
    _, _, db = nn.linear_backward(np.ones((3, 4)), cache)
    np.testing.assert_array_equal(db, 3 * np.ones(4))
    _, cache = nn.linear_forward(x[:1], np.zeros((2, 4)), np.zeros(4))
    _, _, db = nn.linear_backward(np.ones((1, 4)), cache)
    np.testing.assert_array_equal(db, np.ones(4))


def test_linear_shape_mismatch():
    with pytest.raises(ShapeError):
        nn.linear_forward(np.ones((2, 3)), np.ones((4, 2)), np.zeros(2))


# --- conv -------------------------------------------------------------------


def test_conv_kernel_one_is_channel_mix(rng):
    x = rng.normal(size=(7, 4))
    mix = rng.normal(size=(4, 3))
    y, _ = nn.conv1d_forward(x, mix[None], np.zeros(3))
    np.testing.assert_allclose(y, x @ mix, atol=1e-14)
    y, _ = nn.conv1d_forward(x, np.eye(4)[None], np.zeros(4))
    np.testing.assert_array_equal(y, x)


def test_conv_output_length():
    y, _ = nn.conv1d_forward(np.ones((10, 4)), np.ones((9, 4, 2)), np.zeros(2))
    assert y.shape == (2, 2)


def test_conv_is_cross_correlation(rng):
    x = rng.normal(size=(6, 1))
    w = np.array([1.0, 2.0, 3.0]).reshape(3, 1, 1)
    y, _ = nn.conv1d_forward(x, w, np.zeros(1))
    expected = [x[i, 0] + 2 * x[i + 1, 0] + 3 * x[i + 2, 0] for i in range(4)]
    np.testing.assert_allclose(y[:, 0], expected)


def test_conv_gradients(rng):
    x, w, b = rng.normal(size=(2, 9, 4)), rng.normal(size=(3, 4, 5)), rng.normal(size=5)
    _check(nn.conv1d_forward, nn.conv1d_backward, (x, w, b), rng, tol=1e-6)


def test_conv_too_short_input():
    with pytest.raises(ShapeError):
        nn.conv1d_forward(np.ones((3, 4)), np.ones((5, 4, 2)), np.zeros(2))


# --- activations, softmax, layer norm ----------------------------------------


def test_leaky_relu_slope_and_gradient(rng):
    y, _ = nn.leaky_relu_forward(np.array([-2.0, 3.0]), 0.2)
    np.testing.assert_allclose(y, [-0.4, 3.0])
    x = rng.normal(size=(3, 4)) + 0.05
    _check(lambda a: nn.leaky_relu_forward(a, 0.2), nn.leaky_relu_backward, (x,), rng)


def test_relu_gradient(rng):
    x = rng.normal(size=(3, 4))
    _check(nn.relu_forward, nn.relu_backward, (x,), rng)


def test_softmax_examples():
    y, _ = nn.softmax_rows_forward(np.array([0.0, 0.0]))
    np.testing.assert_array_equal(y, [0.5, 0.5])
    y, _ = nn.softmax_rows_forward(np.array([[3.7, -np.inf], [-np.inf, -np.inf]]))
    np.testing.assert_array_equal(y, [[1.0, 0.0], [0.0, 0.0]])


finite_rows = arrays(
    np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
    elements=st.floats(-50, 50, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(x=finite_rows, data=st.data())
def test_softmax_rows_sum_to_one(x, data):
    mask = data.draw(arrays(np.bool_, x.shape))
    mask[:, 0] = False  # keep one finite entry per row
    y, _ = nn.softmax_rows_forward(np.where(mask, -np.inf, x))
    np.testing.assert_allclose(y.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(y[mask] == 0)


@settings(max_examples=60, deadline=None)
@given(x=finite_rows, shift=st.floats(-100, 100))
def test_softmax_shift_invariance(x, shift):
    a, _ = nn.softmax_rows_forward(x)
    b, _ = nn.softmax_rows_forward(x + shift)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_softmax_gradient(rng):
    x = rng.normal(size=(3, 5))
    x[1, 2] = -np.inf
    y, cache = nn.softmax_rows_forward(x)
    r = rng.normal(size=y.shape)
    g = nn.softmax_rows_backward(r, cache)
    finite = np.isfinite(x)
    xf = np.where(finite, x, 0.0)

    def loss():
        return float(np.sum(nn.softmax_rows_forward(np.where(finite, xf, -np.inf))[0] * r))

    num = numeric_grad(loss, xf)
    assert rel_error(g[finite], num[finite]) < TOL
    assert g[1, 2] == 0


def test_layer_norm_of_constant_vector_is_bias(rng):
    bias = rng.normal(size=5)
    y, _ = nn.layer_norm_forward(np.full((2, 5), 3.3), rng.normal(size=5), bias)
    np.testing.assert_array_equal(y, np.broadcast_to(bias, (2, 5)))


def test_layer_norm_normalizes(rng):
    x = rng.normal(size=(4, 7)) * 5 + 2
    y, _ = nn.layer_norm_forward(x, np.ones(7), np.zeros(7))
    np.testing.assert_allclose(y.mean(axis=-1), 0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=-1), 1, rtol=1e-3)


def test_layer_norm_gradients(rng):
    x, g, b = rng.normal(size=(2, 3, 6)), rng.normal(size=6), rng.normal(size=6)
    _check(nn.layer_norm_forward, nn.layer_norm_backward, (x, g, b), rng)


# --- attention ------------------------------------------------------------------


def test_attention_hand_computed_example():
    eye = np.eye(2)
    out, scores, cache = nn.attention_forward(eye, eye, eye)
    a = cache[3]
    e = math.exp(1 / math.sqrt(2))
    expected = np.array([[e, 1], [1, e]]) / (1 + e)
    np.testing.assert_allclose(a, expected, atol=1e-12)
    np.testing.assert_allclose(a, [[0.6698, 0.3302], [0.3302, 0.6698]], atol=1e-4)
    np.testing.assert_allclose(scores, eye / math.sqrt(2))


def test_zero_mask_is_bitwise_identical_to_no_mask(rng):
    q, k, v = (rng.normal(size=(2, 6, 3)) for _ in range(3))
    a, _, _ = nn.attention_forward(q, k, v)
    b, _, _ = nn.attention_forward(q, k, v, np.zeros((6, 6)))
    np.testing.assert_array_equal(a, b)


def test_fully_masked_row_outputs_zero(rng):
    q, k, v = (rng.normal(size=(5, 3)) for _ in range(3))
    mask = np.zeros((5, 5))
    mask[2] = -np.inf
    mask[0, 3:] = -np.inf
    out, _, cache = nn.attention_forward(q, k, v, mask)
    np.testing.assert_array_equal(out[2], 0.0)
    a = cache[3]
    assert np.all(a[np.isneginf(mask)] == 0.0)


def test_attention_mask_shape_checked(rng):
    q = rng.normal(size=(4, 2))
    with pytest.raises(ShapeError):
        nn.attention_forward(q, q, q, np.zeros((3, 3)))


def test_attention_gradients_with_mask(rng):
    q, k, v = rng.normal(size=(2, 5, 3)), rng.normal(size=(2, 5, 3)), rng.normal(size=(2, 5, 4))
    mask = np.where(rng.random((5, 5)) < 0.3, -np.inf, 0.0)
    np.fill_diagonal(mask, 0.0)
    mask[4] = -np.inf

    def fwd(a, b, c):
        out, _, cache = nn.attention_forward(a, b, c, mask)
        return out, cache

    _check(fwd, nn.attention_backward, (q, k, v), rng)


def test_sparse_attention_matches_dense(rng):
    n = 7
    q, k, v = rng.normal(size=(3, n, 4)), rng.normal(size=(3, n, 4)), rng.normal(size=(3, n, 2))
    allowed = rng.random((n, n)) < 0.4
    allowed[5] = False
    mask = np.where(allowed, 0.0, -np.inf)
    dense, _, _ = nn.attention_forward(q, k, v, mask)
    rows, cols = np.nonzero(allowed)
    sparse = nn.sparse_attention_forward(q, k, v, rows, cols)
    np.testing.assert_allclose(sparse, dense, atol=1e-12)


def test_multiplication_counter(rng):
    with nn.count_multiplications() as outer:
        nn.linear_forward(np.ones((3, 4)), np.ones((4, 5)), np.zeros(5))
        with nn.count_multiplications() as inner:
            nn.layer_norm_forward(np.ones((2, 6)), np.ones(6), np.zeros(6))
    assert outer.total == 60
    assert inner.total == 36
