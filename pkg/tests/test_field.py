import numpy as np
import pytest

from cure import ops
from cure.field import FieldParams, HeadParams, QueryPoint, build_input, build_inputs, field_forward, input_dim, no_rep_head
from cure.tensor import Tensor

from gradcheck import numeric_grad, rel_error


def test_input_dims():
    assert input_dim(64, "full") == 579
    assert input_dim(4, "no_crd") == 36
    assert input_dim(4, "full") - input_dim(4, "no-crd") == 3
    with pytest.raises(ValueError):
        input_dim(4, "no_rep")


def test_build_input_layout(rng):
    code = rng.standard_normal(9 * 64)
    vec = build_input(QueryPoint(4, 3, 0.5), code, "full", height=7, width=9)
    assert vec.shape == (579,)
    assert vec[0] == 0 and vec[1] == 0 and vec[2] == 0  # centre pixel, t = 0.5
    np.testing.assert_array_equal(vec[3:], code)
    corner = build_input(QueryPoint(0, 6, 1.0), code, "full", 7, 9)
    assert tuple(corner[:3]) == (-1, 1, 1)


def test_build_input_no_crd_is_code(rng):
    code = rng.standard_normal(36)
    vec = build_input(QueryPoint(1, 1, 0.3), code, "no_crd", 8, 8)
    assert vec.shape == (36,) and np.array_equal(vec, code)
    with pytest.raises(ValueError, match="no_rep"):
        build_input(QueryPoint(1, 1, 0.3), code, "no_rep", 8, 8)


def test_batched_inputs_match_single(rng):
    codes = rng.standard_normal((3, 18))
    pixels = np.array([[0, 0], [4, 2], [6, 5]])
    batched = build_inputs(pixels, 0.25, Tensor(codes), "full", 6, 7).data
    for row, p, code in zip(batched, pixels, codes):
        np.testing.assert_array_equal(row, build_input(QueryPoint(p[0], p[1], 0.25), code, "full", 6, 7))


def test_layer_shapes():
    params = FieldParams.init(np.random.default_rng(0), 39, width=16)
    assert len(params.weights) == 7
    assert [w.shape[0] for w in params.weights] == [39, 16 + 39, 16, 16 + 39, 16, 16, 16]
    assert params.weights[-1].shape == (16, 3)


def test_output_range(rng):
    params = FieldParams.init(rng, 39, width=32)
    for p in params.biases:
        p.data[...] = rng.standard_normal(p.shape)
    out = field_forward(rng.standard_normal((10_000, 39)) * 3, params).data
    assert out.shape == (10_000, 3)
    assert np.all((out > 0) & (out < 1))


def test_zero_params_give_half(rng):
    params = FieldParams.init(rng, 12, width=8)
    for p in params.weights + params.biases:
        p.data[...] = 0
    np.testing.assert_array_equal(field_forward(rng.standard_normal(12), params).data, [0.5, 0.5, 0.5])


def test_dimension_mismatch(rng):
    params = FieldParams.init(rng, 12, width=8)
    with pytest.raises(ValueError, match="expects 12"):
        field_forward(np.zeros((2, 11)), params)


def test_gradients_every_layer(rng):
    params = FieldParams.init(rng, 39, width=16, dtype=np.float64)
    for b in params.biases:
        b.data[...] = rng.standard_normal(b.shape) * 0.1
    x = Tensor(rng.standard_normal((5, 39)), requires_grad=True)
    target = rng.random((5, 3))

    def loss():
        return ops.mse(field_forward(x, params), target)

    tensors = params.weights + params.biases + [x]
    loss().backward()
    for t in tensors:
        assert rel_error(t.grad, numeric_grad(lambda: loss().item(), t.data)) < 1e-4


def test_skips_change_output():
    x = np.random.default_rng(3).standard_normal((4, 39))
    with_skips = FieldParams.init(np.random.default_rng(0), 39, width=16, skips=True)
    plain = FieldParams.init(np.random.default_rng(0), 39, width=16, skips=False)
    assert plain.weights[1].shape == (16, 16)
    assert not np.allclose(field_forward(x, with_skips).data, field_forward(x, plain).data)


def test_batched_equals_single_bit_exact(rng):
    params = FieldParams.init(rng, 579, width=256)
    x = rng.standard_normal((130, 579)).astype(np.float32)
    batched = field_forward(x, params).data
    for i in range(0, 130, 13):
        assert np.array_equal(field_forward(x[i], params).data, batched[i])


def test_no_rep_head(rng):
    head = HeadParams.init(rng, 4, dtype=np.float64)
    xi = Tensor(rng.standard_normal((4, 9, 7)))
    out = no_rep_head(xi, head)
    assert out.shape == (3, 9, 7)
    assert np.all((out.data > 0) & (out.data < 1))
    r = rng.standard_normal((3, 9, 7))

    def loss():
        return ops.sum(ops.mul(no_rep_head(xi, head), r))

    loss().backward()
    for p in (head.conv.weight, head.conv.bias):
        assert rel_error(p.grad, numeric_grad(lambda: loss().item(), p.data)) < 1e-4
