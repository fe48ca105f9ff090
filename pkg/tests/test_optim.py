import numpy as np
import pytest

from cure import ops
from cure.optim import Adam, AdamState, adam_step, he_uniform, xavier_uniform
from cure.tensor import Tensor


def test_first_step_closed_form():
    p = Tensor(np.array([1.0]), requires_grad=True)
    state = AdamState.for_params([p])
    adam_step([p], [np.array([1.0])], state, lr=0.1)
    # m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
    assert p.data[0] == pytest.approx(1.0 - 0.1 / (1.0 + 1e-8), abs=1e-12)
    assert abs(p.data[0] - 0.9) < 1e-6


def test_zero_gradient_leaves_param_and_counts_step():
    p = Tensor(np.array([0.3, -0.2]), requires_grad=True)
    state = AdamState.for_params([p])
    adam_step([p], [np.zeros(2)], state, lr=0.1)
    np.testing.assert_array_equal(p.data, [0.3, -0.2])
    assert state.step_count == 1
    adam_step([p], [None], state, lr=0.1)
    assert state.step_count == 2


def test_descends_quadratic():
    x = Tensor(np.array([0.0]), requires_grad=True)
    opt = Adam([x], lr=0.1)
    for _ in range(50):
        opt.zero_grad()
        ops.sum(ops.power(ops.sub(x, 2.0), 2)).backward()
        opt.step()
    assert abs(x.data[0] - 2.0) < 2.0


@pytest.mark.parametrize("lr", [0.0, -1e-3])
def test_rejects_non_positive_lr(lr):
    p = Tensor(np.array([1.0]), requires_grad=True)
    with pytest.raises(ValueError, match="positive"):
        adam_step([p], [np.ones(1)], AdamState.for_params([p]), lr)


def test_initializer_bounds(rng):
    w = he_uniform(rng, (50, 40), fan_in=50, dtype=np.float64)
    assert np.abs(w).max() <= np.sqrt(6 / 50)
    w = xavier_uniform(rng, (50, 40), fan_in=50, fan_out=40, dtype=np.float32)
    assert w.dtype == np.float32 and np.abs(w).max() <= np.sqrt(6 / 90)
