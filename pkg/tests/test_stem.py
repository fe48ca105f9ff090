import numpy as np
import pytest

from cure import ops
from cure.motion import bilateral_motion
from cure.stem import EncoderParams, FusionParams, encode, extract_features, fuse, gather_local_code, gather_local_codes
from cure.tensor import Tensor
from cure.warp import WarpedQuartet

from gradcheck import numeric_grad, rel_error


def tiny(rng, c=4, dtype=np.float64):
    return EncoderParams.init(rng, c, dtype=dtype), FusionParams.init(rng, c, dtype=dtype)


def test_feature_shape_full_width(rng):
    enc = EncoderParams.init(rng, 64)
    out = extract_features(rng.random((32, 48, 3)), enc)
    assert out.shape == (64, 32, 48)


def test_fused_shape_full_width(rng):
    fus = FusionParams.init(rng, 64)
    maps = [Tensor(rng.standard_normal((64, 32, 48)).astype(np.float32)) for _ in range(4)]
    assert fuse(WarpedQuartet(*maps), fus).shape == (64, 32, 48)


@pytest.mark.parametrize("h,w", [(8, 8), (9, 11), (13, 8)])
def test_resolution_preserved(rng, h, w):
    enc, fus = tiny(rng)
    f = extract_features(rng.random((h, w, 3)), enc)
    assert f.shape == (4, h, w)
    assert fuse(WarpedQuartet(f, f, f, f), fus).shape == (4, h, w)


def test_identical_frames_identical_features(rng):
    enc, _ = tiny(rng)
    frame = rng.random((8, 10, 3))
    assert np.array_equal(extract_features(frame, enc).data, extract_features(frame.copy(), enc).data)


def test_small_frames_rejected(rng):
    enc, _ = tiny(rng)
    with pytest.raises(ValueError, match="at least 8"):
        extract_features(rng.random((7, 12, 3)), enc)


def test_fusion_channel_mismatch(rng):
    _, fus = tiny(rng)
    maps = [Tensor(np.zeros((3, 8, 8))) for _ in range(4)]
    with pytest.raises(ValueError, match="channels"):
        fuse(WarpedQuartet(*maps), fus)


def test_fusion_depends_on_member_order(rng):
    _, fus = tiny(rng)
    a, b = Tensor(rng.standard_normal((4, 8, 8))), Tensor(rng.standard_normal((4, 8, 8)))
    assert not np.allclose(fuse(WarpedQuartet(a, b, a, b), fus).data, fuse(WarpedQuartet(b, a, b, a), fus).data)


def test_encoder_weight_gradient(rng):
    enc, _ = tiny(rng)
    frame = rng.random((8, 8, 3))
    r = rng.standard_normal((4, 8, 8))
    w = enc.blocks[0][0].weight

    def loss():
        return ops.sum(ops.mul(extract_features(frame, enc), r))

    loss().backward()
    idx = (1, 2, 1, 0)
    orig = w.data[idx]
    eps = 1e-6
    w.data[idx] = orig + eps
    up = loss().item()
    w.data[idx] = orig - eps
    down = loss().item()
    w.data[idx] = orig
    assert abs(w.grad[idx] - (up - down) / (2 * eps)) <= 1e-4 * max(1.0, abs(w.grad[idx]))


def test_fusion_gradients(rng):
    _, fus = tiny(rng)
    maps = [Tensor(rng.standard_normal((4, 8, 10)), requires_grad=True) for _ in range(4)]
    r = rng.standard_normal((4, 8, 10))

    def loss():
        return ops.sum(ops.mul(fuse(WarpedQuartet(*maps), fus), r))

    params = [p for _, p in fus.named_parameters()] + maps[:1]
    for p in params:
        p.zero_grad()
    loss().backward()
    for p in params:
        assert rel_error(p.grad, numeric_grad(lambda: loss().item(), p.data)) < 1e-4


def test_local_code_row_major_oracle():
    h, w = 5, 6
    xi = Tensor(np.arange(h * w, dtype=np.float64).reshape(1, h, w))  # xi(u, v) = u + v*W
    u, v = 2, 3
    expected = [(u + du) + (v + dv) * w for dv in (-1, 0, 1) for du in (-1, 0, 1)]
    np.testing.assert_array_equal(gather_local_code(xi, (u, v)), expected)


def test_local_code_corner_clamps():
    xi = Tensor(np.arange(12, dtype=np.float64).reshape(1, 3, 4))
    np.testing.assert_array_equal(gather_local_code(xi, (0, 0)), [0, 0, 1, 0, 0, 1, 4, 4, 5])


def test_local_code_channels_contiguous(rng):
    xi = Tensor(rng.standard_normal((64, 6, 6)))
    code = gather_local_code(xi, (3, 2))
    assert code.shape == (576,)
    np.testing.assert_array_equal(code[4 * 64 : 5 * 64], xi.data[:, 2, 3])


def test_local_code_constant_map_blocks():
    xi = Tensor(np.broadcast_to(np.array([1.0, -2.0, 3.0])[:, None, None], (3, 4, 4)).copy())
    code = gather_local_code(xi, (0, 3)).reshape(9, 3)
    assert np.all(code == code[0])


def test_local_code_out_of_bounds():
    with pytest.raises(ValueError, match="outside"):
        gather_local_code(Tensor(np.zeros((1, 4, 4))), (4, 0))


def test_batched_codes_match_single(rng):
    xi = Tensor(rng.standard_normal((3, 5, 7)))
    pixels = np.array([[0, 0], [6, 4], [3, 2]])
    batched = gather_local_codes(xi, pixels).data
    for row, p in zip(batched, pixels):
        np.testing.assert_array_equal(row, gather_local_code(xi, p))


def test_encoding_continuous_in_t(rng):
    enc, fus = tiny(rng)
    f0, f1 = rng.random((10, 10, 3)), rng.random((10, 10, 3))
    flow01 = rng.uniform(-1.5, 1.5, (10, 10, 2))
    flow10 = rng.uniform(-1.5, 1.5, (10, 10, 2))
    base = encode(f0, f1, flow01, flow10, 0.4, enc, fus).data
    again = encode(f0, f1, flow01, flow10, 0.4, enc, fus).data
    assert np.array_equal(base, again)
    gaps = [np.abs(encode(f0, f1, flow01, flow10, 0.4 + d, enc, fus).data - base).max() for d in (1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2]
