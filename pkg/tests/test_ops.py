import numpy as np
import pytest
from hypothesis import given, strategies as st

from shuffledet.errors import ShapeError
from shuffledet.ops import (
    BnParams,
    ConvParams,
    add,
    avg_pool,
    batch_norm,
    channel_shuffle,
    conv2d,
    deformable_conv2d,
    depthwise_conv2d,
    max_pool,
    relu,
)
from shuffledet.tensor import Tensor, tensor_new


def _conv_reference(x: Tensor, p: ConvParams) -> np.ndarray:
    """Scalar six-loop convolution oracle (zero padding, groups)."""
    n, cin, h, w = x.shape
    cout, cpg, k, _ = p.weights.shape
    g = p.groups
    opg = cout // g
    ho = (h + 2 * p.pad - k) // p.stride + 1
    wo = (w + 2 * p.pad - k) // p.stride + 1
    out = np.zeros((n, cout, ho, wo), np.float32)
    for b in range(n):
        for o in range(cout):
            gi = o // opg
            for oy in range(ho):
                for ox in range(wo):
                    acc = 0.0
                    for ci in range(cpg):
                        c = gi * cpg + ci
                        for ky in range(k):
                            for kx in range(k):
                                y = oy * p.stride - p.pad + ky
                                xx = ox * p.stride - p.pad + kx
                                if 0 <= y < h and 0 <= xx < w:
                                    acc += x.at(b, c, y, xx) * p.weights.at(o, ci, ky, kx)
                    if p.bias is not None:
                        acc += float(p.bias[o])
                    out[b, o, oy, ox] = acc
    return out


def _rand(shape, seed=0):
    return Tensor(np.random.default_rng(seed).normal(size=shape).astype(np.float32))


class TestConv2d:
    def test_identity_1x1(self):
        x = _rand((1, 3, 5, 5), 1)
        eye = np.eye(3, dtype=np.float32).reshape(3, 3, 1, 1)
        out = conv2d(x, ConvParams(Tensor(eye)))
        np.testing.assert_array_equal(out.data, x.data)

    def test_sum_kernel(self):
        x = tensor_new((1, 1, 3, 3), 1)
        ones = tensor_new((1, 1, 3, 3), 1)
        out = conv2d(x, ConvParams(ones))
        assert tuple(out.shape) == (1, 1, 1, 1)
        assert out.at(0, 0, 0, 0) == 9.0

    def test_matches_scalar_reference(self):
        x = _rand((2, 4, 6, 7), 2)
        p = ConvParams(_rand((6, 2, 3, 3), 3), bias=np.arange(6, dtype=np.float32),
                       stride=2, pad=1, groups=2)
        got = conv2d(x, p)
        want = _conv_reference(x, p)
        np.testing.assert_allclose(got.data, want, atol=1e-4)

    def test_grouped_equals_block_diagonal(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=(1, 8, 6, 6)).astype(np.float32))
        w = rng.normal(size=(8, 4, 3, 3)).astype(np.float32)
        grouped = conv2d(x, ConvParams(Tensor(w), stride=1, pad=1, groups=2))
        dense = np.zeros((8, 8, 3, 3), np.float32)
        dense[:4, :4] = w[:4]
        dense[4:, 4:] = w[4:]
        ref = conv2d(x, ConvParams(Tensor(dense), stride=1, pad=1, groups=1))
        np.testing.assert_allclose(grouped.data, ref.data, atol=1e-5)

    def test_divisibility_errors(self):
        x = _rand((1, 6, 4, 4))
        with pytest.raises(ShapeError):
            conv2d(x, ConvParams(_rand((4, 2, 1, 1)), groups=2))  # 6 != 2*2
        with pytest.raises(ShapeError):
            ConvParams(_rand((5, 2, 1, 1)), groups=2)             # cout % g != 0

    def test_empty_output_error(self):
        x = _rand((1, 1, 2, 2))
        with pytest.raises(ShapeError):
            conv2d(x, ConvParams(_rand((1, 1, 3, 3)), stride=1, pad=0))

    def test_deterministic(self):
        x = _rand((1, 6, 10, 10), 5)
        p = ConvParams(_rand((9, 2, 3, 3), 6), stride=1, pad=1, groups=3)
        a = conv2d(x, p)
        b = conv2d(x, p)
        assert np.array_equal(a.data, b.data)


class TestDepthwise:
    def test_identity_1x1(self):
        x = _rand((1, 4, 3, 3), 7)
        w = tensor_new((4, 1, 1, 1), 1)
        out = depthwise_conv2d(x, ConvParams(w, groups=4))
        np.testing.assert_array_equal(out.data, x.data)

    def test_per_channel_constant_sum(self):
        consts = [1.0, 2.0, -3.0]
        data = np.stack([np.full((3, 3), c, np.float32) for c in consts])[None]
        x = Tensor(data)
        w = tensor_new((3, 1, 3, 3), 1)
        out = depthwise_conv2d(x, ConvParams(w, groups=3))
        assert tuple(out.shape) == (1, 3, 1, 1)
        np.testing.assert_allclose(out.data.reshape(-1), [9.0 * c for c in consts])

    def test_equals_grouped_conv(self):
        x = _rand((1, 5, 7, 7), 8)
        w = _rand((5, 1, 3, 3), 9)
        p = ConvParams(w, stride=2, pad=1, groups=5)
        got = depthwise_conv2d(x, p)
        want = conv2d(x, p)
        np.testing.assert_allclose(got.data, want.data, atol=1e-6)

    def test_channel_isolation(self):
        x0 = _rand((1, 3, 5, 5), 10)
        bumped = x0.data.copy()
        bumped[0, 1] += 10.0
        x1 = Tensor(bumped)
        p = ConvParams(_rand((3, 1, 3, 3), 11), pad=1, groups=3)
        a, b = depthwise_conv2d(x0, p), depthwise_conv2d(x1, p)
        assert np.array_equal(a.data[0, 0], b.data[0, 0])
        assert np.array_equal(a.data[0, 2], b.data[0, 2])
        assert not np.array_equal(a.data[0, 1], b.data[0, 1])

    def test_groups_must_equal_channels(self):
        x = _rand((1, 4, 3, 3))
        with pytest.raises(ShapeError):
            depthwise_conv2d(x, ConvParams(_rand((4, 2, 3, 3)), groups=2))


class TestChannelShuffle:
    def test_g1_identity(self):
        x = _rand((1, 6, 2, 2), 12)
        np.testing.assert_array_equal(channel_shuffle(x, 1).data, x.data)

    def test_gC_identity(self):
        x = _rand((1, 6, 2, 2), 13)
        np.testing.assert_array_equal(channel_shuffle(x, 6).data, x.data)

    def test_c6_g3_permutation(self):
        x = tensor_new((1, 6, 1, 1), [0, 1, 2, 3, 4, 5])
        out = channel_shuffle(x, 3)
        assert out.flat.tolist() == [0.0, 2.0, 4.0, 1.0, 3.0, 5.0]

    def test_divisibility(self):
        with pytest.raises(ShapeError):
            channel_shuffle(_rand((1, 5, 1, 1)), 3)

    @given(st.sampled_from([(6, 2), (6, 3), (12, 3), (12, 4), (8, 2), (16, 4)]))
    def test_is_bijection_and_inverse(self, cg):
        c, g = cg
        x = tensor_new((1, c, 1, 1), list(range(c)))
        once = channel_shuffle(x, g)
        assert sorted(once.flat.tolist()) == [float(i) for i in range(c)]
        back = channel_shuffle(once, c // g)
        assert back.flat.tolist() == x.flat.tolist()


class TestPooling:
    def test_max_k1_identity(self):
        x = _rand((1, 2, 4, 4), 14)
        np.testing.assert_array_equal(max_pool(x, 1, 1).data, x.data)

    def test_max_2x2(self):
        x = tensor_new((1, 1, 2, 2), [1, 2, 3, 4])
        assert max_pool(x, 2, 2).at(0, 0, 0, 0) == 4.0

    def test_max_padded_windows(self):
        x = tensor_new((1, 1, 4, 4), list(range(16)))
        out = max_pool(x, 3, 2, 1)
        assert out.data[0, 0].tolist() == [[5.0, 7.0], [13.0, 15.0]]

    def test_fully_padded_window_rejected(self):
        with pytest.raises(ShapeError):
            max_pool(_rand((1, 1, 4, 4)), 2, 1, 2)

    def test_avg_k1_identity(self):
        x = _rand((1, 2, 4, 4), 15)
        np.testing.assert_array_equal(avg_pool(x, 1, 1).data, x.data)

    def test_avg_2x2(self):
        x = tensor_new((1, 1, 2, 2), [1, 2, 3, 4])
        assert avg_pool(x, 2, 2).at(0, 0, 0, 0) == 2.5

    def test_avg_constant_invariance_with_padding(self):
        # padded taps are excluded from the mean, so constants stay constant
        x = tensor_new((1, 1, 5, 5), 3.25)
        out = avg_pool(x, 3, 2, 1)
        assert np.all(out.data == 3.25)


class TestBatchNorm:
    def test_identity(self):
        x = _rand((1, 3, 2, 2), 16)
        out = batch_norm(x, BnParams.identity(3))
        np.testing.assert_array_equal(out.data, x.data)

    @pytest.mark.parametrize("value,expected", [(2.0, 1.0), (4.0, 4.0)])
    def test_formula(self, value, expected):
        x = tensor_new((1, 1, 1, 1), value)
        p = BnParams(gamma=np.array([3.0]), beta=np.array([1.0]),
                     mean=np.array([2.0]), var=np.array([4.0]), eps=0.0)
        assert batch_norm(x, p).at(0, 0, 0, 0) == expected

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            batch_norm(_rand((1, 3, 2, 2)), BnParams.identity(4))

    def test_negative_variance_rejected(self):
        with pytest.raises(ShapeError):
            BnParams(np.ones(1), np.zeros(1), np.zeros(1), np.array([-1.0]))


class TestRelu:
    def test_all_negative(self):
        assert np.all(relu(tensor_new((1, 1, 2, 2), -5)).data == 0.0)

    def test_all_positive_identity(self):
        x = tensor_new((1, 1, 2, 2), 5)
        np.testing.assert_array_equal(relu(x).data, x.data)

    def test_mixed(self):
        x = tensor_new((1, 3, 1, 1), [-1, 0, 2])
        assert relu(x).flat.tolist() == [0.0, 0.0, 2.0]


class TestAdd:
    def test_elementwise(self):
        a = tensor_new((1, 1, 1, 2), [1, 2])
        b = tensor_new((1, 1, 1, 2), [10, 20])
        assert add(a, b).flat.tolist() == [11.0, 22.0]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            add(tensor_new((1, 1, 1, 2), 0), tensor_new((1, 2, 1, 1), 0))


class TestDeformable:
    def test_zero_offsets_match_conv(self):
        rng = np.random.default_rng(17)
        x = Tensor(rng.normal(size=(1, 3, 7, 7)).astype(np.float32))
        p = ConvParams(Tensor(rng.normal(size=(4, 3, 3, 3)).astype(np.float32)),
                       stride=1, pad=1)
        zero = tensor_new((1, 18, 7, 7), 0.0)
        got = deformable_conv2d(x, zero, p)
        want = conv2d(x, p)
        np.testing.assert_allclose(got.data, want.data, atol=1e-5)

    def test_integer_offset_shifts_left(self):
        x = tensor_new((1, 1, 1, 4), [1, 2, 3, 4])
        w = tensor_new((1, 1, 1, 1), 1)
        off = np.zeros((1, 2, 1, 4), np.float32)
        off[0, 1] = 1.0  # dx = 1
        out = deformable_conv2d(x, Tensor(off), ConvParams(w))
        assert out.flat.tolist() == [2.0, 3.0, 4.0, 0.0]

    def test_half_offset_bilinear_midpoint(self):
        x = tensor_new((1, 1, 1, 2), [0, 2])
        w = tensor_new((1, 1, 1, 1), 1)
        off = np.zeros((1, 2, 1, 2), np.float32)
        off[0, 1] = 0.5
        out = deformable_conv2d(x, Tensor(off), ConvParams(w))
        assert out.at(0, 0, 0, 0) == 1.0  # midpoint of 0 and 2

    def test_piecewise_linear_in_offset(self):
        rng = np.random.default_rng(18)
        x = Tensor(rng.normal(size=(1, 1, 5, 5)).astype(np.float32))
        w = tensor_new((1, 1, 1, 1), 1)

        def sample(dx):
            off = np.zeros((1, 2, 5, 5), np.float32)
            off[0, 1] = dx
            return deformable_conv2d(x, Tensor(off), ConvParams(w)).data

        v0, v_half, v1 = sample(0.0), sample(0.5), sample(1.0)
        interior = (slice(None), slice(None), slice(1, 4), slice(1, 4))
        np.testing.assert_allclose(v_half[interior],
                                   (v0[interior] + v1[interior]) / 2, atol=1e-6)

    def test_offset_shape_errors(self):
        x = _rand((1, 2, 5, 5))
        p = ConvParams(_rand((2, 2, 3, 3)), pad=1)
        with pytest.raises(ShapeError):
            deformable_conv2d(x, tensor_new((1, 17, 5, 5), 0), p)
        with pytest.raises(ShapeError):
            deformable_conv2d(x, tensor_new((1, 18, 4, 5), 0), p)
