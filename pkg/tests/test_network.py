import dataclasses

import numpy as np
import pytest

from shuffledet.config import NetworkConfig
from shuffledet.errors import ShapeError
from shuffledet.network import (
    build_network,
    flatten_head,
    forward,
    plan_network,
    preprocess,
    random_parameters,
)
from shuffledet.tensor import tensor_new

SMALL = NetworkConfig(input_size=64)


@pytest.fixture(scope="module")
def small_net():
    return build_network(SMALL, 0)


def test_default_tap_shapes():
    plan = plan_network(NetworkConfig())
    assert plan.tap_shapes == [(64, 64), (32, 32), (16, 16), (8, 8),
                               (4, 4), (2, 2), (1, 1)]


def test_tap_shapes_halve_monotonically():
    for cfg in (NetworkConfig(), SMALL, NetworkConfig(input_size=300)):
        shapes = plan_network(cfg).tap_shapes
        for (ph, pw), (h, w) in zip(shapes, shapes[1:]):
            assert h == max(1, -(-ph // 2)) and w == max(1, -(-pw // 2))


def test_disabling_all_mincep_gives_three_taps():
    cfg = NetworkConfig(mincep_enabled=(False,) * 4)
    plan = plan_network(cfg)
    assert len(plan.taps) == 3
    assert [t.name for t in plan.taps] == ["stage2", "stage3", "stage4"]


def test_random_build_is_deterministic():
    cfg = SMALL
    a = random_parameters(plan_network(cfg), seed=7)
    b = random_parameters(plan_network(cfg), seed=7)
    assert a.keys() == b.keys()
    for name in a:
        assert np.array_equal(a[name], b[name]), name
    c = random_parameters(plan_network(cfg), seed=8)
    assert any(not np.array_equal(a[n], c[n]) for n in a)


def test_forward_head_channel_counts(small_net):
    x = tensor_new((1, 3, 64, 64), 0.5)
    head = small_net.forward(x)
    assert [t.shape.c for t in head.loc] == [16, 24, 24, 24, 16, 16, 16]
    assert [t.shape.c for t in head.conf] == [8, 12, 12, 12, 8, 8, 8]


def test_conf_tap_shape_matches_grid(small_net):
    x = tensor_new((1, 3, 64, 64), 0.5)
    head = small_net.forward(x)
    h, w = head.tap_shapes[0]
    assert tuple(head.conf[0].shape) == (1, 4 * 2, h, w)


def test_forward_rejects_wrong_shape(small_net):
    with pytest.raises(ShapeError):
        small_net.forward(tensor_new((1, 3, 32, 32), 0.0))
    with pytest.raises(ShapeError):
        small_net.forward(tensor_new((1, 1, 64, 64), 0.0))


def test_zero_weights_give_zero_logits():
    plan = plan_network(SMALL)
    zeros = {name: np.zeros_like(arr)
             for name, arr in random_parameters(plan, 0).items()}
    net = build_network(SMALL, zeros)
    head = net.forward(tensor_new((1, 3, 64, 64), 0.3))
    for conf in head.conf:
        assert np.all(conf.data == 0.0)


def test_dab_flag_isolation():
    """Toggling one DAB leaves every other tap's head output bitwise equal."""
    flags_on = (True,) * 7
    flags_off = (False,) + (True,) * 6
    cfg_on = dataclasses.replace(SMALL, dab_enabled=flags_on)
    cfg_off = dataclasses.replace(SMALL, dab_enabled=flags_off)
    net_on = build_network(cfg_on, 3)
    net_off = build_network(cfg_off, 3)
    x = tensor_new((1, 3, 64, 64), 0.25)
    h_on, h_off = net_on.forward(x), net_off.forward(x)
    assert not np.array_equal(h_on.loc[0].data, h_off.loc[0].data)
    for i in range(1, 7):
        assert np.array_equal(h_on.loc[i].data, h_off.loc[i].data)
        assert np.array_equal(h_on.conf[i].data, h_off.conf[i].data)


def test_flatten_head_total_matches_prior_formula(small_net):
    head = small_net.forward(tensor_new((1, 3, 64, 64), 0.5))
    loc, conf = flatten_head(head)
    expected = sum(h * w * b for (h, w), b in
                   zip(head.tap_shapes, head.boxes_per_location))
    assert loc.shape == (expected, 4)
    assert conf.shape == (expected, 2)


def test_forward_function_alias(small_net):
    x = tensor_new((1, 3, 64, 64), 0.1)
    a = forward(small_net, x)
    b = small_net.forward(x)
    for ta, tb in zip(a.loc, b.loc):
        assert np.array_equal(ta.data, tb.data)


class TestPreprocess:
    def test_same_size_is_scaled_identity(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 255, (32, 32, 3)).astype(np.uint8)
        out = preprocess(img, 32)
        np.testing.assert_allclose(
            out.data[0], img.transpose(2, 0, 1).astype(np.float32) / 255.0)

    def test_constant_resize_stays_constant(self):
        img = np.full((64, 64, 3), 77, np.uint8)
        out = preprocess(img, 16)
        np.testing.assert_allclose(out.data, 77.0 / 255.0, rtol=1e-6)

    def test_checkerboard_downsample_average(self):
        img = np.zeros((2, 2, 3), np.uint8)
        img[0, 1] = 255
        img[1, 0] = 255
        out = preprocess(img, 1)
        np.testing.assert_allclose(out.data.reshape(-1), [0.5, 0.5, 0.5])

    def test_mean_subtraction(self):
        img = np.full((8, 8, 3), 100, np.uint8)
        out = preprocess(img, 8, mean=(100.0, 0.0, 50.0))
        np.testing.assert_allclose(out.data[0, 0], 0.0)
        np.testing.assert_allclose(out.data[0, 1], 100.0 / 255.0)
        np.testing.assert_allclose(out.data[0, 2], 50.0 / 255.0)

    def test_bad_inputs(self):
        with pytest.raises(ShapeError):
            preprocess(np.zeros((4, 4), np.uint8), 8)
        with pytest.raises(ShapeError):
            preprocess(np.zeros((0, 4, 3), np.uint8), 8)
