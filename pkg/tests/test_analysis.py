import pytest

from shuffledet.analysis import (
    PUBLISHED_FULL_GFLOPS,
    ablation_table,
    complexity_summary,
    conv_cost,
    dab_grid_configs,
    depthwise_cost_ratio,
    format_report,
    layer_cost,
    network_cost,
)
from shuffledet.config import NetworkConfig, baseline_config
from shuffledet.errors import ShapeError
from shuffledet.network import LayerSpec, plan_network
from shuffledet.weights import random_weights


class TestConvCost:
    def test_stage1_conv_macs(self):
        c = conv_cost(cin=3, cout=24, k=3, hout=256, wout=256)
        assert c.macs == 42_467_328
        assert c.flops == 2 * 42_467_328
        assert c.params == 24 * 3 * 9

    def test_degenerate_grouped_collapse(self):
        c = conv_cost(cin=16, cout=16, k=1, hout=8, wout=8, groups=16)
        assert c.macs == 8 * 8 * 16

    def test_divisibility_error(self):
        with pytest.raises(ShapeError):
            conv_cost(cin=5, cout=4, k=1, hout=1, wout=1, groups=2)

    def test_bias_adds_params_only(self):
        plain = conv_cost(3, 8, 3, 4, 4)
        biased = conv_cost(3, 8, 3, 4, 4, bias=True)
        assert biased.params == plain.params + 8
        assert biased.flops == plain.flops


def test_depthwise_ratio_formula():
    assert depthwise_cost_ratio(240, 3) == 1 / 240 + 1 / 9
    assert depthwise_cost_ratio(240, 3) == pytest.approx(0.11528, abs=5e-6)


class TestToyNetworkOracle:
    """Three-layer stack checked against frozen hand-computed numbers."""

    SPECS = [
        LayerSpec("t.conv", "conv", cin=3, cout=24, k=3, stride=2, pad=1,
                  hin=512, win=512, hout=256, wout=256),
        LayerSpec("t.bn", "bn", cin=24, cout=24, hin=256, win=256,
                  hout=256, wout=256),
        LayerSpec("t.dw", "dwconv", cin=24, cout=24, k=3, stride=1, pad=1,
                  groups=24, hin=256, win=256, hout=256, wout=256),
    ]

    def test_per_layer_hand_values(self):
        costs = [layer_cost(s) for s in self.SPECS]
        # conv: 256*256*24*3*9 = 42,467,328 MACs
        assert costs[0].macs == 42_467_328
        assert costs[0].flops == 84_934_656
        assert costs[0].params == 648
        # bn: 2 ops per element over 24*256*256
        assert costs[1].macs == 0
        assert costs[1].flops == 2 * 24 * 256 * 256 == 3_145_728
        assert costs[1].params == 4 * 24
        # depthwise: 256*256*24*1*9 MACs
        assert costs[2].macs == 14_155_776
        assert costs[2].flops == 28_311_552
        assert costs[2].params == 216

    def test_totals(self):
        total_flops = sum(layer_cost(s).flops for s in self.SPECS)
        assert total_flops == 84_934_656 + 3_145_728 + 28_311_552


class TestNetworkCost:
    def test_full_total_within_published_band(self):
        rep = network_cost(NetworkConfig())
        assert PUBLISHED_FULL_GFLOPS * 0.65 <= rep.gflops <= PUBLISHED_FULL_GFLOPS * 1.35

    def test_baseline_total_within_band(self):
        rep = network_cost(baseline_config())
        assert 2.0 <= rep.gflops <= 3.9

    def test_full_exceeds_baseline(self):
        full = network_cost(NetworkConfig())
        base = network_cost(baseline_config())
        assert full.total_flops > base.total_flops

    def test_every_planned_layer_reported_once(self):
        cfg = NetworkConfig()
        plan = plan_network(cfg)
        rep = network_cost(cfg)
        assert rep.layer_names() == plan.layer_names()
        assert len(set(rep.layer_names())) == len(rep.layer_names())

    def test_cost_is_weight_independent(self):
        cfg = NetworkConfig(input_size=64)
        a = network_cost(cfg)
        b = network_cost(cfg)
        assert a.total_flops == b.total_flops == network_cost(cfg).total_flops

    def test_params_match_weight_store_float_count(self):
        cfg = NetworkConfig(input_size=64)
        rep = network_cost(cfg)
        store = random_weights(cfg, 0)
        assert rep.total_params == store.total_floats()

    def test_enabling_one_dab_adds_exactly_its_layers(self):
        base = NetworkConfig(dab_enabled=(False,) * 7)
        one = NetworkConfig(dab_enabled=(True,) + (False,) * 6)
        rep_base = network_cost(base)
        rep_one = network_cost(one)
        new_names = set(rep_one.layer_names()) - set(rep_base.layer_names())
        assert all(n.startswith("dab.stage2.") for n in new_names)
        added = sum(c.flops for c in rep_one.layers if c.name in new_names)
        assert rep_one.total_flops - rep_base.total_flops == added
        # unchanged layers keep identical costs
        base_by_name = {c.name: c for c in rep_base.layers}
        for c in rep_one.layers:
            if c.name not in new_names:
                assert base_by_name[c.name] == c


class TestAblation:
    def test_single_config_row(self):
        cfg = NetworkConfig()
        rows = ablation_table([cfg], ["full"])
        assert len(rows) == 1
        assert rows[0].total_flops == network_cost(cfg).total_flops

    def test_dab_grid_monotone_with_exact_increments(self):
        cfgs, labels = dab_grid_configs()
        rows = ablation_table(cfgs, labels)
        assert len(rows) == 7
        reports = [network_cost(c) for c in cfgs]
        for prev, cur in zip(reports, reports[1:]):
            assert cur.total_flops >= prev.total_flops
            new_names = set(cur.layer_names()) - set(prev.layer_names())
            added = sum(c.flops for c in cur.layers if c.name in new_names)
            assert cur.total_flops - prev.total_flops == added

    def test_empty_input_rejected(self):
        with pytest.raises(ShapeError):
            ablation_table([])


def test_summary_reports_published_figures():
    s = complexity_summary()
    assert s["published_full_gflops"] == 3.8
    assert s["published_baseline_gflops"] == 2.94
    assert s["delta_gflops"] == pytest.approx(
        s["full_gflops"] - s["baseline_gflops"])
    # same order of magnitude as the published 3.8 - 2.94 = 0.86 GFLOPs gap
    published_delta = 3.8 - 2.94
    assert published_delta / 10 < s["delta_gflops"] < published_delta * 10


def test_format_report_mentions_totals():
    text = format_report(network_cost(NetworkConfig(input_size=64)))
    assert "total GFLOPs" in text
    assert "stage2" in text
