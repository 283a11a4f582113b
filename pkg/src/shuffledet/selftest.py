"""Built-in oracle battery, runnable without pytest.

Each check re-verifies a kernel or pipeline against an independent
reference implementation (block-diagonal dense conv, scalar brute-force
NMS, enumeration of prior grids, rasterized tile coverage).
"""

from __future__ import annotations

import numpy as np

from .blocks import split_points
from .config import NetworkConfig
from .ops import ConvParams, channel_shuffle, conv2d, deformable_conv2d
from .postprocess import Detection, iou, nms, plan_tiles
from .priors import (
    PriorBox,
    decode_box,
    encode_box,
    generate_priors,
    scale_schedule,
)
from .network import plan_network
from .tensor import Tensor, tensor_new

Check = tuple[str, bool, str]


def _block_diagonal_oracle(x: Tensor, p: ConvParams) -> Tensor:
    """Grouped conv as a dense conv with zeroed cross-group weights."""
    g, cpg, cout, k = p.groups, p.cin_per_group, p.cout, p.k
    opg = cout // g
    dense = np.zeros((cout, cpg * g, k, k), np.float32)
    for gi in range(g):
        dense[gi * opg:(gi + 1) * opg, gi * cpg:(gi + 1) * cpg] = \
            p.weights.data[gi * opg:(gi + 1) * opg]
    dense_p = ConvParams(Tensor(dense), p.bias, p.stride, p.pad, groups=1)
    return conv2d(x, dense_p)


def check_grouped_conv(cases: int = 10, seed: int = 7) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        g = int(rng.choice([2, 4]))
        cin = g * int(rng.integers(1, 5))
        cout = g * int(rng.integers(1, 5))
        k = int(rng.choice([1, 3]))
        x = Tensor(rng.normal(size=(1, cin, 8, 8)).astype(np.float32))
        p = ConvParams(Tensor(rng.normal(size=(cout, cin // g, k, k))
                              .astype(np.float32)),
                       stride=1, pad=k // 2, groups=g)
        got = conv2d(x, p)
        want = _block_diagonal_oracle(x, p)
        worst = max(worst, float(np.abs(got.data - want.data).max()))
    return ("grouped conv vs block-diagonal dense", worst < 1e-5,
            f"max abs err {worst:.2e}")


def check_channel_shuffle() -> Check:
    x = tensor_new((1, 6, 1, 1), list(range(6)))
    got = [int(v) for v in channel_shuffle(x, 3).flat]
    ok = got == [0, 2, 4, 1, 3, 5]
    return ("channel shuffle C=6 g=3", ok, f"order {got}")


def check_deformable_zero_offsets(seed: int = 3) -> Check:
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(size=(1, 4, 9, 9)).astype(np.float32))
    p = ConvParams(Tensor(rng.normal(size=(5, 4, 3, 3)).astype(np.float32)),
                   stride=1, pad=1)
    zero = tensor_new((1, 18, 9, 9), 0.0)
    err = float(np.abs(deformable_conv2d(x, zero, p).data
                       - conv2d(x, p).data).max())
    return ("deformable conv with zero offsets", err < 1e-5,
            f"max abs err {err:.2e}")


def _brute_force_nms(dets: list[Detection], threshold: float) -> list[Detection]:
    out: list[Detection] = []
    for cid in sorted({d.class_id for d in dets}):
        group = [(i, d) for i, d in enumerate(dets) if d.class_id == cid]
        group.sort(key=lambda t: (-t[1].score, t[0]))
        kept: list[Detection] = []
        for _, d in group:
            if all(iou(d.box, k.box) <= threshold for k in kept):
                kept.append(d)
        out.extend(kept)
    return out


def check_nms(sets: int = 50, seed: int = 11) -> Check:
    rng = np.random.default_rng(seed)
    for i in range(sets):
        n = int(rng.integers(1, 65))
        dets = []
        for _ in range(n):
            x0, y0 = rng.uniform(0, 80, 2)
            w, h = rng.uniform(1, 40, 2)
            dets.append(Detection(int(rng.integers(1, 3)),
                                  float(rng.uniform(0, 1)),
                                  float(x0), float(y0),
                                  float(x0 + w), float(y0 + h)))
        if nms(dets, 0.3) != _brute_force_nms(dets, 0.3):
            return ("nms vs brute force", False, f"mismatch on set {i}")
    return ("nms vs brute force", True, f"{sets} random sets exact")


def check_box_coding(pairs: int = 200, seed: int = 5) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        cx, cy = rng.uniform(0.2, 0.8, 2)
        w, h = rng.uniform(0.05, 0.3, 2)
        prior = PriorBox(float(cx), float(cy), float(w), float(h))
        gx, gy = rng.uniform(0.25, 0.75, 2)
        gw, gh = rng.uniform(0.05, 0.2, 2)
        gt = np.array([gx - gw / 2, gy - gh / 2, gx + gw / 2, gy + gh / 2])
        back = decode_box(encode_box(gt, prior), prior)
        worst = max(worst, float(np.abs(back - gt).max()))
    return ("encode/decode round trip", worst < 1e-6, f"max err {worst:.2e}")


def check_prior_count() -> Check:
    cfg = NetworkConfig()
    priors = generate_priors(cfg)
    taps = plan_network(cfg).taps
    expected = 0
    for t in taps:                       # independent enumeration
        for _ in range(t.h):
            for _ in range(t.w):
                expected += t.boxes
    ok = len(priors) == expected
    return ("prior count vs grid enumeration", ok,
            f"computed {len(priors)}, enumerated {expected}")


def check_scale_endpoints() -> Check:
    s = scale_schedule(7, 0.05, 0.4)
    ok = abs(s[0] - 0.05) < 1e-12 and abs(s[-1] - 0.4) < 1e-12
    return ("prior scale endpoints", ok, f"s1={s[0]}, s7={s[-1]}")


def check_tile_coverage() -> Check:
    w, h = 5616, 3744
    windows = plan_tiles(w, h, 512, 100)
    cover = np.zeros((h, w), np.uint8)
    for win in windows:
        cover[win.y0:win.y0 + win.height, win.x0:win.x0 + win.width] += 1
    ok = int(cover.min()) >= 1
    return ("tile plan covers 5616x3744", ok,
            f"{len(windows)} windows, min coverage {int(cover.min())}")


def check_split_points() -> Check:
    ok = all(
        max(np.diff(split_points(c, 3))) - min(np.diff(split_points(c, 3))) <= 1
        for c in (510, 511, 512, 960)
    )
    return ("near-equal channel splits", ok, "max part difference <= 1")


ALL_CHECKS = (
    check_grouped_conv,
    check_channel_shuffle,
    check_deformable_zero_offsets,
    check_nms,
    check_box_coding,
    check_prior_count,
    check_scale_endpoints,
    check_tile_coverage,
    check_split_points,
)


def run_all(verbose: bool = True) -> list[Check]:
    results = []
    for fn in ALL_CHECKS:
        name, ok, detail = fn()
        results.append((name, ok, detail))
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    return results
