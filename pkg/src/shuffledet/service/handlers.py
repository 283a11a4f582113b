"""Service handlers: pure functions from request models to response models.

Both the HTTP routes and the command-line client call these, so the two
front ends cannot drift apart.  Built networks are cached by (config,
weights, seed) since they are immutable and safe to share.
"""

from __future__ import annotations

import base64
import io
import threading

import numpy as np
from PIL import Image

from .. import analysis, files, metrics
from ..config import NetworkConfig
from ..network import build_network, plan_network
from ..pipeline import detect
from ..postprocess import Detection
from ..priors import generate_priors
from ..weights import load_weights
from . import schemas

_cache_lock = threading.Lock()
_net_cache: dict[tuple, object] = {}
_MAX_CACHED = 4

PRIOR_COUNT_NOTE = (
    "published total is {published:,} boxes per class for the original "
    "tap/box assignment, which was never fully specified; this configuration "
    "yields {computed:,}. The gap is documented, not corrected."
)


def resolve_config(inline: dict | None, path: str | None) -> NetworkConfig:
    if inline is not None:
        return NetworkConfig.from_dict(inline)
    if path is not None:
        return NetworkConfig.from_json(path)
    return NetworkConfig()


def _load_network(cfg: NetworkConfig, weights_path: str | None, seed: int):
    key = (cfg, weights_path, seed)
    with _cache_lock:
        if key in _net_cache:
            return _net_cache[key]
    weights = load_weights(weights_path) if weights_path else seed
    net = build_network(cfg, weights)
    priors = generate_priors(cfg)
    with _cache_lock:
        if len(_net_cache) >= _MAX_CACHED:
            _net_cache.pop(next(iter(_net_cache)))
        _net_cache[key] = (net, priors)
    return net, priors


def _decode_image(req: schemas.DetectRequest) -> np.ndarray:
    if req.image_path is not None:
        return files.load_image(req.image_path)
    raw = base64.b64decode(req.image_b64)
    with Image.open(io.BytesIO(raw)) as im:
        return np.asarray(im.convert("RGB"))


def handle_detect(req: schemas.DetectRequest) -> schemas.DetectResponse:
    cfg = resolve_config(req.config, req.config_path)
    net, priors = _load_network(cfg, req.weights_path, req.seed)
    image = _decode_image(req)
    dets = detect(net, image, priors,
                  conf_threshold=req.conf_threshold,
                  nms_threshold=req.nms_threshold,
                  tile=req.tile, overlap=req.tile_overlap)
    out = [
        schemas.DetectionOut(image_id=req.image_id, class_id=d.class_id,
                             score=d.score, xmin=d.xmin, ymin=d.ymin,
                             xmax=d.xmax, ymax=d.ymax)
        for d in dets
    ]
    return schemas.DetectResponse(image_id=req.image_id, count=len(out),
                                  detections=out)


def handle_flops(req: schemas.FlopsRequest) -> schemas.FlopsResponse:
    cfg = resolve_config(req.config, req.config_path)
    summary = analysis.complexity_summary(cfg)
    report = analysis.network_cost(cfg)
    ablation = None
    if req.ablation_grid:
        cfgs, labels = analysis.dab_grid_configs(cfg)
        ablation = [
            schemas.AblationRowOut(label=r.label, gflops=r.gflops,
                                   total_flops=r.total_flops,
                                   total_params=r.total_params,
                                   dab_enabled=list(r.dab_enabled))
            for r in analysis.ablation_table(cfgs, labels)
        ]
    layers = None
    if req.include_layers:
        layers = report.to_dict()["layers"]
    return schemas.FlopsResponse(
        table=analysis.format_report(report),
        layers=layers,
        ablation=ablation,
        **summary,
    )


def handle_priors(req: schemas.PriorsRequest) -> schemas.PriorsResponse:
    cfg = resolve_config(req.config, req.config_path)
    priors = generate_priors(cfg)
    taps = plan_network(cfg).taps
    rows = [
        schemas.TapPriors(name=t.name, height=t.h, width=t.w,
                          boxes_per_location=t.boxes, count=c)
        for t, c in zip(taps, priors.per_tap_counts)
    ]
    total = len(priors)
    return schemas.PriorsResponse(
        taps=rows,
        total=total,
        published_total=analysis.PUBLISHED_BOXES_PER_CLASS,
        note=PRIOR_COUNT_NOTE.format(
            published=analysis.PUBLISHED_BOXES_PER_CLASS, computed=total
        ),
    )


def _gts_from_request(req: schemas.EvalRequest) -> dict[str, list]:
    if req.ground_truth_path is not None:
        raw = files.read_annotations_csv(req.ground_truth_path)
        return {k: [box for box, _cls in v] for k, v in raw.items()}
    out: dict[str, list] = {}
    for g in req.ground_truth:
        out.setdefault(g.image_id, []).append((g.xmin, g.ymin, g.xmax, g.ymax))
    return out


def _dets_from_request(req: schemas.EvalRequest) -> dict[str, list[Detection]]:
    if req.detections_path is not None:
        return files.read_detections_json(req.detections_path)
    out: dict[str, list[Detection]] = {}
    for d in req.detections:
        out.setdefault(d.image_id, []).append(
            Detection(d.class_id, d.score, d.xmin, d.ymin, d.xmax, d.ymax)
        )
    return out


def handle_eval(req: schemas.EvalRequest) -> schemas.EvalResponse:
    dets = _dets_from_request(req)
    gts = _gts_from_request(req)
    for image_id in set(gts) - set(dets):
        dets[image_id] = []
    for image_id in set(dets) - set(gts):
        gts[image_id] = []
    summary = metrics.evaluate_counts(dets, gts)
    ap = metrics.evaluate_ap(dets, gts, req.iou_threshold) if req.ap else None
    return schemas.EvalResponse(
        mae=summary.mae,
        rmse=summary.rmse,
        ap=ap,
        per_image=[
            schemas.PerImageCount(image_id=i, predicted=p, actual=a)
            for i, p, a in summary.per_image
        ],
    )


def handle_selftest() -> schemas.SelftestResponse:
    from .. import selftest

    results = selftest.run_all(verbose=False)
    return schemas.SelftestResponse(
        passed=all(ok for _, ok, _ in results),
        checks=[{"name": n, "passed": ok, "detail": d} for n, ok, d in results],
    )
