"""End-to-end detection: preprocess, forward, decode, suppress, optionally tiled.

Tiled mode chops large images into input-size windows with a configurable
overlap, detects per window, translates the boxes back into image space and
applies one global NMS pass.
"""

from __future__ import annotations

import numpy as np

from .network import Network, preprocess
from .postprocess import (
    Detection,
    TileWindow,
    merge_tiles,
    plan_tiles,
    run_postprocess,
)
from .priors import PriorSet, generate_priors


def detect_array(net: Network, priors: PriorSet, image: np.ndarray,
                 conf_threshold: float = 0.5,
                 nms_threshold: float = 0.3) -> list[Detection]:
    """Detect on one RGB array; boxes come back in source-image pixels."""
    h, w = image.shape[:2]
    x = preprocess(image, net.cfg.input_size, net.cfg.pixel_mean)
    head = net.forward(x)
    return run_postprocess(head, priors, conf_threshold, nms_threshold,
                           image_dims=(w, h))


def detect_tiled(net: Network, priors: PriorSet, image: np.ndarray,
                 conf_threshold: float = 0.5, nms_threshold: float = 0.3,
                 overlap: int = 100) -> list[Detection]:
    """Detect on a large RGB array via overlapping tiles and a global merge."""
    h, w = image.shape[:2]
    tile = net.cfg.input_size
    windows = plan_tiles(w, h, tile=tile, overlap=min(overlap, tile - 1))
    per_tile: list[tuple[TileWindow, list[Detection]]] = []
    for win in windows:
        crop = image[win.y0:win.y0 + win.height, win.x0:win.x0 + win.width]
        per_tile.append((win, detect_array(net, priors, crop,
                                           conf_threshold, nms_threshold)))
    return merge_tiles(per_tile, nms_threshold)


def detect(net: Network, image: np.ndarray, priors: PriorSet | None = None,
           conf_threshold: float = 0.5, nms_threshold: float = 0.3,
           tile: bool = False, overlap: int = 100) -> list[Detection]:
    if priors is None:
        priors = generate_priors(net.cfg)
    if tile:
        return detect_tiled(net, priors, image, conf_threshold, nms_threshold,
                            overlap)
    return detect_array(net, priors, image, conf_threshold, nms_threshold)
